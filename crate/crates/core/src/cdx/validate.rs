use std::collections::BTreeSet;
use std::fmt;

use super::*;
use crate::cdgraph::{CdStore, CzId, GraphError, LinkKind, StructureAnchor};
use crate::matcher::{instantiate, instantiate_link, Bindings, MatchError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    Ungrounded(Symbol),
    DanglingRef { item: usize, what: String },
    DuplicateLabel { item: usize, label: String },
    /// Any other structural problem (bad object, temporal cycle, unbound variable, ...).
    Invalid { item: usize, message: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Ungrounded(s) => write!(f, "ungrounded symbol {s}: no anchor and no elaboration"),
            Diagnostic::DanglingRef { item, what } => write!(f, "item {item}: dangling reference {what}"),
            Diagnostic::DuplicateLabel { item, label } => write!(f, "item {item}: duplicate label \"{label}\""),
            Diagnostic::Invalid { item, message } => write!(f, "item {item}: {message}"),
        }
    }
}

/// Knowledge of what an illocution produces in its addressee, resolved to store nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IllocutionKnowledge {
    pub agent: String,
    pub on: crate::vocab::Illocution,
    pub to: String,
    pub yields: CzId,
    pub otherwise: Option<CzId>,
}

/// A document's graph content asserted into a store.
#[derive(Debug, Clone, Default)]
pub struct LoadedDoc {
    pub store: CdStore,
    /// Top-level conceptualizations and link endpoints, in document order.
    pub roots: Vec<CzId>,
    pub motives: Vec<(String, CzId)>,
    pub illocutions: Vec<IllocutionKnowledge>,
}

fn diagnose(item: usize, e: MatchError) -> Diagnostic {
    match e {
        MatchError::Graph(GraphError::DanglingRef(what)) => Diagnostic::DanglingRef { item, what },
        MatchError::Graph(GraphError::LabelClash(label)) => Diagnostic::DuplicateLabel { item, label },
        other => Diagnostic::Invalid { item, message: other.to_string() },
    }
}

fn resolve(f: &FillerTerm, store: &mut CdStore) -> Result<CzId, MatchError> {
    let none = Bindings::new();
    match f {
        FillerTerm::Cz(t) => instantiate(t, &none, store, true),
        FillerTerm::Label(l) => store.by_label(l).ok_or_else(|| GraphError::DanglingRef(format!("#{l}")).into()),
        FillerTerm::Id(id) => {
            store.cz(*id)?;
            Ok(*id)
        }
        _ => Err(GraphError::BadObject("expected a conceptualization or a reference to one".into()).into()),
    }
}

/// Asserts everything it can, collecting problems instead of stopping at the first.
fn build(doc: &CdxDocument) -> (LoadedDoc, Vec<Diagnostic>) {
    let mut out = LoadedDoc::default();
    let mut diags = Vec::new();
    let none = Bindings::new();
    for (i, item) in doc.items.iter().enumerate() {
        let store = &mut out.store;
        let result: Result<(), MatchError> = (|| {
            match item {
                Item::Cz(t) => out.roots.push(instantiate(t, &none, store, true)?),
                Item::Link(l) => {
                    let id = instantiate_link(l, &none, store, true)?;
                    match &store.link(id)?.kind {
                        LinkKind::Causal { cause: a, effect: b } | LinkKind::Temporal { before: a, after: b } => {
                            out.roots.extend([*a, *b])
                        }
                        LinkKind::StateAttr { cz, .. } => out.roots.push(*cz),
                    }
                }
                Item::Anchor { id, uri } => store.add_anchor(StructureAnchor { id: id.clone(), uri: uri.clone() })?,
                Item::Ground { symbol, anchor } => store.ground(*symbol, anchor)?,
                Item::Entity { entity, anchor } => store.declare_entity(entity.clone(), anchor.clone())?,
                Item::Elab { symbol, steps } => {
                    let script = steps.iter().map(|s| resolve(s, store)).collect::<Result<Vec<_>, _>>()?;
                    store.add_elaboration(*symbol, script)?;
                }
                Item::Motive { agent, want } => {
                    let id = resolve(want, store)?;
                    out.roots.push(id);
                    out.motives.push((agent.clone(), id));
                }
                Item::Illocution(d) => {
                    let yields = resolve(&d.yields, store)?;
                    let otherwise = d.otherwise.as_ref().map(|o| resolve(o, store)).transpose()?;
                    out.roots.extend(std::iter::once(yields).chain(otherwise));
                    out.illocutions.push(IllocutionKnowledge {
                        agent: d.agent.clone(),
                        on: d.on,
                        to: d.to.clone(),
                        yields,
                        otherwise,
                    });
                }
                Item::Rule(_) | Item::Scenario(_) | Item::Agent(_) | Item::World(_) | Item::Template(_) => {}
            }
            Ok(())
        })();
        if let Err(e) = result {
            diags.push(diagnose(i, e));
        }
    }
    let mut ungrounded = BTreeSet::new();
    for root in &out.roots {
        match out.store.ground_check(*root) {
            Ok(syms) => ungrounded.extend(syms),
            Err(e) => diags.push(Diagnostic::Invalid { item: 0, message: e.to_string() }),
        }
    }
    diags.dedup();
    diags.extend(ungrounded.into_iter().map(Diagnostic::Ungrounded));
    (out, diags)
}

/// Reports ungrounded symbols, dangling references and duplicate labels.
pub fn validate(doc: &CdxDocument) -> Vec<Diagnostic> {
    build(doc).1
}

/// Builds the store for a document, failing if validation reports anything.
pub fn load_store(doc: &CdxDocument) -> Result<LoadedDoc, Vec<Diagnostic>> {
    let (loaded, diags) = build(doc);
    if diags.is_empty() {
        Ok(loaded)
    } else {
        Err(diags)
    }
}
