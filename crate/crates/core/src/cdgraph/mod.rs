//! Arena for CD+ conceptualization graphs.
//!
//! A [`CdStore`] owns every conceptualization, link, structure anchor and
//! elaboration known to a simulation. Conceptualizations reference each other
//! by [`CzId`]; links by [`LinkId`]. The store is single-writer; clone it to
//! hand out read-only snapshots.

mod canon;
mod ground;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canon::canonical_tree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CzId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkId(pub u32);

impl fmt::Display for CzId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("dangling reference: {0}")]
    DanglingRef(String),
    #[error("label {0:?} is already in use")]
    LabelClash(String),
    #[error("malformed object: {0}")]
    BadObject(String),
    #[error("malformed modifiers: {0}")]
    BadModifier(String),
    #[error("a conceptualization cannot cause itself")]
    SelfCause,
    #[error("temporal link would create a cycle")]
    TemporalCycle,
    #[error("elaboration of {0} reaches itself")]
    ElaborationCycle(Symbol),
    #[error("duplicate structure anchor {0:?}")]
    DuplicateAnchor(String),
    #[error("empty elaboration script for {0}")]
    EmptyScript(Symbol),
}

/// An entity such as `Person`, `Table` or `Tool(X)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityRef {
    pub name: String,
    pub param: Option<String>,
}

impl EntityRef {
    pub fn new(name: impl Into<String>) -> Self {
        EntityRef { name: name.into(), param: None }
    }

    pub fn with_param(name: impl Into<String>, param: impl Into<String>) -> Self {
        EntityRef { name: name.into(), param: Some(param.into()) }
    }

    /// Parses `Name` or `Name(Param)`.
    pub fn parse(text: &str) -> Option<Self> {
        let valid = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        match text.find('(') {
            None => valid(text).then(|| EntityRef::new(text)),
            Some(open) => {
                let (name, rest) = text.split_at(open);
                let param = rest.strip_prefix('(')?.strip_suffix(')')?;
                (valid(name) && valid(param)).then(|| EntityRef::with_param(name, param))
            }
        }
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.param {
            Some(p) => write!(f, "{}({})", self.name, p),
            None => f.write_str(&self.name),
        }
    }
}

/// Opaque grounding token. The locator is carried but never interpreted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureAnchor {
    pub id: String,
    pub uri: Option<String>,
}

closed_enum!(
    /// Primitive acts. `Be` carries pure state (or location) attribution.
    Act, "unknown act" {
        Ptrans => "PTRANS",
        Mtrans => "MTRANS",
        Mbuild => "MBUILD",
        Concp => "CONCP",
        Want => "WANT",
        Say => "SAY",
        Anticipate => "ANTICIPATE",
        Push => "PUSH",
        Be => "BE",
    }
);

closed_enum!(
    StateName, "unknown state" {
        Open => "Open",
        Pleased => "Pleased",
        Displeased => "Displeased",
        Anticipation => "ANTICIPATION",
        Hope => "HOPE",
        Frustrated => "FRUSTRATED",
        Fear => "FEAR",
        Disappointed => "DISAPPOINTED",
        Relieved => "RELIEVED",
    }
);

/// A groundable symbol: either an act or a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Act(Act),
    State(StateName),
}

impl FromStr for Symbol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(a) = s.parse() {
            return Ok(Symbol::Act(a));
        }
        s.parse().map(Symbol::State).map_err(|_| format!("unknown act or state {s:?}"))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Act(a) => a.fmt(f),
            Symbol::State(s) => s.fmt(f),
        }
    }
}

/// Set of conceptualization modifiers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mods(u8);

impl Mods {
    pub const C: Mods = Mods(1);
    pub const F: Mods = Mods(1 << 1);
    pub const CAN: Mods = Mods(1 << 2);
    pub const NEG: Mods = Mods(1 << 3);
    pub const QWHY: Mods = Mods(1 << 4);
    pub const PAST: Mods = Mods(1 << 5);

    const NAMES: [(Mods, &'static str); 6] = [
        (Mods::C, "c"),
        (Mods::F, "f"),
        (Mods::CAN, "can"),
        (Mods::NEG, "neg"),
        (Mods::QWHY, "qwhy"),
        (Mods::PAST, "past"),
    ];

    pub const fn empty() -> Self {
        Mods(0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, other: Mods) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn with(self, other: Mods) -> Mods {
        Mods(self.0 | other.0)
    }

    pub fn without(self, other: Mods) -> Mods {
        Mods(self.0 & !other.0)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(bits: u8) -> Mods {
        Mods(bits & 0b11_1111)
    }

    pub fn parse_one(name: &str) -> Option<Mods> {
        Mods::NAMES.iter().find(|(_, n)| *n == name).map(|(m, _)| *m)
    }

    /// Modifier names in canonical order.
    pub fn names(self) -> Vec<&'static str> {
        Mods::NAMES.iter().filter(|(m, _)| self.contains(*m)).map(|(_, n)| *n).collect()
    }

    pub fn check(self) -> Result<(), GraphError> {
        if self.contains(Mods::F.with(Mods::PAST)) {
            return Err(GraphError::BadModifier("f and past are exclusive".into()));
        }
        Ok(())
    }
}

impl std::ops::BitOr for Mods {
    type Output = Mods;
    fn bitor(self, rhs: Mods) -> Mods {
        self.with(rhs)
    }
}

impl fmt::Display for Mods {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.names().join(" "))
    }
}

/// Object role of a conceptualization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Filler {
    Entity(EntityRef),
    Cz(CzId),
    Link(LinkId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conceptualization {
    pub label: Option<String>,
    pub actor: EntityRef,
    pub act: Act,
    pub object: Option<Filler>,
    pub from: Option<EntityRef>,
    pub to: Option<EntityRef>,
    pub instrument: Option<EntityRef>,
    pub state: Option<StateName>,
    pub mods: Mods,
}

impl Conceptualization {
    pub fn new(actor: EntityRef, act: Act) -> Self {
        Conceptualization {
            label: None,
            actor,
            act,
            object: None,
            from: None,
            to: None,
            instrument: None,
            state: None,
            mods: Mods::empty(),
        }
    }

    pub fn object(mut self, object: Filler) -> Self {
        self.object = Some(object);
        self
    }

    pub fn from(mut self, from: EntityRef) -> Self {
        self.from = Some(from);
        self
    }

    pub fn to(mut self, to: EntityRef) -> Self {
        self.to = Some(to);
        self
    }

    pub fn state(mut self, state: StateName) -> Self {
        self.state = Some(state);
        self
    }

    pub fn mods(mut self, mods: Mods) -> Self {
        self.mods = mods;
        self
    }

    pub fn label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn object_cz(&self) -> Option<CzId> {
        match self.object {
            Some(Filler::Cz(id)) => Some(id),
            _ => None,
        }
    }

    pub fn object_entity(&self) -> Option<&EntityRef> {
        match &self.object {
            Some(Filler::Entity(e)) => Some(e),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    Causal { cause: CzId, effect: CzId },
    Temporal { before: CzId, after: CzId },
    StateAttr { entity: EntityRef, state: StateName, cz: CzId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub kind: LinkKind,
    pub mods: Mods,
}

/// CD+E script elaborating an act or state symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Elaboration {
    pub symbol: Symbol,
    pub script: Vec<CzId>,
}

#[derive(Debug, Clone, Default)]
pub struct CdStore {
    czs: Vec<Conceptualization>,
    links: Vec<LinkRecord>,
    labels: BTreeMap<String, CzId>,
    entities: BTreeMap<EntityRef, Option<String>>,
    anchors: BTreeMap<String, StructureAnchor>,
    grounded: BTreeMap<Symbol, String>,
    elaborations: BTreeMap<Symbol, Elaboration>,
}

impl CdStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.czs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.czs.is_empty()
    }

    pub fn cz(&self, id: CzId) -> Result<&Conceptualization, GraphError> {
        self.czs.get(id.0 as usize).ok_or_else(|| GraphError::DanglingRef(id.to_string()))
    }

    pub fn get(&self, id: CzId) -> Option<&Conceptualization> {
        self.czs.get(id.0 as usize)
    }

    pub fn link(&self, id: LinkId) -> Result<&LinkRecord, GraphError> {
        self.links.get(id.0 as usize).ok_or_else(|| GraphError::DanglingRef(format!("link {}", id.0)))
    }

    /// Ids in insertion order.
    pub fn cz_ids(&self) -> impl Iterator<Item = CzId> + '_ {
        (0..self.czs.len() as u32).map(CzId)
    }

    pub fn links(&self) -> impl Iterator<Item = (LinkId, &LinkRecord)> + '_ {
        self.links.iter().enumerate().map(|(i, l)| (LinkId(i as u32), l))
    }

    pub fn by_label(&self, label: &str) -> Option<CzId> {
        self.labels.get(label).copied()
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityRef> + '_ {
        self.entities.keys()
    }

    pub fn elaboration(&self, symbol: Symbol) -> Option<&Elaboration> {
        self.elaborations.get(&symbol)
    }

    pub fn anchor_of(&self, symbol: Symbol) -> Option<&StructureAnchor> {
        self.grounded.get(&symbol).and_then(|id| self.anchors.get(id))
    }

    /// Records an entity, optionally with a structure anchor id.
    pub fn declare_entity(&mut self, entity: EntityRef, anchor: Option<String>) -> Result<(), GraphError> {
        if let Some(a) = &anchor {
            if !self.anchors.contains_key(a) {
                return Err(GraphError::DanglingRef(format!("anchor {a}")));
            }
        }
        let slot = self.entities.entry(entity).or_insert(None);
        if anchor.is_some() {
            *slot = anchor;
        }
        Ok(())
    }

    pub fn add_anchor(&mut self, anchor: StructureAnchor) -> Result<(), GraphError> {
        if self.anchors.contains_key(&anchor.id) {
            return Err(GraphError::DuplicateAnchor(anchor.id));
        }
        self.anchors.insert(anchor.id.clone(), anchor);
        Ok(())
    }

    /// Grounds a symbol directly in a structure anchor.
    pub fn ground(&mut self, symbol: Symbol, anchor: &str) -> Result<(), GraphError> {
        if !self.anchors.contains_key(anchor) {
            return Err(GraphError::DanglingRef(format!("anchor {anchor}")));
        }
        self.grounded.insert(symbol, anchor.to_string());
        Ok(())
    }

    fn note_entity(&mut self, e: &EntityRef) {
        self.entities.entry(e.clone()).or_insert(None);
    }

    pub fn assert_cz(&mut self, mut new: Conceptualization) -> Result<CzId, GraphError> {
        new.mods.check()?;
        if let Some(label) = &new.label {
            if self.labels.contains_key(label) {
                return Err(GraphError::LabelClash(label.clone()));
            }
        }
        match &new.object {
            Some(Filler::Cz(id)) => {
                let inner = self.cz(*id)?;
                if inner.mods.contains(Mods::QWHY) {
                    return Err(GraphError::BadModifier("qwhy on a nested conceptualization".into()));
                }
            }
            Some(Filler::Link(id)) => {
                self.link(*id)?;
            }
            Some(Filler::Entity(e)) => match new.act {
                Act::Want => {
                    // WANT of a bare entity: the wanter coming to possess it.
                    let wrapped = Conceptualization::new(new.actor.clone(), Act::Ptrans)
                        .object(Filler::Entity(e.clone()))
                        .to(new.actor.clone());
                    let id = self.assert_cz(wrapped)?;
                    new.object = Some(Filler::Cz(id));
                }
                Act::Concp | Act::Anticipate => {
                    return Err(GraphError::BadObject(format!(
                        "{} requires a conceptualization as object, got entity {e}",
                        new.act
                    )))
                }
                _ => {}
            },
            None => {}
        }
        if new.act == Act::Be && new.state.is_none() && new.to.is_none() {
            return Err(GraphError::BadObject("BE needs a state or a location".into()));
        }
        if new.act != Act::Be && new.state.is_some() {
            return Err(GraphError::BadObject(format!("{} cannot carry a state", new.act)));
        }
        let entity_roles: Vec<EntityRef> = [Some(&new.actor), new.from.as_ref(), new.to.as_ref(), new.instrument.as_ref()]
            .into_iter()
            .flatten()
            .chain(new.object_entity())
            .cloned()
            .collect();
        for e in &entity_roles {
            self.note_entity(e);
        }
        let id = CzId(self.czs.len() as u32);
        if let Some(label) = &new.label {
            self.labels.insert(label.clone(), id);
        }
        self.czs.push(new);
        Ok(id)
    }

    pub fn add_link(&mut self, kind: LinkKind, mods: Mods) -> Result<LinkId, GraphError> {
        mods.check()?;
        match &kind {
            LinkKind::Causal { cause, effect } => {
                self.cz(*cause)?;
                self.cz(*effect)?;
                if cause == effect {
                    return Err(GraphError::SelfCause);
                }
            }
            LinkKind::Temporal { before, after } => {
                self.cz(*before)?;
                self.cz(*after)?;
                if before == after || self.temporal_reaches(*after, *before) {
                    return Err(GraphError::TemporalCycle);
                }
            }
            LinkKind::StateAttr { entity, cz, .. } => {
                self.cz(*cz)?;
                self.note_entity(&entity.clone());
            }
        }
        let id = LinkId(self.links.len() as u32);
        self.links.push(LinkRecord { kind, mods });
        Ok(id)
    }

    fn temporal_reaches(&self, from: CzId, target: CzId) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == target {
                return true;
            }
            if !seen.insert(n) {
                continue;
            }
            for l in &self.links {
                if let LinkKind::Temporal { before, after } = l.kind {
                    if before == n {
                        stack.push(after);
                    }
                }
            }
        }
        false
    }

    /// Registers a CD+E script; consecutive steps are joined by temporal links.
    pub fn add_elaboration(&mut self, symbol: Symbol, script: Vec<CzId>) -> Result<(), GraphError> {
        if script.is_empty() {
            return Err(GraphError::EmptyScript(symbol));
        }
        for id in &script {
            self.cz(*id)?;
        }
        for pair in script.windows(2) {
            self.add_link(LinkKind::Temporal { before: pair[0], after: pair[1] }, Mods::empty())?;
        }
        self.elaborations.insert(symbol, Elaboration { symbol, script });
        Ok(())
    }

    /// Expands `actor WANT x` into
    /// `actor CONCP ((c f) x => actor BE Pleased)` and returns the CONCP node.
    pub fn elaborate_want(&mut self, want: CzId) -> Result<CzId, GraphError> {
        let w = self.cz(want)?;
        if w.act != Act::Want {
            return Err(GraphError::BadObject(format!("expected WANT, got {}", w.act)));
        }
        let wanter = w.actor.clone();
        let object = w.object_cz().ok_or_else(|| GraphError::BadObject("WANT without an object".into()))?;
        let pleased = self.assert_cz(
            Conceptualization::new(wanter.clone(), Act::Be).state(StateName::Pleased).mods(Mods::F),
        )?;
        let link = self.add_link(LinkKind::Causal { cause: object, effect: pleased }, Mods::C | Mods::F)?;
        self.assert_cz(Conceptualization::new(wanter, Act::Concp).object(Filler::Link(link)))
    }

    /// Deterministic structural form of the graph rooted at `root`.
    pub fn canonicalize(&self, root: CzId) -> Result<String, GraphError> {
        canon::canonicalize(self, root)
    }

    /// Act/state symbols reachable from `root` that are neither anchored nor elaborated.
    pub fn ground_check(&self, root: CzId) -> Result<Vec<Symbol>, GraphError> {
        ground::ground_check(self, root)
    }

    /// Links whose first endpoint (cause, before, or attributed cz) is `id`.
    pub fn outgoing(&self, id: CzId) -> impl Iterator<Item = (LinkId, &LinkRecord)> + '_ {
        self.links().filter(move |(_, l)| match l.kind {
            LinkKind::Causal { cause, .. } => cause == id,
            LinkKind::Temporal { before, .. } => before == id,
            LinkKind::StateAttr { cz, .. } => cz == id,
        })
    }
}
