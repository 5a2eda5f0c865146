//! Pattern conceptualizations with typed variables, unified against a store.
//!
//! A [`CzTerm`] is the tree form of a conceptualization. Ground terms are what
//! the CDX loader asserts; terms with variables are [`Pattern`]s. Variables only
//! ever bind to ground store content, so no occurs-check is performed.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::cdgraph::{
    canonical_tree, Act, CdStore, Conceptualization, CzId, EntityRef, Filler, GraphError, LinkKind, Mods, StateName,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchError {
    #[error("variable ?{0} used with two different sorts")]
    SortMismatch(String),
    #[error("variable ?{0} has no binding")]
    UnboundVariable(String),
    #[error("variable ?{0} is not allowed in this position")]
    BadVariable(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Sort {
    Entity,
    Cz,
    State,
}

impl Sort {
    pub fn as_str(self) -> &'static str {
        match self {
            Sort::Entity => "entity",
            Sort::Cz => "cz",
            Sort::State => "state",
        }
    }

    pub fn parse(s: &str) -> Option<Sort> {
        match s {
            "entity" => Some(Sort::Entity),
            "cz" => Some(Sort::Cz),
            "state" => Some(Sort::State),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntityTerm {
    Lit(EntityRef),
    Var(String),
}

impl From<EntityRef> for EntityTerm {
    fn from(e: EntityRef) -> Self {
        EntityTerm::Lit(e)
    }
}

impl From<&EntityRef> for EntityTerm {
    fn from(e: &EntityRef) -> Self {
        EntityTerm::Lit(e.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateTerm {
    Lit(StateName),
    Var(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModsTerm {
    Exact(Mods),
    Any,
}

impl Default for ModsTerm {
    fn default() -> Self {
        ModsTerm::Exact(Mods::empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FillerTerm {
    Entity(EntityTerm),
    Cz(Box<CzTerm>),
    Link(Box<LinkTerm>),
    CzVar(String),
    /// `#label` reference to a labelled conceptualization.
    Label(String),
    /// Direct reference to an existing store node (runtime only).
    Id(CzId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CzTerm {
    pub label: Option<String>,
    pub actor: EntityTerm,
    pub act: Act,
    pub object: Option<FillerTerm>,
    pub from: Option<EntityTerm>,
    pub to: Option<EntityTerm>,
    pub instrument: Option<EntityTerm>,
    pub state: Option<StateTerm>,
    pub mods: ModsTerm,
}

impl CzTerm {
    pub fn new(actor: impl Into<EntityTerm>, act: Act) -> Self {
        CzTerm {
            label: None,
            actor: actor.into(),
            act,
            object: None,
            from: None,
            to: None,
            instrument: None,
            state: None,
            mods: ModsTerm::default(),
        }
    }

    pub fn obj(mut self, f: FillerTerm) -> Self {
        self.object = Some(f);
        self
    }

    pub fn obj_entity(self, e: impl Into<EntityTerm>) -> Self {
        self.obj(FillerTerm::Entity(e.into()))
    }

    pub fn obj_id(self, id: CzId) -> Self {
        self.obj(FillerTerm::Id(id))
    }

    pub fn from(mut self, e: impl Into<EntityTerm>) -> Self {
        self.from = Some(e.into());
        self
    }

    pub fn to(mut self, e: impl Into<EntityTerm>) -> Self {
        self.to = Some(e.into());
        self
    }

    pub fn state(mut self, s: StateName) -> Self {
        self.state = Some(StateTerm::Lit(s));
        self
    }

    pub fn mods(mut self, m: Mods) -> Self {
        self.mods = ModsTerm::Exact(m);
        self
    }

    /// Exact modifiers of the term, or empty for a wildcard.
    pub fn exact_mods(&self) -> Mods {
        match self.mods {
            ModsTerm::Exact(m) => m,
            ModsTerm::Any => Mods::empty(),
        }
    }
}

impl From<CzTerm> for FillerTerm {
    fn from(t: CzTerm) -> Self {
        FillerTerm::Cz(Box::new(t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkTerm {
    pub kind: LinkTermKind,
    pub mods: ModsTerm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkTermKind {
    Causal { cause: FillerTerm, effect: FillerTerm },
    Temporal { before: FillerTerm, after: FillerTerm },
    StateAttr { entity: EntityTerm, state: StateTerm, cz: FillerTerm },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Entity(EntityRef),
    Cz(CzId),
    State(StateName),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(pub BTreeMap<String, Value>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.0.get(var)
    }

    pub fn entity(&self, var: &str) -> Option<&EntityRef> {
        match self.0.get(var) {
            Some(Value::Entity(e)) => Some(e),
            _ => None,
        }
    }

    pub fn cz(&self, var: &str) -> Option<CzId> {
        match self.0.get(var) {
            Some(Value::Cz(c)) => Some(*c),
            _ => None,
        }
    }

    pub fn insert(&mut self, var: impl Into<String>, v: Value) {
        self.0.insert(var.into(), v);
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Store-independent rendering: cz values appear in canonical tree form.
    pub fn canonical(&self, store: &CdStore) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(k, v)| {
                let rendered = match v {
                    Value::Entity(e) => e.to_string(),
                    Value::State(s) => s.to_string(),
                    Value::Cz(id) => canonical_tree(store, *id).unwrap_or_else(|_| id.to_string()),
                };
                format!("?{k}={rendered}")
            })
            .collect();
        parts.join(" ")
    }
}

/// A validated pattern: every variable has exactly one sort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    term: CzTerm,
    vars: BTreeMap<String, Sort>,
}

impl Pattern {
    pub fn new(term: CzTerm) -> Result<Self, MatchError> {
        let mut vars = BTreeMap::new();
        collect_cz(&term, &mut vars)?;
        Ok(Pattern { term, vars })
    }

    pub fn term(&self) -> &CzTerm {
        &self.term
    }

    pub fn vars(&self) -> &BTreeMap<String, Sort> {
        &self.vars
    }
}

fn note(vars: &mut BTreeMap<String, Sort>, name: &str, sort: Sort) -> Result<(), MatchError> {
    match vars.insert(name.to_string(), sort) {
        Some(prev) if prev != sort => Err(MatchError::SortMismatch(name.to_string())),
        _ => Ok(()),
    }
}

fn collect_entity(t: &EntityTerm, vars: &mut BTreeMap<String, Sort>) -> Result<(), MatchError> {
    if let EntityTerm::Var(v) = t {
        note(vars, v, Sort::Entity)?;
    }
    Ok(())
}

fn collect_state(t: &StateTerm, vars: &mut BTreeMap<String, Sort>) -> Result<(), MatchError> {
    if let StateTerm::Var(v) = t {
        note(vars, v, Sort::State)?;
    }
    Ok(())
}

/// Collects variables of a cz term into `vars`, checking sort consistency.
pub fn collect_cz(t: &CzTerm, vars: &mut BTreeMap<String, Sort>) -> Result<(), MatchError> {
    collect_entity(&t.actor, vars)?;
    for e in [&t.from, &t.to, &t.instrument].into_iter().flatten() {
        collect_entity(e, vars)?;
    }
    if let Some(s) = &t.state {
        collect_state(s, vars)?;
    }
    if let Some(f) = &t.object {
        collect_filler(f, vars, true)?;
    }
    Ok(())
}

fn collect_filler(f: &FillerTerm, vars: &mut BTreeMap<String, Sort>, entity_ok: bool) -> Result<(), MatchError> {
    match f {
        FillerTerm::Entity(EntityTerm::Var(v)) if !entity_ok => Err(MatchError::BadVariable(v.clone())),
        FillerTerm::Entity(e) => collect_entity(e, vars),
        FillerTerm::Cz(t) => collect_cz(t, vars),
        FillerTerm::CzVar(v) => note(vars, v, Sort::Cz),
        FillerTerm::Link(l) => match &l.kind {
            LinkTermKind::Causal { cause: a, effect: b } | LinkTermKind::Temporal { before: a, after: b } => {
                collect_filler(a, vars, false)?;
                collect_filler(b, vars, false)
            }
            LinkTermKind::StateAttr { entity, state, cz } => {
                collect_entity(entity, vars)?;
                collect_state(state, vars)?;
                collect_filler(cz, vars, false)
            }
        },
        FillerTerm::Label(_) | FillerTerm::Id(_) => Ok(()),
    }
}

fn structurally_equal(store: &CdStore, a: CzId, b: CzId) -> bool {
    a == b
        || matches!((canonical_tree(store, a), canonical_tree(store, b)), (Ok(x), Ok(y)) if x == y)
}

struct Unifier<'a> {
    store: &'a CdStore,
    b: Bindings,
}

impl Unifier<'_> {
    fn entity(&mut self, t: &EntityTerm, e: &EntityRef) -> bool {
        match t {
            EntityTerm::Lit(l) => l == e,
            EntityTerm::Var(v) => match self.b.0.get(v) {
                Some(Value::Entity(bound)) => bound == e,
                Some(_) => false,
                None => {
                    self.b.insert(v.clone(), Value::Entity(e.clone()));
                    true
                }
            },
        }
    }

    fn opt_entity(&mut self, t: &Option<EntityTerm>, e: &Option<EntityRef>) -> bool {
        match (t, e) {
            (None, None) => true,
            (Some(t), Some(e)) => self.entity(t, e),
            _ => false,
        }
    }

    fn state(&mut self, t: &StateTerm, s: StateName) -> bool {
        match t {
            StateTerm::Lit(l) => *l == s,
            StateTerm::Var(v) => match self.b.0.get(v) {
                Some(Value::State(bound)) => *bound == s,
                Some(_) => false,
                None => {
                    self.b.insert(v.clone(), Value::State(s));
                    true
                }
            },
        }
    }

    fn mods(t: ModsTerm, m: Mods) -> bool {
        match t {
            ModsTerm::Any => true,
            ModsTerm::Exact(x) => x == m,
        }
    }

    fn cz(&mut self, t: &CzTerm, id: CzId) -> bool {
        let Some(cz) = self.store.get(id) else { return false };
        if t.act != cz.act || !Self::mods(t.mods, cz.mods) {
            return false;
        }
        if !self.entity(&t.actor, &cz.actor)
            || !self.opt_entity(&t.from, &cz.from)
            || !self.opt_entity(&t.to, &cz.to)
            || !self.opt_entity(&t.instrument, &cz.instrument)
        {
            return false;
        }
        let state_ok = match (&t.state, cz.state) {
            (None, None) => true,
            (Some(st), Some(s)) => self.state(st, s),
            _ => false,
        };
        if !state_ok {
            return false;
        }
        match (&t.object, &cz.object) {
            (None, None) => true,
            (Some(ft), Some(f)) => self.filler(ft, f),
            _ => false,
        }
    }

    fn endpoint(&mut self, t: &FillerTerm, id: CzId) -> bool {
        match t {
            FillerTerm::Cz(inner) => self.cz(inner, id),
            FillerTerm::CzVar(v) => match self.b.0.get(v) {
                Some(Value::Cz(bound)) => structurally_equal(self.store, *bound, id),
                Some(_) => false,
                None => {
                    self.b.insert(v.clone(), Value::Cz(id));
                    true
                }
            },
            FillerTerm::Label(l) => self.store.by_label(l).is_some_and(|x| structurally_equal(self.store, x, id)),
            FillerTerm::Id(x) => structurally_equal(self.store, *x, id),
            FillerTerm::Entity(_) | FillerTerm::Link(_) => false,
        }
    }

    fn filler(&mut self, t: &FillerTerm, f: &Filler) -> bool {
        match (t, f) {
            (FillerTerm::Entity(et), Filler::Entity(e)) => self.entity(et, e),
            (FillerTerm::Link(lt), Filler::Link(lid)) => {
                let Ok(link) = self.store.link(*lid) else { return false };
                if !Self::mods(lt.mods, link.mods) {
                    return false;
                }
                match (&lt.kind, &link.kind) {
                    (LinkTermKind::Causal { cause, effect }, LinkKind::Causal { cause: c, effect: e }) => {
                        self.endpoint(cause, *c) && self.endpoint(effect, *e)
                    }
                    (LinkTermKind::Temporal { before, after }, LinkKind::Temporal { before: b, after: a }) => {
                        self.endpoint(before, *b) && self.endpoint(after, *a)
                    }
                    (
                        LinkTermKind::StateAttr { entity, state, cz },
                        LinkKind::StateAttr { entity: e, state: s, cz: c },
                    ) => self.entity(entity, e) && self.state(state, *s) && self.endpoint(cz, *c),
                    _ => false,
                }
            }
            (_, Filler::Cz(id)) => self.endpoint(t, *id),
            _ => false,
        }
    }
}

/// Unifies `p` with the subtree at `root`. Returns bindings total over the
/// pattern's variables on success.
pub fn unify(p: &Pattern, store: &CdStore, root: CzId) -> Option<Bindings> {
    let mut u = Unifier { store, b: Bindings::new() };
    u.cz(&p.term, root).then_some(u.b)
}

/// Every root, in insertion order, whose subtree unifies with `p`.
pub fn find_all(p: &Pattern, store: &CdStore) -> Vec<(CzId, Bindings)> {
    store.cz_ids().filter_map(|id| unify(p, store, id).map(|b| (id, b))).collect()
}

/// Instantiates `p` under `b` as fresh store nodes. Cz variables reuse the
/// bound node.
pub fn substitute(p: &Pattern, b: &Bindings, store: &mut CdStore) -> Result<CzId, MatchError> {
    instantiate(&p.term, b, store, false)
}

/// Asserts a (possibly non-ground) term, resolving variables through `b`.
/// Labels on the term are kept only when `keep_labels` is set.
pub fn instantiate(t: &CzTerm, b: &Bindings, store: &mut CdStore, keep_labels: bool) -> Result<CzId, MatchError> {
    let resolve_e = |t: &EntityTerm| -> Result<EntityRef, MatchError> {
        match t {
            EntityTerm::Lit(e) => Ok(e.clone()),
            EntityTerm::Var(v) => b.entity(v).cloned().ok_or_else(|| MatchError::UnboundVariable(v.clone())),
        }
    };
    let resolve_opt = |t: &Option<EntityTerm>| t.as_ref().map(resolve_e).transpose();
    let mut cz = Conceptualization::new(resolve_e(&t.actor)?, t.act);
    cz.from = resolve_opt(&t.from)?;
    cz.to = resolve_opt(&t.to)?;
    cz.instrument = resolve_opt(&t.instrument)?;
    cz.state = match &t.state {
        None => None,
        Some(StateTerm::Lit(s)) => Some(*s),
        Some(StateTerm::Var(v)) => match b.get(v) {
            Some(Value::State(s)) => Some(*s),
            _ => return Err(MatchError::UnboundVariable(v.clone())),
        },
    };
    cz.mods = t.exact_mods();
    cz.object = match &t.object {
        None => None,
        Some(FillerTerm::Entity(e)) => Some(Filler::Entity(resolve_e(e)?)),
        Some(FillerTerm::Link(l)) => Some(Filler::Link(instantiate_link(l, b, store, keep_labels)?)),
        Some(other) => Some(Filler::Cz(endpoint_id(other, b, store, keep_labels)?)),
    };
    if keep_labels {
        cz.label = t.label.clone();
    }
    Ok(store.assert_cz(cz)?)
}

fn endpoint_id(t: &FillerTerm, b: &Bindings, store: &mut CdStore, keep_labels: bool) -> Result<CzId, MatchError> {
    match t {
        FillerTerm::Cz(inner) => instantiate(inner, b, store, keep_labels),
        FillerTerm::CzVar(v) => b.cz(v).ok_or_else(|| MatchError::UnboundVariable(v.clone())),
        FillerTerm::Label(l) => {
            store.by_label(l).ok_or_else(|| MatchError::Graph(GraphError::DanglingRef(format!("#{l}"))))
        }
        FillerTerm::Id(id) => {
            store.cz(*id)?;
            Ok(*id)
        }
        FillerTerm::Entity(EntityTerm::Var(v)) => Err(MatchError::BadVariable(v.clone())),
        FillerTerm::Entity(_) | FillerTerm::Link(_) => {
            Err(MatchError::Graph(GraphError::BadObject("link endpoint must be a conceptualization".into())))
        }
    }
}

/// Asserts a link term, returning its id.
pub fn instantiate_link(
    l: &LinkTerm,
    b: &Bindings,
    store: &mut CdStore,
    keep_labels: bool,
) -> Result<crate::cdgraph::LinkId, MatchError> {
    // A variable may be bound to a node structurally equal to, but distinct
    // from, the one it matched at the other end. Reusing the bound node for
    // both ends would make the link point at itself, so the second end gets a
    // copy instead.
    let pair = |first: &FillerTerm, second: &FillerTerm, store: &mut CdStore| -> Result<(CzId, CzId), MatchError> {
        let a = endpoint_id(first, b, store, keep_labels)?;
        let mut z = endpoint_id(second, b, store, keep_labels)?;
        if a == z && matches!(second, FillerTerm::CzVar(_)) {
            z = instantiate(&term_of(store, z)?, &Bindings::new(), store, false)?;
        }
        Ok((a, z))
    };
    let kind = match &l.kind {
        LinkTermKind::Causal { cause, effect } => {
            let (cause, effect) = pair(cause, effect, store)?;
            LinkKind::Causal { cause, effect }
        }
        LinkTermKind::Temporal { before, after } => {
            let (before, after) = pair(before, after, store)?;
            LinkKind::Temporal { before, after }
        }
        LinkTermKind::StateAttr { entity, state, cz } => {
            let entity = match entity {
                EntityTerm::Lit(e) => e.clone(),
                EntityTerm::Var(v) => b.entity(v).cloned().ok_or_else(|| MatchError::UnboundVariable(v.clone()))?,
            };
            let state = match state {
                StateTerm::Lit(s) => *s,
                StateTerm::Var(v) => match b.get(v) {
                    Some(Value::State(s)) => *s,
                    _ => return Err(MatchError::UnboundVariable(v.clone())),
                },
            };
            LinkKind::StateAttr { entity, state, cz: endpoint_id(cz, b, store, keep_labels)? }
        }
    };
    let mods = match l.mods {
        ModsTerm::Exact(m) => m,
        ModsTerm::Any => Mods::empty(),
    };
    Ok(store.add_link(kind, mods)?)
}

/// Ground term reproducing the subtree at `id` (shared nodes are duplicated).
pub fn term_of(store: &CdStore, id: CzId) -> Result<CzTerm, GraphError> {
    let cz = store.cz(id)?;
    let lit = |e: &Option<EntityRef>| e.as_ref().map(EntityTerm::from);
    let object = match &cz.object {
        None => None,
        Some(Filler::Entity(e)) => Some(FillerTerm::Entity(e.into())),
        Some(Filler::Cz(inner)) => Some(FillerTerm::Cz(Box::new(term_of(store, *inner)?))),
        Some(Filler::Link(l)) => {
            let link = store.link(*l)?;
            let kind = match &link.kind {
                LinkKind::Causal { cause, effect } => LinkTermKind::Causal {
                    cause: term_of(store, *cause)?.into(),
                    effect: term_of(store, *effect)?.into(),
                },
                LinkKind::Temporal { before, after } => LinkTermKind::Temporal {
                    before: term_of(store, *before)?.into(),
                    after: term_of(store, *after)?.into(),
                },
                LinkKind::StateAttr { entity, state, cz } => LinkTermKind::StateAttr {
                    entity: entity.into(),
                    state: StateTerm::Lit(*state),
                    cz: term_of(store, *cz)?.into(),
                },
            };
            Some(FillerTerm::Link(Box::new(LinkTerm { kind, mods: ModsTerm::Exact(link.mods) })))
        }
    };
    Ok(CzTerm {
        label: None,
        actor: (&cz.actor).into(),
        act: cz.act,
        object,
        from: lit(&cz.from),
        to: lit(&cz.to),
        instrument: lit(&cz.instrument),
        state: cz.state.map(StateTerm::Lit),
        mods: ModsTerm::Exact(cz.mods),
    })
}

/// The elaborated form of a WANT as a term: `wanter CONCP ((c f) object => wanter BE Pleased (f))`.
pub fn want_elaboration_term(store: &CdStore, want: CzId) -> Result<CzTerm, GraphError> {
    let w = store.cz(want)?;
    if w.act != Act::Want {
        return Err(GraphError::BadObject(format!("expected WANT, got {}", w.act)));
    }
    let object = w.object_cz().ok_or_else(|| GraphError::BadObject("WANT without an object".into()))?;
    let pleased = CzTerm::new(&w.actor, Act::Be).state(StateName::Pleased).mods(Mods::F);
    let link = LinkTerm {
        kind: LinkTermKind::Causal { cause: FillerTerm::Id(object), effect: pleased.into() },
        mods: ModsTerm::Exact(Mods::C | Mods::F),
    };
    Ok(CzTerm::new(&w.actor, Act::Concp).obj(FillerTerm::Link(Box::new(link))))
}

/// Replaces every variable in `t` by its binding, without touching the store.
/// Cz variables become direct node references.
pub fn bind_term(t: &CzTerm, b: &Bindings) -> Result<CzTerm, MatchError> {
    Ok(CzTerm {
        label: t.label.clone(),
        actor: bind_entity(&t.actor, b)?,
        act: t.act,
        object: t.object.as_ref().map(|f| bind_filler(f, b)).transpose()?,
        from: t.from.as_ref().map(|e| bind_entity(e, b)).transpose()?,
        to: t.to.as_ref().map(|e| bind_entity(e, b)).transpose()?,
        instrument: t.instrument.as_ref().map(|e| bind_entity(e, b)).transpose()?,
        state: t.state.as_ref().map(|s| bind_state(s, b)).transpose()?,
        mods: t.mods,
    })
}

fn bind_entity(t: &EntityTerm, b: &Bindings) -> Result<EntityTerm, MatchError> {
    match t {
        EntityTerm::Lit(_) => Ok(t.clone()),
        EntityTerm::Var(v) => match b.get(v) {
            Some(Value::Entity(e)) => Ok(EntityTerm::Lit(e.clone())),
            Some(_) => Err(MatchError::SortMismatch(v.clone())),
            None => Err(MatchError::UnboundVariable(v.clone())),
        },
    }
}

fn bind_state(t: &StateTerm, b: &Bindings) -> Result<StateTerm, MatchError> {
    match t {
        StateTerm::Lit(_) => Ok(t.clone()),
        StateTerm::Var(v) => match b.get(v) {
            Some(Value::State(s)) => Ok(StateTerm::Lit(*s)),
            Some(_) => Err(MatchError::SortMismatch(v.clone())),
            None => Err(MatchError::UnboundVariable(v.clone())),
        },
    }
}

fn bind_filler(f: &FillerTerm, b: &Bindings) -> Result<FillerTerm, MatchError> {
    Ok(match f {
        FillerTerm::Entity(e) => FillerTerm::Entity(bind_entity(e, b)?),
        FillerTerm::Cz(t) => FillerTerm::Cz(Box::new(bind_term(t, b)?)),
        FillerTerm::CzVar(v) => match b.get(v) {
            Some(Value::Cz(id)) => FillerTerm::Id(*id),
            Some(_) => return Err(MatchError::SortMismatch(v.clone())),
            None => return Err(MatchError::UnboundVariable(v.clone())),
        },
        FillerTerm::Link(l) => {
            let kind = match &l.kind {
                LinkTermKind::Causal { cause, effect } => {
                    LinkTermKind::Causal { cause: bind_filler(cause, b)?, effect: bind_filler(effect, b)? }
                }
                LinkTermKind::Temporal { before, after } => {
                    LinkTermKind::Temporal { before: bind_filler(before, b)?, after: bind_filler(after, b)? }
                }
                LinkTermKind::StateAttr { entity, state, cz } => LinkTermKind::StateAttr {
                    entity: bind_entity(entity, b)?,
                    state: bind_state(state, b)?,
                    cz: bind_filler(cz, b)?,
                },
            };
            FillerTerm::Link(Box::new(LinkTerm { kind, mods: l.mods }))
        }
        FillerTerm::Label(_) | FillerTerm::Id(_) => f.clone(),
    })
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: &str) -> EntityRef {
        EntityRef::new(n)
    }

    fn house_store() -> (CdStore, CzId, CzId) {
        let mut s = CdStore::new();
        let house = s.assert_cz(Conceptualization::new(e("House"), Act::Be).to(e("Demolished"))).unwrap();
        let want = s.assert_cz(Conceptualization::new(e("Person"), Act::Want).object(Filler::Cz(house))).unwrap();
        (s, house, want)
    }

    fn want_pattern() -> Pattern {
        Pattern::new(CzTerm::new(EntityTerm::Var("a".into()), Act::Want).obj(FillerTerm::CzVar("c".into()))).unwrap()
    }

    #[test]
    fn unify_want() {
        let (s, house, want) = house_store();
        let b = unify(&want_pattern(), &s, want).unwrap();
        assert_eq!(b.entity("a"), Some(&e("Person")));
        assert_eq!(b.cz("c"), Some(house));
        assert_eq!(unify(&want_pattern(), &s, house), None);
    }

    #[test]
    fn act_mismatch() {
        let (s, _, want) = house_store();
        let p = Pattern::new(CzTerm::new(EntityTerm::Var("a".into()), Act::Ptrans).obj(FillerTerm::CzVar("c".into())))
            .unwrap();
        assert_eq!(unify(&p, &s, want), None);
    }

    #[test]
    fn ground_identity() {
        let (s, _, want) = house_store();
        let p = Pattern::new(term_of(&s, want).unwrap()).unwrap();
        assert_eq!(unify(&p, &s, want), Some(Bindings::new()));
    }

    #[test]
    fn find_all_two_wants() {
        let (mut s, house, _) = house_store();
        s.assert_cz(Conceptualization::new(e("Robot"), Act::Want).object(Filler::Cz(house))).unwrap();
        let hits = find_all(&want_pattern(), &s);
        assert_eq!(hits.iter().map(|(id, _)| id.0).collect::<Vec<_>>(), vec![1, 2]);
        assert!(find_all(&want_pattern(), &CdStore::new()).is_empty());
    }

    #[test]
    fn sort_mismatch_rejected() {
        let t = CzTerm::new(EntityTerm::Var("x".into()), Act::Want).obj(FillerTerm::CzVar("x".into()));
        assert_eq!(Pattern::new(t), Err(MatchError::SortMismatch("x".into())));
    }

    #[test]
    fn exact_mods_and_wildcard() {
        let mut s = CdStore::new();
        let id = s.assert_cz(Conceptualization::new(e("Robot"), Act::Ptrans).mods(Mods::CAN | Mods::NEG)).unwrap();
        let exact = Pattern::new(CzTerm::new(e("Robot"), Act::Ptrans).mods(Mods::CAN)).unwrap();
        assert!(unify(&exact, &s, id).is_none());
        let mut any = CzTerm::new(e("Robot"), Act::Ptrans);
        any.mods = ModsTerm::Any;
        assert!(unify(&Pattern::new(any).unwrap(), &s, id).is_some());
    }

    #[test]
    fn substitute_round_trip_and_unbound() {
        let (mut s, _, want) = house_store();
        let p = want_pattern();
        let b = unify(&p, &s, want).unwrap();
        let copy = substitute(&p, &b, &mut s).unwrap();
        assert_eq!(canonical_tree(&s, copy).unwrap(), canonical_tree(&s, want).unwrap());
        let err = substitute(&p, &Bindings::new(), &mut s).unwrap_err();
        assert!(matches!(err, MatchError::UnboundVariable(_)));
        let ground = Pattern::new(term_of(&s, want).unwrap()).unwrap();
        let c2 = substitute(&ground, &Bindings::new(), &mut s).unwrap();
        assert_eq!(canonical_tree(&s, c2).unwrap(), canonical_tree(&s, want).unwrap());
    }

    #[test]
    fn elaboration_term_matches_store_route() {
        let (mut s, _, want) = house_store();
        let t = want_elaboration_term(&s, want).unwrap();
        let via_term = instantiate(&t, &Bindings::new(), &mut s, false).unwrap();
        let direct = s.elaborate_want(want).unwrap();
        assert_eq!(canonical_tree(&s, via_term).unwrap(), canonical_tree(&s, direct).unwrap());
    }

    #[test]
    fn repeated_variable_across_a_link() {
        let mut s = CdStore::new();
        let open = || Conceptualization::new(e("Door"), Act::Be).state(StateName::Open);
        let (x, y) = (s.assert_cz(open()).unwrap(), s.assert_cz(open()).unwrap());
        let link = s.add_link(LinkKind::Causal { cause: x, effect: y }, Mods::C).unwrap();
        let root = s.assert_cz(Conceptualization::new(e("P"), Act::Concp).object(Filler::Link(link))).unwrap();
        let causal = LinkTerm {
            kind: LinkTermKind::Causal { cause: FillerTerm::CzVar("c".into()), effect: FillerTerm::CzVar("c".into()) },
            mods: ModsTerm::Exact(Mods::C),
        };
        let p = Pattern::new(CzTerm::new(e("P"), Act::Concp).obj(FillerTerm::Link(Box::new(causal)))).unwrap();
        let b = unify(&p, &s, root).unwrap();
        assert_eq!(b.cz("c"), Some(x));
        let copy = substitute(&p, &b, &mut s).unwrap();
        assert_eq!(canonical_tree(&s, copy).unwrap(), canonical_tree(&s, root).unwrap());
    }
}
