//! Generators and reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use cdplus::cdgraph::{canonical_tree, Act, CdStore, Conceptualization, CzId, EntityRef, Filler, LinkKind, Mods, StateName, Symbol};
use cdplus::cdx::{
    AgentDecl, CdxDocument, IllocutionDecl, Item, RuleAction, RuleBody, RuleDecl, ScenarioDecl, TemplateDecl, WorldDecl,
};
use cdplus::matcher::{
    term_of, Bindings, CzTerm, EntityTerm, FillerTerm, LinkTerm, LinkTermKind, ModsTerm, Pattern, Sort, StateTerm, Value,
};
use cdplus::vocab::{Attitude, Illocution, Tone};
use cdplus::world::{Atom, Goal, Place, WorldState};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ENTITIES: &[&str] = &["Person", "Robot", "Door", "Table", "Tool(X)", "Ball(7)"];
const NAMES: &[&str] = &["alpha", "beta", "R1", "R12", "Person", "Robot", "T1'", "demo-2"];

fn pick<'a, T>(r: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(r).expect("non-empty")
}

fn entity(r: &mut ChaCha8Rng) -> EntityRef {
    EntityRef::parse(pick(r, ENTITIES)).expect("valid entity")
}

fn name(r: &mut ChaCha8Rng) -> String {
    pick(r, NAMES).to_string()
}

fn mods(r: &mut ChaCha8Rng, allow_qwhy: bool) -> Mods {
    loop {
        let mut m = Mods::from_bits(r.gen_range(0..64));
        if !allow_qwhy {
            m = m.without(Mods::QWHY);
        }
        if m.check().is_ok() {
            return m;
        }
    }
}

// ---------------------------------------------------------------------------
// Documents

struct DocGen {
    labels: Vec<String>,
    next_label: usize,
    vars: bool,
}

impl DocGen {
    fn entity_term(&self, r: &mut ChaCha8Rng) -> EntityTerm {
        if self.vars && r.gen_bool(0.3) {
            EntityTerm::Var(pick(r, &["a", "b", "who"]).to_string())
        } else {
            EntityTerm::Lit(entity(r))
        }
    }

    fn cz(&mut self, r: &mut ChaCha8Rng, depth: u32, top: bool) -> CzTerm {
        let act = *pick(r, Act::ALL);
        let mut t = CzTerm::new(self.entity_term(r), act);
        if act == Act::Be {
            if r.gen_bool(0.6) {
                t.state = Some(if self.vars && r.gen_bool(0.3) {
                    StateTerm::Var("s".into())
                } else {
                    StateTerm::Lit(*pick(r, StateName::ALL))
                });
            } else {
                t.to = Some(self.entity_term(r));
            }
        } else {
            if r.gen_bool(0.7) {
                t.object = Some(self.filler(r, depth, true));
            }
            if r.gen_bool(0.3) {
                t.from = Some(self.entity_term(r));
            }
            if r.gen_bool(0.4) {
                t.to = Some(self.entity_term(r));
            }
            if r.gen_bool(0.15) {
                t.instrument = Some(self.entity_term(r));
            }
        }
        t.mods = if self.vars && r.gen_bool(0.1) { ModsTerm::Any } else { ModsTerm::Exact(mods(r, top)) };
        if r.gen_bool(0.25) {
            self.next_label += 1;
            t.label = Some(format!("L{}", self.next_label));
        }
        t
    }

    fn filler(&mut self, r: &mut ChaCha8Rng, depth: u32, entity_ok: bool) -> FillerTerm {
        let roll = r.gen_range(0..10);
        let out = match roll {
            0..=2 if depth > 0 => FillerTerm::Cz(Box::new(self.cz(r, depth - 1, false))),
            3 if depth > 0 => FillerTerm::Link(Box::new(self.link(r, depth - 1))),
            4 if !self.labels.is_empty() => FillerTerm::Label(pick(r, &self.labels).clone()),
            5 => FillerTerm::Id(CzId(r.gen_range(0..20))),
            6 if self.vars => FillerTerm::CzVar("c".into()),
            _ if entity_ok => FillerTerm::Entity(self.entity_term(r)),
            _ => FillerTerm::Id(CzId(r.gen_range(0..20))),
        };
        out
    }

    fn link(&mut self, r: &mut ChaCha8Rng, depth: u32) -> LinkTerm {
        let kind = match r.gen_range(0..3) {
            0 => LinkTermKind::Causal { cause: self.filler(r, depth, false), effect: self.filler(r, depth, false) },
            1 => LinkTermKind::Temporal { before: self.filler(r, depth, false), after: self.filler(r, depth, false) },
            _ => LinkTermKind::StateAttr {
                entity: self.entity_term(r),
                state: StateTerm::Lit(*pick(r, StateName::ALL)),
                cz: self.filler(r, depth, false),
            },
        };
        LinkTerm { kind, mods: ModsTerm::Exact(mods(r, false)) }
    }

    /// Labels defined inside `t` become usable by later items.
    fn commit(&mut self, t: &CzTerm) {
        if let Some(l) = &t.label {
            self.labels.push(l.clone());
        }
        if let Some(FillerTerm::Cz(inner)) = &t.object {
            self.commit(inner);
        }
    }

    fn item(&mut self, r: &mut ChaCha8Rng) -> Item {
        self.vars = false;
        match r.gen_range(0..16) {
            0..=3 => {
                let t = self.cz(r, 2, true);
                self.commit(&t);
                Item::Cz(t)
            }
            4 => Item::Link(self.link(r, 1)),
            5 => Item::Anchor {
                id: format!("sa-{}", name(r)),
                uri: r.gen_bool(0.5).then(|| "anchor://x/\"quoted\" \\ path".to_string()),
            },
            6 => {
                let symbol = if r.gen_bool(0.5) {
                    Symbol::Act(*pick(r, Act::ALL))
                } else {
                    Symbol::State(*pick(r, StateName::ALL))
                };
                Item::Ground { symbol, anchor: format!("sa-{}", name(r)) }
            }
            7 => Item::Entity { entity: entity(r), anchor: r.gen_bool(0.5).then(|| format!("sa-{}", name(r))) },
            8 => {
                let steps = (0..r.gen_range(1..3)).map(|_| self.filler(r, 1, true)).collect();
                Item::Elab { symbol: Symbol::Act(*pick(r, Act::ALL)), steps }
            }
            9 => {
                let body = if r.gen_bool(0.5) {
                    RuleBody::Strategy(name(r))
                } else {
                    self.vars = true;
                    let when = self.cz(r, 1, true);
                    let then = vec![
                        RuleAction::Assert(self.cz(r, 1, true)),
                        RuleAction::Affect { state: *pick(r, StateName::ALL), on: r.gen_bool(0.5) },
                    ];
                    self.vars = false;
                    RuleBody::Declarative { when, then }
                };
                Item::Rule(RuleDecl { name: name(r), priority: r.gen_range(-50..500), body })
            }
            10 => Item::Scenario(ScenarioDecl {
                name: name(r),
                max_ticks: r.gen_range(0..40),
                turns: (0..r.gen_range(0..3)).map(|_| name(r)).collect(),
                rules: name(r),
            }),
            11 => Item::Agent(AgentDecl {
                name: name(r),
                can_ptrans: r.gen_bool(0.5),
                attitudes: (0..r.gen_range(0..3)).map(|_| (name(r), *pick(r, Attitude::ALL))).collect(),
                models: (0..r.gen_range(0..3)).map(|_| (name(r), (0..r.gen_range(0..3)).map(|_| name(r)).collect())).collect(),
            }),
            12 => Item::World(WorldDecl {
                locations: (0..r.gen_range(0..4)).map(|_| name(r)).collect(),
                unreachable: (0..r.gen_range(0..2)).map(|_| name(r)).collect(),
                agents: (0..r.gen_range(0..3)).map(|_| (name(r), name(r))).collect(),
                at: (0..r.gen_range(0..3)).map(|_| (entity(r), name(r))).collect(),
                holding: (0..r.gen_range(0..2)).map(|_| (entity(r), name(r))).collect(),
            }),
            13 => Item::Motive { agent: name(r), want: self.filler(r, 1, true) },
            14 => Item::Illocution(IllocutionDecl {
                agent: name(r),
                on: *pick(r, Illocution::ALL),
                to: name(r),
                yields: self.filler(r, 1, true),
                otherwise: r.gen_bool(0.4).then(|| self.filler(r, 1, true)),
            }),
            _ => {
                self.vars = true;
                let pattern = self.cz(r, 1, true);
                self.vars = false;
                Item::Template(TemplateDecl {
                    id: name(r),
                    illocution: *pick(r, Illocution::ALL),
                    tone: *pick(r, Tone::ALL),
                    text: "Say \"{x}\" \\ now,\nplease.".to_string(),
                    pattern,
                })
            }
        }
    }
}

/// A random document whose label references all point backwards.
pub fn gen_document(r: &mut ChaCha8Rng) -> CdxDocument {
    let mut g = DocGen { labels: Vec::new(), next_label: 0, vars: false };
    let n = r.gen_range(0..12);
    CdxDocument { items: (0..n).map(|_| g.item(r)).collect() }
}

// ---------------------------------------------------------------------------
// Stores and patterns

const STORE_ENTITIES: &[&str] = &["A", "B", "C"];
const STORE_STATES: &[StateName] = &[StateName::Open, StateName::Pleased];

fn small_entity(r: &mut ChaCha8Rng) -> EntityRef {
    EntityRef::new(*pick(r, STORE_ENTITIES))
}

/// A store of at most `max` conceptualizations over a small vocabulary, so that
/// structural repeats are common.
pub fn gen_store(r: &mut ChaCha8Rng, max: usize) -> CdStore {
    let mut s = CdStore::new();
    while s.len() < max {
        let ids: Vec<CzId> = s.cz_ids().collect();
        let cz = match r.gen_range(0..5) {
            0 => Conceptualization::new(small_entity(r), Act::Be).state(*pick(r, STORE_STATES)),
            1 => Conceptualization::new(small_entity(r), Act::Be).to(small_entity(r)),
            2 => Conceptualization::new(small_entity(r), Act::Ptrans)
                .object(Filler::Entity(small_entity(r)))
                .to(small_entity(r)),
            3 if !ids.is_empty() => Conceptualization::new(small_entity(r), *pick(r, &[Act::Want, Act::Mtrans]))
                .object(Filler::Cz(*pick(r, &ids))),
            4 if ids.len() >= 2 && s.len() + 1 < max => {
                let cause = *pick(r, &ids);
                let effect = *pick(r, &ids);
                if cause == effect {
                    continue;
                }
                let Ok(link) = s.add_link(LinkKind::Causal { cause, effect }, Mods::C | Mods::F) else { continue };
                Conceptualization::new(small_entity(r), Act::Concp).object(Filler::Link(link))
            }
            _ => Conceptualization::new(small_entity(r), Act::Be).state(*pick(r, STORE_STATES)),
        };
        let m = if r.gen_bool(0.2) { Mods::CAN } else { Mods::empty() };
        if s.assert_cz(cz.mods(m)).is_err() || s.len() >= max {
            continue;
        }
    }
    s
}

fn generalize_entity(r: &mut ChaCha8Rng, e: &mut EntityTerm) {
    if r.gen_bool(0.4) {
        *e = EntityTerm::Var(pick(r, &["x", "y"]).to_string());
    }
}

fn generalize(r: &mut ChaCha8Rng, t: &mut CzTerm) {
    generalize_entity(r, &mut t.actor);
    for role in [&mut t.from, &mut t.to, &mut t.instrument].into_iter().flatten() {
        generalize_entity(r, role);
    }
    if let Some(s) = &mut t.state {
        if r.gen_bool(0.4) {
            *s = StateTerm::Var("s".into());
        }
    }
    if r.gen_bool(0.2) {
        t.mods = ModsTerm::Any;
    }
    match &mut t.object {
        Some(FillerTerm::Entity(e)) => generalize_entity(r, e),
        Some(FillerTerm::Cz(inner)) => {
            if r.gen_bool(0.4) {
                t.object = Some(FillerTerm::CzVar(pick(r, &["c", "d"]).to_string()));
            } else {
                generalize(r, inner);
            }
        }
        Some(FillerTerm::Link(l)) => {
            if let LinkTermKind::Causal { cause, effect } = &mut l.kind {
                for end in [cause, effect] {
                    if r.gen_bool(0.5) {
                        *end = FillerTerm::CzVar(pick(r, &["c", "d"]).to_string());
                    } else if let FillerTerm::Cz(inner) = end {
                        generalize(r, inner);
                    }
                }
            }
        }
        _ => {}
    }
}

/// A pattern obtained by generalizing a random node of `store`, occasionally
/// perturbed so that it matches nothing.
pub fn gen_pattern(r: &mut ChaCha8Rng, store: &CdStore) -> Pattern {
    loop {
        let ids: Vec<CzId> = store.cz_ids().collect();
        let mut t = term_of(store, *pick(r, &ids)).expect("node exists");
        generalize(r, &mut t);
        if r.gen_bool(0.15) {
            t.act = *pick(r, &[Act::Be, Act::Want, Act::Ptrans]);
        }
        // Sort clashes (a name used as two sorts) are rejected by Pattern::new; try again.
        if let Ok(p) = Pattern::new(t) {
            return p;
        }
    }
}

/// Whether `t` describes the subtree at `id` under a total assignment.
fn holds(store: &CdStore, t: &CzTerm, id: CzId, asg: &BTreeMap<String, Value>) -> bool {
    let cz = store.cz(id).expect("node exists");
    let ent = |t: &EntityTerm, e: &EntityRef| match t {
        EntityTerm::Lit(l) => l == e,
        EntityTerm::Var(v) => asg.get(v) == Some(&Value::Entity(e.clone())),
    };
    let opt = |t: &Option<EntityTerm>, e: &Option<EntityRef>| match (t, e) {
        (None, None) => true,
        (Some(t), Some(e)) => ent(t, e),
        _ => false,
    };
    let mods_ok = |t: ModsTerm, m: Mods| matches!(t, ModsTerm::Any) || t == ModsTerm::Exact(m);
    let state_ok = |t: &StateTerm, s: StateName| match t {
        StateTerm::Lit(l) => *l == s,
        StateTerm::Var(v) => asg.get(v) == Some(&Value::State(s)),
    };
    let same = |a: CzId, b: CzId| canonical_tree(store, a).unwrap() == canonical_tree(store, b).unwrap();
    let endpoint = |f: &FillerTerm, x: CzId| match f {
        FillerTerm::Cz(inner) => holds(store, inner, x, asg),
        FillerTerm::CzVar(v) => matches!(asg.get(v), Some(Value::Cz(b)) if same(*b, x)),
        FillerTerm::Id(b) => same(*b, x),
        FillerTerm::Label(l) => store.by_label(l).is_some_and(|b| same(b, x)),
        _ => false,
    };
    if t.act != cz.act || !mods_ok(t.mods, cz.mods) || !ent(&t.actor, &cz.actor) {
        return false;
    }
    if !opt(&t.from, &cz.from) || !opt(&t.to, &cz.to) || !opt(&t.instrument, &cz.instrument) {
        return false;
    }
    let states = match (&t.state, cz.state) {
        (None, None) => true,
        (Some(st), Some(s)) => state_ok(st, s),
        _ => false,
    };
    if !states {
        return false;
    }
    match (&t.object, &cz.object) {
        (None, None) => true,
        (Some(FillerTerm::Entity(et)), Some(Filler::Entity(e))) => ent(et, e),
        (Some(f), Some(Filler::Cz(x))) => endpoint(f, *x),
        (Some(FillerTerm::Link(lt)), Some(Filler::Link(l))) => {
            let link = store.link(*l).expect("link exists");
            mods_ok(lt.mods, link.mods)
                && match (&lt.kind, &link.kind) {
                    (LinkTermKind::Causal { cause, effect }, LinkKind::Causal { cause: c, effect: e }) => {
                        endpoint(cause, *c) && endpoint(effect, *e)
                    }
                    (LinkTermKind::Temporal { before, after }, LinkKind::Temporal { before: b, after: a }) => {
                        endpoint(before, *b) && endpoint(after, *a)
                    }
                    (
                        LinkTermKind::StateAttr { entity, state, cz },
                        LinkKind::StateAttr { entity: e, state: s, cz: c },
                    ) => ent(entity, e) && state_ok(state, *s) && endpoint(cz, *c),
                    _ => false,
                }
        }
        _ => false,
    }
}

/// Every node of `store` paired with all total assignments under which `p`
/// describes it, by enumerating the full value domain of each variable.
pub fn brute_force(p: &Pattern, store: &CdStore) -> Vec<(CzId, Vec<BTreeMap<String, Value>>)> {
    let mut entities: Vec<EntityRef> = store.entities().cloned().collect();
    entities.sort();
    let domain = |sort: Sort| -> Vec<Value> {
        match sort {
            Sort::Entity => entities.iter().cloned().map(Value::Entity).collect(),
            Sort::State => StateName::ALL.iter().copied().map(Value::State).collect(),
            Sort::Cz => store.cz_ids().map(Value::Cz).collect(),
        }
    };
    let vars: Vec<(String, Vec<Value>)> = p.vars().iter().map(|(v, s)| (v.clone(), domain(*s))).collect();
    let mut assignments = vec![BTreeMap::new()];
    for (v, values) in &vars {
        assignments = assignments
            .into_iter()
            .flat_map(|a| {
                values.iter().map(move |x| {
                    let mut a = a.clone();
                    a.insert(v.clone(), x.clone());
                    a
                })
            })
            .collect();
    }
    store
        .cz_ids()
        .map(|id| (id, assignments.iter().filter(|a| holds(store, p.term(), id, a)).cloned().collect::<Vec<_>>()))
        .filter(|(_, sat)| !sat.is_empty())
        .collect()
}

/// Compares `find_all` with the brute-force enumeration. `Err` describes the first disagreement.
pub fn check_matcher(p: &Pattern, store: &CdStore) -> Result<(), String> {
    let fast = cdplus::matcher::find_all(p, store);
    let slow = brute_force(p, store);
    let fast_roots: Vec<CzId> = fast.iter().map(|(id, _)| *id).collect();
    let slow_roots: Vec<CzId> = slow.iter().map(|(id, _)| *id).collect();
    if fast_roots != slow_roots {
        return Err(format!("roots differ: find_all {fast_roots:?}, brute force {slow_roots:?} for {:?}", p.term()));
    }
    for ((id, b), (_, sat)) in fast.iter().zip(&slow) {
        let Bindings(map) = b;
        if !sat.contains(map) {
            return Err(format!("bindings {map:?} at {id} are not among the solutions {sat:?}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Worlds

pub const LOCATIONS: [&str; 4] = ["Table", "PersonLoc", "RobotLoc", "Elsewhere"];

pub fn tool() -> EntityRef {
    EntityRef::with_param("Tool", "X")
}

/// Length of the shortest move sequence of at most `depth` steps reaching
/// `goal`, found by trying every sequence of (object, from, to) moves.
pub fn exhaustive_min_plan(
    placements: &BTreeMap<EntityRef, String>,
    unreachable: &[&str],
    goal: &Atom,
    depth: u32,
) -> Option<u32> {
    fn go(
        at: &BTreeMap<EntityRef, String>,
        unreachable: &[&str],
        goal: &Atom,
        left: u32,
        used: u32,
        best: &mut Option<u32>,
    ) {
        if at.get(&goal.object) == Some(&goal.location) {
            *best = Some(best.map_or(used, |b| b.min(used)));
            return;
        }
        if left == 0 {
            return;
        }
        for (obj, from) in at {
            for to in LOCATIONS {
                if to == from || unreachable.contains(&to) || unreachable.contains(&from.as_str()) {
                    continue;
                }
                let mut next = at.clone();
                next.insert(obj.clone(), to.to_string());
                go(&next, unreachable, goal, left - 1, used + 1, best);
            }
        }
    }
    let mut best = None;
    go(placements, unreachable, goal, depth, 0, &mut best);
    best
}

pub fn build_world(placements: &BTreeMap<EntityRef, String>, unreachable: &[&str]) -> WorldState {
    let mut w = WorldState::new(LOCATIONS);
    for u in unreachable {
        w.set_unreachable(u).unwrap();
    }
    for (o, l) in placements {
        w.place(o.clone(), Place::At(l.clone())).unwrap();
    }
    w
}

pub fn goal(object: EntityRef, location: &str) -> Goal {
    Goal { atom: Atom::new(object, location), source: None }
}

// ---------------------------------------------------------------------------
// Scenarios

pub const SUCCESS: &str = include_str!("../../scenarios/fetch-success.cdx");
pub const FAILURE: &str = include_str!("../../scenarios/fetch-failure.cdx");
pub const SUCCESS_GOLDEN: &str = include_str!("../../scenarios/fetch-success.trace.jsonl");
pub const FAILURE_GOLDEN: &str = include_str!("../../scenarios/fetch-failure.trace.jsonl");

pub fn scenario_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

/// The success scenario with the tool moved and both attitudes replaced.
pub fn variant(tool_at: &str, person_toward_robot: Attitude, robot_toward_person: Attitude) -> String {
    SUCCESS
        .replace(":at ((Tool(X) Table))", &format!(":at ((Tool(X) {tool_at}))"))
        .replace(":attitudes ((Robot SERVILE))", &format!(":attitudes ((Robot {person_toward_robot}))"))
        .replace(":attitudes ((Person SERVILE))", &format!(":attitudes ((Person {robot_toward_person}))"))
}
