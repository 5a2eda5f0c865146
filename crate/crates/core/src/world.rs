//! A small fully observable world of locations and movable objects, with a
//! breadth-first planner over PTRANS moves.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdgraph::{Act, CdStore, Conceptualization, CzId, EntityRef, Filler, GraphError};
use crate::cdx::WorldDecl;
use crate::matcher::CzTerm;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorldError {
    #[error("malformed goal: {0}")]
    MalformedGoal(String),
    #[error("precondition no longer holds: {0}")]
    PreconditionViolated(Atom),
    #[error("invalid world: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Place {
    At(String),
    HeldBy(String),
}

/// `at(object, location)`
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Atom {
    pub object: EntityRef,
    pub location: String,
}

impl Atom {
    pub fn new(object: EntityRef, location: impl Into<String>) -> Self {
        Atom { object, location: location.into() }
    }

    /// The atom as a state conceptualization, `object BE :to location`.
    pub fn to_term(&self) -> CzTerm {
        CzTerm::new(self.object.clone(), Act::Be).to(EntityRef::new(self.location.clone()))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at({}, {})", self.object, self.location)
    }
}

/// One PTRANS move.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Step {
    pub actor: String,
    pub object: EntityRef,
    pub from: String,
    pub to: String,
}

impl Step {
    pub fn precondition(&self) -> Atom {
        Atom::new(self.object.clone(), self.from.clone())
    }

    pub fn effect(&self) -> Atom {
        Atom::new(self.object.clone(), self.to.clone())
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PTRANS({}, {}, {}, {})", self.actor, self.object, self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanResult {
    Plan(Vec<Step>),
    Failure { unsatisfied: Atom, at_depth: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub atom: Atom,
    /// Source named by the goal conceptualization, if any; used to choose the reported precondition.
    pub source: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    locations: BTreeSet<String>,
    unreachable: BTreeSet<String>,
    agents: BTreeMap<String, String>,
    objects: BTreeMap<EntityRef, Place>,
}

impl WorldState {
    pub fn new(locations: impl IntoIterator<Item = impl Into<String>>) -> Self {
        WorldState { locations: locations.into_iter().map(Into::into).collect(), ..Default::default() }
    }

    pub fn from_decl(d: &WorldDecl) -> Result<Self, WorldError> {
        let mut w = WorldState::new(d.locations.iter().cloned());
        for u in &d.unreachable {
            w.set_unreachable(u)?;
        }
        for (agent, loc) in &d.agents {
            w.add_agent(agent, loc)?;
        }
        for (obj, loc) in &d.at {
            w.place(obj.clone(), Place::At(loc.clone()))?;
        }
        for (obj, agent) in &d.holding {
            w.place(obj.clone(), Place::HeldBy(agent.clone()))?;
        }
        Ok(w)
    }

    fn check_location(&self, loc: &str) -> Result<(), WorldError> {
        if self.locations.contains(loc) {
            Ok(())
        } else {
            Err(WorldError::Invalid(format!("unknown location {loc}")))
        }
    }

    pub fn set_unreachable(&mut self, loc: &str) -> Result<(), WorldError> {
        self.check_location(loc)?;
        self.unreachable.insert(loc.to_string());
        Ok(())
    }

    pub fn add_agent(&mut self, agent: &str, home: &str) -> Result<(), WorldError> {
        self.check_location(home)?;
        self.agents.insert(agent.to_string(), home.to_string());
        Ok(())
    }

    /// Puts an object somewhere, replacing any previous placement.
    pub fn place(&mut self, object: EntityRef, place: Place) -> Result<(), WorldError> {
        match &place {
            Place::At(loc) => self.check_location(loc)?,
            Place::HeldBy(a) if !self.agents.contains_key(a) => {
                return Err(WorldError::Invalid(format!("unknown agent {a}")))
            }
            Place::HeldBy(_) => {}
        }
        self.objects.insert(object, place);
        Ok(())
    }

    pub fn remove(&mut self, object: &EntityRef) -> Option<Place> {
        self.objects.remove(object)
    }

    pub fn place_of(&self, object: &EntityRef) -> Option<&Place> {
        self.objects.get(object)
    }

    /// Effective location; a held object is wherever its holder is.
    pub fn location_of(&self, object: &EntityRef) -> Option<&str> {
        match self.objects.get(object)? {
            Place::At(l) => Some(l),
            Place::HeldBy(a) => self.agents.get(a).map(String::as_str),
        }
    }

    pub fn home_of(&self, agent: &str) -> Option<&str> {
        self.agents.get(agent).map(String::as_str)
    }

    pub fn holds(&self, atom: &Atom) -> bool {
        self.location_of(&atom.object) == Some(atom.location.as_str())
    }

    pub fn locations(&self) -> impl Iterator<Item = &str> {
        self.locations.iter().map(String::as_str)
    }

    pub fn reachable(&self) -> impl Iterator<Item = &str> {
        self.locations.iter().filter(|l| !self.unreachable.contains(*l)).map(String::as_str)
    }

    pub fn is_reachable(&self, loc: &str) -> bool {
        self.locations.contains(loc) && !self.unreachable.contains(loc)
    }

    pub fn objects(&self) -> impl Iterator<Item = (&EntityRef, &Place)> {
        self.objects.iter()
    }

    /// A location name, or an agent name standing for its home location.
    fn resolve(&self, name: &str) -> Option<String> {
        if self.locations.contains(name) {
            Some(name.to_string())
        } else {
            self.agents.get(name).cloned()
        }
    }

    /// Reads a goal from `obj BE :to L` or `A PTRANS obj [:from S] :to R`.
    pub fn goal_of(&self, store: &CdStore, goal: CzId) -> Result<Goal, WorldError> {
        let cz = store.cz(goal)?;
        let bad = |m: &str| WorldError::MalformedGoal(format!("{m} in {}", store.canonicalize(goal).unwrap_or_default()));
        let (object, to, source) = match cz.act {
            Act::Be => (cz.actor.clone(), cz.to.as_ref().ok_or_else(|| bad("no location"))?, None),
            Act::Ptrans => {
                let Some(Filler::Entity(obj)) = &cz.object else { return Err(bad("no object entity")) };
                (obj.clone(), cz.to.as_ref().ok_or_else(|| bad("no destination"))?, cz.from.as_ref())
            }
            _ => return Err(bad("not a world predicate")),
        };
        if cz.state.is_some() {
            return Err(bad("state attribution is not a world predicate"));
        }
        let location = self.resolve(&to.name).ok_or_else(|| bad(&format!("unknown place {to}")))?;
        let source = match source {
            Some(s) => Some(self.resolve(&s.name).ok_or_else(|| bad(&format!("unknown place {s}")))?),
            None => None,
        };
        Ok(Goal { atom: Atom::new(object, location), source })
    }

    /// Applicable moves in lexicographic order of (object, from, to).
    fn moves(&self, actor: &str) -> Vec<Step> {
        let mut out = Vec::new();
        for obj in self.objects.keys() {
            let Some(from) = self.location_of(obj) else { continue };
            if !self.is_reachable(from) {
                continue;
            }
            for to in self.reachable().filter(|t| *t != from) {
                out.push(Step { actor: actor.to_string(), object: obj.clone(), from: from.to_string(), to: to.to_string() });
            }
        }
        out
    }

    fn apply(&mut self, step: &Step) -> Result<(), WorldError> {
        if !self.holds(&step.precondition()) || !self.is_reachable(&step.from) || !self.is_reachable(&step.to) {
            return Err(WorldError::PreconditionViolated(step.precondition()));
        }
        self.objects.insert(step.object.clone(), Place::At(step.to.clone()));
        Ok(())
    }

    /// Shortest plan (lexicographically first among the shortest) reaching the goal within `max_depth` moves.
    pub fn plan(&self, goal: &Goal, actor: &str, max_depth: u32) -> PlanResult {
        if self.holds(&goal.atom) {
            return PlanResult::Plan(Vec::new());
        }
        let mut seen = BTreeSet::from([self.objects.clone()]);
        let mut queue = VecDeque::from([(self.clone(), Vec::<Step>::new())]);
        let mut deepest = 0;
        while let Some((w, path)) = queue.pop_front() {
            deepest = deepest.max(path.len() as u32);
            if path.len() as u32 >= max_depth {
                continue;
            }
            for step in w.moves(actor) {
                let mut next = w.clone();
                next.apply(&step).expect("generated moves are applicable");
                let mut p = path.clone();
                p.push(step);
                if next.holds(&goal.atom) {
                    return PlanResult::Plan(p);
                }
                if seen.insert(next.objects.clone()) {
                    queue.push_back((next, p));
                }
            }
        }
        PlanResult::Failure { unsatisfied: self.blocking_precondition(goal), at_depth: deepest }
    }

    /// Precondition of the first single move that would achieve the goal, preferring the goal's named source.
    fn blocking_precondition(&self, goal: &Goal) -> Atom {
        let target = &goal.atom.location;
        let candidates: Vec<&str> = self.reachable().filter(|l| *l != target).collect();
        let from = goal
            .source
            .as_deref()
            .filter(|s| candidates.contains(s))
            .or_else(|| candidates.first().copied())
            .or(goal.source.as_deref())
            .unwrap_or(target);
        Atom::new(goal.atom.object.clone(), from)
    }

    /// Applies each step in order; one event per step.
    pub fn execute(&mut self, plan: &[Step]) -> Result<Vec<Atom>, WorldError> {
        let mut trial = self.clone();
        let mut events = Vec::new();
        for step in plan {
            trial.apply(step)?;
            events.push(step.effect());
        }
        *self = trial;
        Ok(events)
    }

    /// Every placement as a ground state conceptualization, objects first, then agents.
    pub fn observe(&self) -> Vec<Conceptualization> {
        let be = |who: &EntityRef, at: &str| Conceptualization::new(who.clone(), Act::Be).to(EntityRef::new(at));
        let objects = self.objects.iter().map(|(o, p)| match p {
            Place::At(l) | Place::HeldBy(l) => be(o, l),
        });
        let agents = self.agents.iter().map(|(a, l)| be(&EntityRef::new(a.clone()), l));
        objects.chain(agents).collect()
    }
}
