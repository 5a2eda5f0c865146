//! Scenarios and the turn-taking loop between agents.

pub mod trace;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::agent::{self, AgentError, AgentState, Env, IllocutionFact, Message};
use crate::cdgraph::CdStore;
use crate::cdx::{self, CdxDocument, CdxError, Diagnostic, Item};
use crate::rules::{load_rulebase, RuleError, Rulebase, StrategyRegistry};
use crate::surface::{SurfaceError, TemplateSet, BUILTIN_TEMPLATES};
use crate::matcher::{instantiate, Bindings, CzTerm};
use crate::world::{WorldError, WorldState};

pub use trace::{Event, EventId, EventKind, Trace, TraceError};

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Parse(#[from] CdxError),
    #[error("{}", diagnostics_text(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("tick {tick}, {agent}: {source}")]
    Agent { tick: u32, agent: String, source: AgentError },
}

fn diagnostics_text(d: &[Diagnostic]) -> String {
    d.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n")
}

/// A loaded scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub max_ticks: u32,
    pub turns: Vec<String>,
    pub agents: BTreeMap<String, AgentState>,
    pub store: CdStore,
    pub world: WorldState,
    pub rules: Rulebase,
    pub templates: TemplateSet,
}

/// State after a run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Trace,
    pub agents: BTreeMap<String, AgentState>,
    pub world: WorldState,
    pub store: CdStore,
    pub ticks: u32,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DialogueError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| DialogueError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, DialogueError> {
        Self::from_doc(&cdx::parse(text)?)
    }

    pub fn from_doc(doc: &CdxDocument) -> Result<Self, DialogueError> {
        let bad = |m: String| DialogueError::Scenario(m);
        let mut decls = doc.items.iter().filter_map(|i| match i {
            Item::Scenario(s) => Some(s),
            _ => None,
        });
        let decl = decls.next().ok_or_else(|| bad("no scenario item".into()))?;
        if decls.next().is_some() {
            return Err(bad("more than one scenario item".into()));
        }
        let mut worlds = doc.items.iter().filter_map(|i| match i {
            Item::World(w) => Some(w),
            _ => None,
        });
        let world = match (worlds.next(), worlds.next()) {
            (Some(w), None) => WorldState::from_decl(w)?,
            (None, _) => return Err(bad("no world item".into())),
            (Some(_), Some(_)) => return Err(bad("more than one world item".into())),
        };

        let own_rules = load_rulebase(doc, &StrategyRegistry::builtin())?;
        let rules = match decl.rules.as_str() {
            "builtin" => {
                let mut rb = Rulebase::builtin();
                rb.extend(own_rules)?;
                rb
            }
            "own" => own_rules,
            other => return Err(bad(format!("unknown rule set {other}; expected builtin or own"))),
        };

        let own_templates: Vec<_> = doc
            .items
            .iter()
            .filter_map(|i| match i {
                Item::Template(t) => Some(t.clone()),
                _ => None,
            })
            .collect();
        let templates = if own_templates.is_empty() {
            TemplateSet::builtin()
        } else {
            let base = cdx::parse(BUILTIN_TEMPLATES)?;
            let builtin = base.items.into_iter().filter_map(|i| match i {
                Item::Template(t) => Some(t),
                _ => None,
            });
            TemplateSet::from_decls(builtin.chain(own_templates))?
        };

        let loaded = cdx::load_store(doc).map_err(DialogueError::Invalid)?;
        let mut agents = BTreeMap::new();
        for item in &doc.items {
            let Item::Agent(a) = item else { continue };
            let mut st = AgentState::new(a.name.clone());
            st.can_ptrans = a.can_ptrans;
            st.conc.attitudes = a.attitudes.iter().cloned().collect();
            st.conc.other_models = a.models.iter().cloned().collect();
            if agents.insert(a.name.clone(), st).is_some() {
                return Err(bad(format!("agent {} declared twice", a.name)));
            }
        }
        for (who, want) in &loaded.motives {
            agents.get_mut(who).ok_or_else(|| bad(format!("motive for undeclared agent {who}")))?.add_motive(*want);
        }
        for k in &loaded.illocutions {
            let st = agents.get_mut(&k.agent).ok_or_else(|| bad(format!("illocution for undeclared agent {}", k.agent)))?;
            st.conc.illocutions.push(IllocutionFact { on: k.on, to: k.to.clone(), yields: k.yields, otherwise: k.otherwise });
        }
        if let Some(t) = decl.turns.iter().find(|t| !agents.contains_key(*t)) {
            return Err(bad(format!("turn for undeclared agent {t}")));
        }
        if agents.len() != 2 {
            return Err(bad(format!("a dialogue needs exactly two agents, found {}", agents.len())));
        }
        if decl.turns.is_empty() && decl.max_ticks > 0 {
            return Err(bad("no turns".into()));
        }

        Ok(Scenario {
            name: decl.name.clone(),
            max_ticks: decl.max_ticks,
            turns: decl.turns.clone(),
            agents,
            store: loaded.store,
            world,
            rules,
            templates,
        })
    }

    /// Runs to completion. See [`Simulation`] for the stopping rule.
    pub fn run(self) -> Result<RunOutcome, DialogueError> {
        let mut sim = Simulation::new(self);
        while sim.step()? {}
        Ok(sim.finish())
    }
}

/// A scenario being run one tick at a time.
///
/// Turns go in declared order, one agent per tick from tick 1. The run is over
/// after a full round of ticks in which no agent emitted an event and no message
/// is waiting, or once `max_ticks` ticks have passed.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    trace: Trace,
    mail: Vec<Message>,
    idle: usize,
    tick: u32,
    done: bool,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Self {
        let done = scenario.max_ticks == 0;
        Simulation { scenario, trace: Trace::new(), mail: Vec::new(), idle: 0, tick: 0, done }
    }

    /// Runs the next tick. Returns false, doing nothing, once the run is over.
    pub fn step(&mut self) -> Result<bool, DialogueError> {
        if self.done {
            return Ok(false);
        }
        self.tick += 1;
        let tick = self.tick;
        let s = &mut self.scenario;
        let name = s.turns[(tick as usize - 1) % s.turns.len()].clone();
        let (inbox, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.mail).into_iter().partition(|m| m.to == name);
        self.mail = rest;
        let me = s.agents.get_mut(&name).expect("turns name declared agents");
        let mut env = Env {
            store: &mut s.store,
            world: &mut s.world,
            rules: &s.rules,
            templates: &s.templates,
            trace: &mut self.trace,
        };
        let out = agent::step(me, &mut env, &inbox, tick)
            .map_err(|source| DialogueError::Agent { tick, agent: name.clone(), source })?;
        self.mail.extend(out.outbox);
        self.idle = if out.activity == 0 { self.idle + 1 } else { 0 };
        self.done = (self.idle >= s.turns.len() && self.mail.is_empty()) || tick >= s.max_ticks;
        Ok(true)
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn tick(&self) -> u32 {
        self.tick
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn agent(&self, name: &str) -> Option<&AgentState> {
        self.scenario.agents.get(name)
    }

    /// Asserts a conceptualization from outside the simulation. The resulting
    /// event has no provenance.
    pub fn inject(&mut self, term: &CzTerm) -> Result<EventId, DialogueError> {
        let cz = instantiate(term, &Bindings::new(), &mut self.scenario.store, false)
            .map_err(|e| DialogueError::Scenario(e.to_string()))?;
        let payload = crate::cdgraph::canonical_tree(&self.scenario.store, cz).unwrap_or_else(|_| cz.to_string());
        Ok(self.trace.emit(self.tick, "world", EventKind::Injected, payload, trace::detail([]), vec![]))
    }

    pub fn finish(self) -> RunOutcome {
        let Scenario { agents, world, store, .. } = self.scenario;
        RunOutcome { trace: self.trace, agents, world, store, ticks: self.tick }
    }
}

impl RunOutcome {
    /// The provenance chain from `event` back to a motivation.
    pub fn why(&self, event: EventId) -> Result<Vec<EventId>, TraceError> {
        self.trace.why(event)
    }
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in self.trace.events() {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}
