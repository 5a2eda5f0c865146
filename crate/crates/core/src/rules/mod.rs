//! Forward-chaining rules. Each rule is a named strategy that inspects an
//! agent's view and proposes activations; `fire_cycle` orders them by
//! (priority, name) and drops anything already fired this tick.

mod builtin;
mod declarative;
mod registry;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::agent::{AgentState, Pursuit, WantStatus};
use crate::cdgraph::{CdStore, CzId, StateName};
use crate::cdx::{self, CdxDocument, Item, RuleBody};
use crate::dialogue::trace::EventId;
use crate::matcher::{CzTerm, MatchError};
use crate::vocab::{Illocution, Tone};
use crate::world::WorldState;

pub use declarative::DeclarativeRule;
pub use registry::StrategyRegistry;

pub const BUILTIN_RULES: &str = include_str!("../../rules/builtin.cdx");

/// Read-only snapshot handed to rule strategies.
#[derive(Clone, Copy)]
pub struct AgentView<'a> {
    pub me: &'a AgentState,
    pub store: &'a CdStore,
    pub world: &'a WorldState,
    pub tick: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    /// Asserts a conceptualization; if `elaborates` names a motivation, it becomes that want's elaboration.
    AssertCz { term: CzTerm, elaborates: Option<usize> },
    SetAffect { state: StateName, on: bool, object: CzId },
    AdoptWant { want: CzTerm, from: String },
    InvokePlanner { goal: CzId },
    EmitUtteranceIntent { term: CzTerm, tone: Tone, illocution: Illocution, addressee: String },
    StoreProsp { term: CzTerm, about: CzId },
    AnswerWhy { question: CzId, answer: CzTerm, addressee: String },
    RecordCause { effect: CzTerm, cause: CzId },
    ResolveWant { mconc: usize, status: WantStatus },
    MarkPursued { mconc: usize, mode: Pursuit },
}

impl Effect {
    pub fn name(&self) -> &'static str {
        match self {
            Effect::AssertCz { .. } => "assert-cz",
            Effect::SetAffect { .. } => "set-affect",
            Effect::AdoptWant { .. } => "adopt-want",
            Effect::InvokePlanner { .. } => "invoke-planner",
            Effect::EmitUtteranceIntent { .. } => "emit-utterance-intent",
            Effect::StoreProsp { .. } => "store-prosp",
            Effect::AnswerWhy { .. } => "answer-why",
            Effect::RecordCause { .. } => "record-cause",
            Effect::ResolveWant { .. } => "resolve-want",
            Effect::MarkPursued { .. } => "mark-pursued",
        }
    }
}

/// One way a rule could fire right now.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activation {
    pub bindings: BTreeMap<String, String>,
    pub triggers: Vec<EventId>,
    pub effects: Vec<Effect>,
}

impl Activation {
    pub fn new<const N: usize>(bindings: [(&str, String); N], triggers: Vec<EventId>, effects: Vec<Effect>) -> Self {
        Activation {
            bindings: bindings.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            triggers,
            effects,
        }
    }

    pub fn canonical_bindings(&self) -> String {
        self.bindings.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub rule: String,
    pub priority: i64,
    pub bindings: BTreeMap<String, String>,
    pub triggers: Vec<EventId>,
    pub effects: Vec<Effect>,
}

pub trait RuleStrategy: Send + Sync {
    fn activations(&self, view: &AgentView) -> Vec<Activation>;
}

#[derive(Clone)]
pub struct Rule {
    pub name: String,
    pub priority: i64,
    pub strategy_name: String,
    pub strategy: Arc<dyn RuleStrategy>,
}

impl fmt::Debug for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Rule")
            .field("name", &self.name)
            .field("priority", &self.priority)
            .field("strategy", &self.strategy_name)
            .finish()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("rule {0} is defined twice")]
    DuplicateRuleName(String),
    #[error("rule {rule}: effect uses ?{var}, which its trigger does not bind")]
    UnboundEffectVariable { rule: String, var: String },
    #[error("rule {rule}: no strategy named {strategy}")]
    UnknownStrategy { rule: String, strategy: String },
    #[error("rule {rule}: {error}")]
    Pattern { rule: String, error: MatchError },
    #[error(transparent)]
    Parse(#[from] cdx::CdxError),
}

#[derive(Debug, Clone, Default)]
pub struct Rulebase {
    rules: Vec<Rule>,
}

impl Rulebase {
    pub fn builtin() -> Self {
        let doc = cdx::parse(BUILTIN_RULES).expect("bundled rulebase parses");
        load_rulebase(&doc, &StrategyRegistry::builtin()).expect("bundled rulebase loads")
    }

    /// Rules in firing order.
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// The rules named in `names`, in firing order; unknown names are ignored.
    pub fn subset<S: AsRef<str>>(&self, names: &[S]) -> Rulebase {
        let rules = self.rules.iter().filter(|r| names.iter().any(|n| n.as_ref() == r.name)).cloned().collect();
        Rulebase { rules }
    }

    /// Adds rules, keeping (priority, name) order.
    pub fn extend(&mut self, other: Rulebase) -> Result<(), RuleError> {
        for r in other.rules {
            if self.get(&r.name).is_some() {
                return Err(RuleError::DuplicateRuleName(r.name));
            }
            self.rules.push(r);
        }
        self.sort();
        Ok(())
    }

    fn sort(&mut self) {
        self.rules.sort_by(|a, b| (a.priority, &a.name).cmp(&(b.priority, &b.name)));
    }
}

/// Builds a rulebase from the `rule` items of a document.
pub fn load_rulebase(doc: &CdxDocument, registry: &StrategyRegistry) -> Result<Rulebase, RuleError> {
    let mut rules: Vec<Rule> = Vec::new();
    let mut names = BTreeSet::new();
    for item in &doc.items {
        let Item::Rule(decl) = item else { continue };
        if !names.insert(decl.name.clone()) {
            return Err(RuleError::DuplicateRuleName(decl.name.clone()));
        }
        let (strategy_name, strategy): (String, Arc<dyn RuleStrategy>) = match &decl.body {
            RuleBody::Strategy(s) => {
                let strategy = registry
                    .get(s)
                    .ok_or_else(|| RuleError::UnknownStrategy { rule: decl.name.clone(), strategy: s.clone() })?;
                (s.clone(), strategy)
            }
            RuleBody::Declarative { when, then } => {
                ("declarative".to_string(), Arc::new(DeclarativeRule::new(&decl.name, when, then)?))
            }
        };
        rules.push(Rule { name: decl.name.clone(), priority: decl.priority, strategy_name, strategy });
    }
    let mut rb = Rulebase { rules };
    rb.sort();
    Ok(rb)
}

/// Evaluates every rule once against `view`, in (priority, name) order.
/// Activations whose (rule, bindings) key is already in `refractory` are skipped;
/// the rest are recorded there and returned, effects not yet applied.
pub fn fire_cycle(rb: &Rulebase, view: &AgentView, refractory: &mut BTreeSet<String>) -> Vec<Firing> {
    let mut out = Vec::new();
    for rule in &rb.rules {
        for act in rule.strategy.activations(view) {
            let key = format!("{}|{}", rule.name, act.canonical_bindings());
            if refractory.insert(key) {
                out.push(Firing {
                    rule: rule.name.clone(),
                    priority: rule.priority,
                    bindings: act.bindings,
                    triggers: act.triggers,
                    effects: act.effects,
                });
            }
        }
    }
    out
}
