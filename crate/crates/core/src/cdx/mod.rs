//! The CDX text format: an s-expression syntax for graphs, rules, templates and scenarios.

mod parse;
pub mod sexp;
mod serialize;
mod validate;

use std::fmt;

use crate::cdgraph::{EntityRef, StateName, Symbol};
use crate::matcher::{CzTerm, FillerTerm, LinkTerm};
use crate::vocab::{Attitude, Illocution, Tone};

pub use parse::parse;
pub use serialize::{item_sexp, serialize, term_sexp};
pub use sexp::Pos;
pub use validate::{load_store, validate, Diagnostic, IllocutionKnowledge, LoadedDoc};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax(String),
    UnknownAct(String),
    UnknownState(String),
    DanglingLabelRef(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {kind}")]
pub struct CdxError {
    pub kind: ErrorKind,
    pub pos: Pos,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ErrorKind::UnknownAct(a) => write!(f, "unknown act {a}"),
            ErrorKind::UnknownState(s) => write!(f, "unknown state {s}"),
            ErrorKind::DanglingLabelRef(l) => write!(f, "reference to undefined label #{l}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CdxDocument {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Cz(CzTerm),
    Link(LinkTerm),
    Anchor { id: String, uri: Option<String> },
    Ground { symbol: Symbol, anchor: String },
    Entity { entity: EntityRef, anchor: Option<String> },
    Elab { symbol: Symbol, steps: Vec<FillerTerm> },
    Rule(RuleDecl),
    Scenario(ScenarioDecl),
    Agent(AgentDecl),
    World(WorldDecl),
    Motive { agent: String, want: FillerTerm },
    Illocution(IllocutionDecl),
    Template(TemplateDecl),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleDecl {
    pub name: String,
    pub priority: i64,
    pub body: RuleBody,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum RuleBody {
    /// Implemented in code, looked up by name in the strategy registry.
    Strategy(String),
    Declarative { when: CzTerm, then: Vec<RuleAction> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum RuleAction {
    Assert(CzTerm),
    /// Turns an affect of the firing agent on or off, directed at the matched conceptualization.
    Affect { state: StateName, on: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioDecl {
    pub name: String,
    pub max_ticks: u32,
    pub turns: Vec<String>,
    pub rules: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentDecl {
    pub name: String,
    pub can_ptrans: bool,
    pub attitudes: Vec<(String, Attitude)>,
    /// Other-agent models: whose model, and which rules it runs.
    pub models: Vec<(String, Vec<String>)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorldDecl {
    pub locations: Vec<String>,
    pub unreachable: Vec<String>,
    pub agents: Vec<(String, String)>,
    pub at: Vec<(EntityRef, String)>,
    pub holding: Vec<(EntityRef, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IllocutionDecl {
    pub agent: String,
    pub on: Illocution,
    pub to: String,
    pub yields: FillerTerm,
    pub otherwise: Option<FillerTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateDecl {
    pub id: String,
    pub illocution: Illocution,
    pub tone: Tone,
    pub text: String,
    pub pattern: CzTerm,
}
