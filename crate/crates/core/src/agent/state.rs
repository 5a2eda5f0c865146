use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::cdgraph::{CzId, StateName};
use crate::dialogue::trace::EventId;
use crate::vocab::{Attitude, Illocution, Tone};
use crate::world::Atom;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WantStatus {
    Active,
    Satisfied,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WantSource {
    Intrinsic,
    Adopted { from: String },
}

/// How an agent has chosen to pursue one of its wants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pursuit {
    Planner,
    Directive,
    Request,
}

/// A motivation: a WANT the agent holds, where it came from and how it stands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MConc {
    pub id: usize,
    pub want: CzId,
    pub status: WantStatus,
    pub source: WantSource,
    pub elaboration: Option<CzId>,
    pub elaboration_event: Option<EventId>,
    pub pursued: Option<Pursuit>,
    /// The motivation event announcing this want; set once it is logged.
    pub event: Option<EventId>,
}

impl MConc {
    pub fn is_adopted(&self) -> bool {
        matches!(self.source, WantSource::Adopted { .. })
    }

    pub fn requester(&self) -> Option<&str> {
        match &self.source {
            WantSource::Adopted { from } => Some(from),
            WantSource::Intrinsic => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProspStatus {
    Open,
    Fulfilled,
    Contradicted,
}

/// An expectation about the future, held in the prospective part of experience memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProspEntry {
    pub cz: CzId,
    /// The outcome this expectation bears on.
    pub about: CzId,
    pub stored_at: u32,
    pub status: ProspStatus,
    pub event: Option<EventId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expc {
    pub episodic: Vec<EventId>,
    pub prosp: Vec<ProspEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IllocutionFact {
    pub on: Illocution,
    pub to: String,
    pub yields: CzId,
    pub otherwise: Option<CzId>,
}

/// General knowledge: stances toward others, models of others, what speech acts bring about.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conc {
    pub attitudes: BTreeMap<String, Attitude>,
    /// Rule names making up this agent's model of each other agent.
    pub other_models: BTreeMap<String, Vec<String>>,
    pub illocutions: Vec<IllocutionFact>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affect {
    pub state: StateName,
    pub object: CzId,
    pub onset: u32,
    pub event: EventId,
}

/// An utterance being assembled in the buffer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Intent {
    pub cz: CzId,
    pub tone: Tone,
    pub illocution: Illocution,
    pub addressee: String,
    pub firing: EventId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Perceived {
    pub event: EventId,
    pub speaker: String,
    pub cz: CzId,
    pub illocution: Illocution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanOutcome {
    Executed,
    Failed { unsatisfied: Option<(Atom, CzId)> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanReport {
    pub event: EventId,
    pub mconc: usize,
    pub goal: CzId,
    pub outcome: PlanOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub event: EventId,
    pub about: String,
    pub czs: Vec<CzId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProspUpdate {
    pub event: EventId,
    pub entry: usize,
    pub status: ProspStatus,
    /// Who said the thing that settled the entry.
    pub speaker: String,
}

/// What happened to the agent during the current tick; cleared at the start of each tick.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scratch {
    pub perceived: Vec<Perceived>,
    pub plan_reports: Vec<PlanReport>,
    pub predictions: Vec<Prediction>,
    pub prosp_updates: Vec<ProspUpdate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingPlan {
    pub goal: CzId,
    pub mconc: Option<usize>,
    pub firing: EventId,
}

/// A remembered explanation: `effect` happened because `cause` did not hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauseRecord {
    pub effect: CzId,
    pub cause: CzId,
    pub event: EventId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: String,
    pub motc: Vec<MConc>,
    pub expc: Expc,
    pub conc: Conc,
    pub affects: Vec<Affect>,
    pub bf: Option<Intent>,
    pub can_ptrans: bool,
    pub scratch: Scratch,
    /// Rule name plus canonical bindings of everything fired this tick.
    pub refractory: BTreeSet<String>,
    pub pending: Vec<PendingPlan>,
    pub causes: Vec<CauseRecord>,
    pub last_tick: u32,
}

impl AgentState {
    pub fn new(id: impl Into<String>) -> Self {
        AgentState {
            id: id.into(),
            motc: Vec::new(),
            expc: Expc::default(),
            conc: Conc::default(),
            affects: Vec::new(),
            bf: None,
            can_ptrans: false,
            scratch: Scratch::default(),
            refractory: BTreeSet::new(),
            pending: Vec::new(),
            causes: Vec::new(),
            last_tick: 0,
        }
    }

    /// Adds an intrinsic motivation; its motivation event is logged on the next step.
    pub fn add_motive(&mut self, want: CzId) -> usize {
        let id = self.motc.len();
        self.motc.push(MConc {
            id,
            want,
            status: WantStatus::Active,
            source: WantSource::Intrinsic,
            elaboration: None,
            elaboration_event: None,
            pursued: None,
            event: None,
        });
        id
    }

    pub fn affect(&self, state: StateName) -> Option<&Affect> {
        self.affects.iter().find(|a| a.state == state)
    }

    pub fn has_affect(&self, state: StateName) -> bool {
        self.affect(state).is_some()
    }

    pub fn attitude_toward(&self, other: &str) -> Option<Attitude> {
        self.conc.attitudes.get(other).copied()
    }
}
