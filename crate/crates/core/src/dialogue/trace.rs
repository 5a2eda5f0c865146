//! Append-only event log with provenance, written as one JSON object per line.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type EventId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Utterance,
    AffectOnset,
    AffectOffset,
    RuleFiring,
    PlanResult,
    WorldEvent,
    Prediction,
    ProspUpdate,
    Motivation,
    Assertion,
    Perceived,
    Heard,
    Cause,
    Injected,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Utterance => "utterance",
            EventKind::AffectOnset => "affect-onset",
            EventKind::AffectOffset => "affect-offset",
            EventKind::RuleFiring => "rule-firing",
            EventKind::PlanResult => "plan-result",
            EventKind::WorldEvent => "world-event",
            EventKind::Prediction => "prediction",
            EventKind::ProspUpdate => "prosp-update",
            EventKind::Motivation => "motivation",
            EventKind::Assertion => "assertion",
            EventKind::Perceived => "perceived",
            EventKind::Heard => "heard",
            EventKind::Cause => "cause",
            EventKind::Injected => "injected",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub tick: u32,
    pub agent: String,
    pub kind: EventKind,
    pub payload: String,
    pub detail: BTreeMap<String, String>,
    pub provenance: Vec<EventId>,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} t{} {} {}: {}", self.id, self.tick, self.agent, self.kind, self.payload)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("no event with id {0}")]
    UnknownEvent(EventId),
    #[error("event {0} has no provenance chain to a motivation")]
    NoProvenance(EventId),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    events: Vec<Event>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn get(&self, id: EventId) -> Option<&Event> {
        self.events.get(id as usize)
    }

    pub fn next_id(&self) -> EventId {
        self.events.len() as EventId
    }

    /// Appends an event. Provenance must name earlier events.
    pub fn emit(
        &mut self,
        tick: u32,
        agent: &str,
        kind: EventKind,
        payload: impl Into<String>,
        detail: BTreeMap<String, String>,
        provenance: Vec<EventId>,
    ) -> EventId {
        let id = self.next_id();
        debug_assert!(provenance.iter().all(|p| *p < id), "provenance must precede the event");
        self.events.push(Event { id, tick, agent: agent.to_string(), kind, payload: payload.into(), detail, provenance });
        id
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TraceError> {
        let mut events = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let e: Event =
                serde_json::from_str(line).map_err(|e| TraceError::Malformed { line: i + 1, message: e.to_string() })?;
            if e.id as usize != events.len() || e.provenance.iter().any(|p| *p >= e.id) {
                return Err(TraceError::Malformed { line: i + 1, message: "ids out of order".into() });
            }
            events.push(e);
        }
        Ok(Trace { events })
    }

    /// Utterance texts in order.
    pub fn utterances(&self) -> Vec<&str> {
        self.of_kind(EventKind::Utterance).map(|e| e.payload.as_str()).collect()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Follows provenance depth-first, in recorded order, to the first motivation event.
    /// The chain starts at `id` and ends at that motivation.
    pub fn why(&self, id: EventId) -> Result<Vec<EventId>, TraceError> {
        let start = self.get(id).ok_or(TraceError::UnknownEvent(id))?;
        let mut path = vec![start.id];
        let mut visited = vec![false; self.events.len()];
        if self.search(start.id, &mut path, &mut visited) {
            Ok(path)
        } else {
            Err(TraceError::NoProvenance(id))
        }
    }

    fn search(&self, id: EventId, path: &mut Vec<EventId>, visited: &mut [bool]) -> bool {
        let e = &self.events[id as usize];
        if e.kind == EventKind::Motivation {
            return true;
        }
        visited[id as usize] = true;
        for &p in &e.provenance {
            if visited[p as usize] {
                continue;
            }
            path.push(p);
            if self.search(p, path, visited) {
                return true;
            }
            path.pop();
        }
        false
    }
}

pub fn detail<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
