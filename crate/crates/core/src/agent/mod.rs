//! Agents: memory, the per-tick appraise/deliberate loop, and acting.

mod state;

use std::collections::BTreeSet;

use thiserror::Error;

pub use state::*;

use crate::cdgraph::{canonical_tree, Act, CdStore, CzId, EntityRef, Filler, GraphError, LinkKind, Mods, StateName};
use crate::dialogue::trace::{detail, EventId, EventKind, Trace};
use crate::matcher::{instantiate, term_of, Bindings, CzTerm, MatchError, ModsTerm};
use crate::rules::{fire_cycle, AgentView, Effect, Firing, Rulebase};
use crate::surface::{SurfaceError, TemplateSet};
use crate::vocab::Illocution;
use crate::world::{PlanResult, WorldError, WorldState};

/// Search depth for the planner.
pub const PLAN_DEPTH: u32 = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AgentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("{agent} has no model of {other}")]
    NoModel { agent: String, other: String },
}

/// An utterance in transit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub from: String,
    pub to: String,
    pub text: String,
    pub event: EventId,
}

/// Everything an agent shares with the rest of the simulation.
pub struct Env<'a> {
    pub store: &'a mut CdStore,
    pub world: &'a mut WorldState,
    pub rules: &'a Rulebase,
    pub templates: &'a TemplateSet,
    pub trace: &'a mut Trace,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepOutcome {
    /// Events emitted during the step.
    pub activity: usize,
    pub outbox: Vec<Message>,
}

/// The term of `cz` reduced for comparison: a WANT stands for what is wanted,
/// the source is dropped, and `strip` modifiers are removed.
pub fn core_term(store: &CdStore, cz: CzId, strip: Mods) -> Option<CzTerm> {
    let c = store.get(cz)?;
    let target = if c.act == Act::Want { c.object_cz()? } else { cz };
    let mut t = term_of(store, target).ok()?;
    t.from = None;
    t.mods = ModsTerm::Exact(t.exact_mods().without(strip));
    Some(t)
}

/// Which open expectations `incoming` settles, and how.
pub fn check_prosp(me: &AgentState, store: &CdStore, incoming: CzId) -> Vec<(usize, ProspStatus)> {
    let Some(inc) = store.get(incoming) else { return vec![] };
    let Ok(inc_term) = term_of(store, incoming) else { return vec![] };
    let negated = inc.mods.contains(Mods::NEG);
    let unnegated = {
        let mut t = inc_term.clone();
        t.mods = ModsTerm::Exact(inc.mods.without(Mods::NEG));
        t
    };
    let loose = Mods::CAN | Mods::F | Mods::PAST;
    let inc_core = core_term(store, incoming, loose);
    let mut out = Vec::new();
    for (i, entry) in me.expc.prosp.iter().enumerate() {
        if entry.status != ProspStatus::Open {
            continue;
        }
        let Ok(entry_term) = term_of(store, entry.cz) else { continue };
        if negated {
            if unnegated == entry_term {
                out.push((i, ProspStatus::Contradicted));
            }
        } else if entry_term == inc_term
            || (inc.mods.contains(Mods::PAST) && inc_core.is_some() && inc_core == core_term(store, entry.cz, loose))
        {
            out.push((i, ProspStatus::Fulfilled));
        }
    }
    out
}

fn canon(store: &CdStore, cz: CzId) -> String {
    canonical_tree(store, cz).unwrap_or_else(|_| cz.to_string())
}

fn ground(term: &CzTerm, store: &mut CdStore) -> Result<CzId, MatchError> {
    instantiate(term, &Bindings::new(), store, false)
}

/// `at(object, location)` for a location state, otherwise the canonical form.
fn atom_text(store: &CdStore, cz: CzId) -> String {
    match store.get(cz) {
        Some(c) if c.act == Act::Be && c.state.is_none() => match &c.to {
            Some(loc) => format!("at({}, {loc})", c.actor),
            None => canon(store, cz),
        },
        _ => canon(store, cz),
    }
}

fn same_tree(store: &CdStore, a: CzId, b: CzId) -> bool {
    a == b || canonical_tree(store, a).ok().zip(canonical_tree(store, b).ok()).is_some_and(|(x, y)| x == y)
}

/// Runs `me` through one tick: perceive `inbox`, appraise, deliberate, act.
pub fn step(me: &mut AgentState, env: &mut Env, inbox: &[Message], tick: u32) -> Result<StepOutcome, AgentError> {
    let before = env.trace.len();
    me.scratch = Scratch::default();
    me.refractory.clear();
    me.last_tick = tick;

    for m in me.motc.iter_mut().filter(|m| m.event.is_none() && !m.is_adopted()) {
        let payload = canon(env.store, m.want);
        m.event = Some(env.trace.emit(tick, &me.id, EventKind::Motivation, payload, detail([]), vec![]));
    }

    for msg in inbox {
        perceive(me, env, msg, tick)?;
    }

    loop {
        let mut quiet = true;
        loop {
            let mut refractory = std::mem::take(&mut me.refractory);
            let view = AgentView { me: &*me, store: &*env.store, world: &*env.world, tick };
            let firings = fire_cycle(env.rules, &view, &mut refractory);
            me.refractory = refractory;
            if firings.is_empty() {
                break;
            }
            quiet = false;
            for f in firings {
                apply(me, env, f, tick)?;
            }
        }
        if !me.pending.is_empty() {
            quiet = false;
            deliberate(me, env, tick)?;
        }
        if quiet {
            break;
        }
    }

    let outbox = act(me, env, tick)?.into_iter().collect();
    Ok(StepOutcome { activity: env.trace.len() - before, outbox })
}

fn perceive(me: &mut AgentState, env: &mut Env, msg: &Message, tick: u32) -> Result<(), AgentError> {
    let recognized = match env.templates.recognize(&msg.text, &msg.from, &me.id) {
        Ok(r) => r,
        Err(SurfaceError::Unrecognized(_)) => {
            let d = detail([("speaker", msg.from.clone())]);
            env.trace.emit(tick, &me.id, EventKind::Heard, msg.text.clone(), d, vec![msg.event]);
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let cz = ground(&recognized.term, env.store)?;
    let d = detail([
        ("speaker", msg.from.clone()),
        ("illocution", recognized.illocution.to_string()),
        ("template", recognized.template.clone()),
    ]);
    let event = env.trace.emit(tick, &me.id, EventKind::Perceived, canon(env.store, cz), d, vec![msg.event]);
    me.expc.episodic.push(event);
    me.scratch.perceived.push(Perceived { event, speaker: msg.from.clone(), cz, illocution: recognized.illocution });
    for (entry, status) in check_prosp(me, env.store, cz) {
        let e = &mut me.expc.prosp[entry];
        e.status = status;
        let payload = format!("{}: {}", status_word(status), canon(env.store, e.cz));
        let provenance = std::iter::once(event).chain(e.event).collect();
        let ev = env.trace.emit(tick, &me.id, EventKind::ProspUpdate, payload, detail([]), provenance);
        me.scratch.prosp_updates.push(ProspUpdate { event: ev, entry, status, speaker: msg.from.clone() });
    }
    Ok(())
}

fn status_word(s: ProspStatus) -> &'static str {
    match s {
        ProspStatus::Open => "open",
        ProspStatus::Fulfilled => "fulfilled",
        ProspStatus::Contradicted => "contradicted",
    }
}

fn apply(me: &mut AgentState, env: &mut Env, f: Firing, tick: u32) -> Result<(), AgentError> {
    let bindings = f.bindings.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
    let firing = env.trace.emit(tick, &me.id, EventKind::RuleFiring, f.rule.clone(), bindings, f.triggers.clone());
    let why = vec![firing];
    for effect in f.effects {
        match effect {
            Effect::AssertCz { term, elaborates } => {
                let cz = ground(&term, env.store)?;
                let ev = env.trace.emit(tick, &me.id, EventKind::Assertion, canon(env.store, cz), detail([]), why.clone());
                if let Some(m) = elaborates.and_then(|i| me.motc.get_mut(i)) {
                    m.elaboration = Some(cz);
                    m.elaboration_event = Some(ev);
                }
            }
            Effect::SetAffect { state, on, object } => set_affect(me, env, state, on, object, tick, &why),
            Effect::AdoptWant { want, from } => {
                let cz = ground(&want, env.store)?;
                let d = detail([("from", from.clone())]);
                let ev = env.trace.emit(tick, &me.id, EventKind::Motivation, canon(env.store, cz), d, why.clone());
                me.motc.push(MConc {
                    id: me.motc.len(),
                    want: cz,
                    status: WantStatus::Active,
                    source: WantSource::Adopted { from },
                    elaboration: None,
                    elaboration_event: None,
                    pursued: None,
                    event: Some(ev),
                });
            }
            Effect::InvokePlanner { goal } => {
                let mconc = me.motc.iter().rev().find(|m| {
                    env.store.get(m.want).and_then(|w| w.object_cz()).is_some_and(|o| same_tree(env.store, o, goal))
                });
                me.pending.push(PendingPlan { goal, mconc: mconc.map(|m| m.id), firing });
            }
            Effect::EmitUtteranceIntent { term, tone, illocution, addressee } => {
                let cz = ground(&term, env.store)?;
                me.bf.get_or_insert(Intent { cz, tone, illocution, addressee, firing });
            }
            Effect::AnswerWhy { answer, addressee, .. } => {
                let cz = ground(&answer, env.store)?;
                me.bf.get_or_insert(Intent {
                    cz,
                    tone: crate::vocab::Tone::Neutral,
                    illocution: Illocution::Answer,
                    addressee,
                    firing,
                });
            }
            Effect::StoreProsp { term, about } => {
                let cz = ground(&term, env.store)?;
                let payload = format!("open: {}", canon(env.store, cz));
                let ev = env.trace.emit(tick, &me.id, EventKind::ProspUpdate, payload, detail([]), why.clone());
                me.expc.prosp.push(ProspEntry { cz, about, stored_at: tick, status: ProspStatus::Open, event: Some(ev) });
            }
            Effect::RecordCause { effect, cause } => {
                let cz = ground(&effect, env.store)?;
                let d = detail([("effect", canon(env.store, cz))]);
                let ev = env.trace.emit(tick, &me.id, EventKind::Cause, atom_text(env.store, cause), d, why.clone());
                me.causes.push(CauseRecord { effect: cz, cause, event: ev });
            }
            Effect::ResolveWant { mconc, status } => {
                if let Some(m) = me.motc.get_mut(mconc).filter(|m| m.status == WantStatus::Active) {
                    m.status = status;
                }
            }
            Effect::MarkPursued { mconc, mode } => {
                if let Some(m) = me.motc.get_mut(mconc) {
                    m.pursued = Some(mode);
                }
            }
        }
    }
    Ok(())
}

fn set_affect(me: &mut AgentState, env: &mut Env, state: StateName, on: bool, object: CzId, tick: u32, why: &[EventId]) {
    let d = detail([("object", canon(env.store, object))]);
    match (on, me.affects.iter().position(|a| a.state == state)) {
        (true, None) => {
            let event = env.trace.emit(tick, &me.id, EventKind::AffectOnset, state.to_string(), d, why.to_vec());
            me.affects.push(Affect { state, object, onset: tick, event });
        }
        (false, Some(i)) => {
            let gone = me.affects.remove(i);
            let d = detail([("object", canon(env.store, gone.object))]);
            env.trace.emit(tick, &me.id, EventKind::AffectOffset, state.to_string(), d, why.to_vec());
        }
        _ => {}
    }
}

fn deliberate(me: &mut AgentState, env: &mut Env, tick: u32) -> Result<(), AgentError> {
    for job in std::mem::take(&mut me.pending) {
        let Some(mi) = job.mconc else { continue };
        let provenance: Vec<EventId> = std::iter::once(job.firing).chain(me.motc[mi].event).collect();
        let goal = match env.world.goal_of(env.store, job.goal) {
            Ok(g) => g,
            Err(e) => {
                let d = detail([("error", e.to_string())]);
                let ev = env.trace.emit(tick, &me.id, EventKind::PlanResult, "failure", d, provenance);
                me.motc[mi].status = WantStatus::Failed;
                me.scratch.plan_reports.push(PlanReport {
                    event: ev,
                    mconc: mi,
                    goal: job.goal,
                    outcome: PlanOutcome::Failed { unsatisfied: None },
                });
                continue;
            }
        };
        match env.world.plan(&goal, &me.id, PLAN_DEPTH) {
            PlanResult::Plan(steps) => {
                let text = steps.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
                let d = detail([("goal", goal.atom.to_string()), ("length", steps.len().to_string())]);
                let ev = env.trace.emit(tick, &me.id, EventKind::PlanResult, format!("plan: {text}"), d, provenance);
                env.world.execute(&steps)?;
                for s in &steps {
                    env.trace.emit(tick, &me.id, EventKind::WorldEvent, s.to_string(), detail([]), vec![ev]);
                }
                me.motc[mi].status = WantStatus::Satisfied;
                me.scratch.plan_reports.push(PlanReport { event: ev, mconc: mi, goal: job.goal, outcome: PlanOutcome::Executed });
            }
            PlanResult::Failure { unsatisfied, at_depth } => {
                let d = detail([("goal", goal.atom.to_string()), ("depth", at_depth.to_string())]);
                let ev =
                    env.trace.emit(tick, &me.id, EventKind::PlanResult, format!("failure: {unsatisfied}"), d, provenance);
                let cz = ground(&unsatisfied.to_term(), env.store)?;
                me.motc[mi].status = WantStatus::Failed;
                me.scratch.plan_reports.push(PlanReport {
                    event: ev,
                    mconc: mi,
                    goal: job.goal,
                    outcome: PlanOutcome::Failed { unsatisfied: Some((unsatisfied, cz)) },
                });
                if let Some(other) = me.motc[mi].requester().map(str::to_string) {
                    let mut report = term_of(env.store, job.goal)?;
                    report.mods = ModsTerm::Exact(report.exact_mods().with(Mods::CAN | Mods::NEG));
                    if let Ok(czs) = simulate(me, env, &other, &report, Illocution::Inform, job.goal, tick) {
                        let payload = czs.iter().map(|c| canon(env.store, *c)).collect::<Vec<_>>().join("; ");
                        let d = detail([("about", other.clone())]);
                        let pe = env.trace.emit(tick, &me.id, EventKind::Prediction, payload, d, vec![ev]);
                        me.scratch.predictions.push(Prediction { event: pe, about: other, czs });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Predicts how `other` would react to hearing `incoming` as `illocution`,
/// by running this agent's model of `other` on a scratch copy of the store.
/// Predicted reactions are asserted as `other BE <state> :obj about`.
pub fn simulate(
    me: &AgentState,
    env: &mut Env,
    other: &str,
    incoming: &CzTerm,
    illocution: Illocution,
    about: CzId,
    tick: u32,
) -> Result<Vec<CzId>, AgentError> {
    let model = me
        .conc
        .other_models
        .get(other)
        .ok_or_else(|| AgentError::NoModel { agent: me.id.clone(), other: other.to_string() })?;
    let mut store = env.store.clone();
    let heard = ground(incoming, &mut store)?;
    let mut expected = incoming.clone();
    expected.mods = ModsTerm::Exact(incoming.exact_mods().without(Mods::NEG));
    let expected = ground(&expected, &mut store)?;

    let mut hypo = AgentState::new(other);
    hypo.expc.prosp.push(ProspEntry { cz: expected, about, stored_at: tick, status: ProspStatus::Open, event: None });
    for (entry, status) in check_prosp(&hypo, &store, heard) {
        hypo.expc.prosp[entry].status = status;
        hypo.scratch.prosp_updates.push(ProspUpdate { event: 0, entry, status, speaker: me.id.clone() });
    }
    let rules = env.rules.subset(model);
    let view = AgentView { me: &hypo, store: &store, world: env.world, tick };
    let mut states = Vec::new();
    for f in fire_cycle(&rules, &view, &mut BTreeSet::new()) {
        for e in f.effects {
            if let Effect::SetAffect { state, on: true, .. } = e {
                if !states.contains(&state) {
                    states.push(state);
                }
            }
        }
    }

    let who = EntityRef::new(other);
    let mut out = Vec::new();
    for state in states {
        let cz = crate::cdgraph::Conceptualization::new(who.clone(), Act::Be).state(state).object(Filler::Cz(about));
        out.push(env.store.assert_cz(cz)?);
    }
    for fact in me.conc.illocutions.iter().filter(|k| k.on == illocution && k.to == other) {
        out.push(fact.yields);
    }
    Ok(out)
}

/// Realizes the buffered intent, records the speech act, and returns the message.
fn act(me: &mut AgentState, env: &mut Env, tick: u32) -> Result<Option<Message>, AgentError> {
    let Some(intent) = me.bf.take() else { return Ok(None) };
    let realized = env.templates.realize(env.store, intent.cz, intent.tone)?;
    let n = env.trace.of_kind(EventKind::Utterance).count() + 1;
    let utterance = EntityRef::with_param("Utterance", n.to_string());
    let speaker = EntityRef::new(me.id.clone());
    let build = crate::cdgraph::Conceptualization::new(speaker.clone(), Act::Mbuild).object(Filler::Entity(utterance.clone()));
    let build = env.store.assert_cz(build)?;
    let send = crate::cdgraph::Conceptualization::new(speaker, Act::Mtrans)
        .object(Filler::Entity(utterance))
        .to(EntityRef::new(intent.addressee.clone()));
    let send = env.store.assert_cz(send)?;
    env.store.add_link(LinkKind::Temporal { before: build, after: send }, Mods::empty())?;
    let d = detail([
        ("to", intent.addressee.clone()),
        ("template", realized.template),
        ("illocution", realized.illocution.to_string()),
        ("content", canon(env.store, intent.cz)),
    ]);
    let event = env.trace.emit(tick, &me.id, EventKind::Utterance, realized.text.clone(), d, vec![intent.firing]);
    me.expc.episodic.push(event);
    Ok(Some(Message { from: me.id.clone(), to: intent.addressee, text: realized.text, event }))
}
