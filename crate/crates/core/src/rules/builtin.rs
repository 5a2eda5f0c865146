//! The built-in rule strategies.

use std::collections::BTreeMap;

use super::{Activation, AgentView, Effect, RuleStrategy};
use crate::agent::{core_term, MConc, ProspStatus, ProspUpdate, Pursuit, WantStatus};
use crate::cdgraph::{canonical_tree, Act, CzId, EntityRef, Filler, LinkKind, Mods, StateName};
use crate::matcher::{term_of, want_elaboration_term, CzTerm, FillerTerm, LinkTerm, LinkTermKind, ModsTerm};
use crate::vocab::{Attitude, Illocution, Tone};

fn me(view: &AgentView) -> EntityRef {
    EntityRef::new(view.me.id.clone())
}

fn with_mods(mut t: CzTerm, add: Mods, remove: Mods) -> CzTerm {
    t.mods = ModsTerm::Exact(t.exact_mods().without(remove).with(add));
    t
}

fn same(view: &AgentView, a: CzId, b: CzId) -> bool {
    a == b || matches!((canonical_tree(view.store, a), canonical_tree(view.store, b)), (Ok(x), Ok(y)) if x == y)
}

/// The conceptualization a WANT is about.
fn want_object(view: &AgentView, want: CzId) -> Option<CzId> {
    let w = view.store.get(want)?;
    (w.act == Act::Want).then(|| w.object_cz()).flatten()
}

/// Active motivations whose want is about `about`.
fn wants_about(view: &AgentView, about: CzId) -> Vec<usize> {
    view.me
        .motc
        .iter()
        .filter(|m| m.status == WantStatus::Active && want_object(view, m.want).is_some_and(|o| same(view, o, about)))
        .map(|m| m.id)
        .collect()
}

fn on(state: StateName, object: CzId) -> Effect {
    Effect::SetAffect { state, on: true, object }
}

fn off(state: StateName, object: CzId) -> Effect {
    Effect::SetAffect { state, on: false, object }
}

/// Settled expectations of one status this tick, grouped by the outcome they bear on.
fn settled<'a>(view: &AgentView<'a>, status: ProspStatus) -> BTreeMap<CzId, Vec<&'a ProspUpdate>> {
    let mut out: BTreeMap<CzId, Vec<&ProspUpdate>> = BTreeMap::new();
    for u in view.me.scratch.prosp_updates.iter().filter(|u| u.status == status) {
        if let Some(entry) = view.me.expc.prosp.get(u.entry) {
            out.entry(entry.about).or_default().push(u);
        }
    }
    out
}

fn mconc_events(m: &MConc) -> Vec<u32> {
    m.event.into_iter().collect()
}

/// R1: a new want gets its conditional-pleasure elaboration.
pub struct WantSemantics;

impl RuleStrategy for WantSemantics {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        view.me
            .motc
            .iter()
            .filter(|m| m.elaboration.is_none() && m.event.is_some())
            .filter_map(|m| {
                let term = want_elaboration_term(view.store, m.want).ok()?;
                Some(Activation::new(
                    [("mconc", m.id.to_string())],
                    mconc_events(m),
                    vec![Effect::AssertCz { term, elaborates: Some(m.id) }],
                ))
            })
            .collect()
    }
}

/// R2: pursue an own want by planning, commanding a servile agent, or asking a cooperative one.
pub struct RespondToOwnWant;

impl RuleStrategy for RespondToOwnWant {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        let mut out = Vec::new();
        for m in &view.me.motc {
            if m.is_adopted() || m.status != WantStatus::Active || m.pursued.is_some() {
                continue;
            }
            let (Some(elab_event), Some(goal)) = (m.elaboration_event, want_object(view, m.want)) else { continue };
            let triggers = std::iter::once(elab_event).chain(m.event).collect();
            let effects = if view.me.can_ptrans {
                vec![Effect::MarkPursued { mconc: m.id, mode: Pursuit::Planner }, Effect::InvokePlanner { goal }]
            } else {
                let peer = view.store.get(goal).map(|g| g.actor.name.clone()).filter(|p| *p != view.me.id);
                let stance = peer.as_deref().and_then(|p| view.me.attitude_toward(p));
                match (peer, stance) {
                    (Some(peer), Some(att @ (Attitude::Servile | Attitude::Cooperative))) => {
                        let (mode, tone) = if att == Attitude::Servile {
                            (Pursuit::Directive, Tone::Polite)
                        } else {
                            (Pursuit::Request, Tone::Neutral)
                        };
                        let term = CzTerm::new(me(view), Act::Mtrans)
                            .obj(FillerTerm::Id(m.want))
                            .to(EntityRef::new(peer.clone()));
                        vec![
                            Effect::MarkPursued { mconc: m.id, mode },
                            Effect::EmitUtteranceIntent { term, tone, illocution: Illocution::Directive, addressee: peer },
                        ]
                    }
                    _ => vec![Effect::ResolveWant { mconc: m.id, status: WantStatus::Failed }],
                }
            };
            out.push(Activation::new([("mconc", m.id.to_string())], triggers, effects));
        }
        out
    }
}

/// R3: having asked for something, expect the addressee to want it and to be able to do it.
pub struct DirectiveAnticipation;

impl RuleStrategy for DirectiveAnticipation {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        let Some(bf) = &view.me.bf else { return vec![] };
        if bf.illocution != Illocution::Directive {
            return vec![];
        }
        let Some(goal) = view.store.get(bf.cz).and_then(|c| c.object_cz()).and_then(|w| want_object(view, w)) else {
            return vec![];
        };
        let Ok(goal_term) = term_of(view.store, goal) else { return vec![] };
        let addressee = EntityRef::new(bf.addressee.clone());
        let wants = CzTerm::new(addressee, Act::Want).obj(FillerTerm::Id(goal));
        let can = with_mods(goal_term, Mods::CAN, Mods::empty());
        vec![Activation::new(
            [("intent", bf.firing.to_string())],
            vec![bf.firing],
            vec![
                on(StateName::Anticipation, goal),
                Effect::StoreProsp { term: wants, about: goal },
                Effect::StoreProsp { term: can, about: goal },
            ],
        )]
    }
}

/// R4: an anticipated outcome that would please the agent gives hope.
pub struct PositiveProspect;

impl RuleStrategy for PositiveProspect {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        let Some(ant) = view.me.affect(StateName::Anticipation) else { return vec![] };
        if view.me.has_affect(StateName::Hope) {
            return vec![];
        }
        let pleases_me = view.store.links().any(|(_, l)| match l.kind {
            LinkKind::Causal { cause, effect } => {
                same(view, cause, ant.object)
                    && view.store.get(effect).is_some_and(|e| {
                        e.act == Act::Be && e.actor.name == view.me.id && e.state == Some(StateName::Pleased)
                    })
            }
            _ => false,
        });
        if !pleases_me {
            return vec![];
        }
        vec![Activation::new([("object", ant.object.to_string())], vec![ant.event], vec![on(StateName::Hope, ant.object)])]
    }
}

/// R5: a servile or altruistic agent takes on what it was asked to do.
pub struct ServileAdopt;

impl RuleStrategy for ServileAdopt {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        let mut out = Vec::new();
        for p in &view.me.scratch.perceived {
            if p.illocution != Illocution::Directive {
                continue;
            }
            if !matches!(view.me.attitude_toward(&p.speaker), Some(Attitude::Servile | Attitude::Altruistic)) {
                continue;
            }
            let Some(msg) = view.store.get(p.cz) else { continue };
            if msg.act != Act::Mtrans || msg.to.as_ref().map(|t| t.name.as_str()) != Some(view.me.id.as_str()) {
                continue;
            }
            let Some(want) = msg.object_cz() else { continue };
            let Some(goal) = want_object(view, want) else { continue };
            let adopted = view.me.motc.iter().any(|m| want_object(view, m.want).is_some_and(|o| same(view, o, goal)));
            if adopted {
                continue;
            }
            let sender = EntityRef::new(p.speaker.clone());
            let pleased = |who: EntityRef, mods| CzTerm::new(who, Act::Be).state(StateName::Pleased).mods(mods);
            let chain = LinkTerm {
                kind: LinkTermKind::Causal {
                    cause: pleased(sender, Mods::empty()).into(),
                    effect: pleased(me(view), Mods::F).into(),
                },
                mods: ModsTerm::Exact(Mods::C | Mods::F),
            };
            let concp = CzTerm::new(me(view), Act::Concp).obj(FillerTerm::Link(Box::new(chain)));
            out.push(Activation::new(
                [("event", p.event.to_string())],
                vec![p.event],
                vec![
                    Effect::AdoptWant {
                        want: CzTerm::new(me(view), Act::Want).obj(FillerTerm::Id(goal)),
                        from: p.speaker.clone(),
                    },
                    Effect::AssertCz { term: concp, elaborates: None },
                    Effect::InvokePlanner { goal },
                ],
            ));
        }
        out
    }
}

/// R6 and R7: a want the planner could not satisfy.
pub struct PlanFailureAffect(pub StateName);

impl RuleStrategy for PlanFailureAffect {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        view.me
            .scratch
            .plan_reports
            .iter()
            .filter(|r| matches!(r.outcome, crate::agent::PlanOutcome::Failed { .. }))
            .filter_map(|r| {
                let m = view.me.motc.get(r.mconc)?;
                Some(Activation::new([("plan", r.event.to_string())], vec![r.event], vec![on(self.0, m.want)]))
            })
            .collect()
    }
}

/// R8: a predicted negative reaction of another, directed at something the agent did not do.
pub struct Fear;

impl RuleStrategy for Fear {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        let mut out = Vec::new();
        for p in &view.me.scratch.predictions {
            let hit = p.czs.iter().copied().find(|c| {
                view.store.get(*c).is_some_and(|cz| {
                    cz.act == Act::Be
                        && cz.actor.name == p.about
                        && matches!(cz.state, Some(StateName::Disappointed | StateName::Displeased))
                        && cz.object_cz().and_then(|o| view.store.get(o)).is_some_and(|o| o.actor.name == view.me.id)
                })
            });
            if let Some(c) = hit {
                out.push(Activation::new([("prediction", p.event.to_string())], vec![p.event], vec![on(StateName::Fear, c)]));
            }
        }
        out
    }
}

/// R9: tell the requester that an adopted want cannot be met, and remember why.
pub struct ReportFailure;

impl RuleStrategy for ReportFailure {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        let mut out = Vec::new();
        for r in &view.me.scratch.plan_reports {
            let crate::agent::PlanOutcome::Failed { unsatisfied } = &r.outcome else { continue };
            let Some(m) = view.me.motc.get(r.mconc) else { continue };
            let Some(requester) = m.requester() else { continue };
            let Ok(goal) = term_of(view.store, r.goal) else { continue };
            let report = with_mods(goal, Mods::CAN | Mods::NEG, Mods::empty());
            let mut effects = vec![Effect::EmitUtteranceIntent {
                term: report.clone(),
                tone: Tone::Neutral,
                illocution: Illocution::Inform,
                addressee: requester.to_string(),
            }];
            if let Some((_, cause)) = unsatisfied {
                effects.push(Effect::RecordCause { effect: report, cause: *cause });
            }
            let triggers = std::iter::once(r.event).chain(m.event).collect();
            out.push(Activation::new([("plan", r.event.to_string())], triggers, effects));
        }
        out
    }
}

/// R10: answer a why-question from a remembered cause, if answering pleases the asker.
pub struct WhyAnswer;

impl RuleStrategy for WhyAnswer {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        let mut out = Vec::new();
        for p in &view.me.scratch.perceived {
            if p.illocution != Illocution::WhyQuestion {
                continue;
            }
            let answering_pleases = view.me.conc.illocutions.iter().any(|k| {
                k.on == Illocution::Answer
                    && k.to == p.speaker
                    && view.store.get(k.yields).is_some_and(|y| {
                        y.act == Act::Be && y.actor.name == p.speaker && y.state == Some(StateName::Pleased)
                    })
            });
            if !answering_pleases {
                continue;
            }
            let Some(question) = core_term(view.store, p.cz, Mods::QWHY) else { continue };
            let record = view
                .me
                .causes
                .iter()
                .find(|c| core_term(view.store, c.effect, Mods::QWHY).is_some_and(|e| e == question));
            let Some(record) = record else { continue };
            let Ok(cause) = term_of(view.store, record.cause) else { continue };
            out.push(Activation::new(
                [("event", p.event.to_string())],
                vec![record.event, p.event],
                vec![Effect::AnswerWhy {
                    question: p.cz,
                    answer: with_mods(cause, Mods::NEG, Mods::empty()),
                    addressee: p.speaker.clone(),
                }],
            ));
        }
        out
    }
}

/// R11: explaining a failure relieves; fear goes.
pub struct Relief;

impl RuleStrategy for Relief {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        let Some(bf) = &view.me.bf else { return vec![] };
        let burdened = view.me.has_affect(StateName::Frustrated) || view.me.has_affect(StateName::Fear);
        if bf.illocution != Illocution::Answer || !burdened || view.me.has_affect(StateName::Relieved) {
            return vec![];
        }
        vec![Activation::new(
            [("intent", bf.firing.to_string())],
            vec![bf.firing],
            vec![on(StateName::Relieved, bf.cz), off(StateName::Fear, bf.cz)],
        )]
    }
}

/// R12: an expectation contradicted by what the other said; disappointment and a why-question.
pub struct Disappointment;

impl RuleStrategy for Disappointment {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        let mut out = Vec::new();
        for (about, updates) in settled(view, ProspStatus::Contradicted) {
            let first = updates[0];
            let entry = &view.me.expc.prosp[first.entry];
            let mut effects = vec![
                on(StateName::Disappointed, about),
                on(StateName::Displeased, about),
                off(StateName::Anticipation, about),
                off(StateName::Hope, about),
            ];
            effects.extend(
                wants_about(view, about).into_iter().map(|mconc| Effect::ResolveWant { mconc, status: WantStatus::Failed }),
            );
            if let Ok(mut q) = term_of(view.store, entry.cz) {
                q.from = None;
                effects.push(Effect::EmitUtteranceIntent {
                    term: with_mods(q, Mods::CAN | Mods::NEG | Mods::QWHY, Mods::F | Mods::PAST),
                    tone: Tone::Neutral,
                    illocution: Illocution::WhyQuestion,
                    addressee: first.speaker.clone(),
                });
            }
            let triggers = updates.iter().map(|u| u.event).collect();
            out.push(Activation::new([("about", about.to_string())], triggers, effects));
        }
        out
    }
}

/// R13: a satisfied request. The performer announces the handover; the requester is pleased.
pub struct Success;

impl RuleStrategy for Success {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        let mut out = Vec::new();
        for r in &view.me.scratch.plan_reports {
            if r.outcome != crate::agent::PlanOutcome::Executed {
                continue;
            }
            let Some(requester) = view.me.motc.get(r.mconc).and_then(|m| m.requester()) else { continue };
            let Some(Filler::Entity(object)) = view.store.get(r.goal).and_then(|g| g.object.clone()) else { continue };
            let handover = CzTerm::new(me(view), Act::Ptrans)
                .obj_entity(object)
                .to(EntityRef::new(requester))
                .mods(Mods::PAST);
            out.push(Activation::new(
                [("plan", r.event.to_string())],
                vec![r.event],
                vec![Effect::EmitUtteranceIntent {
                    term: handover,
                    tone: Tone::Neutral,
                    illocution: Illocution::Inform,
                    addressee: requester.to_string(),
                }],
            ));
        }
        for (about, updates) in settled(view, ProspStatus::Fulfilled) {
            let mut effects =
                vec![on(StateName::Pleased, about), off(StateName::Anticipation, about), off(StateName::Hope, about)];
            effects.extend(
                wants_about(view, about)
                    .into_iter()
                    .map(|mconc| Effect::ResolveWant { mconc, status: WantStatus::Satisfied }),
            );
            let triggers = updates.iter().map(|u| u.event).collect();
            out.push(Activation::new([("about", about.to_string())], triggers, effects));
        }
        out
    }
}
