use std::collections::BTreeMap;

use super::{Activation, AgentView, Effect, RuleError, RuleStrategy};
use crate::cdx::RuleAction;
use crate::matcher::{bind_term, collect_cz, unify, CzTerm, Pattern};

/// A rule written in CDX: `:when` is matched against what the agent perceived
/// this tick; `:then` asserts conceptualizations or toggles affects directed at
/// the matched one.
pub struct DeclarativeRule {
    when: Pattern,
    then: Vec<RuleAction>,
}

impl DeclarativeRule {
    pub fn new(name: &str, when: &CzTerm, then: &[RuleAction]) -> Result<Self, RuleError> {
        let when = Pattern::new(when.clone()).map_err(|error| RuleError::Pattern { rule: name.to_string(), error })?;
        for action in then {
            if let RuleAction::Assert(t) = action {
                let mut vars = BTreeMap::new();
                collect_cz(t, &mut vars).map_err(|error| RuleError::Pattern { rule: name.to_string(), error })?;
                if let Some(var) = vars.keys().find(|v| !when.vars().contains_key(*v)) {
                    return Err(RuleError::UnboundEffectVariable { rule: name.to_string(), var: var.clone() });
                }
            }
        }
        Ok(DeclarativeRule { when, then: then.to_vec() })
    }
}

impl RuleStrategy for DeclarativeRule {
    fn activations(&self, view: &AgentView) -> Vec<Activation> {
        let mut out = Vec::new();
        for p in &view.me.scratch.perceived {
            let Some(b) = unify(&self.when, view.store, p.cz) else { continue };
            let effects: Option<Vec<Effect>> = self
                .then
                .iter()
                .map(|a| match a {
                    RuleAction::Assert(t) => bind_term(t, &b).ok().map(|term| Effect::AssertCz { term, elaborates: None }),
                    RuleAction::Affect { state, on } => Some(Effect::SetAffect { state: *state, on: *on, object: p.cz }),
                })
                .collect();
            if let Some(effects) = effects {
                out.push(Activation::new(
                    [("event", p.event.to_string()), ("match", b.canonical(view.store))],
                    vec![p.event],
                    effects,
                ));
            }
        }
        out
    }
}
