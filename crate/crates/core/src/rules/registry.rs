use std::collections::BTreeMap;
use std::sync::Arc;

use super::builtin;
use super::RuleStrategy;

/// Strategies available to `:strategy` rules, by name.
#[derive(Clone, Default)]
pub struct StrategyRegistry {
    strategies: BTreeMap<String, Arc<dyn RuleStrategy>>,
}

impl StrategyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut r = Self::new();
        r.register("want-semantics", Arc::new(builtin::WantSemantics));
        r.register("respond-to-own-want", Arc::new(builtin::RespondToOwnWant));
        r.register("directive-anticipation", Arc::new(builtin::DirectiveAnticipation));
        r.register("positive-prospect", Arc::new(builtin::PositiveProspect));
        r.register("servile-adopt", Arc::new(builtin::ServileAdopt));
        r.register("frustration", Arc::new(builtin::PlanFailureAffect(crate::cdgraph::StateName::Frustrated)));
        r.register("displeasure", Arc::new(builtin::PlanFailureAffect(crate::cdgraph::StateName::Displeased)));
        r.register("fear", Arc::new(builtin::Fear));
        r.register("report-failure", Arc::new(builtin::ReportFailure));
        r.register("why-answer", Arc::new(builtin::WhyAnswer));
        r.register("relief", Arc::new(builtin::Relief));
        r.register("disappointment", Arc::new(builtin::Disappointment));
        r.register("success", Arc::new(builtin::Success));
        r
    }

    /// Registers a strategy, replacing any previous one with the same name.
    pub fn register(&mut self, name: &str, strategy: Arc<dyn RuleStrategy>) {
        self.strategies.insert(name.to_string(), strategy);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn RuleStrategy>> {
        self.strategies.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.strategies.keys().map(String::as_str)
    }
}
