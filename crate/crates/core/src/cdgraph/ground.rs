use std::collections::BTreeSet;

use super::{CdStore, CzId, Filler, GraphError, LinkKind, Symbol};

pub(super) fn ground_check(store: &CdStore, root: CzId) -> Result<Vec<Symbol>, GraphError> {
    let mut checker = Checker { store, ungrounded: BTreeSet::new(), settled: BTreeSet::new(), expanding: Vec::new() };
    for sym in reachable_symbols(store, root)? {
        checker.symbol(sym)?;
    }
    Ok(checker.ungrounded.into_iter().collect())
}

/// Symbols of every conceptualization reachable through objects and links.
fn reachable_symbols(store: &CdStore, root: CzId) -> Result<BTreeSet<Symbol>, GraphError> {
    let mut out = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        let cz = store.cz(id)?;
        out.insert(Symbol::Act(cz.act));
        if let Some(s) = cz.state {
            out.insert(Symbol::State(s));
        }
        match &cz.object {
            Some(Filler::Cz(inner)) => stack.push(*inner),
            Some(Filler::Link(l)) => push_link(&store.link(*l)?.kind, &mut stack, &mut out),
            _ => {}
        }
        for (_, link) in store.outgoing(id) {
            push_link(&link.kind, &mut stack, &mut out);
        }
    }
    Ok(out)
}

fn push_link(kind: &LinkKind, stack: &mut Vec<CzId>, out: &mut BTreeSet<Symbol>) {
    match kind {
        LinkKind::Causal { cause, effect } => stack.extend([*cause, *effect]),
        LinkKind::Temporal { before, after } => stack.extend([*before, *after]),
        LinkKind::StateAttr { state, cz, .. } => {
            out.insert(Symbol::State(*state));
            stack.push(*cz);
        }
    }
}

struct Checker<'a> {
    store: &'a CdStore,
    ungrounded: BTreeSet<Symbol>,
    settled: BTreeSet<Symbol>,
    expanding: Vec<Symbol>,
}

impl Checker<'_> {
    fn symbol(&mut self, sym: Symbol) -> Result<(), GraphError> {
        if self.settled.contains(&sym) {
            return Ok(());
        }
        if self.expanding.contains(&sym) {
            return Err(GraphError::ElaborationCycle(sym));
        }
        if self.store.anchor_of(sym).is_some() {
            self.settled.insert(sym);
            return Ok(());
        }
        let Some(elab) = self.store.elaboration(sym) else {
            self.ungrounded.insert(sym);
            self.settled.insert(sym);
            return Ok(());
        };
        self.expanding.push(sym);
        for step in elab.script.clone() {
            // Steps are checked on their own content only; temporal neighbours are the script itself.
            let cz = self.store.cz(step)?;
            let mut syms = vec![Symbol::Act(cz.act)];
            syms.extend(cz.state.map(Symbol::State));
            if let Some(Filler::Cz(inner)) = cz.object {
                syms.extend(reachable_symbols(self.store, inner)?);
            }
            for s in syms {
                self.symbol(s)?;
            }
        }
        self.expanding.pop();
        self.settled.insert(sym);
        Ok(())
    }
}
