use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

use super::{CdStore, CzId, Filler, GraphError, LinkId, LinkKind};

/// Tree form of a conceptualization with labels dropped. A node reachable
/// along two paths is written out in full both times, so shared and copied
/// subtrees print alike. A node that reaches itself would print as `@n`, `n`
/// being its depth-first ordinal.
pub fn canonical_tree(store: &CdStore, root: CzId) -> Result<String, GraphError> {
    let mut w = Writer::new(store);
    w.cz(root)?;
    Ok(w.out)
}

pub(super) fn canonicalize(store: &CdStore, root: CzId) -> Result<String, GraphError> {
    let mut w = Writer::new(store);
    w.cz(root)?;
    // Attach links leaving the visited region until nothing new is reachable.
    loop {
        let mut candidates = Vec::new();
        for (lid, link) in store.links() {
            if w.emitted.contains(&lid) {
                continue;
            }
            let (tag, source, target) = match &link.kind {
                LinkKind::Causal { cause, effect } => (0u8, *cause, Some(*effect)),
                LinkKind::Temporal { before, after } => (1, *before, Some(*after)),
                LinkKind::StateAttr { cz, .. } => (2, *cz, None),
            };
            let Some(&src_ord) = w.ordinals.get(&source) else { continue };
            let target_key = match target {
                Some(t) => match w.ordinals.get(&t) {
                    Some(o) => format!("@{o}"),
                    None => canonical_tree(store, t)?,
                },
                None => String::new(),
            };
            let attr_key = match &link.kind {
                LinkKind::StateAttr { entity, state, .. } => format!("{entity} {state}"),
                _ => String::new(),
            };
            candidates.push(((tag, link.mods.bits(), src_ord, target_key, attr_key), lid));
        }
        let Some((_, lid)) = candidates.into_iter().min_by(|a, b| a.0.cmp(&b.0)) else { break };
        w.out.push_str(" + ");
        w.attaching = true;
        w.link(lid)?;
    }
    Ok(w.out)
}

struct Writer<'a> {
    store: &'a CdStore,
    ordinals: HashMap<CzId, usize>,
    path: Vec<CzId>,
    /// Set while writing attached links, whose endpoints refer back to nodes already written.
    attaching: bool,
    emitted: BTreeSet<LinkId>,
    out: String,
}

impl<'a> Writer<'a> {
    fn new(store: &'a CdStore) -> Self {
        Writer { store, ordinals: HashMap::new(), path: Vec::new(), attaching: false, emitted: BTreeSet::new(), out: String::new() }
    }

    fn cz(&mut self, id: CzId) -> Result<(), GraphError> {
        if self.path.contains(&id) || (self.attaching && self.ordinals.contains_key(&id)) {
            write!(self.out, "@{}", self.ordinals[&id]).unwrap();
            return Ok(());
        }
        let ord = self.ordinals.len();
        self.ordinals.entry(id).or_insert(ord);
        self.path.push(id);
        let cz = self.store.cz(id)?;
        write!(self.out, "(cz :actor {} :act {}", cz.actor, cz.act).unwrap();
        match &cz.object {
            Some(Filler::Entity(e)) => write!(self.out, " :obj {e}").unwrap(),
            Some(Filler::Cz(inner)) => {
                self.out.push_str(" :obj ");
                self.cz(*inner)?;
            }
            Some(Filler::Link(l)) => {
                self.out.push_str(" :obj ");
                self.link(*l)?;
            }
            None => {}
        }
        for (key, role) in [(":from", &cz.from), (":to", &cz.to), (":inst", &cz.instrument)] {
            if let Some(e) = role {
                write!(self.out, " {key} {e}").unwrap();
            }
        }
        if let Some(s) = cz.state {
            write!(self.out, " :state {s}").unwrap();
        }
        if !cz.mods.is_empty() {
            write!(self.out, " :mods {}", cz.mods).unwrap();
        }
        self.out.push(')');
        self.path.pop();
        Ok(())
    }

    fn link(&mut self, id: LinkId) -> Result<(), GraphError> {
        self.emitted.insert(id);
        let link = self.store.link(id)?.clone();
        match &link.kind {
            LinkKind::Causal { cause, effect } => {
                self.out.push_str("(causal ");
                self.cz(*cause)?;
                self.out.push(' ');
                self.cz(*effect)?;
            }
            LinkKind::Temporal { before, after } => {
                self.out.push_str("(temporal ");
                self.cz(*before)?;
                self.out.push(' ');
                self.cz(*after)?;
            }
            LinkKind::StateAttr { entity, state, cz } => {
                write!(self.out, "(state-attr {entity} {state} ").unwrap();
                self.cz(*cz)?;
            }
        }
        if !link.mods.is_empty() {
            write!(self.out, " :mods {}", link.mods).unwrap();
        }
        self.out.push(')');
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    fn build_door_push(s: &mut CdStore, reversed: bool) -> CzId {
        let door = EntityRef::new("Door");
        let mk_push = |s: &mut CdStore| {
            s.assert_cz(Conceptualization::new(EntityRef::new("Person"), Act::Push).object(Filler::Entity(door.clone())))
                .unwrap()
        };
        let mk_open =
            |s: &mut CdStore| s.assert_cz(Conceptualization::new(door.clone(), Act::Be).state(StateName::Open)).unwrap();
        let (push, open) = if reversed {
            let o = mk_open(s);
            (mk_push(s), o)
        } else {
            let p = mk_push(s);
            (p, mk_open(s))
        };
        s.add_link(LinkKind::Causal { cause: push, effect: open }, Mods::empty()).unwrap();
        push
    }

    fn build_house_want(s: &mut CdStore) -> CzId {
        let house = s
            .assert_cz(Conceptualization::new(EntityRef::new("House"), Act::Be).to(EntityRef::new("Demolished")))
            .unwrap();
        let want =
            s.assert_cz(Conceptualization::new(EntityRef::new("Person"), Act::Want).object(Filler::Cz(house))).unwrap();
        s.elaborate_want(want).unwrap()
    }

    /// Independent structural diff: compares node fields pairwise through the
    /// object role, following links by content.
    fn same_structure(a: &CdStore, x: CzId, b: &CdStore, y: CzId) -> bool {
        let (cx, cy) = (a.cz(x).unwrap(), b.cz(y).unwrap());
        if (cx.actor.clone(), cx.act, cx.from.clone(), cx.to.clone(), cx.instrument.clone(), cx.state, cx.mods)
            != (cy.actor.clone(), cy.act, cy.from.clone(), cy.to.clone(), cy.instrument.clone(), cy.state, cy.mods)
        {
            return false;
        }
        let objects_match = match (&cx.object, &cy.object) {
            (None, None) => true,
            (Some(Filler::Entity(e)), Some(Filler::Entity(f))) => e == f,
            (Some(Filler::Cz(i)), Some(Filler::Cz(j))) => same_structure(a, *i, b, *j),
            (Some(Filler::Link(i)), Some(Filler::Link(j))) => {
                let (li, lj) = (a.link(*i).unwrap(), b.link(*j).unwrap());
                li.mods == lj.mods
                    && match (&li.kind, &lj.kind) {
                        (LinkKind::Causal { cause: c1, effect: e1 }, LinkKind::Causal { cause: c2, effect: e2 }) => {
                            same_structure(a, *c1, b, *c2) && same_structure(a, *e1, b, *e2)
                        }
                        _ => false,
                    }
            }
            _ => false,
        };
        let outs = |s: &CdStore, id| s.outgoing(id).count();
        objects_match && outs(a, x) == outs(b, y)
    }

    #[test]
    fn deterministic_and_permutation_stable() {
        let mut a = CdStore::new();
        let mut b = CdStore::new();
        b.assert_cz(Conceptualization::new(EntityRef::new("Noise"), Act::Be).state(StateName::Open)).unwrap();
        let ra = build_door_push(&mut a, false);
        let rb = build_door_push(&mut b, true);
        let ca = a.canonicalize(ra).unwrap();
        assert_eq!(ca, a.canonicalize(ra).unwrap());
        assert_eq!(ca, b.canonicalize(rb).unwrap());
        assert_eq!(
            ca,
            "(cz :actor Person :act PUSH :obj Door) + (causal @0 (cz :actor Door :act BE :state Open))"
        );
    }

    #[test]
    fn push_differs_from_want() {
        let mut a = CdStore::new();
        let ra = build_door_push(&mut a, false);
        let rb = build_house_want(&mut a);
        assert!(!same_structure(&a, ra, &a, rb));
        assert_ne!(a.canonicalize(ra).unwrap(), a.canonicalize(rb).unwrap());
        assert_eq!(
            a.canonicalize(rb).unwrap(),
            "(cz :actor Person :act CONCP :obj (causal (cz :actor House :act BE :to Demolished) \
             (cz :actor Person :act BE :state Pleased :mods (f)) :mods (c f)))"
        );
    }

    #[test]
    fn labels_excluded() {
        let mut a = CdStore::new();
        let x = a.assert_cz(Conceptualization::new(EntityRef::new("P"), Act::Push).label("1")).unwrap();
        let y = a.assert_cz(Conceptualization::new(EntityRef::new("P"), Act::Push)).unwrap();
        assert_eq!(a.canonicalize(x).unwrap(), a.canonicalize(y).unwrap());
    }

    #[test]
    fn shared_nodes_print_like_copies() {
        let mut s = CdStore::new();
        let open = || Conceptualization::new(EntityRef::new("Door"), Act::Be).state(StateName::Open);
        let want = |s: &mut CdStore, x| {
            s.assert_cz(Conceptualization::new(EntityRef::new("Q"), Act::Want).object(Filler::Cz(x))).unwrap()
        };
        let shared = s.assert_cz(open()).unwrap();
        let w1 = want(&mut s, shared);
        let l1 = s.add_link(LinkKind::Causal { cause: shared, effect: w1 }, Mods::C).unwrap();
        let a = s.assert_cz(Conceptualization::new(EntityRef::new("P"), Act::Concp).object(Filler::Link(l1))).unwrap();
        let (c1, c2) = (s.assert_cz(open()).unwrap(), s.assert_cz(open()).unwrap());
        let w2 = want(&mut s, c2);
        let l2 = s.add_link(LinkKind::Causal { cause: c1, effect: w2 }, Mods::C).unwrap();
        let b = s.assert_cz(Conceptualization::new(EntityRef::new("P"), Act::Concp).object(Filler::Link(l2))).unwrap();
        assert_eq!(canonical_tree(&s, a).unwrap(), canonical_tree(&s, b).unwrap());
        assert!(!canonical_tree(&s, a).unwrap().contains('@'));
    }
}
