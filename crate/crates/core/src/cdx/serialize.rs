use super::sexp::{pretty, Sexp};
use super::*;
use crate::matcher::{EntityTerm, LinkTermKind, ModsTerm, StateTerm};

/// Deterministic text for a document: one item per entry, each ending in a newline.
pub fn serialize(doc: &CdxDocument) -> String {
    let mut out = String::new();
    for item in &doc.items {
        out.push_str(&pretty(&item_sexp(item), 0));
        out.push('\n');
    }
    out
}

fn var(name: &str, sort: &str) -> Sexp {
    Sexp::list(vec![Sexp::sym(format!("?{name}")), Sexp::sym(sort)])
}

fn entity(t: &EntityTerm) -> Sexp {
    match t {
        EntityTerm::Lit(e) => Sexp::sym(e.to_string()),
        EntityTerm::Var(v) => var(v, "entity"),
    }
}

fn state(t: &StateTerm) -> Sexp {
    match t {
        StateTerm::Lit(s) => Sexp::sym(s.as_str()),
        StateTerm::Var(v) => var(v, "state"),
    }
}

fn push_mods(out: &mut Vec<Sexp>, m: &ModsTerm) {
    match m {
        ModsTerm::Any => out.extend([Sexp::kw("mods"), Sexp::sym("any")]),
        ModsTerm::Exact(m) if m.is_empty() => {}
        ModsTerm::Exact(m) => {
            out.push(Sexp::kw("mods"));
            out.push(Sexp::list(m.names().into_iter().map(Sexp::sym).collect()));
        }
    }
}

fn field(out: &mut Vec<Sexp>, key: &str, value: Sexp) {
    out.push(Sexp::kw(key));
    out.push(value);
}

pub fn term_sexp(t: &CzTerm) -> Sexp {
    let mut out = vec![Sexp::sym("cz")];
    if let Some(l) = &t.label {
        field(&mut out, "label", Sexp::str(l));
    }
    field(&mut out, "actor", entity(&t.actor));
    field(&mut out, "act", Sexp::sym(t.act.as_str()));
    if let Some(o) = &t.object {
        field(&mut out, "obj", filler(o));
    }
    for (key, slot) in [("from", &t.from), ("to", &t.to), ("inst", &t.instrument)] {
        if let Some(e) = slot {
            field(&mut out, key, entity(e));
        }
    }
    if let Some(s) = &t.state {
        field(&mut out, "state", state(s));
    }
    push_mods(&mut out, &t.mods);
    Sexp::list(out)
}

fn filler(f: &FillerTerm) -> Sexp {
    match f {
        FillerTerm::Entity(e) => entity(e),
        FillerTerm::Cz(t) => term_sexp(t),
        FillerTerm::Link(l) => link(l),
        FillerTerm::CzVar(v) => var(v, "cz"),
        FillerTerm::Label(l) => Sexp::Label(l.clone(), Pos::default()),
        FillerTerm::Id(id) => Sexp::Id(id.0, Pos::default()),
    }
}

fn link(l: &LinkTerm) -> Sexp {
    let mut out = match &l.kind {
        LinkTermKind::Causal { cause, effect } => vec![Sexp::sym("causal"), filler(cause), filler(effect)],
        LinkTermKind::Temporal { before, after } => vec![Sexp::sym("temporal"), filler(before), filler(after)],
        LinkTermKind::StateAttr { entity: e, state: s, cz } => {
            vec![Sexp::sym("state-attr"), entity(e), state(s), filler(cz)]
        }
    };
    push_mods(&mut out, &l.mods);
    Sexp::list(out)
}

fn syms<'a>(names: impl IntoIterator<Item = &'a String>) -> Sexp {
    Sexp::list(names.into_iter().map(|n| Sexp::sym(n.as_str())).collect())
}

fn pair(a: Sexp, b: Sexp) -> Sexp {
    Sexp::list(vec![a, b])
}

pub fn item_sexp(item: &Item) -> Sexp {
    let mut out = Vec::new();
    match item {
        Item::Cz(t) => return term_sexp(t),
        Item::Link(l) => return link(l),
        Item::Anchor { id, uri } => {
            out.push(Sexp::sym("anchor"));
            field(&mut out, "id", Sexp::sym(id.as_str()));
            if let Some(u) = uri {
                field(&mut out, "uri", Sexp::str(u));
            }
        }
        Item::Ground { symbol, anchor } => {
            out.extend([Sexp::sym("ground"), Sexp::sym(symbol.to_string())]);
            field(&mut out, "anchor", Sexp::sym(anchor.as_str()));
        }
        Item::Entity { entity: e, anchor } => {
            out.extend([Sexp::sym("entity"), Sexp::sym(e.to_string())]);
            if let Some(a) = anchor {
                field(&mut out, "anchor", Sexp::sym(a.as_str()));
            }
        }
        Item::Elab { symbol, steps } => {
            out.extend([Sexp::sym("elab"), Sexp::sym(symbol.to_string())]);
            out.extend(steps.iter().map(filler));
        }
        Item::Rule(r) => {
            out.push(Sexp::sym("rule"));
            field(&mut out, "name", Sexp::sym(r.name.as_str()));
            field(&mut out, "priority", Sexp::Int(r.priority, Pos::default()));
            match &r.body {
                RuleBody::Strategy(s) => field(&mut out, "strategy", Sexp::sym(s.as_str())),
                RuleBody::Declarative { when, then } => {
                    field(&mut out, "when", term_sexp(when));
                    let actions = then
                        .iter()
                        .map(|a| match a {
                            RuleAction::Assert(t) => pair(Sexp::sym("assert"), term_sexp(t)),
                            RuleAction::Affect { state, on } => Sexp::list(vec![
                                Sexp::sym("affect"),
                                Sexp::sym(state.as_str()),
                                Sexp::sym(if *on { "on" } else { "off" }),
                            ]),
                        })
                        .collect();
                    field(&mut out, "then", Sexp::list(actions));
                }
            }
        }
        Item::Scenario(s) => {
            out.push(Sexp::sym("scenario"));
            field(&mut out, "name", Sexp::sym(s.name.as_str()));
            field(&mut out, "max-ticks", Sexp::Int(s.max_ticks.into(), Pos::default()));
            field(&mut out, "turns", syms(&s.turns));
            field(&mut out, "rules", Sexp::sym(s.rules.as_str()));
        }
        Item::Agent(a) => {
            out.push(Sexp::sym("agent"));
            field(&mut out, "name", Sexp::sym(a.name.as_str()));
            field(&mut out, "can-ptrans", Sexp::sym(if a.can_ptrans { "true" } else { "false" }));
            let atts = a.attitudes.iter().map(|(who, att)| pair(Sexp::sym(who.as_str()), Sexp::sym(att.as_str())));
            field(&mut out, "attitudes", Sexp::list(atts.collect()));
            let models = a.models.iter().map(|(who, rules)| {
                Sexp::list(std::iter::once(Sexp::sym(who.as_str())).chain(rules.iter().map(|r| Sexp::sym(r.as_str()))).collect())
            });
            field(&mut out, "models", Sexp::list(models.collect()));
        }
        Item::World(w) => {
            out.push(Sexp::sym("world"));
            field(&mut out, "locations", syms(&w.locations));
            field(&mut out, "unreachable", syms(&w.unreachable));
            let agents = w.agents.iter().map(|(a, l)| pair(Sexp::sym(a.as_str()), Sexp::sym(l.as_str())));
            field(&mut out, "agents", Sexp::list(agents.collect()));
            let places = |xs: &[(EntityRef, String)]| {
                Sexp::list(xs.iter().map(|(e, l)| pair(Sexp::sym(e.to_string()), Sexp::sym(l.as_str()))).collect())
            };
            field(&mut out, "at", places(&w.at));
            field(&mut out, "holding", places(&w.holding));
        }
        Item::Motive { agent, want } => {
            out.push(Sexp::sym("motive"));
            field(&mut out, "agent", Sexp::sym(agent.as_str()));
            field(&mut out, "want", filler(want));
        }
        Item::Illocution(i) => {
            out.push(Sexp::sym("illocution"));
            field(&mut out, "agent", Sexp::sym(i.agent.as_str()));
            field(&mut out, "on", Sexp::sym(i.on.as_str()));
            field(&mut out, "to", Sexp::sym(i.to.as_str()));
            field(&mut out, "yields", filler(&i.yields));
            if let Some(o) = &i.otherwise {
                field(&mut out, "otherwise", filler(o));
            }
        }
        Item::Template(t) => {
            out.push(Sexp::sym("template"));
            field(&mut out, "id", Sexp::sym(t.id.as_str()));
            field(&mut out, "illocution", Sexp::sym(t.illocution.as_str()));
            field(&mut out, "tone", Sexp::sym(t.tone.as_str()));
            field(&mut out, "text", Sexp::str(&t.text));
            field(&mut out, "pattern", term_sexp(&t.pattern));
        }
    }
    Sexp::list(out)
}
