use std::collections::BTreeSet;
use std::str::FromStr;

use super::sexp::{read_all, Pos, Sexp};
use super::*;
use crate::cdgraph::{Act, Mods};
use crate::matcher::{EntityTerm, LinkTermKind, ModsTerm, Sort, StateTerm};

/// Parses CDX text. Label references must point at a label defined earlier in the text.
pub fn parse(text: &str) -> Result<CdxDocument, CdxError> {
    let mut p = Parser { labels: BTreeSet::new() };
    let items = read_all(text)?.iter().map(|s| p.item(s)).collect::<Result<_, _>>()?;
    Ok(CdxDocument { items })
}

fn err(pos: Pos, kind: ErrorKind) -> CdxError {
    CdxError { kind, pos }
}

fn syntax(pos: Pos, msg: impl Into<String>) -> CdxError {
    err(pos, ErrorKind::Syntax(msg.into()))
}

type Res<T> = Result<T, CdxError>;

/// Keyword arguments of one list form, consumed field by field.
struct Fields<'a> {
    head: &'a str,
    pos: Pos,
    positional: Vec<&'a Sexp>,
    named: Vec<(&'a str, &'a Sexp, bool)>,
}

impl<'a> Fields<'a> {
    fn new(s: &'a Sexp) -> Res<Self> {
        let Sexp::List(items, pos) = s else { return Err(syntax(s.pos(), "expected a list")) };
        let Some(Sexp::Sym(head, _)) = items.first() else { return Err(syntax(*pos, "expected a form name")) };
        let mut positional = Vec::new();
        let mut named: Vec<(&str, &Sexp, bool)> = Vec::new();
        let mut rest = items[1..].iter();
        while let Some(x) = rest.next() {
            if let Sexp::Kw(k, kpos) = x {
                let v = rest.next().ok_or_else(|| syntax(*kpos, format!(":{k} needs a value")))?;
                if matches!(v, Sexp::Kw(..)) {
                    return Err(syntax(v.pos(), format!(":{k} needs a value")));
                }
                if named.iter().any(|(n, _, _)| n == k) {
                    return Err(syntax(*kpos, format!("duplicate :{k}")));
                }
                named.push((k, v, false));
            } else if named.is_empty() {
                positional.push(x);
            } else {
                return Err(syntax(x.pos(), format!("unexpected value in {head}")));
            }
        }
        Ok(Fields { head, pos: *pos, positional, named })
    }

    fn opt(&mut self, key: &str) -> Option<&'a Sexp> {
        let slot = self.named.iter_mut().find(|(k, _, _)| *k == key)?;
        slot.2 = true;
        Some(slot.1)
    }

    fn req(&mut self, key: &str) -> Res<&'a Sexp> {
        let (head, pos) = (self.head, self.pos);
        self.opt(key).ok_or_else(|| syntax(pos, format!("{head} requires :{key}")))
    }

    /// Rejects unconsumed keywords and positional values beyond `max`.
    fn finish(self, max_positional: usize) -> Res<()> {
        if let Some((k, v, _)) = self.named.iter().find(|(_, _, used)| !used) {
            return Err(syntax(v.pos(), format!("unknown keyword :{k} in {}", self.head)));
        }
        if let Some(extra) = self.positional.get(max_positional) {
            return Err(syntax(extra.pos(), format!("unexpected value in {}", self.head)));
        }
        Ok(())
    }
}

fn sym(s: &Sexp) -> Res<&str> {
    match s {
        Sexp::Sym(x, _) => Ok(x),
        other => Err(syntax(other.pos(), "expected a symbol")),
    }
}

fn string(s: &Sexp) -> Res<String> {
    match s {
        Sexp::Str(x, _) => Ok(x.clone()),
        other => Err(syntax(other.pos(), "expected a string")),
    }
}

fn list(s: &Sexp) -> Res<&[Sexp]> {
    match s {
        Sexp::List(xs, _) => Ok(xs),
        other => Err(syntax(other.pos(), "expected a list")),
    }
}

fn name_list(s: &Sexp) -> Res<Vec<String>> {
    list(s)?.iter().map(|x| sym(x).map(str::to_string)).collect()
}

fn pairs(s: &Sexp) -> Res<Vec<(&Sexp, &Sexp)>> {
    list(s)?
        .iter()
        .map(|x| match list(x)? {
            [a, b] => Ok((a, b)),
            _ => Err(syntax(x.pos(), "expected a pair")),
        })
        .collect()
}

fn entity_lit(s: &Sexp) -> Res<EntityRef> {
    let text = sym(s)?;
    if text.starts_with('?') {
        return Err(syntax(s.pos(), format!("variable {text} needs a sort, e.g. ({text} entity)")));
    }
    EntityRef::parse(text).ok_or_else(|| syntax(s.pos(), format!("bad entity {text}")))
}

fn act(s: &Sexp) -> Res<Act> {
    let text = sym(s)?;
    Act::from_str(text).map_err(|_| err(s.pos(), ErrorKind::UnknownAct(text.into())))
}

fn state_name(s: &Sexp) -> Res<StateName> {
    let text = sym(s)?;
    StateName::from_str(text).map_err(|_| err(s.pos(), ErrorKind::UnknownState(text.into())))
}

fn symbol(s: &Sexp) -> Res<Symbol> {
    let text = sym(s)?;
    Symbol::from_str(text).map_err(|_| {
        let kind = if text.chars().all(|c| c.is_ascii_uppercase()) {
            ErrorKind::UnknownAct(text.into())
        } else {
            ErrorKind::UnknownState(text.into())
        };
        err(s.pos(), kind)
    })
}

fn parsed<T: FromStr<Err = String>>(s: &Sexp) -> Res<T> {
    T::from_str(sym(s)?).map_err(|m| syntax(s.pos(), m))
}

fn boolean(s: &Sexp) -> Res<bool> {
    match sym(s)? {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(syntax(s.pos(), "expected true or false")),
    }
}

/// `(?name sort)`
fn variable(s: &Sexp) -> Option<Res<(String, Sort)>> {
    let Sexp::List(xs, pos) = s else { return None };
    let name = xs.first()?.as_sym()?.strip_prefix('?')?;
    Some(match xs.get(1..) {
        Some([sort]) if !name.is_empty() => match sort.as_sym().and_then(Sort::parse) {
            Some(sort) => Ok((name.to_string(), sort)),
            None => Err(syntax(sort.pos(), "variable sort must be entity, cz or state")),
        },
        _ => Err(syntax(*pos, "expected (?name sort)")),
    })
}

fn mods(s: &Sexp) -> Res<ModsTerm> {
    if s.as_sym() == Some("any") {
        return Ok(ModsTerm::Any);
    }
    let mut m = Mods::empty();
    for x in list(s)? {
        let name = sym(x)?;
        m = m.with(Mods::parse_one(name).ok_or_else(|| syntax(x.pos(), format!("unknown modifier {name}")))?);
    }
    m.check().map_err(|e| syntax(s.pos(), e.to_string()))?;
    Ok(ModsTerm::Exact(m))
}

struct Parser {
    labels: BTreeSet<String>,
}

impl Parser {
    fn item(&mut self, s: &Sexp) -> Res<Item> {
        let mut f = Fields::new(s)?;
        let item = match f.head {
            "cz" => {
                let t = self.cz_fields(&mut f, true)?;
                f.finish(0)?;
                return Ok(Item::Cz(t));
            }
            "causal" | "temporal" | "state-attr" => return Ok(Item::Link(self.link(s)?)),
            "anchor" => {
                let id = sym(f.req("id")?)?.to_string();
                let uri = f.opt("uri").map(string).transpose()?;
                f.finish(0)?;
                Item::Anchor { id, uri }
            }
            "ground" => {
                let target = f.positional.first().ok_or_else(|| syntax(f.pos, "ground requires a symbol"))?;
                let symbol = symbol(target)?;
                let anchor = sym(f.req("anchor")?)?.to_string();
                f.finish(1)?;
                Item::Ground { symbol, anchor }
            }
            "entity" => {
                let target = f.positional.first().ok_or_else(|| syntax(f.pos, "entity requires a name"))?;
                let entity = entity_lit(target)?;
                let anchor = f.opt("anchor").map(|a| sym(a).map(str::to_string)).transpose()?;
                f.finish(1)?;
                Item::Entity { entity, anchor }
            }
            "elab" => {
                let (first, steps) =
                    f.positional.split_first().ok_or_else(|| syntax(f.pos, "elab requires a symbol"))?;
                let symbol = symbol(first)?;
                if steps.is_empty() {
                    return Err(syntax(f.pos, "elab requires at least one step"));
                }
                let steps = steps.iter().map(|x| self.filler(x)).collect::<Res<Vec<_>>>()?;
                f.finish(usize::MAX)?;
                Item::Elab { symbol, steps }
            }
            "rule" => {
                let r = self.rule(&mut f)?;
                f.finish(0)?;
                Item::Rule(r)
            }
            "scenario" => {
                let name = sym(f.req("name")?)?.to_string();
                let ticks = f.req("max-ticks")?;
                let max_ticks = match ticks {
                    Sexp::Int(n, _) if *n >= 0 && *n <= u32::MAX as i64 => *n as u32,
                    other => return Err(syntax(other.pos(), "expected a non-negative tick count")),
                };
                let turns = name_list(f.req("turns")?)?;
                let rules = sym(f.req("rules")?)?.to_string();
                f.finish(0)?;
                Item::Scenario(ScenarioDecl { name, max_ticks, turns, rules })
            }
            "agent" => {
                let name = sym(f.req("name")?)?.to_string();
                let can_ptrans = f.opt("can-ptrans").map(boolean).transpose()?.unwrap_or(false);
                let attitudes = match f.opt("attitudes") {
                    None => Vec::new(),
                    Some(a) => pairs(a)?
                        .into_iter()
                        .map(|(who, att)| Ok((sym(who)?.to_string(), parsed(att)?)))
                        .collect::<Res<_>>()?,
                };
                let models = match f.opt("models") {
                    None => Vec::new(),
                    Some(m) => list(m)?
                        .iter()
                        .map(|entry| {
                            let xs = list(entry)?;
                            let (who, rules) =
                                xs.split_first().ok_or_else(|| syntax(entry.pos(), "empty model entry"))?;
                            let rules = rules.iter().map(|r| sym(r).map(str::to_string)).collect::<Res<_>>()?;
                            Ok((sym(who)?.to_string(), rules))
                        })
                        .collect::<Res<_>>()?,
                };
                f.finish(0)?;
                Item::Agent(AgentDecl { name, can_ptrans, attitudes, models })
            }
            "world" => {
                let names = |f: &mut Fields, k| f.opt(k).map(name_list).transpose().map(Option::unwrap_or_default);
                let locations = names(&mut f, "locations")?;
                let unreachable = names(&mut f, "unreachable")?;
                let sym_pairs = |v: Option<&Sexp>| -> Res<Vec<(String, String)>> {
                    v.map(|v| pairs(v)?.into_iter().map(|(a, b)| Ok((sym(a)?.to_string(), sym(b)?.to_string()))).collect())
                        .transpose()
                        .map(Option::unwrap_or_default)
                };
                let entity_pairs = |v: Option<&Sexp>| -> Res<Vec<(EntityRef, String)>> {
                    v.map(|v| pairs(v)?.into_iter().map(|(a, b)| Ok((entity_lit(a)?, sym(b)?.to_string()))).collect())
                        .transpose()
                        .map(Option::unwrap_or_default)
                };
                let agents = sym_pairs(f.opt("agents"))?;
                let at = entity_pairs(f.opt("at"))?;
                let holding = entity_pairs(f.opt("holding"))?;
                f.finish(0)?;
                Item::World(WorldDecl { locations, unreachable, agents, at, holding })
            }
            "motive" => {
                let agent = sym(f.req("agent")?)?.to_string();
                let want = self.filler(f.req("want")?)?;
                f.finish(0)?;
                Item::Motive { agent, want }
            }
            "illocution" => {
                let agent = sym(f.req("agent")?)?.to_string();
                let on = parsed(f.req("on")?)?;
                let to = sym(f.req("to")?)?.to_string();
                let yields = self.filler(f.req("yields")?)?;
                let otherwise = f.opt("otherwise").map(|o| self.filler(o)).transpose()?;
                f.finish(0)?;
                Item::Illocution(IllocutionDecl { agent, on, to, yields, otherwise })
            }
            "template" => {
                let id = sym(f.req("id")?)?.to_string();
                let illocution = parsed(f.req("illocution")?)?;
                let tone = parsed(f.req("tone")?)?;
                let text = string(f.req("text")?)?;
                let pattern = self.cz(f.req("pattern")?, true)?;
                f.finish(0)?;
                Item::Template(TemplateDecl { id, illocution, tone, text, pattern })
            }
            other => return Err(syntax(s.pos(), format!("unknown form {other}"))),
        };
        Ok(item)
    }

    fn rule(&mut self, f: &mut Fields) -> Res<RuleDecl> {
        let name = sym(f.req("name")?)?.to_string();
        let priority = match f.req("priority")? {
            Sexp::Int(n, _) => *n,
            other => return Err(syntax(other.pos(), "expected an integer priority")),
        };
        let body = match (f.opt("strategy"), f.opt("when"), f.opt("then")) {
            (Some(s), None, None) => RuleBody::Strategy(sym(s)?.to_string()),
            (None, Some(when), Some(then)) => {
                let when = self.cz(when, true)?;
                let then = list(then)?
                    .iter()
                    .map(|a| {
                        let xs = list(a)?;
                        match xs {
                            [h, cz] if h.as_sym() == Some("assert") => Ok(RuleAction::Assert(self.cz(cz, true)?)),
                            [h, st, flag] if h.as_sym() == Some("affect") => {
                                let on = match sym(flag)? {
                                    "on" => true,
                                    "off" => false,
                                    _ => return Err(syntax(flag.pos(), "expected on or off")),
                                };
                                Ok(RuleAction::Affect { state: state_name(st)?, on })
                            }
                            _ => Err(syntax(a.pos(), "expected (assert <cz>) or (affect STATE on|off)")),
                        }
                    })
                    .collect::<Res<_>>()?;
                RuleBody::Declarative { when, then }
            }
            _ => return Err(syntax(f.pos, "rule needs either :strategy or both :when and :then")),
        };
        Ok(RuleDecl { name, priority, body })
    }

    fn cz(&mut self, s: &Sexp, top_level: bool) -> Res<CzTerm> {
        let mut f = Fields::new(s)?;
        if f.head != "cz" {
            return Err(syntax(s.pos(), "expected (cz ...)"));
        }
        let t = self.cz_fields(&mut f, top_level)?;
        f.finish(0)?;
        Ok(t)
    }

    fn cz_fields(&mut self, f: &mut Fields, top_level: bool) -> Res<CzTerm> {
        let label = f
            .opt("label")
            .map(|l| match l {
                Sexp::Str(x, _) | Sexp::Sym(x, _) => Ok(x.clone()),
                Sexp::Int(n, _) => Ok(n.to_string()),
                other => Err(syntax(other.pos(), "expected a label string")),
            })
            .transpose()?;
        let actor = self.entity(f.req("actor")?)?;
        let act = act(f.req("act")?)?;
        let mut t = CzTerm::new(actor, act);
        t.object = f.opt("obj").map(|o| self.filler(o)).transpose()?;
        t.from = f.opt("from").map(|e| self.entity(e)).transpose()?;
        t.to = f.opt("to").map(|e| self.entity(e)).transpose()?;
        t.instrument = f.opt("inst").map(|e| self.entity(e)).transpose()?;
        t.state = f
            .opt("state")
            .map(|s| match variable(s) {
                Some(Ok((v, Sort::State))) => Ok(StateTerm::Var(v)),
                Some(Ok(_)) => Err(syntax(s.pos(), "expected a state variable")),
                Some(Err(e)) => Err(e),
                None => Ok(StateTerm::Lit(state_name(s)?)),
            })
            .transpose()?;
        if let Some(m) = f.opt("mods") {
            t.mods = mods(m)?;
            if !top_level && t.exact_mods().contains(Mods::QWHY) {
                return Err(syntax(m.pos(), "qwhy is only allowed on a top-level conceptualization"));
            }
        }
        if let Some(l) = &label {
            self.labels.insert(l.clone());
        }
        t.label = label;
        Ok(t)
    }

    fn entity(&mut self, s: &Sexp) -> Res<EntityTerm> {
        match variable(s) {
            Some(Ok((v, Sort::Entity))) => Ok(EntityTerm::Var(v)),
            Some(Ok(_)) => Err(syntax(s.pos(), "expected an entity variable")),
            Some(Err(e)) => Err(e),
            None => Ok(EntityTerm::Lit(entity_lit(s)?)),
        }
    }

    fn filler(&mut self, s: &Sexp) -> Res<FillerTerm> {
        match s {
            Sexp::Sym(..) => Ok(FillerTerm::Entity(EntityTerm::Lit(entity_lit(s)?))),
            Sexp::Label(l, pos) => {
                if self.labels.contains(l) {
                    Ok(FillerTerm::Label(l.clone()))
                } else {
                    Err(err(*pos, ErrorKind::DanglingLabelRef(l.clone())))
                }
            }
            Sexp::Id(n, _) => Ok(FillerTerm::Id(crate::cdgraph::CzId(*n))),
            Sexp::List(..) => {
                if let Some(v) = variable(s) {
                    return match v? {
                        (v, Sort::Entity) => Ok(FillerTerm::Entity(EntityTerm::Var(v))),
                        (v, Sort::Cz) => Ok(FillerTerm::CzVar(v)),
                        (_, Sort::State) => Err(syntax(s.pos(), "a state variable cannot fill an object slot")),
                    };
                }
                match list(s)?.first().and_then(Sexp::as_sym) {
                    Some("cz") => Ok(FillerTerm::Cz(Box::new(self.cz(s, false)?))),
                    Some("causal" | "temporal" | "state-attr") => Ok(FillerTerm::Link(Box::new(self.link(s)?))),
                    _ => Err(syntax(s.pos(), "expected an entity, conceptualization, link, variable or reference")),
                }
            }
            other => Err(syntax(other.pos(), "expected a filler")),
        }
    }

    fn link(&mut self, s: &Sexp) -> Res<LinkTerm> {
        let mut f = Fields::new(s)?;
        let pos = f.pos;
        let positional = f.positional.clone();
        let kind = match (f.head, positional.as_slice()) {
            ("causal", [a, b]) => LinkTermKind::Causal { cause: self.filler(a)?, effect: self.filler(b)? },
            ("temporal", [a, b]) => LinkTermKind::Temporal { before: self.filler(a)?, after: self.filler(b)? },
            ("state-attr", [e, st, c]) => LinkTermKind::StateAttr {
                entity: self.entity(e)?,
                state: match variable(st) {
                    Some(Ok((v, Sort::State))) => StateTerm::Var(v),
                    Some(Ok(_)) => return Err(syntax(st.pos(), "expected a state variable")),
                    Some(Err(e)) => return Err(e),
                    None => StateTerm::Lit(state_name(st)?),
                },
                cz: self.filler(c)?,
            },
            (head, _) => return Err(syntax(pos, format!("wrong number of endpoints in {head}"))),
        };
        let mods = f.opt("mods").map(mods).transpose()?.unwrap_or_default();
        f.finish(usize::MAX)?;
        Ok(LinkTerm { kind, mods })
    }
}
