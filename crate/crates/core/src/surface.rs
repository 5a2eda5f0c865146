//! Fixed utterance templates: realizing conceptualizations as sentences and
//! recognizing those sentences again.

use thiserror::Error;

use crate::cdgraph::{CdStore, CzId, EntityRef, GraphError};
use crate::cdx::{self, Item, TemplateDecl};
use crate::matcher::{unify, Bindings, CzTerm, EntityTerm, FillerTerm, Pattern, Value};
use crate::vocab::{Illocution, Tone};

pub const BUILTIN_TEMPLATES: &str = include_str!("../surface/templates.cdx");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SurfaceError {
    #[error("no template covers {0}")]
    NoTemplate(String),
    #[error("templates {ids:?} all cover {cz}")]
    AmbiguousTemplate { cz: String, ids: Vec<String> },
    #[error("unrecognized utterance {0:?}")]
    Unrecognized(String),
    #[error("bad template {id}: {reason}")]
    BadTemplate { id: String, reason: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(String),
}

#[derive(Debug, Clone)]
pub struct Template {
    pub id: String,
    pub illocution: Illocution,
    pub tone: Tone,
    pub text: String,
    pub pattern: Pattern,
    segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realized {
    pub text: String,
    pub template: String,
    pub illocution: Illocution,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Recognized {
    pub term: CzTerm,
    pub illocution: Illocution,
    pub template: String,
}

fn segments(id: &str, text: &str) -> Result<Vec<Segment>, SurfaceError> {
    let bad = |reason: &str| SurfaceError::BadTemplate { id: id.to_string(), reason: reason.to_string() };
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            out.push(Segment::Text(rest[..open].to_string()));
        }
        let close = rest[open..].find('}').ok_or_else(|| bad("unclosed slot"))? + open;
        out.push(Segment::Slot(rest[open + 1..close].to_string()));
        rest = &rest[close + 1..];
        if matches!(out.last(), Some(Segment::Slot(_))) && rest.starts_with('{') {
            return Err(bad("adjacent slots"));
        }
    }
    if !rest.is_empty() {
        out.push(Segment::Text(rest.to_string()));
    }
    Ok(out)
}

/// Curly quotes to ASCII, runs of whitespace to one space, ends trimmed.
pub fn normalize(text: &str) -> String {
    let straight: String = text
        .chars()
        .map(|c| match c {
            '\u{2018}' | '\u{2019}' | '\u{02BC}' => '\'',
            '\u{201C}' | '\u{201D}' => '"',
            c => c,
        })
        .collect();
    straight.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn lower_initial(s: &str) -> String {
    let mut cs = s.chars();
    cs.next().map(|c| c.to_lowercase().chain(cs).collect()).unwrap_or_default()
}

fn upper_initial(s: &str) -> String {
    let mut cs = s.chars();
    cs.next().map(|c| c.to_uppercase().chain(cs).collect()).unwrap_or_default()
}

/// Binds `segs` against `text`; slots take the shortest non-empty span that lets the rest match.
fn match_segments(segs: &[Segment], text: &str, out: &mut Vec<(String, String)>) -> bool {
    match segs.split_first() {
        None => text.is_empty(),
        Some((Segment::Text(t), rest)) => text.strip_prefix(t.as_str()).is_some_and(|r| match_segments(rest, r, out)),
        Some((Segment::Slot(name), rest)) => {
            for (i, _) in text.char_indices().skip(1).chain(std::iter::once((text.len(), ' '))) {
                let mark = out.len();
                out.push((name.clone(), text[..i].to_string()));
                if match_segments(rest, &text[i..], out) {
                    return true;
                }
                out.truncate(mark);
            }
            false
        }
    }
}

#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: Vec<Template>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let doc = cdx::parse(BUILTIN_TEMPLATES).expect("bundled templates parse");
        Self::from_decls(doc.items.iter().filter_map(|i| match i {
            Item::Template(t) => Some(t.clone()),
            _ => None,
        }))
        .expect("bundled templates are well formed")
    }

    pub fn from_decls(decls: impl IntoIterator<Item = TemplateDecl>) -> Result<Self, SurfaceError> {
        let mut templates = Vec::new();
        for d in decls {
            let pattern = Pattern::new(d.pattern.clone())
                .map_err(|e| SurfaceError::BadTemplate { id: d.id.clone(), reason: e.to_string() })?;
            let segments = segments(&d.id, &d.text)?;
            for seg in &segments {
                if let Segment::Slot(s) = seg {
                    if !pattern.vars().contains_key(s) {
                        return Err(SurfaceError::BadTemplate { id: d.id.clone(), reason: format!("slot {s} not in pattern") });
                    }
                }
            }
            templates.push(Template { id: d.id, illocution: d.illocution, tone: d.tone, text: d.text, pattern, segments });
        }
        Ok(TemplateSet { templates })
    }

    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn get(&self, id: &str) -> Option<&Template> {
        self.templates.iter().find(|t| t.id == id)
    }

    /// Matching templates for a stored conceptualization, with their bindings.
    pub fn covering(&self, store: &CdStore, cz: CzId) -> Vec<(&Template, Bindings)> {
        self.templates.iter().filter_map(|t| unify(&t.pattern, store, cz).map(|b| (t, b))).collect()
    }

    /// The sentence for `cz`. When several templates cover it, `tone` chooses among them.
    pub fn realize(&self, store: &CdStore, cz: CzId, tone: Tone) -> Result<Realized, SurfaceError> {
        let mut hits = self.covering(store, cz);
        if hits.len() > 1 {
            hits.retain(|(t, _)| t.tone == tone);
        }
        let canon = || store.canonicalize(cz).unwrap_or_else(|_| cz.to_string());
        let (t, b) = match hits.len() {
            0 => return Err(SurfaceError::NoTemplate(canon())),
            1 => hits.remove(0),
            _ => return Err(SurfaceError::AmbiguousTemplate { cz: canon(), ids: hits.iter().map(|(t, _)| t.id.clone()).collect() }),
        };
        let mut text = String::new();
        for seg in &t.segments {
            match seg {
                Segment::Text(s) => text.push_str(s),
                Segment::Slot(name) => {
                    let value = match b.get(name) {
                        Some(Value::Entity(e)) => e.to_string(),
                        other => {
                            return Err(SurfaceError::BadTemplate {
                                id: t.id.clone(),
                                reason: format!("slot {name} bound to {other:?}"),
                            })
                        }
                    };
                    text.push_str(&if name == "source" { lower_initial(&value) } else { value });
                }
            }
        }
        Ok(Realized { text, template: t.id.clone(), illocution: t.illocution })
    }

    /// Reads an utterance heard by `addressee` from `speaker` back into a ground term.
    pub fn recognize(&self, text: &str, speaker: &str, addressee: &str) -> Result<Recognized, SurfaceError> {
        let norm = normalize(text);
        for t in &self.templates {
            let mut slots = Vec::new();
            if !match_segments(&t.segments, &norm, &mut slots) {
                continue;
            }
            let mut b = Bindings::new();
            b.insert("speaker", Value::Entity(EntityRef::new(speaker)));
            b.insert("addressee", Value::Entity(EntityRef::new(addressee)));
            let mut ok = true;
            for (name, raw) in slots {
                let raw = if name == "source" { upper_initial(&raw) } else { raw };
                match EntityRef::parse(&raw) {
                    Some(e) => b.insert(name, Value::Entity(e)),
                    None => ok = false,
                }
            }
            if ok {
                if let Some(term) = ground(t.pattern.term(), &b) {
                    return Ok(Recognized { term, illocution: t.illocution, template: t.id.clone() });
                }
            }
        }
        Err(SurfaceError::Unrecognized(norm))
    }
}

/// Replaces entity variables; `None` if any other kind of variable remains.
fn ground(t: &CzTerm, b: &Bindings) -> Option<CzTerm> {
    let e = |x: &EntityTerm| -> Option<EntityTerm> {
        match x {
            EntityTerm::Lit(_) => Some(x.clone()),
            EntityTerm::Var(v) => b.entity(v).map(|e| EntityTerm::Lit(e.clone())),
        }
    };
    let opt = |x: &Option<EntityTerm>| -> Option<Option<EntityTerm>> {
        match x {
            None => Some(None),
            Some(x) => e(x).map(Some),
        }
    };
    let object = match &t.object {
        None => None,
        Some(FillerTerm::Entity(x)) => Some(FillerTerm::Entity(e(x)?)),
        Some(FillerTerm::Cz(inner)) => Some(FillerTerm::Cz(Box::new(ground(inner, b)?))),
        Some(_) => return None,
    };
    Some(CzTerm {
        label: None,
        actor: e(&t.actor)?,
        act: t.act,
        object,
        from: opt(&t.from)?,
        to: opt(&t.to)?,
        instrument: opt(&t.instrument)?,
        state: match &t.state {
            Some(crate::matcher::StateTerm::Var(_)) => return None,
            s => s.clone(),
        },
        mods: t.mods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdgraph::{Act, Mods};
    use crate::matcher::instantiate;

    fn tool() -> EntityRef {
        EntityRef::with_param("Tool", "X")
    }

    fn fetch() -> CzTerm {
        CzTerm::new(EntityRef::new("Robot"), Act::Ptrans)
            .obj_entity(tool())
            .from(EntityRef::new("Table"))
            .to(EntityRef::new("Person"))
    }

    fn directive() -> CzTerm {
        let want = CzTerm::new(EntityRef::new("Person"), Act::Want).obj(fetch().into());
        CzTerm::new(EntityRef::new("Person"), Act::Mtrans).obj(want.into()).to(EntityRef::new("Robot"))
    }

    fn realize(t: CzTerm, tone: Tone) -> Result<Realized, SurfaceError> {
        let mut s = CdStore::new();
        let id = instantiate(&t, &Bindings::new(), &mut s, false).unwrap();
        TemplateSet::builtin().realize(&s, id, tone)
    }

    #[test]
    fn directive_tones() {
        assert_eq!(realize(directive(), Tone::Polite).unwrap().text, "Robot, please bring me Tool(X) from the table.");
        let explicit = realize(directive(), Tone::Neutral).unwrap();
        assert_eq!(explicit.text, "Robot, I want you to bring me Tool(X) from the table.");
        assert_eq!(explicit.template, "T1'");
    }

    #[test]
    fn report_question_answer_handover() {
        let robot = EntityRef::new("Robot");
        let cannot = CzTerm::new(robot.clone(), Act::Ptrans)
            .obj_entity(tool())
            .from(EntityRef::new("Table"))
            .to(EntityRef::new("Person"))
            .mods(Mods::CAN | Mods::NEG);
        assert_eq!(realize(cannot, Tone::Polite).unwrap().text, "I cannot bring Tool(X) from the table to you.");
        let why = CzTerm::new(robot.clone(), Act::Ptrans)
            .obj_entity(tool())
            .to(EntityRef::new("Person"))
            .mods(Mods::CAN | Mods::NEG | Mods::QWHY);
        assert_eq!(realize(why, Tone::Neutral).unwrap().text, "Why can't you bring Tool(X) to me?");
        let because = CzTerm::new(tool(), Act::Be).to(EntityRef::new("Table")).mods(Mods::NEG);
        assert_eq!(realize(because, Tone::Neutral).unwrap().text, "Because Tool(X) is not on the table.");
        let here = CzTerm::new(robot, Act::Ptrans).obj_entity(tool()).to(EntityRef::new("Person")).mods(Mods::PAST);
        assert_eq!(realize(here, Tone::Neutral).unwrap().text, "Here is Tool(X).");
    }

    #[test]
    fn uncovered() {
        let push = CzTerm::new(EntityRef::new("Person"), Act::Push).obj_entity(EntityRef::new("Door"));
        assert!(matches!(realize(push, Tone::Neutral), Err(SurfaceError::NoTemplate(_))));
    }

    #[test]
    fn recognition() {
        let set = TemplateSet::builtin();
        let r = set.recognize("Why can\u{2019}t you  bring Tool(X) to me?", "Person", "Robot").unwrap();
        assert_eq!(r.illocution, Illocution::WhyQuestion);
        assert_eq!(r.term.actor, EntityTerm::Lit(EntityRef::new("Robot")));
        assert_eq!(r.term.mods.clone(), crate::matcher::ModsTerm::Exact(Mods::CAN | Mods::NEG | Mods::QWHY));
        let r = set.recognize("Here is Tool(X).", "Robot", "Person").unwrap();
        assert_eq!(r.illocution, Illocution::Inform);
        assert_eq!(r.template, "T5");
        let r = set.recognize("Robot, please bring me Tool(X) from the table.", "Person", "Robot").unwrap();
        assert_eq!(r.term, directive());
        assert!(matches!(set.recognize("Hello there", "Person", "Robot"), Err(SurfaceError::Unrecognized(_))));
    }

    #[test]
    fn bad_templates_rejected() {
        let doc = cdx::parse(
            "(template :id X :illocution inform :tone neutral :text \"{who} {what}\" \
             :pattern (cz :actor (?who entity) :act BE :to (?what entity)))",
        )
        .unwrap();
        let Item::Template(t) = &doc.items[0] else { panic!() };
        assert!(TemplateSet::from_decls([t.clone()]).is_ok());
        let mut missing = t.clone();
        missing.text = "{nobody}".into();
        assert!(TemplateSet::from_decls([missing]).is_err());
    }
}
