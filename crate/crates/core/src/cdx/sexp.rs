//! S-expression layer: tokens with source positions, and a width-aware printer.

use std::fmt;

use super::{CdxError, ErrorKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    List(Vec<Sexp>, Pos),
    /// Bare symbol, including entity forms such as `Tool(X)` and `?var`.
    Sym(String, Pos),
    Kw(String, Pos),
    Str(String, Pos),
    Int(i64, Pos),
    /// `#label`
    Label(String, Pos),
    /// `@n`
    Id(u32, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::List(_, p)
            | Sexp::Sym(_, p)
            | Sexp::Kw(_, p)
            | Sexp::Str(_, p)
            | Sexp::Int(_, p)
            | Sexp::Label(_, p)
            | Sexp::Id(_, p) => *p,
        }
    }

    pub fn sym(s: impl Into<String>) -> Sexp {
        Sexp::Sym(s.into(), Pos::default())
    }

    pub fn kw(s: impl Into<String>) -> Sexp {
        Sexp::Kw(s.into(), Pos::default())
    }

    pub fn str(s: impl Into<String>) -> Sexp {
        Sexp::Str(s.into(), Pos::default())
    }

    pub fn list(items: Vec<Sexp>) -> Sexp {
        Sexp::List(items, Pos::default())
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexp::Sym(s, _) => Some(s),
            _ => None,
        }
    }
}

fn is_sym_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '?' | '\'' | '.' | '*' | '+' | '/' | '!' | '<' | '>' | '=')
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Lexer<'_> {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if !is_sym_char(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn syntax(&self, pos: Pos, msg: impl Into<String>) -> CdxError {
        CdxError { kind: ErrorKind::Syntax(msg.into()), pos }
    }

    fn datum(&mut self) -> Result<Option<Sexp>, CdxError> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(c) = self.peek() else { return Ok(None) };
        let sexp = match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        None => return Err(self.syntax(pos, "unclosed list")),
                        Some(')') => {
                            self.bump();
                            break;
                        }
                        Some(_) => items.push(self.datum()?.expect("non-empty input")),
                    }
                }
                Sexp::List(items, pos)
            }
            ')' => return Err(self.syntax(pos, "unexpected ')'")),
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.syntax(pos, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            other => return Err(self.syntax(pos, format!("bad escape {other:?}"))),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Sexp::Str(s, pos)
            }
            ':' => {
                self.bump();
                let w = self.word();
                if w.is_empty() {
                    return Err(self.syntax(pos, "empty keyword"));
                }
                Sexp::Kw(w, pos)
            }
            '#' => {
                self.bump();
                let w = self.word();
                if w.is_empty() {
                    return Err(self.syntax(pos, "empty label reference"));
                }
                Sexp::Label(w, pos)
            }
            '@' => {
                self.bump();
                let w = self.word();
                let n = w.parse().map_err(|_| self.syntax(pos, format!("bad node id @{w}")))?;
                Sexp::Id(n, pos)
            }
            c if is_sym_char(c) => {
                let mut w = self.word();
                if self.peek() == Some('(') {
                    // Entity parameter: `Tool(X)` with no whitespace before '('.
                    self.bump();
                    let param = self.word();
                    if self.bump() != Some(')') {
                        return Err(self.syntax(pos, format!("unclosed parameter in {w}")));
                    }
                    w = format!("{w}({param})");
                    Sexp::Sym(w, pos)
                } else if w.starts_with(|c: char| c.is_ascii_digit() || c == '-') && w.len() > 1 || w.chars().all(|c| c.is_ascii_digit()) {
                    match w.parse::<i64>() {
                        Ok(n) => Sexp::Int(n, pos),
                        Err(_) => Sexp::Sym(w, pos),
                    }
                } else {
                    Sexp::Sym(w, pos)
                }
            }
            other => return Err(self.syntax(pos, format!("unexpected character {other:?}"))),
        };
        Ok(Some(sexp))
    }
}

pub fn read_all(text: &str) -> Result<Vec<Sexp>, CdxError> {
    let mut lx = Lexer { chars: text.chars().peekable(), line: 1, col: 1 };
    let mut out = Vec::new();
    while let Some(d) = lx.datum()? {
        out.push(d);
    }
    Ok(out)
}

const WIDTH: usize = 88;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn flat(s: &Sexp) -> String {
    match s {
        Sexp::List(items, _) => {
            let inner: Vec<String> = items.iter().map(flat).collect();
            format!("({})", inner.join(" "))
        }
        Sexp::Sym(x, _) => x.clone(),
        Sexp::Kw(x, _) => format!(":{x}"),
        Sexp::Str(x, _) => escape(x),
        Sexp::Int(n, _) => n.to_string(),
        Sexp::Label(x, _) => format!("#{x}"),
        Sexp::Id(n, _) => format!("@{n}"),
    }
}

/// Prints `s` starting at column `col`. Lists that do not fit are broken
/// after their head, one keyword/value pair or element per line.
pub fn pretty(s: &Sexp, col: usize) -> String {
    let f = flat(s);
    let Sexp::List(items, _) = s else { return f };
    if col + f.len() <= WIDTH || items.len() < 2 {
        return f;
    }
    let indent = col + 2;
    let pad = " ".repeat(indent);
    let mut out = String::from("(");
    let mut rest = items.iter().peekable();
    let head = rest.next().expect("len >= 2");
    let head_text = pretty(head, col + 1);
    out.push_str(&head_text);
    // Leading positional atoms stay on the head line.
    let mut line_col = col + 1 + head_text.len();
    while let Some(next) = rest.peek() {
        if matches!(next, Sexp::Kw(..) | Sexp::List(..)) {
            break;
        }
        let t = flat(next);
        out.push(' ');
        out.push_str(&t);
        line_col += 1 + t.len();
        rest.next();
    }
    let _ = line_col;
    while let Some(item) = rest.next() {
        out.push('\n');
        out.push_str(&pad);
        if let Sexp::Kw(k, _) = item {
            out.push(':');
            out.push_str(k);
            if let Some(value) = rest.next_if(|v| !matches!(v, Sexp::Kw(..))) {
                out.push(' ');
                out.push_str(&pretty(value, indent + k.len() + 2));
            }
        } else {
            out.push_str(&pretty(item, indent));
        }
    }
    out.push(')');
    out
}
