//! Minimal s-expression reader shared by every textual format in the crate.
//!
//! Atoms are maximal runs of characters other than whitespace, parentheses
//! and `;`. A `;` starts a comment that runs to the end of the line.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom { text: String, pos: usize },
    List { items: Vec<Sexp>, pos: usize },
}

impl Sexp {
    pub fn pos(&self) -> usize {
        match self {
            Sexp::Atom { pos, .. } | Sexp::List { pos, .. } => *pos,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }

    /// Head symbol of a list form, if any.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Sexp]> {
        self.as_list()
            .ok_or_else(|| Error::syntax(self.pos(), format!("expected list for {what}")))
    }

    pub fn expect_atom(&self, what: &str) -> Result<&str> {
        self.as_atom()
            .ok_or_else(|| Error::syntax(self.pos(), format!("expected atom for {what}")))
    }

    pub fn expect_usize(&self, what: &str) -> Result<usize> {
        let text = self.expect_atom(what)?;
        text.parse()
            .map_err(|_| Error::syntax(self.pos(), format!("expected natural number for {what}, found `{text}`")))
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom { text, .. } => f.write_str(text),
            Sexp::List { items, .. } => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Reader<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn skip_trivia(&mut self) {
        while self.pos < self.src.len() {
            match self.src[self.pos] {
                b';' => {
                    while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn read(&mut self) -> Result<Sexp> {
        self.skip_trivia();
        let start = self.pos;
        match self.src.get(self.pos) {
            None => Err(Error::syntax(start, "unexpected end of input")),
            Some(b')') => Err(Error::syntax(start, "unexpected `)`")),
            Some(b'(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.src.get(self.pos) {
                        None => return Err(Error::syntax(start, "unclosed `(`")),
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(Sexp::List { items, pos: start });
                        }
                        Some(_) => items.push(self.read()?),
                    }
                }
            }
            Some(_) => {
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    if c.is_ascii_whitespace() || c == b'(' || c == b')' || c == b';' {
                        break;
                    }
                    self.pos += 1;
                }
                Ok(Sexp::Atom {
                    text: self.text[start..self.pos].to_string(),
                    pos: start,
                })
            }
        }
    }
}

/// Reads every top-level form in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>> {
    let mut reader = Reader {
        src: text.as_bytes(),
        text,
        pos: 0,
    };
    let mut out = Vec::new();
    loop {
        reader.skip_trivia();
        if reader.pos >= reader.src.len() {
            return Ok(out);
        }
        out.push(reader.read()?);
    }
}

/// Reads exactly one form.
pub fn parse_one(text: &str) -> Result<Sexp> {
    let mut forms = parse_all(text)?;
    match forms.len() {
        1 => Ok(forms.pop().unwrap()),
        0 => Err(Error::syntax(0, "empty input")),
        _ => Err(Error::syntax(forms[1].pos(), "trailing input after form")),
    }
}

/// Splits the tail of a labelled form `(head :a x :b y)` into slots.
pub fn slots<'a>(items: &'a [Sexp], pos: usize) -> Result<Vec<(&'a str, &'a Sexp)>> {
    if items.len() % 2 != 0 {
        return Err(Error::syntax(pos, "labelled form needs `:label value` pairs"));
    }
    items
        .chunks(2)
        .map(|pair| {
            let label = pair[0].expect_atom("slot label")?;
            let label = label
                .strip_prefix(':')
                .ok_or_else(|| Error::syntax(pair[0].pos(), format!("expected `:label`, found `{label}`")))?;
            Ok((label, &pair[1]))
        })
        .collect()
}

pub(crate) fn take_slot<'a>(
    slots: &[(&str, &'a Sexp)],
    label: &str,
    pos: usize,
) -> Result<&'a Sexp> {
    slots
        .iter()
        .find(|(l, _)| *l == label)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::syntax(pos, format!("missing slot `:{label}`")))
}
