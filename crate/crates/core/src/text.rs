//! Textual DRS notation.
//!
//! ```text
//! DRS      := "drs(" REFLIST "," CONDLIST ")"
//! REFLIST  := "[" ( REF ("," REF)* )? "]"
//! CONDLIST := "[" ( COND ("," COND)* )? "]"
//! COND     := "pred(" REF "," LEMMA "," POS "," NAT ")"
//!           | "named(" REF "," STRING "," CLASS ")"
//!           | "rel(" REF "," REF "," LEMMA ")"
//!           | "eq(" REF "," REF ")"
//!           | "not(" DRS ")" | "pos(" DRS ")"
//!           | "imp(" DRS "," DRS ")" | "or(" DRS "," DRS ")"
//!           | "whq(" REF "," DRS ")"
//! REF := [a-z][a-z0-9]*   LEMMA := [a-z][a-z_0-9]*   POS := n|v|a|r
//! CLASS := per|org|loc|tim|obj   NAT := [0-9]+   STRING := LEMMA
//! ```
//!
//! Whitespace between tokens is ignored by the parser. The canonical
//! serialization contains no whitespace at all, so golden files compare
//! byte for byte.
//!
//! ```
//! use nl2cnl::text::{parse_drs, serialize_drs};
//!
//! let src = "drs([x1],[pred(x1,dog,n,0)])";
//! let d = parse_drs(src).unwrap();
//! assert_eq!(serialize_drs(&d), src);
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::drs::{Condition, Drs, DrsError, EntityClass, Lemma, Pos, Referent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("syntax error at {line}:{column}: expected {expected}")]
    Syntax {
        line: usize,
        column: usize,
        expected: String,
    },
    #[error("duplicate referent `{0}`")]
    DuplicateReferent(String),
    #[error("unknown part of speech `{0}`")]
    UnknownPos(String),
    #[error("unknown entity class `{0}`")]
    UnknownEntityClass(String),
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
}

/// Position-tracking cursor shared by the DRS and rule-file parsers.
#[derive(Clone)]
pub(crate) struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    // Line/column of `src[0]` inside the enclosing file.
    base_line: usize,
    base_col: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Self::at(src, 1, 1)
    }

    pub(crate) fn at(src: &'a str, line: usize, col: usize) -> Self {
        Cursor {
            src,
            pos: 0,
            base_line: line,
            base_col: col,
        }
    }

    pub(crate) fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }

    pub(crate) fn location(&self) -> (usize, usize) {
        let before = &self.src[..self.pos];
        let line = before.matches('\n').count();
        let col = match before.rfind('\n') {
            Some(nl) => before[nl + 1..].chars().count() + 1,
            None => before.chars().count() + self.base_col,
        };
        (self.base_line + line, col)
    }

    pub(crate) fn error(&self, expected: impl Into<String>) -> TextError {
        let (line, column) = self.location();
        TextError::Syntax {
            line,
            column,
            expected: expected.into(),
        }
    }

    pub(crate) fn try_eat(&mut self, lit: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, lit: &str) -> Result<(), TextError> {
        if self.try_eat(lit) {
            Ok(())
        } else {
            Err(self.error(format!("`{lit}`")))
        }
    }

    /// Consumes `[A-Za-z0-9_]*` and returns it (possibly empty).
    pub(crate) fn word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(rest.len());
        self.pos += len;
        &rest[..len]
    }

    pub(crate) fn referent(&mut self) -> Result<Referent, TextError> {
        let save = self.clone();
        let w = self.word();
        Referent::new(w).map_err(|_| save.after_ws().error("referent"))
    }

    pub(crate) fn lemma(&mut self) -> Result<Lemma, TextError> {
        let save = self.clone();
        let w = self.word();
        Lemma::new(w).map_err(|_| save.after_ws().error("lemma"))
    }

    pub(crate) fn nat(&mut self) -> Result<u64, TextError> {
        let save = self.clone();
        let w = self.word();
        if w.is_empty() || !w.bytes().all(|b| b.is_ascii_digit()) {
            return Err(save.after_ws().error("natural number"));
        }
        w.parse().map_err(|_| save.after_ws().error("natural number"))
    }

    pub(crate) fn pos_tag(&mut self) -> Result<Pos, TextError> {
        let save = self.clone();
        let w = self.word();
        if w.is_empty() {
            return Err(save.after_ws().error("part of speech (n|v|a|r)"));
        }
        Pos::from_tag(w).ok_or_else(|| {
            if Lemma::new(w).is_ok() {
                TextError::UnknownPos(w.to_string())
            } else {
                save.after_ws().error("part of speech (n|v|a|r)")
            }
        })
    }

    pub(crate) fn class_tag(&mut self) -> Result<EntityClass, TextError> {
        let save = self.clone();
        let w = self.word();
        if w.is_empty() {
            return Err(save.after_ws().error("entity class"));
        }
        EntityClass::from_tag(w).ok_or_else(|| {
            if Lemma::new(w).is_ok() {
                TextError::UnknownEntityClass(w.to_string())
            } else {
                save.after_ws().error("entity class")
            }
        })
    }

    fn after_ws(mut self) -> Self {
        self.skip_ws();
        self
    }

    /// Comma-separated list between `[` and `]`.
    pub(crate) fn list<T>(
        &mut self,
        mut item: impl FnMut(&mut Self) -> Result<T, TextError>,
    ) -> Result<Vec<T>, TextError> {
        self.expect("[")?;
        let mut out = Vec::new();
        if self.try_eat("]") {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.try_eat("]") {
                return Ok(out);
            }
            if !self.try_eat(",") {
                return Err(self.error("`,` or `]`"));
            }
        }
    }
}

fn drs_error(e: DrsError) -> TextError {
    match e {
        DrsError::DuplicateReferent(r) => TextError::DuplicateReferent(r),
        other => unreachable!("box construction only reports duplicates: {other}"),
    }
}

pub(crate) fn parse_box(cur: &mut Cursor<'_>) -> Result<Drs, TextError> {
    let save = cur.clone();
    if cur.word() != "drs" || !cur.try_eat("(") {
        return Err(save.after_ws().error("`drs(`"));
    }
    let refs = cur.list(Cursor::referent)?;
    cur.expect(",")?;
    let conds = cur.list(parse_condition)?;
    cur.expect(")")?;
    Drs::new(refs, conds).map_err(drs_error)
}

fn parse_condition(cur: &mut Cursor<'_>) -> Result<Condition, TextError> {
    let save = cur.clone();
    let head = cur.word();
    if !cur.try_eat("(") {
        return Err(save.after_ws().error("condition"));
    }
    let cond = match head {
        "pred" => {
            let r = cur.referent()?;
            cur.expect(",")?;
            let l = cur.lemma()?;
            cur.expect(",")?;
            let p = cur.pos_tag()?;
            cur.expect(",")?;
            let s = cur.nat()?;
            Condition::pred(r, l, p, s)
        }
        "named" => {
            let r = cur.referent()?;
            cur.expect(",")?;
            let n = cur.lemma()?;
            cur.expect(",")?;
            let c = cur.class_tag()?;
            Condition::named(r, n, c)
        }
        "rel" => {
            let a = cur.referent()?;
            cur.expect(",")?;
            let b = cur.referent()?;
            cur.expect(",")?;
            let l = cur.lemma()?;
            Condition::rel(a, b, l)
        }
        "eq" => {
            let a = cur.referent()?;
            cur.expect(",")?;
            let b = cur.referent()?;
            Condition::Eq(a, b)
        }
        "not" => Condition::Not(parse_box(cur)?),
        "pos" => Condition::Pos(parse_box(cur)?),
        "imp" => {
            let a = parse_box(cur)?;
            cur.expect(",")?;
            Condition::Imp(a, parse_box(cur)?)
        }
        "or" => {
            let a = parse_box(cur)?;
            cur.expect(",")?;
            Condition::Or(a, parse_box(cur)?)
        }
        "whq" => {
            let x = cur.referent()?;
            cur.expect(",")?;
            Condition::Whq(x, parse_box(cur)?)
        }
        _ => return Err(save.after_ws().error("condition")),
    };
    cur.expect(")")?;
    Ok(cond)
}

/// Parses one DRS; trailing input other than whitespace is an error.
pub fn parse_drs(text: &str) -> Result<Drs, TextError> {
    let mut cur = Cursor::new(text);
    let d = parse_box(&mut cur)?;
    if !cur.at_end() {
        return Err(cur.error("end of input"));
    }
    Ok(d)
}

/// Canonical, whitespace-free serialization.
pub fn serialize_drs(d: &Drs) -> String {
    let mut out = String::new();
    write_box(&mut out, d);
    out
}

fn write_box(out: &mut String, d: &Drs) {
    out.push_str("drs([");
    for (i, r) in d.referents().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(r.as_str());
    }
    out.push_str("],[");
    for (i, c) in d.conditions().iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_condition(out, c);
    }
    out.push_str("])");
}

pub(crate) fn write_condition(out: &mut String, c: &Condition) {
    match c {
        Condition::Pred {
            referent,
            lemma,
            pos,
            sense,
        } => {
            let _ = write!(out, "pred({referent},{lemma},{},{sense})", pos.tag());
        }
        Condition::Named {
            referent,
            name,
            class,
        } => {
            let _ = write!(out, "named({referent},{name},{})", class.tag());
        }
        Condition::Rel { from, to, label } => {
            let _ = write!(out, "rel({from},{to},{label})");
        }
        Condition::Eq(a, b) => {
            let _ = write!(out, "eq({a},{b})");
        }
        Condition::Not(k) => {
            out.push_str("not(");
            write_box(out, k);
            out.push(')');
        }
        Condition::Pos(k) => {
            out.push_str("pos(");
            write_box(out, k);
            out.push(')');
        }
        Condition::Imp(a, b) => {
            out.push_str("imp(");
            write_box(out, a);
            out.push(',');
            write_box(out, b);
            out.push(')');
        }
        Condition::Or(a, b) => {
            out.push_str("or(");
            write_box(out, a);
            out.push(',');
            write_box(out, b);
            out.push(')');
        }
        Condition::Whq(x, k) => {
            let _ = write!(out, "whq({x},");
            write_box(out, k);
            out.push(')');
        }
    }
}

/// Canonical text of a single condition.
pub fn serialize_condition(c: &Condition) -> String {
    let mut out = String::new();
    write_condition(&mut out, c);
    out
}

/// Indented rendering for debugging (`--pretty`). Still parseable, never
/// canonical.
pub fn pretty_drs(d: &Drs) -> String {
    let mut out = String::new();
    pretty_box(&mut out, d, 0);
    out
}

fn pretty_box(out: &mut String, d: &Drs, indent: usize) {
    let pad = "  ".repeat(indent);
    let refs: Vec<_> = d.referents().iter().map(Referent::as_str).collect();
    let _ = write!(out, "drs([{}],[", refs.join(", "));
    if d.conditions().is_empty() {
        out.push_str("])");
        return;
    }
    for (i, c) in d.conditions().iter().enumerate() {
        out.push('\n');
        out.push_str(&pad);
        out.push_str("  ");
        match c {
            Condition::Not(k) | Condition::Pos(k) => {
                out.push_str(if matches!(c, Condition::Not(_)) { "not(" } else { "pos(" });
                pretty_box(out, k, indent + 1);
                out.push(')');
            }
            Condition::Imp(a, b) | Condition::Or(a, b) => {
                out.push_str(if matches!(c, Condition::Imp(..)) { "imp(" } else { "or(" });
                pretty_box(out, a, indent + 1);
                out.push_str(", ");
                pretty_box(out, b, indent + 1);
                out.push(')');
            }
            Condition::Whq(x, k) => {
                let _ = write!(out, "whq({x}, ");
                pretty_box(out, k, indent + 1);
                out.push(')');
            }
            atomic => write_condition(out, atomic),
        }
        if i + 1 < d.conditions().len() {
            out.push(',');
        }
    }
    out.push('\n');
    out.push_str(&pad);
    out.push_str("])");
}

/// An ordered collection of identified DRSs, stored as `.drs` files.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DrsDocument {
    items: Vec<(String, Drs)>,
}

impl DrsDocument {
    pub fn new(items: Vec<(String, Drs)>) -> Result<Self, TextError> {
        let mut seen = BTreeSet::new();
        for (id, _) in &items {
            if !seen.insert(id.as_str()) {
                return Err(TextError::DuplicateId(id.clone()));
            }
        }
        Ok(DrsDocument { items })
    }

    pub fn items(&self) -> &[(String, Drs)] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&Drs> {
        self.items.iter().find(|(i, _)| i == id).map(|(_, d)| d)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Parses a `.drs` document: `# id` header lines, each followed by one DRS
/// (which may span lines), items separated by blank lines.
pub fn parse_document(text: &str) -> Result<DrsDocument, TextError> {
    let mut items: Vec<(String, Drs)> = Vec::new();
    let mut seen = BTreeSet::new();
    let lines: Vec<&str> = text.split('\n').collect();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        if line.trim().is_empty() {
            i += 1;
            continue;
        }
        let Some(id) = line.strip_prefix('#') else {
            return Err(TextError::Syntax {
                line: i + 1,
                column: 1,
                expected: "`# id` header".into(),
            });
        };
        let id = id.trim();
        if id.is_empty() {
            return Err(TextError::Syntax {
                line: i + 1,
                column: 2,
                expected: "document id".into(),
            });
        }
        if !seen.insert(id.to_string()) {
            return Err(TextError::DuplicateId(id.to_string()));
        }
        let start = i + 1;
        let mut end = start;
        while end < lines.len() && !lines[end].trim().is_empty() && !lines[end].starts_with('#') {
            end += 1;
        }
        let body = lines[start..end].join("\n");
        let mut cur = Cursor::at(&body, start + 1, 1);
        if cur.at_end() {
            return Err(cur.error("DRS"));
        }
        let d = parse_box(&mut cur)?;
        if !cur.at_end() {
            return Err(cur.error("end of item"));
        }
        items.push((id.to_string(), d));
        i = end;
    }
    Ok(DrsDocument { items })
}

pub fn serialize_document(doc: &DrsDocument) -> String {
    doc.items
        .iter()
        .map(|(id, d)| format!("# {id}\n{}\n", serialize_drs(d)))
        .collect::<Vec<_>>()
        .join("\n")
}
