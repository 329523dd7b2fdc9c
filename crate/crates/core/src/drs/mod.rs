//! Discourse Representation Structures.
//!
//! A [`Drs`] is a box of discourse referents plus an ordered list of
//! [`Condition`]s. Every stage of the pipeline consumes and produces values of
//! this type. All values are immutable once built; the operations here are
//! pure functions.
//!
//! Accessibility follows the usual DRT rule: from inside box `K` the
//! referents declared in `K`, in every ancestor box, and (when `K` is the
//! consequent of an implication) in the matching antecedent are accessible.
//! Antecedents, the inner boxes of negation, possibility and disjunction,
//! and question bodies export nothing outward. A question `whq(x, K)` binds
//! `x` over `K`.

mod alpha;
mod scope;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use alpha::alpha_equivalent;
pub use scope::{declared_names, free_referents, is_proper};

/// Errors raised when constructing or combining DRS values.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DrsError {
    #[error("duplicate referent `{0}` in one box")]
    DuplicateReferent(String),
    #[error("referent `{0}` is declared on both sides of a merge")]
    ReferentClash(String),
    #[error("DRS is not proper; free referents: {0:?}")]
    ImproperDrs(Vec<String>),
    #[error("invalid referent name `{0}`")]
    InvalidReferent(String),
    #[error("invalid lemma `{0}`")]
    InvalidLemma(String),
}

fn is_ident(s: &str, allow_underscore: bool) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || (allow_underscore && c == '_'))
}

/// A discourse referent name, `[a-z][a-z0-9]*`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Referent(String);

impl Referent {
    pub fn new(name: impl Into<String>) -> Result<Self, DrsError> {
        let name = name.into();
        if is_ident(&name, false) {
            Ok(Referent(name))
        } else {
            Err(DrsError::InvalidReferent(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Referent {
    type Error = DrsError;
    fn try_from(s: String) -> Result<Self, DrsError> {
        Referent::new(s)
    }
}

impl From<Referent> for String {
    fn from(r: Referent) -> String {
        r.0
    }
}

impl FromStr for Referent {
    type Err = DrsError;
    fn from_str(s: &str) -> Result<Self, DrsError> {
        Referent::new(s)
    }
}

impl fmt::Display for Referent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A lowercase symbol, `[a-z][a-z_0-9]*`: predicate lemmas, relation labels
/// and entity names all share this token class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Lemma(String);

impl Lemma {
    pub fn new(s: impl Into<String>) -> Result<Self, DrsError> {
        let s = s.into();
        if is_ident(&s, true) {
            Ok(Lemma(s))
        } else {
            Err(DrsError::InvalidLemma(s))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Lemma {
    type Error = DrsError;
    fn try_from(s: String) -> Result<Self, DrsError> {
        Lemma::new(s)
    }
}

impl From<Lemma> for String {
    fn from(l: Lemma) -> String {
        l.0
    }
}

impl FromStr for Lemma {
    type Err = DrsError;
    fn from_str(s: &str) -> Result<Self, DrsError> {
        Lemma::new(s)
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Part of speech carried by a grounded predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    #[serde(rename = "n")]
    Noun,
    #[serde(rename = "v")]
    Verb,
    #[serde(rename = "a")]
    Adjective,
    #[serde(rename = "r")]
    Adverb,
}

impl Pos {
    pub const ALL: [Pos; 4] = [Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb];

    pub fn tag(self) -> &'static str {
        match self {
            Pos::Noun => "n",
            Pos::Verb => "v",
            Pos::Adjective => "a",
            Pos::Adverb => "r",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Pos> {
        Pos::ALL.into_iter().find(|p| p.tag() == tag)
    }
}

/// Named-entity class. The set is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityClass {
    Per,
    Org,
    Loc,
    Tim,
    Obj,
}

impl EntityClass {
    pub const ALL: [EntityClass; 5] = [
        EntityClass::Per,
        EntityClass::Org,
        EntityClass::Loc,
        EntityClass::Tim,
        EntityClass::Obj,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EntityClass::Per => "per",
            EntityClass::Org => "org",
            EntityClass::Loc => "loc",
            EntityClass::Tim => "tim",
            EntityClass::Obj => "obj",
        }
    }

    pub fn from_tag(tag: &str) -> Option<EntityClass> {
        EntityClass::ALL.into_iter().find(|c| c.tag() == tag)
    }
}

/// Sense number reserved for unresolved pronoun placeholders.
pub const PRONOUN_SENSE: u64 = 9999;

/// A DRS condition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    Pred {
        referent: Referent,
        lemma: Lemma,
        pos: Pos,
        sense: u64,
    },
    Named {
        referent: Referent,
        name: Lemma,
        class: EntityClass,
    },
    Rel {
        from: Referent,
        to: Referent,
        label: Lemma,
    },
    Eq(Referent, Referent),
    Not(Drs),
    Pos(Drs),
    Imp(Drs, Drs),
    Or(Drs, Drs),
    Whq(Referent, Drs),
}

impl Condition {
    pub fn pred(referent: Referent, lemma: Lemma, pos: Pos, sense: u64) -> Self {
        Condition::Pred {
            referent,
            lemma,
            pos,
            sense,
        }
    }

    pub fn named(referent: Referent, name: Lemma, class: EntityClass) -> Self {
        Condition::Named {
            referent,
            name,
            class,
        }
    }

    pub fn rel(from: Referent, to: Referent, label: Lemma) -> Self {
        Condition::Rel { from, to, label }
    }

    /// True for the four non-recursive condition forms.
    pub fn is_atomic(&self) -> bool {
        matches!(
            self,
            Condition::Pred { .. } | Condition::Named { .. } | Condition::Rel { .. } | Condition::Eq(..)
        )
    }

    /// Referents this condition mentions directly (not inside sub-boxes).
    pub fn referents(&self) -> Vec<&Referent> {
        match self {
            Condition::Pred { referent, .. } | Condition::Named { referent, .. } => vec![referent],
            Condition::Rel { from, to, .. } => vec![from, to],
            Condition::Eq(a, b) => vec![a, b],
            Condition::Whq(x, _) => vec![x],
            _ => vec![],
        }
    }

    /// Sub-boxes in left-to-right order.
    pub fn boxes(&self) -> Vec<&Drs> {
        match self {
            Condition::Not(k) | Condition::Pos(k) | Condition::Whq(_, k) => vec![k],
            Condition::Imp(a, b) | Condition::Or(a, b) => vec![a, b],
            _ => vec![],
        }
    }

    pub(crate) fn boxes_mut(&mut self) -> Vec<&mut Drs> {
        match self {
            Condition::Not(k) | Condition::Pos(k) | Condition::Whq(_, k) => vec![k],
            Condition::Imp(a, b) | Condition::Or(a, b) => vec![a, b],
            _ => vec![],
        }
    }

    /// Renames every referent occurrence, including inside sub-boxes.
    pub fn rename(&self, f: &dyn Fn(&Referent) -> Referent) -> Condition {
        match self {
            Condition::Pred {
                referent,
                lemma,
                pos,
                sense,
            } => Condition::pred(f(referent), lemma.clone(), *pos, *sense),
            Condition::Named {
                referent,
                name,
                class,
            } => Condition::named(f(referent), name.clone(), *class),
            Condition::Rel { from, to, label } => Condition::rel(f(from), f(to), label.clone()),
            Condition::Eq(a, b) => Condition::Eq(f(a), f(b)),
            Condition::Not(k) => Condition::Not(k.rename(f)),
            Condition::Pos(k) => Condition::Pos(k.rename(f)),
            Condition::Imp(a, b) => Condition::Imp(a.rename(f), b.rename(f)),
            Condition::Or(a, b) => Condition::Or(a.rename(f), b.rename(f)),
            Condition::Whq(x, k) => Condition::Whq(f(x), k.rename(f)),
        }
    }
}

/// A discourse representation structure: referents plus conditions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Drs {
    referents: Vec<Referent>,
    conditions: Vec<Condition>,
}

impl Drs {
    /// Builds a box, rejecting repeated referent names. Order of both lists is
    /// kept as given.
    pub fn new(referents: Vec<Referent>, conditions: Vec<Condition>) -> Result<Self, DrsError> {
        let mut seen = BTreeSet::new();
        for r in &referents {
            if !seen.insert(r) {
                return Err(DrsError::DuplicateReferent(r.0.clone()));
            }
        }
        Ok(Drs {
            referents,
            conditions,
        })
    }

    pub fn empty() -> Self {
        Drs::default()
    }

    pub fn referents(&self) -> &[Referent] {
        &self.referents
    }

    pub fn conditions(&self) -> &[Condition] {
        &self.conditions
    }

    pub fn into_parts(self) -> (Vec<Referent>, Vec<Condition>) {
        (self.referents, self.conditions)
    }

    pub fn is_empty(&self) -> bool {
        self.referents.is_empty() && self.conditions.is_empty()
    }

    pub fn declares(&self, r: &Referent) -> bool {
        self.referents.contains(r)
    }

    pub fn free_referents(&self) -> BTreeSet<Referent> {
        free_referents(self)
    }

    pub fn is_proper(&self) -> bool {
        is_proper(self)
    }

    /// Errors with [`DrsError::ImproperDrs`] unless the box is proper.
    pub fn ensure_proper(&self) -> Result<(), DrsError> {
        let free = free_referents(self);
        if free.is_empty() {
            Ok(())
        } else {
            Err(DrsError::ImproperDrs(free.into_iter().map(|r| r.0).collect()))
        }
    }

    /// Concatenates two boxes whose declared names are disjoint at every depth.
    pub fn merge(&self, other: &Drs) -> Result<Drs, DrsError> {
        let left = declared_names(self);
        let right = declared_names(other);
        if let Some(clash) = left.intersection(&right).next() {
            return Err(DrsError::ReferentClash(clash.0.clone()));
        }
        let mut referents = self.referents.clone();
        referents.extend(other.referents.iter().cloned());
        let mut conditions = self.conditions.clone();
        conditions.extend(other.conditions.iter().cloned());
        Drs::new(referents, conditions)
    }

    /// Renames every referent, declared or used, at any depth.
    pub fn rename(&self, f: &dyn Fn(&Referent) -> Referent) -> Drs {
        Drs {
            referents: self.referents.iter().map(f).collect(),
            conditions: self.conditions.iter().map(|c| c.rename(f)).collect(),
        }
    }

    /// Follows a box path (see [`BoxPath`]) to a sub-box.
    pub fn sub_box(&self, path: &BoxPath) -> Option<&Drs> {
        let mut cur = self;
        for &(idx, child) in &path.0 {
            cur = *cur.conditions.get(idx)?.boxes().get(child)?;
        }
        Some(cur)
    }

    pub(crate) fn sub_box_mut(&mut self, path: &BoxPath) -> Option<&mut Drs> {
        let mut cur = self;
        for &(idx, child) in &path.0 {
            cur = cur.conditions.get_mut(idx)?.boxes_mut().into_iter().nth(child)?;
        }
        Some(cur)
    }

    pub(crate) fn referents_mut(&mut self) -> &mut Vec<Referent> {
        &mut self.referents
    }

    pub(crate) fn conditions_mut(&mut self) -> &mut Vec<Condition> {
        &mut self.conditions
    }

    /// Every box in depth-first pre-order, paired with its path from the root.
    pub fn boxes(&self) -> Vec<(BoxPath, &Drs)> {
        fn walk<'a>(d: &'a Drs, path: &mut Vec<(usize, usize)>, out: &mut Vec<(BoxPath, &'a Drs)>) {
            out.push((BoxPath(path.clone()), d));
            for (i, c) in d.conditions.iter().enumerate() {
                for (j, k) in c.boxes().into_iter().enumerate() {
                    path.push((i, j));
                    walk(k, path, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    /// All atomic conditions at any depth, in pre-order.
    pub fn atomic_conditions(&self) -> Vec<&Condition> {
        let mut out = Vec::new();
        for (_, b) in self.boxes() {
            out.extend(b.conditions.iter().filter(|c| c.is_atomic()));
        }
        out
    }

    /// Nesting depth: 1 for a box with no complex conditions.
    pub fn depth(&self) -> usize {
        1 + self
            .conditions
            .iter()
            .flat_map(|c| c.boxes())
            .map(Drs::depth)
            .max()
            .unwrap_or(0)
    }
}

/// Location of a box inside a DRS: a sequence of (condition index, child
/// index) steps from the root. The child index is 0 for single-box operators
/// and 0/1 for the antecedent/consequent (or left/right) of binary ones.
/// Lexicographic order on paths coincides with depth-first pre-order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct BoxPath(pub Vec<(usize, usize)>);

impl BoxPath {
    pub fn root() -> Self {
        BoxPath(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for BoxPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for (i, c) in &self.0 {
            write!(f, "/{i}.{c}")?;
        }
        Ok(())
    }
}

/// Convenience constructor mirroring the textual notation; panics on invalid
/// names. Intended for tests and examples.
pub fn referent(name: &str) -> Referent {
    Referent::new(name).expect("valid referent name")
}

/// See [`referent`].
pub fn lemma(s: &str) -> Lemma {
    Lemma::new(s).expect("valid lemma")
}
