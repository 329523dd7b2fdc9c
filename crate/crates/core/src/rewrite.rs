//! Label-gated pattern rewriting over DRS condition multisets.
//!
//! A rule file is a sequence of rules:
//!
//! ```text
//! rule NAME:
//! when LABEL, LABEL        # optional gate
//! fresh ?v, ?w             # optional fresh referents
//! match PAT, PAT
//! replace PAT, PAT         # or `replace nothing`
//! ```
//!
//! Patterns use the condition notation of [`crate::text`] with `?name`
//! metavariables allowed in referent, lemma and number slots. A complex
//! pattern such as `pos(drs([?e],[pred(?e,teach,v,?s)]))` matches a
//! condition of the same operator whose box declares the listed referents
//! and contains the listed conditions (among possibly others).
//!
//! ```
//! use nl2cnl::rewrite::{apply_rules, parse_rules};
//! use nl2cnl::text::{parse_drs, serialize_drs};
//! use std::collections::BTreeSet;
//!
//! let rules = parse_rules("rule r1:\nmatch pred(?x,guy,n,?s)\nreplace pred(?x,man,n,?s)\n").unwrap();
//! let d = parse_drs("drs([x1],[pred(x1,guy,n,0)])").unwrap();
//! let (out, trace) = apply_rules(&rules, &d, &BTreeSet::new(), 1000).unwrap();
//! assert_eq!(serialize_drs(&out), "drs([x1],[pred(x1,man,n,0)])");
//! assert_eq!(trace.steps.len(), 1);
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::classifier::{ReductionLabel, UnknownLabel};
use crate::drs::{BoxPath, Condition, Drs, EntityClass, Lemma, Pos, Referent};
use crate::text::{serialize_condition, Cursor, TextError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("rule file line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("rule `{rule}`: replacement variable `?{var}` is neither matched nor fresh")]
    UnboundReplacementVar { rule: String, var: String },
    #[error("rule `{rule}`: fresh variable `?{var}` also occurs in the match")]
    FreshClash { rule: String, var: String },
    #[error("rule `{rule}`: variable `?{var}` is used in more than one role")]
    RoleConflict { rule: String, var: String },
    #[error("rewriting did not reach a fixpoint within {0} applications")]
    IterationBudgetExceeded(usize),
    #[error("rule `{0}` produced an improper DRS")]
    ImproperResult(String),
    #[error("input DRS is not proper")]
    ImproperInput,
    #[error("trace step {0} does not apply to the DRS")]
    ReplayMismatch(usize),
}

/// A literal or a metavariable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot<T> {
    Lit(T),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatBox {
    pub referents: Vec<Slot<Referent>>,
    pub conditions: Vec<Pattern>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Pred {
        referent: Slot<Referent>,
        lemma: Slot<Lemma>,
        pos: Pos,
        sense: Slot<u64>,
    },
    Named {
        referent: Slot<Referent>,
        name: Slot<Lemma>,
        class: EntityClass,
    },
    Rel {
        from: Slot<Referent>,
        to: Slot<Referent>,
        label: Slot<Lemma>,
    },
    Eq(Slot<Referent>, Slot<Referent>),
    Not(PatBox),
    Pos(PatBox),
    Imp(PatBox, PatBox),
    Or(PatBox, PatBox),
    Whq(Slot<Referent>, PatBox),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Ref,
    Lemma,
    Nat,
}

/// Value bound to a metavariable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Value {
    Ref(Referent),
    Lemma(Lemma),
    Nat(u64),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Ref(r) => write!(f, "{r}"),
            Value::Lemma(l) => write!(f, "{l}"),
            Value::Nat(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub type Bindings = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub name: String,
    pub gate: BTreeSet<ReductionLabel>,
    pub fresh: Vec<String>,
    pub matches: Vec<Pattern>,
    pub replace: Vec<Pattern>,
}

impl RewriteRule {
    /// Gate is empty or contained in `labels`.
    pub fn is_active(&self, labels: &BTreeSet<ReductionLabel>) -> bool {
        self.gate.is_subset(labels)
    }

    pub fn is_lossy(&self) -> bool {
        self.replace.is_empty()
    }
}

// ---------------------------------------------------------------- parsing

fn slot<'a, T>(
    cur: &mut Cursor<'a>,
    lit: impl FnOnce(&mut Cursor<'a>) -> Result<T, TextError>,
) -> Result<Slot<T>, TextError> {
    if cur.try_eat("?") {
        let save = cur.clone();
        let name = cur.word();
        if name.is_empty() {
            return Err(save.error("metavariable name"));
        }
        Ok(Slot::Var(name.to_string()))
    } else {
        lit(cur).map(Slot::Lit)
    }
}

fn ref_slot(cur: &mut Cursor<'_>) -> Result<Slot<Referent>, TextError> {
    slot(cur, Cursor::referent)
}

fn lemma_slot(cur: &mut Cursor<'_>) -> Result<Slot<Lemma>, TextError> {
    slot(cur, Cursor::lemma)
}

fn parse_patbox(cur: &mut Cursor<'_>) -> Result<PatBox, TextError> {
    let save = cur.clone();
    if cur.word() != "drs" || !cur.try_eat("(") {
        return Err(save.error("`drs(`"));
    }
    let referents = cur.list(ref_slot)?;
    cur.expect(",")?;
    let conditions = cur.list(parse_pattern)?;
    cur.expect(")")?;
    Ok(PatBox {
        referents,
        conditions,
    })
}

fn parse_pattern(cur: &mut Cursor<'_>) -> Result<Pattern, TextError> {
    let save = cur.clone();
    let head = cur.word();
    if !cur.try_eat("(") {
        return Err(save.error("pattern"));
    }
    let p = match head {
        "pred" => {
            let referent = ref_slot(cur)?;
            cur.expect(",")?;
            let lemma = lemma_slot(cur)?;
            cur.expect(",")?;
            let pos = cur.pos_tag()?;
            cur.expect(",")?;
            let sense = slot(cur, Cursor::nat)?;
            Pattern::Pred {
                referent,
                lemma,
                pos,
                sense,
            }
        }
        "named" => {
            let referent = ref_slot(cur)?;
            cur.expect(",")?;
            let name = lemma_slot(cur)?;
            cur.expect(",")?;
            let class = cur.class_tag()?;
            Pattern::Named {
                referent,
                name,
                class,
            }
        }
        "rel" => {
            let from = ref_slot(cur)?;
            cur.expect(",")?;
            let to = ref_slot(cur)?;
            cur.expect(",")?;
            let label = lemma_slot(cur)?;
            Pattern::Rel { from, to, label }
        }
        "eq" => {
            let a = ref_slot(cur)?;
            cur.expect(",")?;
            Pattern::Eq(a, ref_slot(cur)?)
        }
        "not" => Pattern::Not(parse_patbox(cur)?),
        "pos" => Pattern::Pos(parse_patbox(cur)?),
        "imp" => {
            let a = parse_patbox(cur)?;
            cur.expect(",")?;
            Pattern::Imp(a, parse_patbox(cur)?)
        }
        "or" => {
            let a = parse_patbox(cur)?;
            cur.expect(",")?;
            Pattern::Or(a, parse_patbox(cur)?)
        }
        "whq" => {
            let x = ref_slot(cur)?;
            cur.expect(",")?;
            Pattern::Whq(x, parse_patbox(cur)?)
        }
        _ => return Err(save.error("pattern")),
    };
    cur.expect(")")?;
    Ok(p)
}

fn syntax(e: TextError) -> RewriteError {
    match e {
        TextError::Syntax {
            line,
            column,
            expected,
        } => RewriteError::Syntax {
            line,
            message: format!("column {column}: expected {expected}"),
        },
        other => RewriteError::Syntax {
            line: 0,
            message: other.to_string(),
        },
    }
}

fn parse_patlist(body: &str, line: usize, col: usize) -> Result<Vec<Pattern>, RewriteError> {
    if body.trim() == "nothing" {
        return Ok(Vec::new());
    }
    let mut cur = Cursor::at(body, line, col);
    let mut out = vec![parse_pattern(&mut cur).map_err(syntax)?];
    while cur.try_eat(",") {
        out.push(parse_pattern(&mut cur).map_err(syntax)?);
    }
    if !cur.at_end() {
        return Err(syntax(cur.error("`,` or end of line")));
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(a, _)| a).trim_end()
}

/// Parses a rule file and validates metavariable usage.
pub fn parse_rules(text: &str) -> Result<Vec<RewriteRule>, RewriteError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l)))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let mut rules = Vec::new();
    let mut i = 0;
    let err = |line: usize, message: &str| RewriteError::Syntax {
        line,
        message: message.to_string(),
    };
    while i < lines.len() {
        let (ln, line) = lines[i];
        let name = line
            .trim()
            .strip_prefix("rule ")
            .and_then(|r| r.strip_suffix(':'))
            .map(str::trim)
            .filter(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'))
            .ok_or_else(|| err(ln, "expected `rule NAME:`"))?
            .to_string();
        i += 1;
        let mut keyword = |kw: &str| take_keyword(&lines, &mut i, kw);
        let gate = match keyword("when") {
            Some((ln, rest, _)) => {
                let labels = rest
                    .split(',')
                    .map(|l| l.trim().parse::<ReductionLabel>())
                    .collect::<Result<BTreeSet<_>, UnknownLabel>>()
                    .map_err(|e| err(ln, &e.to_string()))?;
                labels
            }
            None => BTreeSet::new(),
        };
        let fresh = match keyword("fresh") {
            Some((ln, rest, _)) => rest
                .split(',')
                .map(|v| {
                    v.trim()
                        .strip_prefix('?')
                        .filter(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
                        .map(String::from)
                        .ok_or_else(|| err(ln, "expected `?name`"))
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        let (mln, mbody, mcol) = keyword("match").ok_or_else(|| err(ln + 1, "expected `match`"))?;
        let matches = parse_patlist(&mbody, mln, mcol)?;
        if matches.is_empty() {
            return Err(err(mln, "match list must not be empty"));
        }
        let (rln, rbody, rcol) = keyword("replace").ok_or_else(|| err(mln + 1, "expected `replace`"))?;
        let replace = parse_patlist(&rbody, rln, rcol)?;
        let rule = RewriteRule {
            name,
            gate,
            fresh,
            matches,
            replace,
        };
        validate(&rule)?;
        rules.push(rule);
    }
    Ok(rules)
}

/// Consumes the next line if it starts with keyword `kw`; returns its line
/// number, the text after the keyword and that text's column.
fn take_keyword(lines: &[(usize, &str)], i: &mut usize, kw: &str) -> Option<(usize, String, usize)> {
    let (ln, line) = *lines.get(*i)?;
    let trimmed = line.trim_start();
    let rest = trimmed.strip_prefix(kw)?;
    if !rest.starts_with(char::is_whitespace) {
        return None;
    }
    *i += 1;
    let col = line.len() - rest.len() + 1;
    Some((ln, rest.to_string(), col))
}

fn collect_vars(p: &Pattern, out: &mut Vec<(String, Role)>) {
    fn s<T>(sl: &Slot<T>, role: Role, out: &mut Vec<(String, Role)>) {
        if let Slot::Var(v) = sl {
            out.push((v.clone(), role));
        }
    }
    fn b(pb: &PatBox, out: &mut Vec<(String, Role)>) {
        for r in &pb.referents {
            s(r, Role::Ref, out);
        }
        for p in &pb.conditions {
            collect_vars(p, out);
        }
    }
    match p {
        Pattern::Pred {
            referent,
            lemma,
            sense,
            ..
        } => {
            s(referent, Role::Ref, out);
            s(lemma, Role::Lemma, out);
            s(sense, Role::Nat, out);
        }
        Pattern::Named { referent, name, .. } => {
            s(referent, Role::Ref, out);
            s(name, Role::Lemma, out);
        }
        Pattern::Rel { from, to, label } => {
            s(from, Role::Ref, out);
            s(to, Role::Ref, out);
            s(label, Role::Lemma, out);
        }
        Pattern::Eq(a, c) => {
            s(a, Role::Ref, out);
            s(c, Role::Ref, out);
        }
        Pattern::Not(k) | Pattern::Pos(k) => b(k, out),
        Pattern::Imp(x, y) | Pattern::Or(x, y) => {
            b(x, out);
            b(y, out);
        }
        Pattern::Whq(x, k) => {
            s(x, Role::Ref, out);
            b(k, out);
        }
    }
}

fn validate(rule: &RewriteRule) -> Result<(), RewriteError> {
    let mut vars = Vec::new();
    for p in rule.matches.iter().chain(&rule.replace) {
        collect_vars(p, &mut vars);
    }
    let mut roles: BTreeMap<&str, Role> = rule.fresh.iter().map(|f| (f.as_str(), Role::Ref)).collect();
    for (v, role) in &vars {
        if *roles.entry(v.as_str()).or_insert(*role) != *role {
            return Err(RewriteError::RoleConflict {
                rule: rule.name.clone(),
                var: v.clone(),
            });
        }
    }
    let mut bound = Vec::new();
    for p in &rule.matches {
        collect_vars(p, &mut bound);
    }
    let bound: BTreeSet<&str> = bound.iter().map(|(v, _)| v.as_str()).collect();
    for f in &rule.fresh {
        if bound.contains(f.as_str()) {
            return Err(RewriteError::FreshClash {
                rule: rule.name.clone(),
                var: f.clone(),
            });
        }
    }
    let mut used = Vec::new();
    for p in &rule.replace {
        collect_vars(p, &mut used);
    }
    for (v, _) in used {
        if !bound.contains(v.as_str()) && !rule.fresh.contains(&v) {
            return Err(RewriteError::UnboundReplacementVar {
                rule: rule.name.clone(),
                var: v,
            });
        }
    }
    Ok(())
}

// --------------------------------------------------------------- matching

fn bind(b: &mut Bindings, var: &str, v: Value) -> bool {
    match b.get(var) {
        Some(existing) => *existing == v,
        None => {
            b.insert(var.to_string(), v);
            true
        }
    }
}

fn unify<T: Clone + PartialEq>(
    slot: &Slot<T>,
    actual: &T,
    wrap: fn(T) -> Value,
    b: &mut Bindings,
) -> bool {
    match slot {
        Slot::Lit(l) => l == actual,
        Slot::Var(v) => bind(b, v, wrap(actual.clone())),
    }
}

fn unify_ref(s: &Slot<Referent>, r: &Referent, b: &mut Bindings) -> bool {
    unify(s, r, Value::Ref, b)
}

fn unify_lemma(s: &Slot<Lemma>, l: &Lemma, b: &mut Bindings) -> bool {
    unify(s, l, Value::Lemma, b)
}

/// All extensions of `b` under which `p` matches `c`.
fn match_cond(p: &Pattern, c: &Condition, b: &Bindings) -> Vec<Bindings> {
    let mut nb = b.clone();
    let atomic = |ok: bool, nb: Bindings| if ok { vec![nb] } else { vec![] };
    match (p, c) {
        (
            Pattern::Pred {
                referent,
                lemma,
                pos,
                sense,
            },
            Condition::Pred {
                referent: r,
                lemma: l,
                pos: cp,
                sense: s,
            },
        ) => {
            let ok = pos == cp
                && unify_ref(referent, r, &mut nb)
                && unify_lemma(lemma, l, &mut nb)
                && unify(sense, s, Value::Nat, &mut nb);
            atomic(ok, nb)
        }
        (
            Pattern::Named {
                referent,
                name,
                class,
            },
            Condition::Named {
                referent: r,
                name: n,
                class: cc,
            },
        ) => {
            let ok = class == cc && unify_ref(referent, r, &mut nb) && unify_lemma(name, n, &mut nb);
            atomic(ok, nb)
        }
        (Pattern::Rel { from, to, label }, Condition::Rel { from: f, to: t, label: l }) => {
            let ok = unify_ref(from, f, &mut nb) && unify_ref(to, t, &mut nb) && unify_lemma(label, l, &mut nb);
            atomic(ok, nb)
        }
        (Pattern::Eq(a, c2), Condition::Eq(x, y)) => {
            let ok = unify_ref(a, x, &mut nb) && unify_ref(c2, y, &mut nb);
            atomic(ok, nb)
        }
        (Pattern::Not(pk), Condition::Not(k)) | (Pattern::Pos(pk), Condition::Pos(k)) => {
            match_subbox(pk, k, b)
        }
        (Pattern::Imp(pa, pk), Condition::Imp(a, k)) | (Pattern::Or(pa, pk), Condition::Or(a, k)) => {
            match_subbox(pa, a, b)
                .iter()
                .flat_map(|b1| match_subbox(pk, k, b1))
                .collect()
        }
        (Pattern::Whq(px, pk), Condition::Whq(x, k)) => {
            if unify_ref(px, x, &mut nb) {
                match_subbox(pk, k, &nb)
            } else {
                vec![]
            }
        }
        _ => vec![],
    }
}

/// Box pattern against a box: listed referents are declared (injectively),
/// listed conditions occur (injectively).
fn match_subbox(pb: &PatBox, k: &Drs, b: &Bindings) -> Vec<Bindings> {
    let mut out = Vec::new();
    refs_then_conds(pb, k, 0, &mut Vec::new(), b, &mut out);
    out
}

fn refs_then_conds(
    pb: &PatBox,
    k: &Drs,
    i: usize,
    used: &mut Vec<usize>,
    b: &Bindings,
    out: &mut Vec<Bindings>,
) {
    if i == pb.referents.len() {
        for (nb, _) in match_conditions(&pb.conditions, k.conditions(), b) {
            out.push(nb);
        }
        return;
    }
    for (j, r) in k.referents().iter().enumerate() {
        if used.contains(&j) {
            continue;
        }
        let mut nb = b.clone();
        if unify_ref(&pb.referents[i], r, &mut nb) {
            used.push(j);
            refs_then_conds(pb, k, i + 1, used, &nb, out);
            used.pop();
        }
    }
}

/// Injective matches of `pats` into `conds`: (bindings, condition index per pattern).
fn match_conditions(pats: &[Pattern], conds: &[Condition], b: &Bindings) -> Vec<(Bindings, Vec<usize>)> {
    fn go(
        pats: &[Pattern],
        conds: &[Condition],
        b: &Bindings,
        pos: &mut Vec<usize>,
        out: &mut Vec<(Bindings, Vec<usize>)>,
    ) {
        let Some(p) = pats.get(pos.len()) else {
            out.push((b.clone(), pos.clone()));
            return;
        };
        for (j, c) in conds.iter().enumerate() {
            if pos.contains(&j) {
                continue;
            }
            for nb in match_cond(p, c, b) {
                pos.push(j);
                go(pats, conds, &nb, pos, out);
                pos.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(pats, conds, b, &mut Vec::new(), &mut out);
    out
}

/// One match of a rule: the box it occurs in, the bindings, and the indices
/// of the matched conditions in pattern order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub path: BoxPath,
    pub bindings: Bindings,
    pub positions: Vec<usize>,
}

/// All matches of `rule` in `d`, ordered by pre-order box position, then
/// bindings, then matched positions.
pub fn match_rule(rule: &RewriteRule, d: &Drs) -> Vec<Match> {
    let mut out = Vec::new();
    for (path, k) in d.boxes() {
        let mut here: Vec<_> = match_conditions(&rule.matches, k.conditions(), &Bindings::new())
            .into_iter()
            .map(|(bindings, positions)| Match {
                path: path.clone(),
                bindings,
                positions,
            })
            .collect();
        here.sort_by(|a, b| (&a.bindings, &a.positions).cmp(&(&b.bindings, &b.positions)));
        out.extend(here);
    }
    out
}

// ------------------------------------------------------------ application

fn serialize_conds<S: Serializer>(conds: &[Condition], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(conds.iter().map(serialize_condition))
}

fn serialize_path<S: Serializer>(p: &BoxPath, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(p)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RewriteStep {
    pub rule: String,
    #[serde(serialize_with = "serialize_path")]
    pub path: BoxPath,
    pub bindings: Bindings,
    pub positions: Vec<usize>,
    #[serde(serialize_with = "serialize_conds")]
    pub before: Vec<Condition>,
    #[serde(serialize_with = "serialize_conds")]
    pub after: Vec<Condition>,
    pub fresh: Vec<Referent>,
    /// Set for `replace nothing` deletions.
    pub lossy: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RewriteTrace {
    pub steps: Vec<RewriteStep>,
    /// Number of rule-scan passes, including the final one that found no match.
    pub iterations: usize,
}

impl RewriteTrace {
    pub fn is_lossy(&self) -> bool {
        self.steps.iter().any(|s| s.lossy)
    }
}

struct FreshNames {
    next: usize,
    taken: BTreeSet<Referent>,
}

impl FreshNames {
    fn new(d: &Drs) -> Self {
        let mut taken = BTreeSet::new();
        for (_, k) in d.boxes() {
            taken.extend(k.referents().iter().cloned());
            for c in k.conditions() {
                taken.extend(c.referents().into_iter().cloned());
            }
        }
        FreshNames { next: 1, taken }
    }

    fn take(&mut self) -> Referent {
        loop {
            let r = Referent::new(format!("f{}", self.next)).unwrap();
            self.next += 1;
            if self.taken.insert(r.clone()) {
                return r;
            }
        }
    }
}

struct Inst<'a> {
    b: &'a Bindings,
    fresh: &'a BTreeMap<String, Referent>,
}

impl Inst<'_> {
    fn value(&self, v: &str) -> &Value {
        &self.b[v]
    }

    fn referent(&self, s: &Slot<Referent>) -> Referent {
        match s {
            Slot::Lit(r) => r.clone(),
            Slot::Var(v) => match self.fresh.get(v) {
                Some(r) => r.clone(),
                None => match self.value(v) {
                    Value::Ref(r) => r.clone(),
                    other => unreachable!("role checked at parse time: {other}"),
                },
            },
        }
    }

    fn lemma(&self, s: &Slot<Lemma>) -> Lemma {
        match s {
            Slot::Lit(l) => l.clone(),
            Slot::Var(v) => match self.value(v) {
                Value::Lemma(l) => l.clone(),
                other => unreachable!("role checked at parse time: {other}"),
            },
        }
    }

    fn nat(&self, s: &Slot<u64>) -> u64 {
        match s {
            Slot::Lit(n) => *n,
            Slot::Var(v) => match self.value(v) {
                Value::Nat(n) => *n,
                other => unreachable!("role checked at parse time: {other}"),
            },
        }
    }

    fn boxed(&self, pb: &PatBox) -> Result<Drs, ()> {
        let refs = pb.referents.iter().map(|r| self.referent(r)).collect();
        let conds = pb.conditions.iter().map(|p| self.cond(p)).collect::<Result<_, _>>()?;
        Drs::new(refs, conds).map_err(|_| ())
    }

    fn cond(&self, p: &Pattern) -> Result<Condition, ()> {
        Ok(match p {
            Pattern::Pred {
                referent,
                lemma,
                pos,
                sense,
            } => Condition::pred(self.referent(referent), self.lemma(lemma), *pos, self.nat(sense)),
            Pattern::Named {
                referent,
                name,
                class,
            } => Condition::named(self.referent(referent), self.lemma(name), *class),
            Pattern::Rel { from, to, label } => {
                Condition::rel(self.referent(from), self.referent(to), self.lemma(label))
            }
            Pattern::Eq(a, b) => Condition::Eq(self.referent(a), self.referent(b)),
            Pattern::Not(k) => Condition::Not(self.boxed(k)?),
            Pattern::Pos(k) => Condition::Pos(self.boxed(k)?),
            Pattern::Imp(a, k) => Condition::Imp(self.boxed(a)?, self.boxed(k)?),
            Pattern::Or(a, k) => Condition::Or(self.boxed(a)?, self.boxed(k)?),
            Pattern::Whq(x, k) => Condition::Whq(self.referent(x), self.boxed(k)?),
        })
    }
}

fn declared_in_patterns(pats: &[Pattern], out: &mut BTreeSet<String>) {
    for p in pats {
        let boxes: Vec<&PatBox> = match p {
            Pattern::Not(k) | Pattern::Pos(k) | Pattern::Whq(_, k) => vec![k],
            Pattern::Imp(a, k) | Pattern::Or(a, k) => vec![a, k],
            _ => vec![],
        };
        for pb in boxes {
            for r in &pb.referents {
                if let Slot::Var(v) = r {
                    out.insert(v.clone());
                }
            }
            declared_in_patterns(&pb.conditions, out);
        }
    }
}

/// Applies one step to `d` in place (used by both rewriting and replay).
fn splice(d: &mut Drs, path: &BoxPath, positions: &[usize], after: &[Condition], fresh_top: &[Referent]) {
    let k = d.sub_box_mut(path).expect("match path exists");
    let at = *positions.iter().min().expect("non-empty match");
    let mut sorted = positions.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let conds = k.conditions_mut();
    for i in sorted {
        conds.remove(i);
    }
    for (off, c) in after.iter().enumerate() {
        conds.insert(at + off, c.clone());
    }
    k.referents_mut().extend(fresh_top.iter().cloned());
}

fn apply_match(
    d: &mut Drs,
    rule: &RewriteRule,
    m: Match,
    names: &mut FreshNames,
) -> Result<RewriteStep, RewriteError> {
    let fresh: BTreeMap<String, Referent> = rule.fresh.iter().map(|v| (v.clone(), names.take())).collect();
    let inst = Inst {
        b: &m.bindings,
        fresh: &fresh,
    };
    let after: Vec<Condition> = rule
        .replace
        .iter()
        .map(|p| inst.cond(p))
        .collect::<Result<_, _>>()
        .map_err(|_| RewriteError::ImproperResult(rule.name.clone()))?;
    let mut nested = BTreeSet::new();
    declared_in_patterns(&rule.replace, &mut nested);
    let fresh_top: Vec<Referent> = rule
        .fresh
        .iter()
        .filter(|v| !nested.contains(*v))
        .map(|v| fresh[v].clone())
        .collect();
    let k = d.sub_box(&m.path).expect("match path exists");
    if fresh_top.iter().any(|r| k.declares(r)) {
        return Err(RewriteError::ImproperResult(rule.name.clone()));
    }
    let before: Vec<Condition> = m.positions.iter().map(|&i| k.conditions()[i].clone()).collect();
    splice(d, &m.path, &m.positions, &after, &fresh_top);
    Ok(RewriteStep {
        rule: rule.name.clone(),
        path: m.path,
        bindings: m.bindings,
        positions: m.positions,
        before,
        after,
        fresh: fresh_top,
        lossy: rule.is_lossy(),
    })
}

/// Rewrites `d` to a fixpoint.
///
/// Rules are scanned in order; the first active rule with a match is applied
/// to its first match and the scan restarts. Fails once a rewrite beyond
/// `max_iterations` applications would be needed.
pub fn apply_rules(
    rules: &[RewriteRule],
    d: &Drs,
    labels: &BTreeSet<ReductionLabel>,
    max_iterations: usize,
) -> Result<(Drs, RewriteTrace), RewriteError> {
    if !d.is_proper() {
        return Err(RewriteError::ImproperInput);
    }
    let active: Vec<&RewriteRule> = rules.iter().filter(|r| r.is_active(labels)).collect();
    let mut cur = d.clone();
    let mut trace = RewriteTrace::default();
    let mut names = FreshNames::new(d);
    loop {
        trace.iterations += 1;
        let hit = active
            .iter()
            .find_map(|r| match_rule(r, &cur).into_iter().next().map(|m| (*r, m)));
        let Some((rule, m)) = hit else {
            return Ok((cur, trace));
        };
        if trace.steps.len() >= max_iterations {
            return Err(RewriteError::IterationBudgetExceeded(max_iterations));
        }
        let step = apply_match(&mut cur, rule, m, &mut names)?;
        if !cur.is_proper() {
            return Err(RewriteError::ImproperResult(rule.name.clone()));
        }
        trace.steps.push(step);
    }
}

/// Re-applies recorded steps to `d` without consulting any rules.
pub fn replay(d: &Drs, trace: &RewriteTrace) -> Result<Drs, RewriteError> {
    let mut cur = d.clone();
    for (i, s) in trace.steps.iter().enumerate() {
        let k = cur.sub_box(&s.path).ok_or(RewriteError::ReplayMismatch(i))?;
        let fits = !s.positions.is_empty()
            && s.positions.len() == s.before.len()
            && s
                .positions
                .iter()
                .zip(&s.before)
                .all(|(&p, c)| k.conditions().get(p) == Some(c));
        if !fits {
            return Err(RewriteError::ReplayMismatch(i));
        }
        splice(&mut cur, &s.path, &s.positions, &s.after, &s.fresh);
    }
    Ok(cur)
}

/// The rule file shipped with the crate.
pub const SHIPPED_RULES: &str = include_str!("../data/default.rules");
