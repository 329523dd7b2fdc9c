//! First-order translation, finite-model checking, question answering and
//! finite-domain constraint solving.
//!
//! ```
//! use nl2cnl::logic::{eval_model, parse_facts, to_fol};
//! use nl2cnl::text::parse_drs;
//!
//! let d = parse_drs(
//!     "drs([],[imp(drs([x1],[pred(x1,man,n,0)]),drs([e1],[pred(e1,walk,v,0),rel(e1,x1,agent)]))])",
//! )
//! .unwrap();
//! let (f, warnings) = to_fol(&d).unwrap();
//! assert_eq!(f.to_string(), "forall x1 (man_n(x1) -> exists e1 (walk_v(e1) & agent(e1,x1)))");
//! assert!(warnings.is_empty());
//!
//! let m = parse_facts("man_n(a).\nwalk_v(w).\nagent(w,a).\n").unwrap();
//! assert!(eval_model(&f, &m).unwrap());
//! ```

mod csp;
mod model;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::drs::{Condition, Drs};

pub use csp::{compile_csp, solve_csp, Assignment, BinaryConstraint, CspInstance, UnaryConstraint};
pub use model::{parse_facts, FiniteModel, Relation};

/// Default cap on the number of interpretations `satisfiable` may enumerate.
pub const DEFAULT_SEARCH_BOUND: u64 = 1 << 24;

pub const MODALITY_ERASED: &str = "modality-erased";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("DRS is not proper")]
    ImproperDrs,
    #[error("questions cannot be translated to a closed formula")]
    QuestionNotTranslatable,
    #[error("predicate `{predicate}` has arity {expected}, used with {got} argument(s)")]
    ArityMismatch {
        predicate: String,
        expected: usize,
        got: usize,
    },
    #[error("free variable `{0}`")]
    FreeVariable(String),
    #[error("constant `{0}` is not in the domain")]
    UnknownConstant(String),
    #[error("search space exceeds {0} interpretations")]
    SearchSpaceTooLarge(u64),
    #[error("not a question: expected exactly one top-level whq")]
    NotAQuestion,
    #[error("variable `{var}` has an empty domain (`{predicate}` has no instances)")]
    EmptyDomain { var: String, predicate: String },
    #[error("variable `{0}` has no typing noun")]
    UntypedVariable(String),
    #[error("unsupported in a constraint question: {0}")]
    Unsupported(String),
    #[error("constraint mentions undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("facts line {line}: {message}")]
    FactsFormat { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    /// Predicate application; the predicate `=` is identity.
    Atom { pred: String, args: Vec<Term> },
    And(Vec<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn atom(pred: &str, args: &[&str]) -> Formula {
        Formula::Atom {
            pred: pred.to_string(),
            args: args.iter().map(|a| Term::Var(a.to_string())).collect(),
        }
    }

    fn exists_all(vars: &[String], body: Formula) -> Formula {
        vars.iter()
            .rev()
            .fold(body, |acc, v| Formula::Exists(v.clone(), Box::new(acc)))
    }

    fn forall_all(vars: &[String], body: Formula) -> Formula {
        vars.iter()
            .rev()
            .fold(body, |acc, v| Formula::Forall(v.clone(), Box::new(acc)))
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match f {
                Formula::Atom { args, .. } => {
                    for a in args {
                        if let Term::Var(v) = a {
                            if !bound.contains(v) && !out.contains(v) {
                                out.push(v.clone());
                            }
                        }
                    }
                }
                Formula::And(fs) => fs.iter().for_each(|g| go(g, bound, out)),
                Formula::Or(a, b) | Formula::Implies(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                Formula::Not(a) => go(a, bound, out),
                Formula::Exists(v, b) | Formula::Forall(v, b) => {
                    bound.push(v.clone());
                    go(b, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Predicate names with arities (identity excluded).
    pub fn signature(&self) -> Result<BTreeMap<String, usize>, LogicError> {
        fn go(f: &Formula, out: &mut BTreeMap<String, usize>) -> Result<(), LogicError> {
            match f {
                Formula::Atom { pred, args } if pred != "=" => {
                    let arity = *out.entry(pred.clone()).or_insert(args.len());
                    if arity != args.len() {
                        return Err(LogicError::ArityMismatch {
                            predicate: pred.clone(),
                            expected: arity,
                            got: args.len(),
                        });
                    }
                    Ok(())
                }
                Formula::Atom { .. } => Ok(()),
                Formula::And(fs) => fs.iter().try_for_each(|g| go(g, out)),
                Formula::Or(a, b) | Formula::Implies(a, b) => {
                    go(a, out)?;
                    go(b, out)
                }
                Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => go(a, out),
            }
        }
        let mut out = BTreeMap::new();
        go(self, &mut out)?;
        Ok(out)
    }

    /// Constants in sorted order.
    pub fn constants(&self) -> BTreeSet<String> {
        fn go(f: &Formula, out: &mut BTreeSet<String>) {
            match f {
                Formula::Atom { args, .. } => {
                    for a in args {
                        if let Term::Const(c) = a {
                            out.insert(c.clone());
                        }
                    }
                }
                Formula::And(fs) => fs.iter().for_each(|g| go(g, out)),
                Formula::Or(a, b) | Formula::Implies(a, b) => {
                    go(a, out);
                    go(b, out);
                }
                Formula::Not(a) | Formula::Exists(_, a) | Formula::Forall(_, a) => go(a, out),
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut out);
        out
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand(g: &Formula, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match g {
                Formula::Atom { .. } | Formula::Not(_) | Formula::Exists(..) | Formula::Forall(..) => {
                    write!(f, "{g}")
                }
                Formula::And(fs) if fs.len() < 2 => write!(f, "{g}"),
                _ => write!(f, "({g})"),
            }
        }
        match self {
            Formula::Atom { pred, args } if pred == "=" && args.len() == 2 => {
                write!(f, "{} = {}", args[0], args[1])
            }
            Formula::Atom { pred, args } => {
                let args: Vec<String> = args.iter().map(Term::to_string).collect();
                write!(f, "{pred}({})", args.join(","))
            }
            Formula::And(fs) if fs.is_empty() => f.write_str("true"),
            Formula::And(fs) => {
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    operand(g, f)?;
                }
                Ok(())
            }
            Formula::Or(a, b) => {
                operand(a, f)?;
                f.write_str(" | ")?;
                operand(b, f)
            }
            Formula::Implies(a, b) => {
                operand(a, f)?;
                f.write_str(" -> ")?;
                operand(b, f)
            }
            Formula::Not(a) => {
                f.write_str("~")?;
                operand(a, f)
            }
            Formula::Exists(v, b) => {
                write!(f, "exists {v} ")?;
                operand(b, f)
            }
            Formula::Forall(v, b) => {
                write!(f, "forall {v} ")?;
                operand(b, f)
            }
        }
    }
}

fn conj(mut fs: Vec<Formula>) -> Formula {
    if fs.len() == 1 {
        fs.pop().unwrap()
    } else {
        Formula::And(fs)
    }
}

struct Translator {
    warnings: Vec<String>,
}

impl Translator {
    fn warn(&mut self, w: &str) {
        if !self.warnings.iter().any(|x| x == w) {
            self.warnings.push(w.to_string());
        }
    }

    fn conds(&mut self, d: &Drs) -> Result<Vec<Formula>, LogicError> {
        d.conditions().iter().map(|c| self.cond(c)).collect()
    }

    fn boxed(&mut self, d: &Drs) -> Result<Formula, LogicError> {
        let body = conj(self.conds(d)?);
        let vars: Vec<String> = d.referents().iter().map(|r| r.to_string()).collect();
        Ok(Formula::exists_all(&vars, body))
    }

    fn cond(&mut self, c: &Condition) -> Result<Formula, LogicError> {
        let v = |r: &crate::drs::Referent| Term::Var(r.to_string());
        Ok(match c {
            Condition::Pred {
                referent,
                lemma,
                pos,
                ..
            } => Formula::Atom {
                pred: format!("{lemma}_{}", pos.tag()),
                args: vec![v(referent)],
            },
            Condition::Named {
                referent,
                name,
                class,
            } => Formula::Atom {
                pred: format!("named_{}_{name}", class.tag()),
                args: vec![v(referent)],
            },
            Condition::Rel { from, to, label } => Formula::Atom {
                pred: label.to_string(),
                args: vec![v(from), v(to)],
            },
            Condition::Eq(a, b) => Formula::Atom {
                pred: "=".into(),
                args: vec![v(a), v(b)],
            },
            Condition::Not(k) => Formula::Not(Box::new(self.boxed(k)?)),
            Condition::Pos(k) => {
                self.warn(MODALITY_ERASED);
                self.boxed(k)?
            }
            Condition::Imp(a, k) => {
                let ante = conj(self.conds(a)?);
                let cons = self.boxed(k)?;
                let vars: Vec<String> = a.referents().iter().map(|r| r.to_string()).collect();
                Formula::forall_all(&vars, Formula::Implies(Box::new(ante), Box::new(cons)))
            }
            Condition::Or(a, k) => Formula::Or(Box::new(self.boxed(a)?), Box::new(self.boxed(k)?)),
            Condition::Whq(..) => return Err(LogicError::QuestionNotTranslatable),
        })
    }
}

/// Standard DRS-to-FOL translation. `pos` boxes are translated as their
/// content with a `modality-erased` warning.
pub fn to_fol(d: &Drs) -> Result<(Formula, Vec<String>), LogicError> {
    if !d.is_proper() {
        return Err(LogicError::ImproperDrs);
    }
    let mut t = Translator { warnings: Vec::new() };
    let f = t.boxed(d)?;
    Ok((f, t.warnings))
}

fn eval_in(f: &Formula, m: &FiniteModel, env: &mut HashMap<String, String>) -> Result<bool, LogicError> {
    Ok(match f {
        Formula::Atom { pred, args } => {
            let vals: Vec<String> = args
                .iter()
                .map(|a| match a {
                    Term::Const(c) => Ok(c.clone()),
                    Term::Var(v) => env.get(v).cloned().ok_or_else(|| LogicError::FreeVariable(v.clone())),
                })
                .collect::<Result<_, _>>()?;
            if pred == "=" {
                vals.windows(2).all(|w| w[0] == w[1])
            } else {
                match m.relation(pred) {
                    None => false,
                    Some(r) if r.arity != vals.len() => {
                        return Err(LogicError::ArityMismatch {
                            predicate: pred.clone(),
                            expected: r.arity,
                            got: vals.len(),
                        })
                    }
                    Some(r) => r.tuples.contains(&vals),
                }
            }
        }
        Formula::And(fs) => {
            for g in fs {
                if !eval_in(g, m, env)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(a, b) => eval_in(a, m, env)? || eval_in(b, m, env)?,
        Formula::Not(a) => !eval_in(a, m, env)?,
        Formula::Implies(a, b) => !eval_in(a, m, env)? || eval_in(b, m, env)?,
        Formula::Exists(v, b) | Formula::Forall(v, b) => {
            let universal = matches!(f, Formula::Forall(..));
            let saved = env.get(v).cloned();
            let mut result = universal;
            for d in m.domain() {
                env.insert(v.clone(), d.clone());
                if eval_in(b, m, env)? != universal {
                    result = !universal;
                    break;
                }
            }
            match saved {
                Some(s) => env.insert(v.clone(), s),
                None => env.remove(v),
            };
            result
        }
    })
}

/// Tarskian evaluation; uninterpreted predicates have empty extensions.
pub fn eval_model(f: &Formula, m: &FiniteModel) -> Result<bool, LogicError> {
    eval_in(f, m, &mut HashMap::new())
}

/// Evaluation under an initial assignment of free variables.
pub fn eval_with(f: &Formula, m: &FiniteModel, assignment: &[(String, String)]) -> Result<bool, LogicError> {
    let mut env = assignment.iter().cloned().collect();
    eval_in(f, m, &mut env)
}

/// Searches for a model of `f` with at most `max_domain` elements.
///
/// Domains are the constants of `f` padded with `d1, d2, ...`, tried in
/// ascending size. For each size, interpretations are enumerated as a binary
/// counter over all candidate tuples (predicates by name, tuples in
/// lexicographic order, first tuple least significant), so the empty
/// interpretation comes first. Fails with `SearchSpaceTooLarge` before
/// starting a size that would push the cumulative count past `bound`.
pub fn satisfiable(f: &Formula, max_domain: usize, bound: u64) -> Result<Option<FiniteModel>, LogicError> {
    if let Some(v) = f.free_vars().into_iter().next() {
        return Err(LogicError::FreeVariable(v));
    }
    let sig = f.signature()?;
    let consts: Vec<String> = f.constants().into_iter().collect();
    let mut spent: u64 = 0;
    for size in consts.len().max(1)..=max_domain {
        let mut domain = consts.clone();
        let mut k = 1;
        while domain.len() < size {
            let name = format!("d{k}");
            k += 1;
            if !domain.contains(&name) {
                domain.push(name);
            }
        }
        domain.sort();
        let slots: Vec<(String, Vec<String>)> = sig
            .iter()
            .flat_map(|(p, &arity)| tuples(&domain, arity).into_iter().map(move |t| (p.clone(), t)))
            .collect();
        let count = 1u64.checked_shl(slots.len() as u32).filter(|_| slots.len() < 64);
        let Some(total) = count.and_then(|c| spent.checked_add(c)).filter(|&t| t <= bound) else {
            return Err(LogicError::SearchSpaceTooLarge(bound));
        };
        for mask in 0..(total - spent) {
            let mut rels: BTreeMap<String, Relation> = sig
                .iter()
                .map(|(p, &arity)| {
                    (
                        p.clone(),
                        Relation {
                            arity,
                            tuples: BTreeSet::new(),
                        },
                    )
                })
                .collect();
            for (i, (p, t)) in slots.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    rels.get_mut(p).unwrap().tuples.insert(t.clone());
                }
            }
            let m = FiniteModel::new(domain.iter().cloned(), rels)?;
            if eval_model(f, &m)? {
                assert!(eval_model(f, &m)?, "returned model must satisfy the formula");
                return Ok(Some(m));
            }
        }
        spent = total;
    }
    Ok(None)
}

fn tuples(domain: &[String], arity: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t: Vec<String>| {
                domain.iter().map(move |d| {
                    let mut t = t.clone();
                    t.push(d.clone());
                    t
                })
            })
            .collect();
    }
    out
}

/// Result of a bounded entailment check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entailment {
    pub holds: bool,
    /// Domain-size bound under which no countermodel was found; entailment
    /// is only established up to this size.
    pub up_to: usize,
    pub countermodel: Option<FiniteModel>,
}

/// `premise` entails `conclusion` if no model of size ≤ `max_domain`
/// satisfies the premise and falsifies the conclusion.
pub fn entails(premise: &Formula, conclusion: &Formula, max_domain: usize, bound: u64) -> Result<Entailment, LogicError> {
    let f = Formula::And(vec![premise.clone(), Formula::Not(Box::new(conclusion.clone()))]);
    let countermodel = satisfiable(&f, max_domain, bound)?;
    Ok(Entailment {
        holds: countermodel.is_none(),
        up_to: max_domain,
        countermodel,
    })
}

/// Splits a question into its outer box (without the whq), the wh-referent
/// and its body.
pub(crate) fn split_question(q: &Drs) -> Result<(Drs, &crate::drs::Referent, &Drs), LogicError> {
    let whqs: Vec<usize> = q
        .conditions()
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c, Condition::Whq(..)))
        .map(|(i, _)| i)
        .collect();
    let [wi] = whqs[..] else {
        return Err(LogicError::NotAQuestion);
    };
    let Condition::Whq(x, k) = &q.conditions()[wi] else {
        unreachable!()
    };
    let mut conds = q.conditions().to_vec();
    conds.remove(wi);
    let outer = Drs::new(q.referents().to_vec(), conds).expect("same referents");
    Ok((outer, x, k))
}

/// Domain elements `d` such that the question body holds with the
/// wh-referent bound to `d`. Modality is erased.
pub fn answer_query(q: &Drs, m: &FiniteModel) -> Result<BTreeSet<String>, LogicError> {
    if !q.is_proper() {
        return Err(LogicError::ImproperDrs);
    }
    let (outer, x, k) = split_question(q)?;
    let mut t = Translator { warnings: Vec::new() };
    let mut parts = t.conds(&outer)?;
    parts.push(t.boxed(k)?);
    let vars: Vec<String> = outer.referents().iter().map(|r| r.to_string()).collect();
    let f = Formula::exists_all(&vars, conj(parts));
    let mut out = BTreeSet::new();
    for d in m.domain() {
        if eval_with(&f, m, &[(x.to_string(), d.clone())])? {
            out.insert(d.clone());
        }
    }
    Ok(out)
}
