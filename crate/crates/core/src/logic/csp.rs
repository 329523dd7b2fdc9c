//! Finite-domain CSPs compiled from questions, solved by chronological
//! backtracking with forward checking.

use std::collections::{BTreeMap, BTreeSet};

use crate::drs::{Condition, Drs, Pos, Referent};
use crate::frontend::introduction_order;

use super::{split_question, FiniteModel, LogicError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnaryConstraint {
    pub var: String,
    pub name: String,
    pub allowed: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryConstraint {
    pub first: String,
    pub second: String,
    pub name: String,
    pub allowed: BTreeSet<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CspInstance {
    variables: Vec<(String, Vec<String>)>,
    unary: Vec<UnaryConstraint>,
    binary: Vec<BinaryConstraint>,
    /// Constraints between two constants that the facts do not support.
    /// Any entry makes the instance unsatisfiable.
    failed_ground: Vec<String>,
}

/// Values in variable declaration order.
pub type Assignment = Vec<(String, String)>;

impl CspInstance {
    pub fn new(
        variables: Vec<(String, Vec<String>)>,
        unary: Vec<UnaryConstraint>,
        binary: Vec<BinaryConstraint>,
    ) -> Result<Self, LogicError> {
        let declared: BTreeSet<&str> = variables.iter().map(|(v, _)| v.as_str()).collect();
        if declared.len() != variables.len() {
            return Err(LogicError::Unsupported("duplicate variable".into()));
        }
        if let Some((v, _)) = variables.iter().find(|(_, d)| d.is_empty()) {
            return Err(LogicError::EmptyDomain {
                var: v.clone(),
                predicate: String::new(),
            });
        }
        let mentioned = unary
            .iter()
            .map(|u| &u.var)
            .chain(binary.iter().flat_map(|b| [&b.first, &b.second]));
        for v in mentioned {
            if !declared.contains(v.as_str()) {
                return Err(LogicError::UndeclaredVariable(v.clone()));
            }
        }
        Ok(CspInstance {
            variables,
            unary,
            binary,
            failed_ground: Vec::new(),
        })
    }

    pub fn variables(&self) -> &[(String, Vec<String>)] {
        &self.variables
    }

    pub fn unary(&self) -> &[UnaryConstraint] {
        &self.unary
    }

    pub fn binary(&self) -> &[BinaryConstraint] {
        &self.binary
    }

    pub fn failed_ground(&self) -> &[String] {
        &self.failed_ground
    }
}

enum End {
    Var(String),
    Const(String),
}

fn extension1(facts: &FiniteModel, name: &str) -> BTreeSet<String> {
    facts
        .extension(name)
        .filter(|t| t.len() == 1)
        .map(|t| t[0].clone())
        .collect()
}

fn extension2(facts: &FiniteModel, name: &str) -> BTreeSet<(String, String)> {
    facts
        .extension(name)
        .filter(|t| t.len() == 2)
        .map(|t| (t[0].clone(), t[1].clone()))
        .collect()
}

/// Collects the conditions of the question's boxes, flattening `pos` (whose
/// edges get the `can_` prefix). Negation, implication and disjunction are
/// rejected.
fn flatten<'a>(d: &'a Drs, modal: bool, out: &mut Vec<(&'a Condition, bool)>) -> Result<(), LogicError> {
    for c in d.conditions() {
        match c {
            Condition::Pos(k) => flatten(k, true, out)?,
            Condition::Not(_) => return Err(LogicError::Unsupported("negation".into())),
            Condition::Imp(..) => return Err(LogicError::Unsupported("implication".into())),
            Condition::Or(..) => return Err(LogicError::Unsupported("disjunction".into())),
            Condition::Whq(..) => return Err(LogicError::Unsupported("nested question".into())),
            Condition::Eq(..) => return Err(LogicError::Unsupported("equality".into())),
            _ => out.push((c, modal)),
        }
    }
    Ok(())
}

/// Compiles a question over ground facts into a CSP.
///
/// Variables are the wh-referent and the other entity referents, in order of
/// first mention. A variable's first noun predicate `l` types it with domain
/// `l_n`; further predicates become unary constraints. Proper names become
/// constants. Each event contributes one constraint per non-agent edge
/// between the agent and the edge target, named after the verb (`teach`
/// for the patient, `teach_on` for other edges, prefixed `can_` under
/// `pos`); an edge with one constant end becomes a unary constraint.
pub fn compile_csp(q: &Drs, facts: &FiniteModel) -> Result<CspInstance, LogicError> {
    if !q.is_proper() {
        return Err(LogicError::ImproperDrs);
    }
    let (outer, x, body) = split_question(q)?;
    let mut conds = Vec::new();
    flatten(&outer, false, &mut conds)?;
    flatten(body, false, &mut conds)?;

    let mut constants: BTreeMap<&Referent, String> = BTreeMap::new();
    let mut events: BTreeMap<&Referent, (String, bool)> = BTreeMap::new();
    for (c, modal) in &conds {
        match c {
            Condition::Named { referent, name, .. } => {
                constants.insert(referent, name.to_string());
            }
            Condition::Pred {
                referent,
                lemma,
                pos: Pos::Verb,
                ..
            } => {
                events.insert(referent, (lemma.to_string(), *modal));
            }
            _ => {}
        }
    }

    let order = introduction_order(q);
    let mut vars: Vec<&Referent> = std::iter::once(x)
        .chain(conds.iter().flat_map(|(c, _)| c.referents()))
        .filter(|r| !constants.contains_key(r) && !events.contains_key(r))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    vars.sort_by_key(|r| if *r == x { 0 } else { 1 + order.get(*r).copied().unwrap_or(usize::MAX - 1) });

    let end = |r: &Referent| match constants.get(r) {
        Some(c) => End::Const(c.clone()),
        None => End::Var(r.to_string()),
    };

    let mut variables = Vec::new();
    let mut unary = Vec::new();
    for v in &vars {
        let preds: Vec<String> = conds
            .iter()
            .filter_map(|(c, _)| match c {
                Condition::Pred {
                    referent,
                    lemma,
                    pos,
                    ..
                } if referent == *v => Some(format!("{lemma}_{}", pos.tag())),
                _ => None,
            })
            .collect();
        let typing = conds.iter().find_map(|(c, _)| match c {
            Condition::Pred {
                referent,
                lemma,
                pos: Pos::Noun,
                ..
            } if referent == *v => Some(format!("{lemma}_n")),
            _ => None,
        });
        let Some(typing) = typing else {
            return Err(LogicError::UntypedVariable(v.to_string()));
        };
        let domain: Vec<String> = extension1(facts, &typing).into_iter().collect();
        if domain.is_empty() {
            return Err(LogicError::EmptyDomain {
                var: v.to_string(),
                predicate: typing,
            });
        }
        variables.push((v.to_string(), domain));
        for name in preds.into_iter().filter(|p| *p != typing) {
            unary.push(UnaryConstraint {
                var: v.to_string(),
                allowed: extension1(facts, &name),
                name,
            });
        }
    }

    let mut binary = Vec::new();
    let mut failed_ground = Vec::new();
    let mut edge = |a: End, b: End, name: String| match (a, b) {
        (End::Var(a), End::Var(b)) => binary.push(BinaryConstraint {
            allowed: extension2(facts, &name),
            first: a,
            second: b,
            name,
        }),
        (End::Const(a), End::Var(b)) => unary.push(UnaryConstraint {
            var: b,
            allowed: extension2(facts, &name)
                .into_iter()
                .filter(|(x, _)| *x == a)
                .map(|(_, y)| y)
                .collect(),
            name,
        }),
        (End::Var(a), End::Const(b)) => unary.push(UnaryConstraint {
            var: a,
            allowed: extension2(facts, &name)
                .into_iter()
                .filter(|(_, y)| *y == b)
                .map(|(x, _)| x)
                .collect(),
            name,
        }),
        (End::Const(a), End::Const(b)) => {
            if !extension2(facts, &name).contains(&(a.clone(), b.clone())) {
                failed_ground.push(format!("{name}({a},{b})"));
            }
        }
    };

    for (c, _) in &conds {
        let Condition::Rel { from, to, label } = c else {
            continue;
        };
        if events.contains_key(to) {
            return Err(LogicError::Unsupported("event as an argument".into()));
        }
        match events.get(from) {
            None => edge(end(from), end(to), label.to_string()),
            Some((verb, modal)) => {
                if label.as_str() == "agent" {
                    continue;
                }
                let agents: Vec<&Referent> = conds
                    .iter()
                    .filter_map(|(c, _)| match c {
                        Condition::Rel { from: f, to, label } if f == from && label.as_str() == "agent" => Some(to),
                        _ => None,
                    })
                    .collect();
                let [agent] = agents[..] else {
                    return Err(LogicError::Unsupported(format!("event {from} needs exactly one agent")));
                };
                let mut name = if label.as_str() == "patient" {
                    verb.clone()
                } else {
                    format!("{verb}_{label}")
                };
                if *modal {
                    name = format!("can_{name}");
                }
                edge(end(agent), end(to), name);
            }
        }
    }

    let mut inst = CspInstance::new(variables, unary, binary)?;
    inst.failed_ground = failed_ground;
    Ok(inst)
}

/// All solutions, by backtracking over variables in declaration order and
/// values in domain order, pruning future domains after every assignment.
pub fn solve_csp(c: &CspInstance) -> Vec<Assignment> {
    if !c.failed_ground.is_empty() {
        return Vec::new();
    }
    let index: BTreeMap<&str, usize> = c.variables.iter().enumerate().map(|(i, (v, _))| (v.as_str(), i)).collect();
    // Node consistency first.
    let mut domains: Vec<Vec<String>> = c.variables.iter().map(|(_, d)| d.clone()).collect();
    for u in &c.unary {
        domains[index[u.var.as_str()]].retain(|v| u.allowed.contains(v));
    }
    let arcs: Vec<(usize, usize, &BinaryConstraint)> = c
        .binary
        .iter()
        .map(|b| (index[b.first.as_str()], index[b.second.as_str()], b))
        .collect();
    let mut out = Vec::new();
    let mut values = Vec::with_capacity(domains.len());
    search(0, &mut domains, &arcs, &mut values, &mut out);
    out.into_iter()
        .map(|vals| c.variables.iter().map(|(v, _)| v.clone()).zip(vals).collect())
        .collect()
}

fn search(
    i: usize,
    domains: &mut Vec<Vec<String>>,
    arcs: &[(usize, usize, &BinaryConstraint)],
    values: &mut Vec<String>,
    out: &mut Vec<Vec<String>>,
) {
    if i == domains.len() {
        out.push(values.clone());
        return;
    }
    for val in domains[i].clone() {
        let self_ok = arcs
            .iter()
            .filter(|(a, b, _)| *a == i && *b == i)
            .all(|(_, _, c)| c.allowed.contains(&(val.clone(), val.clone())));
        if !self_ok {
            continue;
        }
        let saved = domains.clone();
        let mut wiped = false;
        for (a, b, con) in arcs {
            let (other, val_first) = match (*a == i, *b == i) {
                (true, false) if *b > i => (*b, true),
                (false, true) if *a > i => (*a, false),
                _ => continue,
            };
            domains[other].retain(|w| {
                let pair = if val_first { (val.clone(), w.clone()) } else { (w.clone(), val.clone()) };
                con.allowed.contains(&pair)
            });
            if domains[other].is_empty() {
                wiped = true;
                break;
            }
        }
        if !wiped {
            values.push(val);
            search(i + 1, domains, arcs, values, out);
            values.pop();
        }
        *domains = saved;
    }
}
