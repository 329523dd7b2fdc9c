//! Finite models and the facts file format.

use std::collections::{BTreeMap, BTreeSet};

use super::LogicError;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Relation {
    pub arity: usize,
    pub tuples: BTreeSet<Vec<String>>,
}

/// A finite domain of constants and an interpretation of predicate names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FiniteModel {
    domain: Vec<String>,
    relations: BTreeMap<String, Relation>,
}

impl FiniteModel {
    /// Builds a model; the domain is sorted and deduplicated.
    pub fn new(
        domain: impl IntoIterator<Item = String>,
        relations: BTreeMap<String, Relation>,
    ) -> Result<Self, LogicError> {
        let domain: BTreeSet<String> = domain.into_iter().collect();
        for (name, rel) in &relations {
            for t in &rel.tuples {
                if t.len() != rel.arity {
                    return Err(LogicError::ArityMismatch {
                        predicate: name.clone(),
                        expected: rel.arity,
                        got: t.len(),
                    });
                }
                if let Some(c) = t.iter().find(|c| !domain.contains(*c)) {
                    return Err(LogicError::UnknownConstant(c.clone()));
                }
            }
        }
        Ok(FiniteModel {
            domain: domain.into_iter().collect(),
            relations,
        })
    }

    pub fn domain(&self) -> &[String] {
        &self.domain
    }

    pub fn relations(&self) -> &BTreeMap<String, Relation> {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    /// Tuples of `name`, empty if uninterpreted.
    pub fn extension(&self, name: &str) -> impl Iterator<Item = &Vec<String>> {
        self.relations.get(name).into_iter().flat_map(|r| r.tuples.iter())
    }

    /// Serializes as a facts file (one ground atom per line).
    pub fn to_facts(&self) -> String {
        let mut out = String::new();
        for (name, rel) in &self.relations {
            for t in &rel.tuples {
                out.push_str(&format!("{name}({}).\n", t.join(",")));
            }
        }
        out
    }
}

fn is_constant(s: &str) -> bool {
    let mut c = s.chars();
    c.next().is_some_and(|f| f.is_ascii_lowercase())
        && c.all(|ch| ch.is_ascii_lowercase() || ch.is_ascii_digit() || ch == '_')
}

/// Parses `pred(c1[,c2,...]).` lines; `#` starts a comment. The domain is
/// the set of constants mentioned.
pub fn parse_facts(text: &str) -> Result<FiniteModel, LogicError> {
    let mut relations: BTreeMap<String, Relation> = BTreeMap::new();
    let mut domain = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| LogicError::FactsFormat {
            line: i + 1,
            message: message.to_string(),
        };
        let body = line.strip_suffix('.').ok_or_else(|| err("missing final `.`"))?.trim_end();
        let (name, args) = body.split_once('(').ok_or_else(|| err("expected `pred(args)`"))?;
        let args = args.strip_suffix(')').ok_or_else(|| err("missing `)`"))?;
        let name = name.trim();
        if !is_constant(name) {
            return Err(err("bad predicate name"));
        }
        let tuple: Vec<String> = args.split(',').map(|a| a.trim().to_string()).collect();
        if let Some(bad) = tuple.iter().find(|a| !is_constant(a)) {
            return Err(err(&format!("bad constant `{bad}`")));
        }
        let rel = relations.entry(name.to_string()).or_insert_with(|| Relation {
            arity: tuple.len(),
            tuples: BTreeSet::new(),
        });
        if rel.arity != tuple.len() {
            return Err(LogicError::ArityMismatch {
                predicate: name.to_string(),
                expected: rel.arity,
                got: tuple.len(),
            });
        }
        domain.extend(tuple.iter().cloned());
        rel.tuples.insert(tuple);
    }
    FiniteModel::new(domain, relations)
}
