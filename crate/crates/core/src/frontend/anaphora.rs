//! Pronoun resolution by accessibility, recency and agreement.

use std::collections::HashMap;

use crate::drs::{BoxPath, Condition, Drs, EntityClass, Pos, Referent, PRONOUN_SENSE};

use super::lexicon::{Agreement, Lexicon};
use super::{AnalysisFlags, FrontendError};

/// Replaces each pronoun placeholder `pred(x,pronoun,n,9999)` with
/// `eq(x,antecedent)`.
///
/// Candidates are the accessible, agreement-compatible entity referents
/// mentioned before the pronoun, most recent first. The most recent one is
/// chosen; when there are two or more the full list is recorded and the
/// result is flagged as ambiguous.
pub fn resolve_anaphora(
    d: &Drs,
    flags: &AnalysisFlags,
    lex: &Lexicon,
) -> Result<(Drs, AnalysisFlags), FrontendError> {
    let order = introduction_order(d);
    let agreement = referent_agreement(d, lex);
    let mut decisions = Vec::new();
    collect(d, &BoxPath::root(), &mut Vec::new(), &order, &agreement, lex, &mut decisions)?;

    let mut out = d.clone();
    let mut flags = flags.clone();
    for (path, idx, x, candidates) in decisions {
        let target = out.sub_box_mut(&path).expect("path from walk");
        target.conditions_mut()[idx] = Condition::Eq(x, candidates[0].clone());
        if candidates.len() >= 2 {
            flags.ambiguous_anaphora = true;
        }
        flags
            .candidate_antecedents
            .push(candidates.iter().map(|r| r.as_str().to_string()).collect());
    }
    Ok((out, flags))
}

type Decision = (BoxPath, usize, Referent, Vec<Referent>);

fn collect<'a>(
    d: &'a Drs,
    path: &BoxPath,
    scope: &mut Vec<&'a Referent>,
    order: &HashMap<Referent, usize>,
    agreement: &HashMap<Referent, Agreement>,
    lex: &Lexicon,
    out: &mut Vec<Decision>,
) -> Result<(), FrontendError> {
    let mark = scope.len();
    scope.extend(d.referents());
    for (i, c) in d.conditions().iter().enumerate() {
        let child = |j: usize| {
            let mut p = path.clone();
            p.0.push((i, j));
            p
        };
        match c {
            Condition::Pred {
                referent: x,
                lemma,
                pos: Pos::Noun,
                sense: PRONOUN_SENSE,
            } => {
                let wanted = lex.pronoun_agreement(lemma.as_str());
                let here = order.get(x).copied().unwrap_or(usize::MAX);
                let mut candidates: Vec<&Referent> = scope
                    .iter()
                    .copied()
                    .filter(|r| *r != x)
                    .filter(|r| order.get(*r).is_some_and(|&o| o < here))
                    .filter(|r| match (agreement.get(*r), wanted) {
                        (Some(a), Some(w)) => *a == w,
                        (Some(_), None) => true,
                        (None, _) => false,
                    })
                    .collect();
                candidates.sort_by_key(|r| std::cmp::Reverse(order[*r]));
                candidates.dedup();
                if candidates.is_empty() {
                    return Err(FrontendError::NoAntecedent(lemma.to_string()));
                }
                out.push((
                    path.clone(),
                    i,
                    x.clone(),
                    candidates.into_iter().cloned().collect(),
                ));
            }
            Condition::Not(k) | Condition::Pos(k) => {
                collect(k, &child(0), scope, order, agreement, lex, out)?
            }
            Condition::Or(l, r) => {
                collect(l, &child(0), scope, order, agreement, lex, out)?;
                collect(r, &child(1), scope, order, agreement, lex, out)?;
            }
            Condition::Imp(a, k) => {
                collect(a, &child(0), scope, order, agreement, lex, out)?;
                let m = scope.len();
                scope.extend(a.referents());
                collect(k, &child(1), scope, order, agreement, lex, out)?;
                scope.truncate(m);
            }
            Condition::Whq(x, k) => {
                scope.push(x);
                collect(k, &child(0), scope, order, agreement, lex, out)?;
                scope.pop();
            }
            _ => {}
        }
    }
    scope.truncate(mark);
    Ok(())
}

/// Position of each referent's first mention in a pre-order walk over
/// conditions, which follows surface order for composed DRSs.
pub(crate) fn introduction_order(d: &Drs) -> HashMap<Referent, usize> {
    fn walk(d: &Drs, out: &mut HashMap<Referent, usize>) {
        for c in d.conditions() {
            for r in c.referents() {
                let n = out.len();
                out.entry(r.clone()).or_insert(n);
            }
            for k in c.boxes() {
                walk(k, out);
            }
        }
    }
    let mut out = HashMap::new();
    walk(d, &mut out);
    out
}

/// Agreement of entity referents typed by a proper name or a lexicon noun.
/// Events and pronoun placeholders get none.
fn referent_agreement(d: &Drs, lex: &Lexicon) -> HashMap<Referent, Agreement> {
    let mut out = HashMap::new();
    for c in d.atomic_conditions() {
        match c {
            Condition::Named { referent, class, .. } => {
                let a = if *class == EntityClass::Per {
                    Agreement::Person
                } else {
                    Agreement::Thing
                };
                out.entry(referent.clone()).or_insert(a);
            }
            Condition::Pred {
                referent,
                lemma,
                pos: Pos::Noun,
                sense,
            } if *sense != PRONOUN_SENSE => {
                let a = lex
                    .noun_agreement(lemma.as_str())
                    .or_else(|| lex.is_weekday(lemma.as_str()).then_some(Agreement::Thing));
                if let Some(a) = a {
                    out.entry(referent.clone()).or_insert(a);
                }
            }
            _ => {}
        }
    }
    out
}
