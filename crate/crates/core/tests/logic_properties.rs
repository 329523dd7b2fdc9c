mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use nl2cnl::drs::{lemma, referent};
use nl2cnl::logic::{
    answer_query, eval_model, satisfiable, solve_csp, to_fol, FiniteModel, Formula, Relation, DEFAULT_SEARCH_BOUND,
};
use nl2cnl::{Condition, Drs, Pos};
use proptest::prelude::*;

/// Every interpretation of `signature` over a domain of `size` elements.
fn all_models(signature: &BTreeMap<String, usize>, size: usize) -> Vec<FiniteModel> {
    let domain: Vec<String> = (1..=size).map(|i| format!("d{i}")).collect();
    let mut slots: Vec<(String, Vec<String>)> = Vec::new();
    for (name, &arity) in signature {
        let mut tuples: Vec<Vec<String>> = vec![vec![]];
        for _ in 0..arity {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    domain.iter().map(move |d| {
                        let mut t = t.clone();
                        t.push(d.clone());
                        t
                    })
                })
                .collect();
        }
        slots.extend(tuples.into_iter().map(|t| (name.clone(), t)));
    }
    (0u64..1 << slots.len())
        .map(|mask| {
            let mut relations: BTreeMap<String, Relation> = signature
                .iter()
                .map(|(n, &arity)| {
                    (
                        n.clone(),
                        Relation {
                            arity,
                            tuples: BTreeSet::new(),
                        },
                    )
                })
                .collect();
            for (i, (name, t)) in slots.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    relations.get_mut(name).unwrap().tuples.insert(t.clone());
                }
            }
            FiniteModel::new(domain.clone(), relations).unwrap()
        })
        .collect()
}

fn signature(f: &Formula) -> BTreeMap<String, usize> {
    f.signature().unwrap()
}

/// A question `whq(w, K)` whose body starts with `p_n(w)`.
fn question(seed: u64) -> (Drs, Drs) {
    let body = random_drs(&mut rng(seed), DrsShape::logic(1));
    let w = referent("w");
    let mut conds = vec![Condition::pred(w.clone(), lemma("p"), Pos::Noun, 0)];
    conds.extend(body.conditions().iter().cloned());
    let k = Drs::new(body.referents().to_vec(), conds.clone()).unwrap();
    let q = Drs::new(vec![], vec![Condition::Whq(w.clone(), k)]).unwrap();
    let mut refs = vec![w];
    refs.extend(body.referents().iter().cloned());
    (q, Drs::new(refs, conds).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn translation_agrees_with_embedding_semantics(seed: u64, size in 1usize..=3) {
        let mut r = rng(seed);
        let d = random_drs(&mut r, DrsShape::logic(2));
        let (f, warnings) = to_fol(&d).unwrap();
        prop_assert!(warnings.is_empty());
        prop_assert!(f.free_vars().is_empty());
        for _ in 0..4 {
            let m = random_model(&mut r, size);
            prop_assert_eq!(eval_model(&f, &m).unwrap(), drs_true(&d, &m));
        }
    }

    #[test]
    fn csp_solver_matches_brute_force(seed: u64) {
        let c = random_csp(&mut rng(seed));
        prop_assert_eq!(solve_csp(&c), brute_force_csp(&c));
    }

    #[test]
    fn answers_are_domain_elements(seed: u64, model_seed: u64, size in 1usize..=3) {
        let (q, closed) = question(seed);
        let m = random_model(&mut rng(model_seed), size);
        let answers = answer_query(&q, &m).unwrap();
        let domain: BTreeSet<String> = m.domain().iter().cloned().collect();
        prop_assert!(answers.is_subset(&domain));
        prop_assert_eq!(!answers.is_empty(), drs_true(&closed, &m));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn satisfiable_returns_minimal_verified_models(seed: u64) {
        let d = random_drs(&mut rng(seed), DrsShape::logic(2));
        let (f, _) = to_fol(&d).unwrap();
        let sig = signature(&f);
        match satisfiable(&f, 2, DEFAULT_SEARCH_BOUND).unwrap() {
            Some(m) => {
                prop_assert!(eval_model(&f, &m).unwrap());
                prop_assert!(drs_true(&d, &m));
                for smaller in 1..m.domain().len() {
                    prop_assert!(!all_models(&sig, smaller).iter().any(|n| drs_true(&d, n)));
                }
            }
            None => {
                for size in 1..=2 {
                    prop_assert!(!all_models(&sig, size).iter().any(|n| drs_true(&d, n)));
                }
            }
        }
    }
}

#[test]
fn satisfiability_generator_sees_both_outcomes() {
    let (mut sat, mut unsat) = (0, 0);
    for seed in 0..200 {
        let d = random_drs(&mut rng(seed), DrsShape::logic(2));
        match satisfiable(&to_fol(&d).unwrap().0, 2, DEFAULT_SEARCH_BOUND).unwrap() {
            Some(_) => sat += 1,
            None => unsat += 1,
        }
    }
    assert!(sat > 20 && unsat > 5, "sat {sat} unsat {unsat}");
}
