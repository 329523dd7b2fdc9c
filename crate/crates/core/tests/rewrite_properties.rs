mod common;

use std::collections::BTreeSet;

use common::*;
use nl2cnl::classifier::ReductionLabel;
use nl2cnl::drs::{alpha_equivalent, is_proper};
use nl2cnl::frontend::{analyze, normalize, Lexicon};
use nl2cnl::pipeline::parse_gold;
use nl2cnl::rewrite::{apply_rules, parse_rules, replay, RewriteError, RewriteRule, SHIPPED_RULES};
use nl2cnl::Drs;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const BUDGET: usize = 100;

fn shipped_rules() -> Vec<RewriteRule> {
    parse_rules(SHIPPED_RULES).unwrap()
}

fn analyze_text(s: &str, lex: &Lexicon) -> Drs {
    analyze(&normalize(s, lex).unwrap().0, lex).unwrap().0
}

fn generated(seed: u64) -> Drs {
    let lex = Lexicon::shipped();
    let mut r = rng(seed);
    analyze_text(&SentenceGen::new(&lex).sentence(&mut r), &lex)
}

fn label_set(bits: u8) -> BTreeSet<ReductionLabel> {
    ReductionLabel::ALL
        .iter()
        .enumerate()
        .filter(|(i, _)| bits & (1 << i) != 0)
        .map(|(_, l)| *l)
        .collect()
}

/// Checks the engine invariants on one run; budget exhaustion is allowed.
fn check_run(rules: &[RewriteRule], d: &Drs, labels: &BTreeSet<ReductionLabel>) -> Result<(), TestCaseError> {
    let (out, trace) = match apply_rules(rules, d, labels, BUDGET) {
        Err(RewriteError::IterationBudgetExceeded(n)) => {
            prop_assert_eq!(n, BUDGET);
            return Ok(());
        }
        other => other.unwrap(),
    };
    prop_assert!(is_proper(&out));
    let (again, second) = apply_rules(rules, &out, labels, BUDGET).unwrap();
    prop_assert!(second.steps.is_empty());
    prop_assert_eq!(&again, &out);
    prop_assert_eq!(replay(d, &trace), Ok(out.clone()));
    prop_assert_eq!(trace.is_lossy(), trace.steps.iter().any(|s| s.after.is_empty()));
    Ok(())
}

const NOUNS: [&str; 5] = ["guy", "man", "kid", "child", "dog"];
const LABELS: [&str; 4] = ["ambiguous", "colloquialism", "jargon", "workaround"];

/// Random substitution rules over a small noun pool, some lossy, some gated.
fn random_rules(seed: u64) -> Vec<RewriteRule> {
    let mut r = rng(seed);
    let mut text = String::new();
    for i in 0..r.gen_range(1..=5) {
        text.push_str(&format!("rule r{i}:\n"));
        if r.gen_bool(0.5) {
            text.push_str(&format!("when {}\n", LABELS.choose(&mut r).unwrap()));
        }
        let from = NOUNS.choose(&mut r).unwrap();
        text.push_str(&format!("match pred(?x,{from},n,?s)\n"));
        match r.gen_range(0..4) {
            0 => text.push_str("replace nothing\n"),
            1 => text.push_str(&format!(
                "replace pred(?x,{},n,?s), pred(?x,happy,a,0)\n",
                NOUNS.choose(&mut r).unwrap()
            )),
            _ => text.push_str(&format!("replace pred(?x,{},n,?s)\n", NOUNS.choose(&mut r).unwrap())),
        }
        text.push('\n');
    }
    parse_rules(&text).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn shipped_rules_keep_engine_invariants(seed: u64, bits in 0u8..16) {
        check_run(&shipped_rules(), &generated(seed), &label_set(bits))?;
    }

    #[test]
    fn random_rule_sets_keep_engine_invariants(seed: u64, rule_seed: u64, bits in 0u8..16) {
        check_run(&random_rules(rule_seed), &generated(seed), &label_set(bits))?;
    }

    #[test]
    fn gated_rules_without_labels_are_identity(seed: u64) {
        let d = generated(seed);
        let (out, trace) = apply_rules(&shipped_rules(), &d, &BTreeSet::new(), BUDGET).unwrap();
        prop_assert!(trace.steps.is_empty());
        prop_assert_eq!(alpha_equivalent(&out, &d), Ok(true));
    }
}

#[test]
fn gold_corpus_keeps_engine_invariants() {
    let lex = Lexicon::shipped();
    let rules = shipped_rules();
    for g in parse_gold(&data("gold.tsv")).unwrap() {
        let d = analyze_text(&g.sentence, &lex);
        for labels in (0..16).map(label_set).chain([g.labels.clone()]) {
            if let Err(e) = check_run(&rules, &d, &labels) {
                panic!("{}: {e}", g.sentence);
            }
        }
    }
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

/// Exhaustive over the orders of the active rules that fire in some observed
/// run (reference order or any of 200 random full orders); rules that never
/// fire are appended in a random order.
#[test]
fn shipped_rules_are_confluent_on_gold() {
    let lex = Lexicon::shipped();
    let rules = shipped_rules();
    let gold = parse_gold(&data("gold.tsv")).unwrap();
    let mut r = rng(9);
    let mut orders = 0;
    for g in &gold {
        let d = analyze_text(&g.sentence, &lex);
        let (reference, trace) = apply_rules(&rules, &d, &g.labels, BUDGET).unwrap();
        let mut fired: BTreeSet<String> = trace.steps.iter().map(|s| s.rule.clone()).collect();
        let same = |order: &[RewriteRule], fired: &mut BTreeSet<String>| {
            let (out, t) = apply_rules(order, &d, &g.labels, BUDGET).unwrap();
            fired.extend(t.steps.into_iter().map(|s| s.rule));
            alpha_equivalent(&out, &reference) == Ok(true)
        };
        for _ in 0..200 {
            let mut all = rules.clone();
            all.shuffle(&mut r);
            assert!(same(&all, &mut fired), "{}", g.sentence);
            orders += 1;
        }
        let (relevant, rest): (Vec<RewriteRule>, Vec<RewriteRule>) =
            rules.iter().cloned().partition(|x| fired.contains(&x.name));
        for mut order in permutations(&relevant) {
            let mut tail = rest.clone();
            tail.shuffle(&mut r);
            order.extend(tail);
            assert!(same(&order, &mut fired), "{}", g.sentence);
            orders += 1;
        }
    }
    assert!(orders > 200 * gold.len());
}
