mod common;

use common::*;
use nl2cnl::ace::{check_ace, verbalize};
use nl2cnl::drs::{alpha_equivalent, lemma, referent};
use nl2cnl::frontend::{analyze, normalize, Lexicon};
use nl2cnl::pipeline::{argument_preservation, OutputMode, Pipeline, PipelineConfig, SentenceReport, StageTimings};
use nl2cnl::{Condition, Drs, Pos};
use proptest::prelude::*;
use rand::Rng;

fn analyze_text(s: &str, lex: &Lexicon) -> Drs {
    analyze(&normalize(s, lex).unwrap().0, lex).unwrap().0
}

fn generated_text(seed: u64, lex: &Lexicon) -> String {
    format!("{}.", SentenceGen::new(lex).sentence(&mut rng(seed)))
}

fn without_timings(mut reports: Vec<SentenceReport>) -> String {
    reports
        .iter_mut()
        .map(|r| {
            r.timings = StageTimings::default();
            r.to_json(OutputMode::All)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn has_event(d: &Drs) -> bool {
    d.atomic_conditions()
        .iter()
        .any(|c| matches!(c, Condition::Pred { pos: Pos::Verb, .. }))
}

/// `d` plus a top-level event whose agent is the first top-level referent.
fn with_event(d: &Drs) -> Drs {
    let e = referent("ev");
    let mut refs = d.referents().to_vec();
    let mut conds = d.conditions().to_vec();
    conds.push(Condition::pred(e.clone(), lemma("walk"), Pos::Verb, 0));
    if let Some(x) = refs.first() {
        conds.push(Condition::rel(e.clone(), x.clone(), lemma("agent")));
    }
    refs.push(e);
    Drs::new(refs, conds).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn reports_are_deterministic(seed: u64) {
        let pipeline = Pipeline::load(&PipelineConfig::shipped()).unwrap();
        let lex = Lexicon::shipped();
        let mut r = rng(seed);
        let input: String = (0..r.gen_range(1..6))
            .map(|_| format!("{}\n", generated_text(r.gen(), &lex)))
            .collect();
        let input = format!("{input}Harris can teach linguistics on Tuesdays.\nA zzzz qqq.\n");
        prop_assert_eq!(without_timings(pipeline.run(&input)), without_timings(pipeline.run(&input)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bare_pipeline_round_trips_conformant_input(seed: u64) {
        let lex = Lexicon::shipped();
        let text = verbalize(&analyze_text(&generated_text(seed, &lex), &lex), &lex).unwrap();
        prop_assert!(check_ace(&text, &lex).conformant);
        let pipeline = Pipeline::new(lex.clone(), vec![], None);
        let report = pipeline.run_sentence("s1", &text);
        let source = report.source.clone().unwrap();
        prop_assert_eq!(alpha_equivalent(report.reduced.as_ref().unwrap(), &source), Ok(true));
        let ace = report.ace.unwrap();
        prop_assert_eq!(alpha_equivalent(&analyze_text(&ace, &lex), &source), Ok(true));
    }

    #[test]
    fn self_preservation_is_one(seed: u64) {
        let lex = Lexicon::shipped();
        let d = analyze_text(&generated_text(seed, &lex), &lex);
        prop_assert_eq!(argument_preservation(&d, &d, None), Ok(1.0));
    }

    #[test]
    fn self_preservation_is_one_on_random_boxes(d in arb_drs(DrsShape::full(3))) {
        let d = with_event(&d);
        prop_assert!(has_event(&d));
        prop_assert_eq!(argument_preservation(&d, &d, None), Ok(1.0));
    }
}
