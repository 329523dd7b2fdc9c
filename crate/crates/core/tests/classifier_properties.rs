mod common;

use std::collections::BTreeSet;

use common::*;
use nl2cnl::classifier::{
    build_dataset, evaluate, featurize, parse_training_tsv, predict, predicted_labels, train, FeatureVector, Hyper,
    LabelWeights, LinearModel, ReductionLabel, DEFAULT_SEED, FLAG_AMBIGUOUS,
};
use nl2cnl::frontend::Lexicon;
use proptest::prelude::*;
use rand::Rng;

type Example = (FeatureVector, BTreeSet<ReductionLabel>);

const DIM: usize = 3;

fn feature(i: usize) -> String {
    format!("f{i}")
}

fn vector(x: &[i32]) -> FeatureVector {
    FeatureVector(x.iter().enumerate().map(|(i, &v)| (feature(i), f64::from(v))).collect())
}

/// Small integer datasets; labels either planted by a random grid classifier
/// or drawn at random.
fn random_dataset(seed: u64) -> Vec<(Vec<i32>, BTreeSet<ReductionLabel>)> {
    let mut r = rng(seed);
    let n = r.gen_range(2..=8);
    let planted = r.gen_bool(0.7);
    let planes: Vec<(Vec<i32>, f64)> = ReductionLabel::ALL
        .iter()
        .map(|_| ((0..DIM).map(|_| r.gen_range(-2..=2)).collect(), f64::from(r.gen_range(-3..=2)) + 0.5))
        .collect();
    (0..n)
        .map(|_| {
            let x: Vec<i32> = (0..DIM).map(|_| r.gen_range(0..=2)).collect();
            let labels = ReductionLabel::ALL
                .iter()
                .zip(&planes)
                .filter(|(_, (w, b))| {
                    if planted {
                        w.iter().zip(&x).map(|(a, b)| f64::from(a * b)).sum::<f64>() + b > 0.0
                    } else {
                        r.gen_bool(0.5)
                    }
                })
                .map(|(l, _)| *l)
                .collect();
            (x, labels)
        })
        .collect()
}

/// Exhaustive search for a separating hyperplane with weights in -2..=2 and
/// half-integer bias in -3.5..=3.5, independently per label.
fn grid_separable(data: &[(Vec<i32>, BTreeSet<ReductionLabel>)]) -> bool {
    let mut grid = vec![vec![]];
    for _ in 0..DIM {
        grid = grid
            .into_iter()
            .flat_map(|w: Vec<i32>| {
                (-2..=2).map(move |v| {
                    let mut w = w.clone();
                    w.push(v);
                    w
                })
            })
            .collect();
    }
    ReductionLabel::ALL.iter().all(|label| {
        grid.iter().any(|w| {
            (-4..=3).any(|b| {
                let b = f64::from(b) + 0.5;
                data.iter().all(|(x, ls)| {
                    let s = w.iter().zip(x).map(|(a, c)| f64::from(a * c)).sum::<f64>() + b;
                    (s > 0.0) == ls.contains(label)
                })
            })
        })
    })
}

fn to_examples(data: &[(Vec<i32>, BTreeSet<ReductionLabel>)]) -> Vec<Example> {
    data.iter().map(|(x, l)| (vector(x), l.clone())).collect()
}

fn bitwise_equal(a: &LinearModel, b: &LinearModel) -> bool {
    a.features == b.features
        && a.labels.iter().zip(&b.labels).all(|(x, y)| {
            x.label == y.label
                && x.bias.to_bits() == y.bias.to_bits()
                && x.weights.iter().zip(&y.weights).all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

fn shipped_model() -> LinearModel {
    LinearModel::from_text(&data("model.txt")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn labels_invariant_under_positive_scaling(seed: u64, k in 1e-3f64..1e3) {
        let lex = Lexicon::shipped();
        let mut gen = SentenceGen::new(&lex);
        let mut r = rng(seed);
        gen.pronouns = r.gen_bool(0.3);
        let text = format!("{}. {}.", gen.sentence(&mut r), gen.sentence(&mut r));
        let fv = featurize(&text, &lex).unwrap();
        let model = shipped_model();
        prop_assert_eq!(
            predicted_labels(&predict(&model, &fv)),
            predicted_labels(&predict(&model.scaled(k), &fv))
        );
    }

    #[test]
    fn training_is_deterministic(seed: u64, train_seed: u64, epochs in 1usize..50) {
        let examples = to_examples(&random_dataset(seed));
        let hyper = Hyper { epochs, ..Hyper::default() };
        let a = train(&examples, &hyper, train_seed).unwrap();
        let b = train(&examples, &hyper, train_seed).unwrap();
        prop_assert!(bitwise_equal(&a, &b));
        prop_assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn separable_sets_are_learned_within_budget(seed: u64) {
        let raw = random_dataset(seed);
        prop_assume!(grid_separable(&raw));
        let examples = to_examples(&raw);
        let model = train(&examples, &Hyper { epochs: 1000, ..Hyper::default() }, DEFAULT_SEED).unwrap();
        prop_assert_eq!(evaluate(&model, &examples).unwrap().exact_match, 1.0);
    }
}

#[test]
fn grid_check_sees_both_outcomes() {
    let separable = (0..400).filter(|&s| grid_separable(&random_dataset(s))).count();
    assert!(separable > 150 && separable < 390, "separable: {separable}/400");
}

#[test]
fn toy_set_has_a_keyword_certificate() {
    let lex = Lexicon::shipped();
    let rows = parse_training_tsv(&data("toy_separable.tsv")).unwrap();
    let toy = build_dataset(&rows, &lex).unwrap();
    let markers = [
        (ReductionLabel::Ambiguous, vec![FLAG_AMBIGUOUS]),
        (ReductionLabel::Colloquialism, vec!["unigram:guy", "unigram:kid", "unigram:pal"]),
        (
            ReductionLabel::Jargon,
            vec!["unigram:linguistics", "unigram:chemistry", "unigram:mathematics"],
        ),
        (ReductionLabel::Workaround, vec!["unigram:via"]),
    ];
    let features: Vec<String> = toy
        .iter()
        .flat_map(|(fv, _)| fv.0.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let labels = markers
        .iter()
        .map(|(label, words)| LabelWeights {
            label: *label,
            bias: -0.5,
            weights: features.iter().map(|f| if words.contains(&f.as_str()) { 1.0 } else { 0.0 }).collect(),
        })
        .collect();
    let certificate = LinearModel::new(Hyper::default(), 0, features, labels).unwrap();
    assert_eq!(evaluate(&certificate, &toy).unwrap().exact_match, 1.0);
}
