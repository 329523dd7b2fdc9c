//! Multi-label reduction-type classification with one-vs-rest linear SVMs.
//!
//! Each label gets an independent binary SVM trained by primal subgradient
//! descent on the L2-regularized hinge loss. Training is single-threaded and
//! fully determined by the dataset order, the hyperparameters and the seed.
//!
//! ```
//! use nl2cnl::classifier::{train, predict, FeatureVector, Hyper, ReductionLabel};
//! use std::collections::BTreeSet;
//!
//! let pos = FeatureVector::from_pairs([("unigram:linguistics", 1.0)]);
//! let neg = FeatureVector::default();
//! let data = vec![
//!     (pos.clone(), BTreeSet::from([ReductionLabel::Jargon])),
//!     (neg, BTreeSet::new()),
//! ];
//! let model = train(&data, &Hyper::default(), 7).unwrap();
//! let scores = predict(&model, &pos);
//! assert!(scores.iter().any(|(l, s)| *l == ReductionLabel::Jargon && *s > 0.0));
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{
    analyze, normalize, resolve_anaphora, AnalysisFlags, FrontendError, Lexicon, NormalizationTrace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionLabel {
    Ambiguous,
    Colloquialism,
    Jargon,
    Workaround,
}

impl ReductionLabel {
    /// All labels, sorted by name.
    pub const ALL: [ReductionLabel; 4] = [
        ReductionLabel::Ambiguous,
        ReductionLabel::Colloquialism,
        ReductionLabel::Jargon,
        ReductionLabel::Workaround,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReductionLabel::Ambiguous => "ambiguous",
            ReductionLabel::Colloquialism => "colloquialism",
            ReductionLabel::Jargon => "jargon",
            ReductionLabel::Workaround => "workaround",
        }
    }
}

impl fmt::Display for ReductionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown reduction label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for ReductionLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReductionLabel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Parses a comma-separated label list; the empty string is the empty set.
pub fn parse_labels(s: &str) -> Result<BTreeSet<ReductionLabel>, UnknownLabel> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

pub fn format_labels(labels: &BTreeSet<ReductionLabel>) -> String {
    labels.iter().map(|l| l.name()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),
    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },
    #[error("training file line {line}: {message}")]
    DataFormat { line: usize, message: String },
}

/// Sparse named features.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct FeatureVector(pub BTreeMap<String, f64>);

impl FeatureVector {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        FeatureVector(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn get(&self, name: &str) -> f64 {
        self.0.get(name).copied().unwrap_or(0.0)
    }

    fn bump(&mut self, name: String) {
        *self.0.entry(name).or_insert(0.0) += 1.0;
    }
}

pub const FLAG_AMBIGUOUS: &str = "flag:ambiguous_anaphora";
pub const FLAG_OOV: &str = "flag:oov";
pub const FLAG_ATTACHMENTS: &str = "flag:multiple_attachments";

/// Token unigrams and bigrams (weight = count), lexicon category unigrams and
/// the three binary analysis flags.
pub fn extract_features(tokens: &[String], flags: &AnalysisFlags, lex: &Lexicon) -> FeatureVector {
    let mut fv = FeatureVector::default();
    for t in tokens {
        fv.bump(format!("unigram:{t}"));
        let kinds: BTreeSet<&str> = lex.readings(t).iter().map(|r| r.entry.category.kind()).collect();
        for k in kinds {
            fv.bump(format!("cat:{k}"));
        }
    }
    for w in tokens.windows(2) {
        fv.bump(format!("bigram:{}+{}", w[0], w[1]));
    }
    let bit = |b: bool| if b { 1.0 } else { 0.0 };
    fv.0.insert(FLAG_AMBIGUOUS.into(), bit(flags.ambiguous_anaphora));
    fv.0.insert(FLAG_OOV.into(), bit(flags.oov_count > 0));
    fv.0.insert(FLAG_ATTACHMENTS.into(), bit(flags.multiple_attachments));
    fv
}

/// Out-of-vocabulary count: spelling repairs plus tokens still unknown.
pub fn oov_count(tokens: &[String], trace: &NormalizationTrace, lex: &Lexicon) -> usize {
    trace.spelling_repairs() + tokens.iter().filter(|t| !lex.knows(t)).count()
}

/// Features of a raw sentence. Analysis failures leave the structural flags
/// at their defaults so unparsable sentences can still be classified.
pub fn featurize(raw: &str, lex: &Lexicon) -> Result<FeatureVector, FrontendError> {
    let (tokens, trace) = normalize(raw, lex)?;
    let mut flags = analyze(&tokens, lex)
        .and_then(|(d, f)| resolve_anaphora(&d, &f, lex))
        .map(|(_, f)| f)
        .unwrap_or_default();
    flags.oov_count = oov_count(&tokens, &trace, lex);
    Ok(extract_features(&tokens, &flags, lex))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub epochs: usize,
    pub learning_rate: f64,
    pub lambda: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            epochs: 200,
            learning_rate: 0.1,
            lambda: 1e-3,
        }
    }
}

impl Hyper {
    fn validate(&self) -> Result<(), ClassifierError> {
        if self.epochs == 0 {
            return Err(ClassifierError::InvalidHyper("epochs must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ClassifierError::InvalidHyper("learning_rate must be positive".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(ClassifierError::InvalidHyper("lambda must be positive".into()));
        }
        Ok(())
    }
}

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct LabelWeights {
    pub label: ReductionLabel,
    pub bias: f64,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub hyper: Hyper,
    pub seed: u64,
    /// Frozen feature dictionary; position is the feature id.
    pub features: Vec<String>,
    /// One entry per label in [`ReductionLabel::ALL`] order.
    pub labels: Vec<LabelWeights>,
    index: HashMap<String, usize>,
}

impl LinearModel {
    pub fn new(
        hyper: Hyper,
        seed: u64,
        features: Vec<String>,
        labels: Vec<LabelWeights>,
    ) -> Result<Self, ClassifierError> {
        let index: HashMap<String, usize> =
            features.iter().enumerate().map(|(i, f)| (f.clone(), i)).collect();
        if index.len() != features.len() {
            return Err(ClassifierError::ModelFormat {
                line: 0,
                message: "duplicate feature".into(),
            });
        }
        if labels.iter().map(|l| l.label).collect::<Vec<_>>() != ReductionLabel::ALL {
            return Err(ClassifierError::ModelFormat {
                line: 0,
                message: "labels must be exactly ambiguous, colloquialism, jargon, workaround".into(),
            });
        }
        if labels.iter().any(|l| l.weights.len() != features.len()) {
            return Err(ClassifierError::ModelFormat {
                line: 0,
                message: "weight vector length differs from dictionary size".into(),
            });
        }
        Ok(LinearModel {
            hyper,
            seed,
            features,
            labels,
            index,
        })
    }

    fn sparse(&self, fv: &FeatureVector) -> Vec<(usize, f64)> {
        fv.0.iter()
            .filter_map(|(k, v)| self.index.get(k).map(|&i| (i, *v)))
            .filter(|(_, v)| *v != 0.0)
            .collect()
    }

    /// Multiplies every weight and bias by `factor`.
    pub fn scaled(&self, factor: f64) -> LinearModel {
        let mut m = self.clone();
        for l in &mut m.labels {
            l.bias *= factor;
            l.weights.iter_mut().for_each(|w| *w *= factor);
        }
        m
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "nl2cnl-svm v1 seed={} epochs={} learning_rate={} lambda={} features={}\n",
            self.seed,
            self.hyper.epochs,
            self.hyper.learning_rate,
            self.hyper.lambda,
            self.features.len()
        );
        for l in &self.labels {
            out.push_str(l.label.name());
            out.push(' ');
            out.push_str(&l.bias.to_string());
            for w in &l.weights {
                out.push(' ');
                out.push_str(&w.to_string());
            }
            out.push('\n');
        }
        for (i, f) in self.features.iter().enumerate() {
            out.push_str(&format!("{i}\t{f}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ClassifierError> {
        let err = |line: usize, message: &str| ClassifierError::ModelFormat {
            line,
            message: message.to_string(),
        };
        let lines: Vec<&str> = text.lines().collect();
        let header = lines.first().ok_or_else(|| err(1, "missing header"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("nl2cnl-svm") || parts.next() != Some("v1") {
            return Err(err(1, "expected `nl2cnl-svm v1`"));
        }
        let mut kv = BTreeMap::new();
        for p in parts {
            let (k, v) = p.split_once('=').ok_or_else(|| err(1, "expected key=value"))?;
            kv.insert(k, v);
        }
        let field = |k: &str| kv.get(k).copied().ok_or_else(|| err(1, &format!("missing `{k}`")));
        let num_err = |_| err(1, "bad number");
        let seed: u64 = field("seed")?.parse().map_err(|_| err(1, "bad seed"))?;
        let hyper = Hyper {
            epochs: field("epochs")?.parse().map_err(|_| err(1, "bad epochs"))?,
            learning_rate: field("learning_rate")?.parse().map_err(num_err)?,
            lambda: field("lambda")?.parse().map_err(num_err)?,
        };
        let n: usize = field("features")?.parse().map_err(|_| err(1, "bad feature count"))?;
        if lines.len() != 1 + ReductionLabel::ALL.len() + n {
            return Err(err(lines.len(), "line count does not match header"));
        }
        let mut labels = Vec::new();
        for (i, line) in lines[1..=ReductionLabel::ALL.len()].iter().enumerate() {
            let lineno = i + 2;
            let mut parts = line.split(' ');
            let label: ReductionLabel = parts
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|e: UnknownLabel| err(lineno, &e.to_string()))?;
            let nums: Vec<f64> = parts
                .map(|p| p.parse::<f64>().map_err(|_| err(lineno, "bad number")))
                .collect::<Result<_, _>>()?;
            let (bias, weights) = nums.split_first().ok_or_else(|| err(lineno, "missing bias"))?;
            labels.push(LabelWeights {
                label,
                bias: *bias,
                weights: weights.to_vec(),
            });
        }
        let mut features = Vec::with_capacity(n);
        for (i, line) in lines[1 + ReductionLabel::ALL.len()..].iter().enumerate() {
            let lineno = i + 2 + ReductionLabel::ALL.len();
            let (id, name) = line.split_once('\t').ok_or_else(|| err(lineno, "expected id<TAB>feature"))?;
            if id.parse::<usize>().ok() != Some(i) {
                return Err(err(lineno, "feature ids must be 0..n in order"));
            }
            features.push(name.to_string());
        }
        LinearModel::new(hyper, seed, features, labels).map_err(|e| match e {
            ClassifierError::ModelFormat { message, .. } => err(0, &message),
            other => other,
        })
    }
}

pub type Dataset = [(FeatureVector, BTreeSet<ReductionLabel>)];

/// Trains one binary hinge-loss SVM per label.
///
/// Per epoch the example order is shuffled with a ChaCha8 generator seeded by
/// `seed`; the step size at update `t` is `lr / (1 + lambda * lr * t)`.
pub fn train(data: &Dataset, hyper: &Hyper, seed: u64) -> Result<LinearModel, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    hyper.validate()?;
    let features: Vec<String> = data
        .iter()
        .flat_map(|(fv, _)| fv.0.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let blank = vec![0.0; features.len()];
    let labels = ReductionLabel::ALL
        .iter()
        .map(|&label| LabelWeights {
            label,
            bias: 0.0,
            weights: blank.clone(),
        })
        .collect();
    let mut model = LinearModel::new(*hyper, seed, features, labels)?;
    let xs: Vec<Vec<(usize, f64)>> = data.iter().map(|(fv, _)| model.sparse(fv)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut t = 0u64;
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let eta = hyper.learning_rate / (1.0 + hyper.lambda * hyper.learning_rate * t as f64);
            let shrink = 1.0 - eta * hyper.lambda;
            for lw in &mut model.labels {
                let y = if data[i].1.contains(&lw.label) { 1.0 } else { -1.0 };
                let score = dot(&lw.weights, &xs[i]) + lw.bias;
                lw.weights.iter_mut().for_each(|w| *w *= shrink);
                if y * score < 1.0 {
                    for &(j, v) in &xs[i] {
                        lw.weights[j] += eta * y * v;
                    }
                    lw.bias += eta * y;
                }
            }
            t += 1;
        }
    }
    Ok(model)
}

fn dot(w: &[f64], x: &[(usize, f64)]) -> f64 {
    x.iter().map(|&(j, v)| w[j] * v).sum()
}

/// Scores for all four labels, sorted by label name.
pub fn predict(model: &LinearModel, fv: &FeatureVector) -> Vec<(ReductionLabel, f64)> {
    let x = model.sparse(fv);
    model
        .labels
        .iter()
        .map(|lw| (lw.label, dot(&lw.weights, &x) + lw.bias))
        .collect()
}

/// Labels whose score is strictly positive.
pub fn predicted_labels(scores: &[(ReductionLabel, f64)]) -> BTreeSet<ReductionLabel> {
    scores.iter().filter(|(_, s)| *s > 0.0).map(|(l, _)| *l).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
    pub counts: Confusion,
}

impl Metrics {
    pub fn from_counts(c: Confusion) -> Metrics {
        let mut degenerate = false;
        let mut ratio = |num: usize, den: usize| {
            if den == 0 {
                degenerate = true;
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 {
            degenerate = true;
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics {
            precision,
            recall,
            f1,
            degenerate,
            counts: c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Evaluation {
    pub per_label: BTreeMap<ReductionLabel, Metrics>,
    pub micro: Metrics,
    /// Fraction of examples whose predicted label set equals the gold set.
    pub exact_match: f64,
}

/// Confusion counts per label from parallel predicted and gold label sets.
pub fn score_predictions(
    predicted: &[BTreeSet<ReductionLabel>],
    gold: &[BTreeSet<ReductionLabel>],
) -> Evaluation {
    let mut counts: BTreeMap<ReductionLabel, Confusion> =
        ReductionLabel::ALL.iter().map(|&l| (l, Confusion::default())).collect();
    let mut exact = 0;
    for (p, g) in predicted.iter().zip(gold) {
        exact += usize::from(p == g);
        for l in ReductionLabel::ALL {
            let c = counts.get_mut(&l).unwrap();
            match (p.contains(&l), g.contains(&l)) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => {}
            }
        }
    }
    let total = counts.values().fold(Confusion::default(), |a, c| Confusion {
        tp: a.tp + c.tp,
        fp: a.fp + c.fp,
        fn_: a.fn_ + c.fn_,
    });
    Evaluation {
        per_label: counts.into_iter().map(|(l, c)| (l, Metrics::from_counts(c))).collect(),
        micro: Metrics::from_counts(total),
        exact_match: if gold.is_empty() {
            0.0
        } else {
            exact as f64 / gold.len() as f64
        },
    }
}

pub fn evaluate(model: &LinearModel, data: &Dataset) -> Result<Evaluation, ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let predicted: Vec<_> = data
        .iter()
        .map(|(fv, _)| predicted_labels(&predict(model, fv)))
        .collect();
    let gold: Vec<_> = data.iter().map(|(_, l)| l.clone()).collect();
    Ok(score_predictions(&predicted, &gold))
}

/// Parses a training file: sentence, TAB, comma-separated labels (the label
/// column may be empty or absent). Blank lines and `#` comments are skipped.
pub fn parse_training_tsv(text: &str) -> Result<Vec<(String, BTreeSet<ReductionLabel>)>, ClassifierError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (sentence, labels) = line.split_once('\t').unwrap_or((line, ""));
        let labels = parse_labels(labels).map_err(|e| ClassifierError::DataFormat {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((sentence.trim().to_string(), labels));
    }
    Ok(out)
}

/// Featurizes labeled sentences with the frontend.
pub fn build_dataset(
    rows: &[(String, BTreeSet<ReductionLabel>)],
    lex: &Lexicon,
) -> Result<Vec<(FeatureVector, BTreeSet<ReductionLabel>)>, FrontendError> {
    rows.iter()
        .map(|(s, l)| Ok((featurize(s, lex)?, l.clone())))
        .collect()
}
