//! End-to-end orchestration: configuration, per-sentence reports, corpus
//! evaluation and question answering.
//!
//! ```
//! use nl2cnl::pipeline::{Pipeline, PipelineConfig};
//!
//! let pipeline = Pipeline::load(&PipelineConfig::shipped()).unwrap();
//! let reports = pipeline.run("A guy walks.\n\nEvery kid sleeps.\n");
//! let ace: Vec<_> = reports.iter().map(|r| r.ace.as_deref().unwrap()).collect();
//! assert_eq!(ace, ["A man walks.", "Every child sleeps."]);
//! assert_eq!(reports[1].id, "s3");
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::ace::{check_ace, verbalize, AceError, AceSentence};
use crate::classifier::{
    extract_features, oov_count, predict, predicted_labels, score_predictions, Evaluation, LinearModel,
    ReductionLabel,
};
use crate::drs::{Condition, Drs, DrsError, Pos, Referent};
use crate::frontend::{
    analyze, introduction_order, normalize, resolve_anaphora, AnalysisFlags, FrontendError, Lexicon,
    NormalizationTrace,
};
use crate::logic::{
    answer_query, compile_csp, parse_facts, solve_csp, to_fol, Assignment, FiniteModel, LogicError,
};
use crate::rewrite::{apply_rules, parse_rules, RewriteError, RewriteRule, RewriteTrace};
use crate::text::serialize_drs;

/// Version of the line-delimited report format.
pub const REPORT_VERSION: u32 = 1;

pub const DEFAULT_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputMode {
    #[default]
    Ace,
    Drs,
    Fol,
    All,
}

impl OutputMode {
    pub fn name(self) -> &'static str {
        match self {
            OutputMode::Ace => "ace",
            OutputMode::Drs => "drs",
            OutputMode::Fol => "fol",
            OutputMode::All => "all",
        }
    }

    fn wants_ace(self) -> bool {
        matches!(self, OutputMode::Ace | OutputMode::All)
    }

    fn wants_fol(self) -> bool {
        matches!(self, OutputMode::Fol | OutputMode::All)
    }

    /// Report fields emitted in this mode, besides the common ones.
    fn fields(self) -> &'static [&'static str] {
        match self {
            OutputMode::Ace => &["labels", "ace", "conformance"],
            OutputMode::Drs => &["normalization", "source", "labels", "scores", "rewrite", "reduced"],
            OutputMode::Fol => &["reduced", "fol"],
            OutputMode::All => &[
                "normalization",
                "flags",
                "source",
                "labels",
                "scores",
                "rewrite",
                "reduced",
                "ace",
                "conformance",
                "fol",
            ],
        }
    }
}

impl fmt::Display for OutputMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutputMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ace" => Ok(OutputMode::Ace),
            "drs" => Ok(OutputMode::Drs),
            "fol" => Ok(OutputMode::Fol),
            "all" => Ok(OutputMode::All),
            _ => Err(format!("unknown output mode `{s}` (expected ace, drs, fol or all)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config is missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

/// Pipeline settings, read from a `key = value` file.
///
/// Keys: `lexicon`, `rules` (required paths), `model` (optional path; without
/// a model every rule applies regardless of its gate), `max_iterations`,
/// `output` (`ace`, `drs`, `fol` or `all`) and `strict` (`true` turns
/// verbalization failures into errors). Relative paths are resolved against
/// the directory of the config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineConfig {
    pub lexicon: PathBuf,
    pub rules: PathBuf,
    pub model: Option<PathBuf>,
    pub max_iterations: usize,
    pub output: OutputMode,
    pub strict: bool,
}

impl PipelineConfig {
    /// The configuration shipped in the crate's `data` directory.
    pub fn shipped() -> Self {
        let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
        PipelineConfig {
            lexicon: data.join("lexicon.tsv"),
            rules: data.join("default.rules"),
            model: Some(data.join("model.txt")),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            output: OutputMode::Ace,
            strict: false,
        }
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut lexicon = None;
        let mut rules = None;
        let mut model = None;
        let mut max_iterations = DEFAULT_MAX_ITERATIONS;
        let mut output = OutputMode::Ace;
        let mut strict = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Syntax { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let value = value.trim();
            match key.trim() {
                "lexicon" => lexicon = Some(base.join(value)),
                "rules" => rules = Some(base.join(value)),
                "model" => model = Some(base.join(value)),
                "max_iterations" => {
                    max_iterations = value
                        .parse()
                        .map_err(|_| err(format!("bad max_iterations `{value}`")))?
                }
                "output" => output = value.parse().map_err(err)?,
                "strict" => {
                    strict = value
                        .parse()
                        .map_err(|_| err(format!("bad strict flag `{value}`")))?
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(PipelineConfig {
            lexicon: lexicon.ok_or(ConfigError::MissingKey("lexicon"))?,
            rules: rules.ok_or(ConfigError::MissingKey("rules"))?,
            model,
            max_iterations,
            output,
            strict,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = read(path)?;
        PipelineConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn invalid(path: &Path, e: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Wall-clock time per stage in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct StageTimings {
    pub normalize: u64,
    pub analyze: u64,
    pub anaphora: u64,
    pub classify: u64,
    pub rewrite: u64,
    pub verbalize: u64,
    pub fol: u64,
    pub total: u64,
}

impl StageTimings {
    fn add(&mut self, o: &StageTimings) {
        self.normalize += o.normalize;
        self.analyze += o.analyze;
        self.anaphora += o.anaphora;
        self.classify += o.classify;
        self.rewrite += o.rewrite;
        self.verbalize += o.verbalize;
        self.fol += o.fol;
        self.total += o.total;
    }

    fn div(&self, n: u64) -> StageTimings {
        let n = n.max(1);
        StageTimings {
            normalize: self.normalize / n,
            analyze: self.analyze / n,
            anaphora: self.anaphora / n,
            classify: self.classify / n,
            rewrite: self.rewrite / n,
            verbalize: self.verbalize / n,
            fol: self.fol / n,
            total: self.total / n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Normalize,
    Analyze,
    Anaphora,
    Rewrite,
    Verbalize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageError {
    pub stage: Stage,
    pub message: String,
}

fn opt_drs<S: Serializer>(d: &Option<Drs>, s: S) -> Result<S::Ok, S::Error> {
    match d {
        Some(d) => s.serialize_str(&serialize_drs(d)),
        None => s.serialize_none(),
    }
}

/// Everything the pipeline produced for one input sentence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceReport {
    pub id: String,
    pub raw: String,
    pub error: Option<StageError>,
    pub normalization: Option<NormalizationTrace>,
    pub flags: Option<AnalysisFlags>,
    #[serde(serialize_with = "opt_drs")]
    pub source: Option<Drs>,
    pub labels: Vec<ReductionLabel>,
    pub scores: Vec<(ReductionLabel, f64)>,
    pub rewrite: Option<RewriteTrace>,
    #[serde(serialize_with = "opt_drs")]
    pub reduced: Option<Drs>,
    pub ace: Option<String>,
    pub conformance: Option<AceSentence>,
    pub fol: Option<String>,
    pub warnings: Vec<String>,
    pub timings: StageTimings,
}

impl SentenceReport {
    fn new(id: &str, raw: &str) -> Self {
        SentenceReport {
            id: id.to_string(),
            raw: raw.to_string(),
            error: None,
            normalization: None,
            flags: None,
            source: None,
            labels: Vec::new(),
            scores: Vec::new(),
            rewrite: None,
            reduced: None,
            ace: None,
            conformance: None,
            fol: None,
            warnings: Vec::new(),
            timings: StageTimings::default(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// One JSON record with the fields of `mode`.
    pub fn to_json(&self, mode: OutputMode) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        let keep = mode.fields();
        if let serde_json::Value::Object(map) = &mut v {
            map.retain(|k, _| {
                matches!(k.as_str(), "id" | "raw" | "error" | "warnings" | "timings") || keep.contains(&k.as_str())
            });
        }
        v.to_string()
    }
}

/// First line of every report stream.
pub fn report_header(mode: OutputMode) -> String {
    serde_json::json!({ "format": "nl2cnl-report", "version": REPORT_VERSION, "mode": mode.name() }).to_string()
}

/// A loaded pipeline: lexicon, rules and optional classifier.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub lexicon: Lexicon,
    pub rules: Vec<RewriteRule>,
    pub model: Option<LinearModel>,
    pub max_iterations: usize,
    pub output: OutputMode,
    pub strict: bool,
}

fn micros(t: Instant) -> u64 {
    t.elapsed().as_micros() as u64
}

impl Pipeline {
    pub fn new(lexicon: Lexicon, rules: Vec<RewriteRule>, model: Option<LinearModel>) -> Self {
        Pipeline {
            lexicon,
            rules,
            model,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            output: OutputMode::Ace,
            strict: false,
        }
    }

    /// Reads and validates every file the config names.
    pub fn load(cfg: &PipelineConfig) -> Result<Self, ConfigError> {
        let lexicon = Lexicon::parse_tsv(&read(&cfg.lexicon)?).map_err(|e| invalid(&cfg.lexicon, e))?;
        let rules = parse_rules(&read(&cfg.rules)?).map_err(|e| invalid(&cfg.rules, e))?;
        let model = match &cfg.model {
            Some(p) => Some(LinearModel::from_text(&read(p)?).map_err(|e| invalid(p, e))?),
            None => None,
        };
        Ok(Pipeline {
            lexicon,
            rules,
            model,
            max_iterations: cfg.max_iterations,
            output: cfg.output,
            strict: cfg.strict,
        })
    }

    /// Labels gating the rewrite: the model's prediction, or every label
    /// when no model is loaded.
    fn classify(&self, tokens: &[String], flags: &AnalysisFlags) -> (BTreeSet<ReductionLabel>, Vec<(ReductionLabel, f64)>) {
        match &self.model {
            Some(m) => {
                let scores = predict(m, &extract_features(tokens, flags, &self.lexicon));
                (predicted_labels(&scores), scores)
            }
            None => (ReductionLabel::ALL.into_iter().collect(), Vec::new()),
        }
    }

    /// Runs every stage on one sentence (or one discourse block).
    pub fn run_sentence(&self, id: &str, raw: &str) -> SentenceReport {
        let start = Instant::now();
        let mut r = SentenceReport::new(id, raw);
        self.stages(&mut r);
        r.timings.total = micros(start);
        r
    }

    fn stages(&self, r: &mut SentenceReport) {
        let lex = &self.lexicon;
        let fail = |r: &mut SentenceReport, stage, e: &dyn fmt::Display| {
            r.error = Some(StageError {
                stage,
                message: e.to_string(),
            })
        };

        let t = Instant::now();
        let normalized = normalize(&r.raw, lex);
        r.timings.normalize = micros(t);
        let (tokens, trace) = match normalized {
            Ok(x) => x,
            Err(e) => return fail(r, Stage::Normalize, &e),
        };
        let oov = oov_count(&tokens, &trace, lex);
        r.normalization = Some(trace);

        let t = Instant::now();
        let analyzed = analyze(&tokens, lex);
        r.timings.analyze = micros(t);
        let (source, flags) = match analyzed {
            Ok(x) => x,
            Err(e) => return fail(r, Stage::Analyze, &e),
        };

        let t = Instant::now();
        let resolved = resolve_anaphora(&source, &flags, lex);
        r.timings.anaphora = micros(t);
        let (source, mut flags) = match resolved {
            Ok(x) => x,
            Err(e) => return fail(r, Stage::Anaphora, &e),
        };
        flags.oov_count = oov;
        if flags.ambiguous_anaphora {
            r.warnings.push("ambiguous-anaphora".into());
        }

        let t = Instant::now();
        let (labels, scores) = self.classify(&tokens, &flags);
        r.timings.classify = micros(t);
        r.flags = Some(flags);
        r.labels = labels.iter().copied().collect();
        r.scores = scores;
        r.source = Some(source.clone());

        let t = Instant::now();
        let rewritten = apply_rules(&self.rules, &source, &labels, self.max_iterations);
        r.timings.rewrite = micros(t);
        let (reduced, trace) = match rewritten {
            Ok(x) => x,
            Err(e) => return fail(r, Stage::Rewrite, &e),
        };
        for s in trace.steps.iter().filter(|s| s.lossy) {
            r.warnings.push(format!("lossy-rewrite: {}", s.rule));
        }
        r.rewrite = Some(trace);
        r.reduced = Some(reduced.clone());

        if self.output.wants_ace() {
            let t = Instant::now();
            let verbalized = verbalize(&reduced, lex);
            match verbalized {
                Ok(text) => {
                    let conf = check_ace(&text, lex);
                    if !conf.conformant {
                        r.warnings.push("non-conformant-ace".into());
                    }
                    r.ace = Some(text);
                    r.conformance = Some(conf);
                }
                Err(AceError::NotVerbalizable(why)) => {
                    let msg = format!("not verbalizable: {why}");
                    if self.strict {
                        r.timings.verbalize = micros(t);
                        return fail(r, Stage::Verbalize, &msg);
                    }
                    r.warnings.push(msg);
                }
            }
            r.timings.verbalize = micros(t);
        }

        if self.output.wants_fol() {
            let t = Instant::now();
            match to_fol(&reduced) {
                Ok((f, warnings)) => {
                    r.fol = Some(f.to_string());
                    r.warnings.extend(warnings);
                }
                Err(e) => r.warnings.push(format!("fol: {e}")),
            }
            r.timings.fol = micros(t);
        }
    }

    /// One report per non-blank input line, in input order. Lines are
    /// processed in parallel; ids are `s<line number>`.
    pub fn run(&self, input: &str) -> Vec<SentenceReport> {
        let lines: Vec<(usize, &str)> = input
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        lines
            .par_iter()
            .map(|(i, l)| self.run_sentence(&format!("s{}", i + 1), l.trim()))
            .collect()
    }

    /// Runs all non-blank lines as one discourse, so pronouns may refer
    /// back across lines. Produces a single report with id `d1`.
    pub fn run_discourse(&self, input: &str) -> Vec<SentenceReport> {
        let lines: Vec<&str> = input.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if lines.is_empty() {
            return Vec::new();
        }
        vec![self.run_sentence("d1", &lines.join(" "))]
    }

    /// Answers a question against a facts file.
    pub fn reason(&self, question: &str, facts: &FiniteModel, mode: ReasonMode) -> Result<Answers, ReasonError> {
        let (tokens, trace) = normalize(question, &self.lexicon)?;
        let (d, flags) = analyze(&tokens, &self.lexicon)?;
        let (d, mut flags) = resolve_anaphora(&d, &flags, &self.lexicon)?;
        flags.oov_count = oov_count(&tokens, &trace, &self.lexicon);
        let (labels, _) = self.classify(&tokens, &flags);
        let (q, _) = apply_rules(&self.rules, &d, &labels, self.max_iterations)?;
        Ok(match mode {
            ReasonMode::Model => Answers::Model(answer_query(&q, facts)?),
            ReasonMode::Csp => Answers::Csp(solve_csp(&compile_csp(&q, facts)?)),
        })
    }

    /// Runs every gold sentence and aggregates the metrics.
    pub fn eval_corpus(&self, gold: &[GoldItem]) -> CorpusReport {
        let reports: Vec<SentenceReport> = gold
            .par_iter()
            .enumerate()
            .map(|(i, g)| self.run_sentence(&format!("g{}", i + 1), &g.sentence))
            .collect();
        let mut items = Vec::new();
        let mut timings = StageTimings::default();
        let mut predicted = Vec::new();
        for (g, r) in gold.iter().zip(&reports) {
            timings.add(&r.timings);
            predicted.push(match &self.model {
                Some(_) => r.labels.iter().copied().collect(),
                None => BTreeSet::new(),
            });
            let preservation = match (&r.source, &r.reduced) {
                (Some(s), Some(d)) => argument_preservation(s, d, r.rewrite.as_ref()).unwrap_or(0.0),
                _ => 0.0,
            };
            items.push(CorpusItem {
                id: r.id.clone(),
                sentence: g.sentence.clone(),
                expected: g.expected.clone(),
                got: r.ace.clone(),
                exact: r.ace.as_deref() == Some(g.expected.as_str()),
                preservation,
                ambiguous_anaphora: r.flags.as_ref().is_some_and(|f| f.ambiguous_anaphora),
                error: r.error.as_ref().map(|e| e.message.clone()),
            });
        }
        let gold_labels: Vec<_> = gold.iter().map(|g| g.labels.clone()).collect();
        let n = items.len();
        let mean = |f: &dyn Fn(&CorpusItem) -> f64| {
            if n == 0 {
                0.0
            } else {
                items.iter().map(f).sum::<f64>() / n as f64
            }
        };
        CorpusReport {
            sentences: n,
            failures: items.iter().filter(|i| i.error.is_some()).count(),
            classification: score_predictions(&predicted, &gold_labels),
            mean_argument_preservation: mean(&|i| i.preservation),
            ace_exact_match: mean(&|i| f64::from(u8::from(i.exact))),
            ambiguous_anaphora: items.iter().filter(|i| i.ambiguous_anaphora).count(),
            timings_total: timings,
            timings_mean: timings.div(n as u64),
            items,
        }
    }
}

/// Loads the config and runs `input` line by line.
pub fn run_pipeline(cfg: &PipelineConfig, input: &str) -> Result<Vec<SentenceReport>, ConfigError> {
    Ok(Pipeline::load(cfg)?.run(input))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReasonMode {
    Model,
    Csp,
}

impl FromStr for ReasonMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "model" => Ok(ReasonMode::Model),
            "csp" => Ok(ReasonMode::Csp),
            _ => Err(format!("unknown reasoning mode `{s}` (expected model or csp)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Answers {
    Model(BTreeSet<String>),
    Csp(Vec<Assignment>),
}

impl fmt::Display for Answers {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answers::Model(set) => {
                for a in set {
                    writeln!(f, "{a}")?;
                }
            }
            Answers::Csp(solutions) => {
                for s in solutions {
                    let parts: Vec<String> = s.iter().map(|(v, c)| format!("{v}={c}")).collect();
                    writeln!(f, "{}", parts.join(" "))?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReasonError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Loads a facts file.
pub fn load_facts(path: &Path) -> Result<FiniteModel, ConfigError> {
    parse_facts(&read(path)?).map_err(|e| invalid(path, e))
}

// ------------------------------------------------------------ corpus

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldItem {
    pub sentence: String,
    pub labels: BTreeSet<ReductionLabel>,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("gold file line {line}: {message}")]
pub struct GoldFormatError {
    pub line: usize,
    pub message: String,
}

/// Parses `sentence TAB labels TAB expected-ACE` lines; the label column
/// may be empty. Blank lines and `#` comments are skipped.
pub fn parse_gold(text: &str) -> Result<Vec<GoldItem>, GoldFormatError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| GoldFormatError { line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').collect();
        let [sentence, labels, expected] = cols[..] else {
            return Err(err(format!("expected 3 tab-separated columns, found {}", cols.len())));
        };
        if sentence.trim().is_empty() || expected.trim().is_empty() {
            return Err(err("empty sentence or expected output".into()));
        }
        out.push(GoldItem {
            sentence: sentence.trim().to_string(),
            labels: crate::classifier::parse_labels(labels).map_err(|e| err(e.to_string()))?,
            expected: expected.trim().to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusItem {
    pub id: String,
    pub sentence: String,
    pub expected: String,
    pub got: Option<String>,
    pub exact: bool,
    pub preservation: f64,
    pub ambiguous_anaphora: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub sentences: usize,
    pub failures: usize,
    /// Per-label metrics; without a model every prediction is the empty set.
    pub classification: Evaluation,
    pub mean_argument_preservation: f64,
    pub ace_exact_match: f64,
    pub ambiguous_anaphora: usize,
    pub timings_total: StageTimings,
    pub timings_mean: StageTimings,
    pub items: Vec<CorpusItem>,
}

impl CorpusReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Human-readable summary table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("sentences                  {}\n", self.sentences));
        s.push_str(&format!("failures                   {}\n", self.failures));
        s.push_str(&format!("ACE exact match            {:.4}\n", self.ace_exact_match));
        s.push_str(&format!("mean arg. preservation     {:.4}\n", self.mean_argument_preservation));
        s.push_str(&format!("ambiguous anaphora         {}\n", self.ambiguous_anaphora));
        s.push_str(&format!("label exact match          {:.4}\n\n", self.classification.exact_match));
        s.push_str("label           tp  fp  fn  precision  recall  f1\n");
        for (l, m) in &self.classification.per_label {
            s.push_str(&format!(
                "{:<14} {:>3} {:>3} {:>3}  {:>9.4}  {:>6.4}  {:.4}\n",
                l.name(),
                m.counts.tp,
                m.counts.fp,
                m.counts.fn_,
                m.precision,
                m.recall,
                m.f1
            ));
        }
        let t = &self.timings_mean;
        s.push_str(&format!(
            "\nmean us: normalize {} analyze {} anaphora {} classify {} rewrite {} verbalize {} total {}\n",
            t.normalize, t.analyze, t.anaphora, t.classify, t.rewrite, t.verbalize, t.total
        ));
        for i in self.items.iter().filter(|i| !i.exact) {
            s.push_str(&format!(
                "MISMATCH {}: expected {:?}, got {:?}\n",
                i.id, i.expected, i.got
            ));
        }
        s
    }
}

// ------------------------------------------------------------ preservation

struct UnionFind(HashMap<String, String>);

impl UnionFind {
    fn find(&self, x: &str) -> String {
        let mut cur = x.to_string();
        while let Some(p) = self.0.get(&cur) {
            if *p == cur {
                break;
            }
            cur = p.clone();
        }
        cur
    }

    fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0.insert(ra, rb);
        }
    }
}

struct Summary {
    /// Event referents with their verb lemma, in introduction order.
    events: Vec<(Referent, String)>,
    /// Rel conditions anchored on an event: (event, target, label).
    edges: Vec<(Referent, Referent, String)>,
    /// Descriptive lemmas per referent (nouns, adjectives, names).
    descriptors: HashMap<Referent, BTreeSet<String>>,
    /// Referents equated by `eq` conditions, keyed by name.
    aliases: UnionFind,
}

fn summarize(d: &Drs) -> Summary {
    let order = introduction_order(d);
    let conds: Vec<&Condition> = d.atomic_conditions();
    let mut events: Vec<(Referent, String)> = Vec::new();
    let mut descriptors: HashMap<Referent, BTreeSet<String>> = HashMap::new();
    let mut aliases = UnionFind(HashMap::new());
    for c in &conds {
        match c {
            Condition::Pred {
                referent,
                lemma,
                pos: Pos::Verb,
                ..
            } => {
                if !events.iter().any(|(e, _)| e == referent) {
                    events.push((referent.clone(), lemma.as_str().to_string()));
                }
            }
            Condition::Pred { referent, lemma, .. } => {
                descriptors.entry(referent.clone()).or_default().insert(lemma.as_str().to_string());
            }
            Condition::Named { referent, name, .. } => {
                descriptors.entry(referent.clone()).or_default().insert(name.as_str().to_string());
            }
            Condition::Eq(a, b) => aliases.union(a.as_str(), b.as_str()),
            _ => {}
        }
    }
    events.sort_by_key(|(e, _)| order.get(e).copied().unwrap_or(usize::MAX));
    let edges = conds
        .iter()
        .filter_map(|c| match c {
            Condition::Rel { from, to, label } if events.iter().any(|(e, _)| e == from) => {
                Some((from.clone(), to.clone(), label.as_str().to_string()))
            }
            _ => None,
        })
        .collect();
    Summary {
        events,
        edges,
        descriptors,
        aliases,
    }
}

/// Lemma and label substitutions recorded by a rewrite trace: a `pred` or
/// `rel` removed and one added on the same referents count as equivalent.
fn trace_equivalences(trace: Option<&RewriteTrace>) -> UnionFind {
    let mut uf = UnionFind(HashMap::new());
    for step in trace.map_or(&[][..], |t| &t.steps[..]) {
        for b in &step.before {
            for a in &step.after {
                match (b, a) {
                    (Condition::Pred { referent: x, lemma: l1, .. }, Condition::Pred { referent: y, lemma: l2, .. })
                        if x == y =>
                    {
                        uf.union(l1.as_str(), l2.as_str())
                    }
                    (
                        Condition::Rel { from: f1, to: t1, label: l1 },
                        Condition::Rel { from: f2, to: t2, label: l2 },
                    ) if f1 == f2 && t1 == t2 => uf.union(l1.as_str(), l2.as_str()),
                    _ => {}
                }
            }
        }
    }
    uf
}

/// Share of the source's event-anchored edges that survive in `reduced`.
///
/// Events are aligned one-to-one by verb lemma in introduction order,
/// choosing among equal lemmas the partner that keeps the most edges. An
/// edge survives when the aligned event carries an edge with the same (or
/// trace-equivalent) label whose target is the same referent, an
/// `eq`-alias of it, or shares a trace-equivalent descriptive lemma.
/// A source without such edges scores 1.
pub fn argument_preservation(source: &Drs, reduced: &Drs, trace: Option<&RewriteTrace>) -> Result<f64, DrsError> {
    source.ensure_proper()?;
    reduced.ensure_proper()?;
    let src = summarize(source);
    let red = summarize(reduced);
    if src.edges.is_empty() {
        return Ok(1.0);
    }
    let eqv = trace_equivalences(trace);
    let canon = |set: Option<&BTreeSet<String>>| -> BTreeSet<String> {
        set.into_iter().flatten().map(|l| eqv.find(l)).collect()
    };
    let same_target = |y: &Referent, y2: &Referent| {
        y == y2
            || red.aliases.find(y.as_str()) == red.aliases.find(y2.as_str())
            || !canon(src.descriptors.get(y)).is_disjoint(&canon(red.descriptors.get(y2)))
    };
    let kept = |e: &Referent, e2: &Referent| {
        src.edges
            .iter()
            .filter(|(from, y, label)| {
                from == e
                    && red.edges.iter().any(|(f2, y2, l2)| {
                        f2 == e2 && eqv.find(label) == eqv.find(l2) && same_target(y, y2)
                    })
            })
            .count()
    };

    let mut used = BTreeSet::new();
    let mut matched = 0;
    for (e, verb) in &src.events {
        let best = red
            .events
            .iter()
            .filter(|(e2, v2)| !used.contains(e2) && eqv.find(verb) == eqv.find(v2))
            .map(|(e2, _)| (kept(e, e2), e2))
            .fold(None, |acc: Option<(usize, &Referent)>, (k, e2)| match acc {
                Some((bk, _)) if bk >= k => acc,
                _ => Some((k, e2)),
            });
        if let Some((k, e2)) = best {
            used.insert(e2.clone());
            matched += k;
        }
    }
    Ok(matched as f64 / src.edges.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::SHIPPED_RULES;
    use crate::text::parse_drs;

    const SOURCE: &str = "drs([x1],[named(x1,harris,per),pos(drs([e1,x2,x3],[pred(e1,teach,v,0),rel(e1,x1,agent),rel(e1,x2,patient),pred(x2,linguistics,n,0),rel(e1,x3,on),pred(x3,tuesday,n,0)]))])";

    fn gate_free() -> Pipeline {
        Pipeline::new(Lexicon::shipped(), parse_rules(SHIPPED_RULES).unwrap(), None)
    }

    #[test]
    fn config_parsing() {
        let cfg = PipelineConfig::parse(
            "# c\nlexicon = lex.tsv\nrules=r.rules\noutput = all\nstrict = true\nmax_iterations = 7\n",
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(cfg.lexicon, Path::new("/base/lex.tsv"));
        assert_eq!(cfg.model, None);
        assert_eq!((cfg.output, cfg.strict, cfg.max_iterations), (OutputMode::All, true, 7));
        assert_eq!(
            PipelineConfig::parse("rules = r", Path::new(".")),
            Err(ConfigError::MissingKey("lexicon"))
        );
        assert!(matches!(
            PipelineConfig::parse("colour = red", Path::new(".")),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        let missing = PipelineConfig {
            lexicon: "/nonexistent/lex.tsv".into(),
            ..PipelineConfig::shipped()
        };
        assert!(matches!(Pipeline::load(&missing), Err(ConfigError::Io { .. })));
    }

    #[test]
    fn gate_free_rewrite_without_model() {
        let p = gate_free();
        let r = p.run_sentence("s1", "Harris can teach linguistics on Tuesdays.");
        assert_eq!(r.ace.as_deref(), Some("Harris can teach a linguistic class on Tuesday."));
        assert!(r.scores.is_empty());
        assert_eq!(r.labels.len(), 4);
    }

    #[test]
    fn failures_do_not_stop_the_stream() {
        let reports = gate_free().run("A dog barks.\nA zyxwv barks.\nA cat sleeps.\n");
        assert_eq!(reports.len(), 3);
        assert!(reports[0].is_ok() && reports[2].is_ok());
        let err = reports[1].error.as_ref().unwrap();
        assert_eq!(err.stage, Stage::Analyze);
        assert_eq!(err.message, "unknown token `zyxwv`");
        assert!(gate_free().run("").is_empty());
    }

    #[test]
    fn strict_mode_fails_on_unverbalizable() {
        let mut p = gate_free();
        let text = "Who walks?";
        assert!(p.run_sentence("s1", text).is_ok());
        assert!(p.run_sentence("s1", text).warnings[0].starts_with("not verbalizable"));
        p.strict = true;
        assert_eq!(p.run_sentence("s1", text).error.unwrap().stage, Stage::Verbalize);
    }

    #[test]
    fn report_projection() {
        let mut p = gate_free();
        p.output = OutputMode::Fol;
        let r = p.run_sentence("s1", "Every man walks.");
        let json: serde_json::Value = serde_json::from_str(&r.to_json(OutputMode::Fol)).unwrap();
        assert_eq!(json["fol"], "forall x1 (man_n(x1) -> exists e1 (walk_v(e1) & agent(e1,x1)))");
        assert!(json.get("ace").is_none());
        assert_eq!(
            report_header(OutputMode::Fol),
            r#"{"format":"nl2cnl-report","mode":"fol","version":1}"#
        );
    }

    #[test]
    fn preservation_examples() {
        let s = parse_drs(SOURCE).unwrap();
        assert_eq!(argument_preservation(&s, &s, None).unwrap(), 1.0);

        let rules = parse_rules(SHIPPED_RULES).unwrap();
        let labels = [ReductionLabel::Jargon].into_iter().collect();
        let (d, trace) = apply_rules(&rules, &s, &labels, 10).unwrap();
        assert_eq!(argument_preservation(&s, &d, Some(&trace)).unwrap(), 1.0);

        let lossy = parse_rules("rule drop_patient:\nmatch rel(?e,?x,patient)\nreplace nothing\n").unwrap();
        let (d, trace) = apply_rules(&lossy, &s, &labels, 10).unwrap();
        assert_eq!(argument_preservation(&s, &d, Some(&trace)).unwrap(), 2.0 / 3.0);

        let empty = Drs::empty();
        assert_eq!(argument_preservation(&empty, &empty, None).unwrap(), 1.0);
        let improper = parse_drs("drs([],[pred(x1,dog,n,0)])").unwrap();
        assert!(argument_preservation(&improper, &s, None).is_err());
    }

    #[test]
    fn gold_parsing() {
        let g = parse_gold("# c\nA dog barks.\t\tA dog barks.\nHarris teaches mathematics.\tjargon\tHarris teaches a mathematical class.\n").unwrap();
        assert_eq!(g.len(), 2);
        assert!(g[0].labels.is_empty());
        assert_eq!(parse_gold("a\tb").unwrap_err().line, 1);
        let report = gate_free().eval_corpus(&[]);
        assert_eq!((report.sentences, report.ace_exact_match, report.mean_argument_preservation), (0, 0.0, 0.0));
    }

    #[test]
    fn reasoning() {
        let facts = parse_facts("person_n(a).\nperson_n(b).\nwalk_v(w).\nagent(w,a).\n").unwrap();
        let p = gate_free();
        assert_eq!(
            p.reason("Who walks?", &facts, ReasonMode::Model).unwrap(),
            Answers::Model(["a".to_string()].into())
        );
        assert!(matches!(
            p.reason("A man walks.", &facts, ReasonMode::Model),
            Err(ReasonError::Logic(LogicError::NotAQuestion))
        ));
    }
}
