use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use nl2cnl::ace::check_ace;
use nl2cnl::classifier::{build_dataset, evaluate, parse_training_tsv, train, Hyper, DEFAULT_SEED};
use nl2cnl::frontend::Lexicon;
use nl2cnl::pipeline::{
    load_facts, parse_gold, report_header, OutputMode, Pipeline, PipelineConfig, ReasonMode, SentenceReport,
};
use nl2cnl::text::pretty_drs;

const EXIT_CONFIG: u8 = 1;
const EXIT_SENTENCE_FAILURES: u8 = 2;
const EXIT_STRICT: u8 = 3;

#[derive(Parser)]
#[command(name = "nl2cnl", version, about = "Reduce English sentences to ACE-subset statements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce sentences read from stdin, one per line.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output mode.
        #[arg(long, value_parser = parse_mode)]
        out: Option<OutputMode>,
        /// Human-readable output instead of JSON lines.
        #[arg(long)]
        pretty: bool,
        #[arg(long)]
        strict: bool,
        /// Treat the whole input as one discourse.
        #[arg(long)]
        discourse: bool,
    },
    /// Train the reduction-type classifier.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        /// Lexicon used for featurization (default: the shipped one).
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Evaluate the pipeline on a gold corpus.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Answer a question against a facts file.
    Reason {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        facts: PathBuf,
        #[arg(long, value_parser = parse_reason_mode)]
        mode: ReasonMode,
        #[arg(long)]
        question: String,
    },
    /// Check one sentence against the ACE subset.
    CheckAce {
        sentence: String,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<OutputMode, String> {
    s.parse()
}

fn parse_reason_mode(s: &str) -> Result<ReasonMode, String> {
    s.parse()
}

fn load_lexicon(path: Option<&Path>) -> Result<Lexicon> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Lexicon::parse_tsv(&text).with_context(|| format!("loading {}", p.display()))
        }
        None => Ok(Lexicon::shipped()),
    }
}

fn load_pipeline(config: &Path) -> Result<(PipelineConfig, Pipeline)> {
    let cfg = PipelineConfig::from_file(config)?;
    let pipeline = Pipeline::load(&cfg)?;
    Ok((cfg, pipeline))
}

fn pretty(out: &mut impl Write, r: &SentenceReport, mode: OutputMode) -> io::Result<()> {
    writeln!(out, "[{}] {}", r.id, r.raw)?;
    if let Some(e) = &r.error {
        writeln!(out, "  error ({:?}): {}", e.stage, e.message)?;
    }
    if matches!(mode, OutputMode::Drs | OutputMode::All) {
        for (name, d) in [("source", &r.source), ("reduced", &r.reduced)] {
            if let Some(d) = d {
                writeln!(out, "  {name}:")?;
                for line in pretty_drs(d).lines() {
                    writeln!(out, "    {line}")?;
                }
            }
        }
    }
    if let Some(a) = &r.ace {
        writeln!(out, "  ace: {a}")?;
    }
    if let Some(f) = &r.fol {
        writeln!(out, "  fol: {f}")?;
    }
    for w in &r.warnings {
        writeln!(out, "  warning: {w}")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Run {
            config,
            out: mode,
            pretty: human,
            strict,
            discourse,
        } => {
            let (_, mut pipeline) = load_pipeline(&config)?;
            if let Some(m) = mode {
                pipeline.output = m;
            }
            pipeline.strict |= strict;
            let mut input = String::new();
            io::stdin().read_to_string(&mut input).context("reading stdin")?;
            let reports = if discourse {
                pipeline.run_discourse(&input)
            } else {
                pipeline.run(&input)
            };
            if !human {
                writeln!(out, "{}", report_header(pipeline.output))?;
            }
            for r in &reports {
                if human {
                    pretty(&mut out, r, pipeline.output)?;
                } else {
                    writeln!(out, "{}", r.to_json(pipeline.output))?;
                }
            }
            Ok(match reports.iter().any(|r| !r.is_ok()) {
                false => 0,
                true if pipeline.strict => EXIT_STRICT,
                true => EXIT_SENTENCE_FAILURES,
            })
        }
        Command::Train {
            data,
            out: model_path,
            seed,
            epochs,
            lexicon,
        } => {
            let lex = load_lexicon(lexicon.as_deref())?;
            let text = fs::read_to_string(&data).with_context(|| format!("reading {}", data.display()))?;
            let rows = parse_training_tsv(&text)?;
            let dataset = build_dataset(&rows, &lex)?;
            let mut hyper = Hyper::default();
            if let Some(e) = epochs {
                hyper.epochs = e;
            }
            let model = train(&dataset, &hyper, seed)?;
            fs::write(&model_path, model.to_text()).with_context(|| format!("writing {}", model_path.display()))?;
            let ev = evaluate(&model, &dataset)?;
            writeln!(
                out,
                "trained on {} examples, {} features; training exact match {:.4}",
                dataset.len(),
                model.features.len(),
                ev.exact_match
            )?;
            Ok(0)
        }
        Command::Eval { config, gold } => {
            let (_, pipeline) = load_pipeline(&config)?;
            let text = fs::read_to_string(&gold).with_context(|| format!("reading {}", gold.display()))?;
            let items = parse_gold(&text)?;
            let report = pipeline.eval_corpus(&items);
            write!(out, "{}", report.to_table())?;
            writeln!(out, "{}", report.to_json())?;
            Ok(if report.failures > 0 { EXIT_SENTENCE_FAILURES } else { 0 })
        }
        Command::Reason {
            config,
            facts,
            mode,
            question,
        } => {
            let (_, pipeline) = load_pipeline(&config)?;
            let model = load_facts(&facts)?;
            match pipeline.reason(&question, &model, mode) {
                Ok(answers) => {
                    write!(out, "{answers}")?;
                    Ok(0)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Ok(EXIT_SENTENCE_FAILURES)
                }
            }
        }
        Command::CheckAce { sentence, lexicon } => {
            let lex = load_lexicon(lexicon.as_deref())?;
            let result = check_ace(&sentence, &lex);
            writeln!(out, "{}", serde_json::to_string(&result)?)?;
            Ok(if result.conformant { 0 } else { EXIT_SENTENCE_FAILURES })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
