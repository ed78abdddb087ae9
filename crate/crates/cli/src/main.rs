use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use hopqa_core::backends::Mode;
use hopqa_core::classify::{self, stacking::accuracy};
use hopqa_core::config::Config;
use hopqa_core::evaluate::{evaluate_run, render_table, ConceptTable};
use hopqa_core::model::{serialize_result, Question};
use hopqa_core::pipeline::Pipeline;

#[derive(Parser, Debug)]
#[command(
    name = "hopqa",
    version,
    about = "Multi-hop biomedical question answering"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Backend mode: live, record or replay.
    #[arg(long, global = true, value_name = "MODE", conflicts_with_all = ["record", "replay"])]
    mode: Option<Mode>,

    /// Shorthand for `--mode record`.
    #[arg(long, global = true, conflicts_with = "replay")]
    record: bool,

    /// Shorthand for `--mode replay`.
    #[arg(long, global = true)]
    replay: bool,

    /// Transcript file for record/replay (overrides the config).
    #[arg(long, global = true, value_name = "FILE")]
    transcript: Option<PathBuf>,

    /// Worker threads for batch runs (overrides the config).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Answer one question and print its trace record.
    Answer {
        #[arg(long)]
        question: String,
        #[arg(long, default_value = "q1")]
        id: String,
    },
    /// Answer every question in a JSONL file.
    Batch {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long = "out", value_name = "FILE")]
        output: PathBuf,
    },
    /// Train the question classifier from labelled JSONL.
    TrainClassifier {
        #[arg(long, value_name = "FILE")]
        data: PathBuf,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
    },
    /// Score predictions against gold answers.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        pred: PathBuf,
        #[arg(long, value_name = "FILE")]
        gold: PathBuf,
        #[arg(long, value_name = "FILE")]
        concepts: Option<PathBuf>,
        /// Label for the run column of the report.
        #[arg(long, default_value = "Run 1")]
        run: String,
    },
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if cli.record {
        cfg.mode = Mode::Record;
    }
    if cli.replay {
        cfg.mode = Mode::Replay;
    }
    if let Some(t) = &cli.transcript {
        cfg.transcript = Some(t.clone());
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Answer { question, id } => {
            let q = Question::new(id, question)?;
            let pipeline = Pipeline::from_config(cfg)?;
            let result = pipeline.answer_question(q);
            println!("{}", serialize_result(&result));
            if !result.is_answered() {
                bail!(
                    "question not answered: {}",
                    result.failure_reason.as_deref().unwrap_or("unknown reason")
                );
            }
        }
        Command::Batch { input, output } => {
            let pipeline = Pipeline::from_config(cfg)?;
            let summary = pipeline.run_batch(&input, &output)?;
            for r in &summary.rounds {
                eprintln!(
                    "round {}: attempted {}, answered {}, failed {}, recovered {}",
                    r.round, r.attempted, r.answered, r.failed, r.recovered
                );
            }
            eprintln!(
                "total {}: answered {}, failed {} ({} resumed from existing output)",
                summary.total, summary.answered, summary.failed, summary.resumed
            );
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::TrainClassifier { data, model } => {
            let examples = classify::read_training_jsonl(&data)
                .with_context(|| format!("reading {}", data.display()))?;
            let tc = cfg.training_config();
            let (m, report) = classify::train(&examples, &tc)?;
            report
                .verify_out_of_fold()
                .map_err(|e| anyhow::anyhow!("out-of-fold check failed: {e}"))?;
            m.save(&model)?;
            let train_acc = accuracy(&examples, |q| {
                m.classify(q)
                    .unwrap_or(hopqa_core::model::QuestionKind::Direct)
            });
            eprintln!(
                "trained on {} examples with {} folds; meta weights {:?}, bias {:.4}; training accuracy {:.3}",
                examples.len(),
                report.folds_used,
                m.meta_weights,
                m.meta_bias,
                train_acc
            );
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", model.display());
        }
        Command::Evaluate {
            pred,
            gold,
            concepts,
            run,
        } => {
            let table = concepts.as_deref().map(ConceptTable::load).transpose()?;
            let report = evaluate_run(&pred, &gold, table.as_ref())?;
            let id = pred
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            print!("{}", render_table(&[(run.as_str(), id.as_str(), &report)]));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("HOPQA_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    use clap::CommandFactory;
                    eprintln!("{}", e.render());
                    eprint!("{}", Cli::command().render_help());
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
