use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use hatecascade::config::RunConfig;
use hatecascade::corpus::{self, render_stats_table, stats, Format, Split};
use hatecascade::pipeline::Pipeline;
use hatecascade::synthetic::{scale_cells, synthetic_corpus, EVAL_CELLS, TRAIN_CELLS};
use hatecascade::{Error, ErrorKind, Result};

/// Hate-speech detection pipeline for Devanagari text.
#[derive(Debug, Parser)]
#[command(name = "hatecascade", version)]
struct Cli {
    /// Run config (TOML, or a manifest.json from an earlier run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Backend family for every stage: mock, identity or remote.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Suppress JSON log lines on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest the configured splits into the output tree and print counts.
    Ingest,
    /// Print per-language, per-label counts for corpus files.
    Stats {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Input format; guessed from the extension by default.
        #[arg(long)]
        format: Option<Format>,
        #[arg(long, default_value = "train")]
        split: Split,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Backtranslate and duplicate positives of the training split.
    Augment {
        /// Also export the augmented corpus here (format from extension).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train the selected models.
    Train {
        /// Comma-separated model ids; defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
    },
    /// Write one prediction file per trained model.
    Predict {
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
    },
    /// Combine member predictions with the configured cascade.
    Ensemble,
    /// Score prediction files against gold labels.
    Evaluate {
        /// Prediction files; defaults to everything under predictions/.
        #[arg(long = "predictions", num_args = 1..)]
        predictions: Vec<PathBuf>,
        /// Gold corpus; defaults to the evaluation split.
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Re-render the report from a metrics JSON file.
    Report {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Every stage from ingest to report.
    Run,
    /// Write a seeded synthetic bilingual train/evaluation pair.
    Synth {
        /// Directory to write train.<ext> and evaluation.<ext> into.
        dir: PathBuf,
        /// Training samples; the evaluation split scales along. Omit for the
        /// full-size splits.
        #[arg(long)]
        train_size: Option<usize>,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
}

fn log_line(event: &str, fields: Value) {
    let mut obj = Map::new();
    obj.insert("event".into(), Value::String(event.into()));
    match fields {
        Value::Object(m) => obj.extend(m),
        Value::Null => {}
        other => {
            obj.insert("value".into(), other);
        }
    }
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{}", Value::Object(obj));
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::validation("this command needs --config"))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(std::path::absolute(out).map_err(|e| Error::io(out, e))?);
    }
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(b) = &cli.backend {
        cfg.backends.select_family(b)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_stats(paths: &[PathBuf], format: Option<Format>, split: Split, as_json: bool) -> Result<()> {
    let mut columns = Vec::new();
    for p in paths {
        let fmt = format
            .or_else(|| Format::from_path(p))
            .ok_or_else(|| Error::validation(format!("{}: cannot infer format; pass --format", p.display())))?;
        let c = corpus::ingest(p, fmt, split)?;
        let name = p
            .file_stem()
            .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        columns.push((name, stats(&c)));
    }
    if as_json {
        let obj: Map<String, Value> = columns.iter().map(|(n, s)| (n.clone(), s.to_json())).collect();
        println!("{}", serde_json::to_string_pretty(&Value::Object(obj)).expect("json"));
    } else {
        let refs: Vec<(&str, &corpus::CorpusStats)> = columns.iter().map(|(n, s)| (n.as_str(), s)).collect();
        print!("{}", render_stats_table(&refs));
    }
    Ok(())
}

fn synth(dir: &Path, train_size: Option<usize>, format: Format, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (train_cells, eval_cells) = match train_size {
        None => (TRAIN_CELLS.to_vec(), EVAL_CELLS.to_vec()),
        Some(n) => {
            let full_train: usize = TRAIN_CELLS.iter().map(|c| c.2).sum();
            let full_eval: usize = EVAL_CELLS.iter().map(|c| c.2).sum();
            let eval_n = ((n * full_eval) as f64 / full_train as f64).round().max(1.0) as usize;
            (scale_cells(&TRAIN_CELLS, n), scale_cells(&EVAL_CELLS, eval_n))
        }
    };
    let train = synthetic_corpus(Split::Train, &train_cells, 0, seed)?;
    let eval = synthetic_corpus(Split::Evaluation, &eval_cells, train.len() as u64, seed.wrapping_add(1))?;
    for (name, c) in [("train", &train), ("evaluation", &eval)] {
        let path = dir.join(format!("{name}.{}", format.extension()));
        corpus::export(c, &path, format)?;
        log_line("synth", json!({"path": path, "samples": c.len()}));
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let log = |event: &str, fields: Value| {
        if !cli.quiet {
            log_line(event, fields)
        }
    };
    match &cli.command {
        Command::Stats {
            paths,
            format,
            split,
            json,
        } => return print_stats(paths, *format, *split, *json),
        Command::Synth {
            dir,
            train_size,
            format,
        } => return synth(dir, *train_size, *format, cli.seed.unwrap_or(0)),
        _ => {}
    }

    let cfg = load_config(cli)?;
    let pipeline = Pipeline::new(cfg)?.with_log(log);
    let ws = pipeline.workspace();
    match &cli.command {
        Command::Ingest => {
            pipeline.ingest()?;
            print!(
                "{}",
                std::fs::read_to_string(ws.stats_text()).map_err(|e| Error::io(ws.stats_text(), e))?
            );
        }
        Command::Augment { output } => {
            let r = pipeline.augment()?;
            println!("{}", r.train.identity_line());
            if let Some(ev) = &r.evaluation {
                println!("{}", ev.identity_line());
                println!("{} = {} + {}", r.output, r.train.output, ev.output);
            }
            if let Some(path) = output {
                let fmt = Format::from_path(path)
                    .ok_or_else(|| Error::validation(format!("{}: unknown extension", path.display())))?;
                let c = corpus::ingest(ws.augmented(), Format::Jsonl, Split::Train)?;
                corpus::export(&c, path, fmt)?;
            }
        }
        Command::Train { models } => {
            let sel = (!models.is_empty()).then_some(models.as_slice());
            pipeline.train(sel)?;
        }
        Command::Predict { models } => {
            let sel = (!models.is_empty()).then_some(models.as_slice());
            pipeline.predict(sel)?;
        }
        Command::Ensemble => {
            pipeline.ensemble()?;
        }
        Command::Evaluate { predictions, gold } => {
            let sel = (!predictions.is_empty()).then_some(predictions.as_slice());
            print!("{}", pipeline.evaluate(sel, gold.as_deref())?.text());
        }
        Command::Report { input } => {
            print!("{}", pipeline.report(input.as_deref())?.text());
        }
        Command::Run => {
            print!("{}", pipeline.run()?.text());
        }
        Command::Stats { .. } | Command::Synth { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::Validation => 2,
                ErrorKind::Backend => 3,
            };
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}
