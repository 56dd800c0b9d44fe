use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hwseg::batch::{run_batch, BatchOptions, Emit};
use hwseg::config::effective_config;
use hwseg::evaluate::{evaluate_run, format_table};
use hwseg::export::{skew_estimate_json, write_json};
use hwseg::io::load_gray;
use hwseg::synth_out::{write_line, write_page};
use hwseg_core::eval::{ClassLabel, DEFAULT_TA};
use hwseg_core::skew::correct_skew;
use hwseg_core::synth::{generate_line, generate_page_with, PageSpec, SynthLineSpec};
use rand::{Rng, SeedableRng};

#[derive(Parser)]
#[command(name = "hwseg", version, about = "Line and word segmentation for handwritten pages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment every image in a directory using recorded predictions.
    Segment {
        #[command(flatten)]
        run: RunArgs,
        /// Outputs to write: any of yolo, voc, manifest.
        #[arg(long, default_value = "yolo,voc,manifest")]
        emit: String,
    },
    /// Segment and write every annotation format.
    Annotate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Score prediction files against ground truth.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum)]
        class: Class,
        #[arg(long, default_value_t = DEFAULT_TA)]
        ta: f64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Generate synthetic lines or pages with ground truth.
    Synth {
        #[command(subcommand)]
        kind: SynthKind,
    },
    /// Print the skew estimate of a single line image as JSON.
    SkewDebug {
        #[arg(long)]
        image: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON or key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. --set conf_word=0.45 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    line_preds: PathBuf,
    #[arg(long)]
    word_preds: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write per-line skew traces under out/skew.
    #[arg(long)]
    skew_debug: bool,
}

#[derive(Subcommand)]
enum SynthKind {
    /// A single rotated line.
    Line {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        skew: f64,
        #[arg(long, default_value_t = 5)]
        words: usize,
        #[arg(long, default_value_t = 36)]
        height: u32,
    },
    /// Pages of stacked lines, with predictions for every pipeline stage.
    Page {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated skews, one per line; random when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        skews: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        lines: usize,
        #[arg(long, default_value_t = 1)]
        pages: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Class {
    Line,
    Word,
}

impl From<Class> for ClassLabel {
    fn from(c: Class) -> Self {
        match c {
            Class::Line => ClassLabel::Line,
            Class::Word => ClassLabel::Word,
        }
    }
}

fn run_segment(run: RunArgs, mut emit: Emit) -> anyhow::Result<ExitCode> {
    let config = effective_config(run.config.config.as_deref(), &run.config.overrides)?;
    emit.skew_debug = run.skew_debug;
    let report = run_batch(&BatchOptions {
        images: run.images,
        line_preds: run.line_preds,
        word_preds: run.word_preds,
        out: run.out,
        config,
        emit,
        jobs: run.jobs,
    })?;
    for failure in report.failures() {
        if let Err(e) = &failure.result {
            eprintln!("failed: {}: {e}", failure.image_id);
        }
    }
    let total = report.outcomes.len();
    let failed = report.failed();
    eprintln!("{} of {total} documents segmented", total - failed);
    Ok(if failed > 0 { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Segment { run, emit } => {
            let emit = Emit::parse(&emit).map_err(anyhow::Error::msg)?;
            run_segment(run, emit)
        }
        Command::Annotate { run } => run_segment(run, Emit::all()),
        Command::Evaluate { gt, pred, class, ta, json } => {
            let result = evaluate_run(&gt, &pred, class.into(), ta)?;
            print!("{}", format_table(&[result.report]));
            if !result.unpaired.is_empty() {
                eprintln!("{} unpaired files", result.unpaired.len());
            }
            if let Some(path) = json {
                write_json(&path, &serde_json::to_value(result.report)?)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth { kind } => {
            match kind {
                SynthKind::Line { out, seed, skew, words, height } => {
                    let spec = SynthLineSpec {
                        height,
                        ..SynthLineSpec::new(skew, words, seed)
                    };
                    let line = generate_line(&spec)?;
                    write_line(&line, &format!("line{seed}"), &out)?;
                }
                SynthKind::Page { out, seed, skews, lines, pages, config } => {
                    let cfg = effective_config(config.config.as_deref(), &config.overrides)?;
                    if !skews.is_empty() && skews.len() != lines {
                        bail!("{} skews given for {lines} lines", skews.len());
                    }
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                    for p in 0..pages {
                        let page_seed = seed.wrapping_add(p as u64);
                        let page_skews = if skews.is_empty() {
                            (0..lines).map(|_| rng.random_range(-20..=20) as f64).collect()
                        } else {
                            skews.clone()
                        };
                        let page = generate_page_with(&PageSpec::new(page_skews, page_seed), &cfg)?;
                        write_page(&page, &out)
                            .with_context(|| format!("writing page {page_seed}"))?;
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::SkewDebug { image, config } => {
            let cfg = effective_config(config.config.as_deref(), &config.overrides)?;
            let img = load_gray(&image)?;
            let out = correct_skew(&img, &cfg.skew_params())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&skew_estimate_json(&out.estimate, &out.trace))?
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
