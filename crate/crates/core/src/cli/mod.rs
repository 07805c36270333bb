//! The `prevfuse` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 screening score at
//! or above `--threshold`.

mod config;
mod log;

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use self::config::{Config, CONFIG_ENV};
pub use self::log::{append_record, read_log, ScreeningRecord};

use crate::classifiers::{
    assemble_indicators, group_by_subject, parse_observations_csv, ClassifierRegistry, FeverRule,
    PayloadRouter, ScoreThreshold, DEFAULT_FEVER_THRESHOLD_C, DEFAULT_TAU,
};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, parse_dataset_csv};
use crate::fusion::{fuse, IndicatorVector};
use crate::mode::ModeSet;
use crate::prevalence::{
    aggregate_prevalence, derive_weights, parse_prevalence_csv, Aggregation, WeightVector,
    WeightsFile,
};
use crate::report::{render_report, ReportFormat};
use crate::rounding::{fmt_pct, fmt_score, RoundingMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_FLAGGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "prevfuse",
    version,
    propagate_version = true,
    about = "Prevalence-weighted fusion of symptom classifiers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive per-mode weights from a prevalence CSV
    Weights(WeightsArgs),
    /// Fuse one subject's indicators into a screening score
    Screen(ScreenArgs),
    /// Compare weighted and equal-weight fusion over a labeled dataset
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// Prevalence CSV (study_id,population,symptom,prevalence_pct)
    #[arg(long)]
    pub prevalence: Option<PathBuf>,
    /// Comma-separated mode order [default: cough,breath,fever]
    #[arg(long)]
    pub modes: Option<String>,
    /// Aggregation: mean or pop-weighted [default: mean]
    #[arg(long)]
    pub agg: Option<String>,
    /// Write the weights JSON here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    /// Weights JSON written by `prevfuse weights`
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Indicator labels, e.g. cough=1,breath=0,fever=1
    #[arg(long, conflicts_with = "observations")]
    pub indicators: Option<String>,
    /// Observations CSV (subject_id,mode,kind,value or subject_id,mode,score)
    #[arg(long)]
    pub observations: Option<PathBuf>,
    /// Subject to screen when the observations file holds several
    #[arg(long)]
    pub subject: Option<String>,
    /// Score threshold for score observations [default: 0.5]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Temperature threshold in °C for fever [default: 38.0]
    #[arg(long)]
    pub fever_threshold: Option<f64>,
    /// Exit with code 3 when percent is at or above this value
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Append a JSONL screening record to this file
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// full, or paper (two-decimal weights) [default: full]
    #[arg(long)]
    pub rounding: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Labeled dataset CSV (subject_id,truth,<mode>...)
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Weights JSON written by `prevfuse weights`
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// paper or full [default: full]
    #[arg(long)]
    pub rounding: Option<String>,
    /// table, csv or json [default: table]
    #[arg(long)]
    pub format: Option<String>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = Config::from_env().and_then(|config| match cli.command {
        Command::Weights(args) => cmd_weights(args, &config),
        Command::Screen(args) => cmd_screen(args, &config),
        Command::Evaluate(args) => cmd_evaluate(args, &config),
    });
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("prevfuse: {err}");
            err.exit_code()
        }
    }
}

fn required<T>(flag: Option<T>, config: Option<T>, name: &str) -> Result<T> {
    flag.or(config)
        .ok_or_else(|| Error::usage(format!("--{name} is required")))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))
}

fn parse_aggregation(text: &str) -> Result<Aggregation> {
    match text {
        "mean" => Ok(Aggregation::Mean),
        "pop-weighted" | "population_weighted" => Ok(Aggregation::PopulationWeighted),
        other => Err(Error::usage(format!("unknown aggregation {other:?}"))),
    }
}

fn parse_rounding(text: &str) -> Result<RoundingMode> {
    match text {
        "full" => Ok(RoundingMode::FullPrecision),
        "paper" => Ok(RoundingMode::PaperRounding),
        other => Err(Error::usage(format!("unknown rounding mode {other:?}"))),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) if path != Path::new("-") => {
            std::fs::write(path, text)?;
        }
        _ => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Reads and validates a weights JSON file.
pub fn load_weights(path: &Path) -> Result<WeightVector> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
    WeightsFile::from_json(&text)?.weight_vector()
}

pub fn cmd_weights(args: WeightsArgs, config: &Config) -> Result<i32> {
    let prevalence = required(args.prevalence, config.prevalence.clone(), "prevalence")?;
    let modes = match args.modes.or_else(|| config.modes.clone()) {
        Some(list) => ModeSet::parse_list(&list)?,
        None => ModeSet::default_three(),
    };
    let aggregation = match args.agg.or_else(|| config.agg.clone()) {
        Some(text) => parse_aggregation(&text)?,
        None => Aggregation::Mean,
    };
    let out = args.out.or_else(|| config.out.clone());

    let table = parse_prevalence_csv(open(&prevalence)?)?;
    let aggregated = aggregate_prevalence(&table, &modes, aggregation)?;
    let weights = derive_weights(&aggregated, &modes)?;
    let digest = table.source_digest().unwrap_or_default().to_string();

    let mut json = WeightsFile::new(&weights, aggregation, &digest).to_json();
    json.push('\n');
    write_output(out.as_deref(), &json)?;

    let summary = weights.summary_line();
    if out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(EXIT_OK)
}

pub fn cmd_screen(args: ScreenArgs, config: &Config) -> Result<i32> {
    let weights_path = required(args.weights, config.weights.clone(), "weights")?;
    let rounding = match args.rounding.or_else(|| config.rounding.clone()) {
        Some(text) => parse_rounding(&text)?,
        None => RoundingMode::FullPrecision,
    };
    let threshold = args.threshold.or(config.threshold);
    if let Some(t) = threshold {
        if !t.is_finite() {
            return Err(Error::usage("--threshold must be a finite percentage"));
        }
    }
    let log_path = args.log.or_else(|| config.log.clone());
    let subject = args.subject.or_else(|| config.subject.clone());

    let indicator_flag = args.indicators.or_else(|| {
        // a config value only applies when no observations flag was given
        if args.observations.is_none() {
            config.indicators.clone()
        } else {
            None
        }
    });
    let observations_path = args.observations.or_else(|| {
        if indicator_flag.is_none() {
            config.observations.clone()
        } else {
            None
        }
    });

    let mut weights = load_weights(&weights_path)?;
    if rounding == RoundingMode::PaperRounding {
        weights = weights.paper_rounded();
    }

    let indicators = match (indicator_flag, observations_path) {
        (Some(text), None) => {
            let iv = IndicatorVector::parse_assignments(&text)?;
            match &subject {
                Some(s) => iv.with_subject(s.clone()),
                None => iv,
            }
        }
        (None, Some(path)) => {
            let tau = args.tau.or(config.tau).unwrap_or(DEFAULT_TAU);
            let fever = args
                .fever_threshold
                .or(config.fever_threshold)
                .unwrap_or(DEFAULT_FEVER_THRESHOLD_C);
            let router = PayloadRouter {
                threshold: ScoreThreshold::new(tau)?,
                fever: FeverRule::new(fever)?,
            };
            let mut registry = ClassifierRegistry::new();
            for mode in weights.modes() {
                registry.register(mode.clone(), router);
            }
            let groups = group_by_subject(parse_observations_csv(open(&path)?)?);
            let observations = match &subject {
                Some(id) => groups
                    .into_iter()
                    .find(|(s, _)| s == id)
                    .map(|(_, obs)| obs)
                    .ok_or_else(|| Error::data(format!("no observations for subject {id}")))?,
                None if groups.len() == 1 => groups.into_iter().next().unwrap().1,
                None => {
                    return Err(Error::usage(
                        "observations cover several subjects; pick one with --subject",
                    ))
                }
            };
            assemble_indicators(&observations, &registry)?
        }
        (None, None) => {
            return Err(Error::usage(
                "one of --indicators or --observations is required",
            ))
        }
        (Some(_), Some(_)) => {
            return Err(Error::usage(
                "--indicators and --observations are exclusive",
            ))
        }
    };

    let result = fuse(&indicators, &weights)?;
    println!(
        "score={} percent={} modes={} renormalized={}",
        fmt_score(result.score),
        fmt_pct(result.percent),
        result.modes_used,
        result.renormalized
    );

    if let Some(path) = log_path {
        let subject_id = indicators.subject_id().unwrap_or("anonymous");
        append_record(
            &path,
            &ScreeningRecord::new(subject_id, &indicators, &result),
        )?;
    }

    match threshold {
        Some(t) if result.percent >= t => Ok(EXIT_FLAGGED),
        _ => Ok(EXIT_OK),
    }
}

pub fn cmd_evaluate(args: EvaluateArgs, config: &Config) -> Result<i32> {
    let dataset = required(args.dataset, config.dataset.clone(), "dataset")?;
    let weights_path = required(args.weights, config.weights.clone(), "weights")?;
    let rounding = match args.rounding.or_else(|| config.rounding.clone()) {
        Some(text) => parse_rounding(&text)?,
        None => RoundingMode::FullPrecision,
    };
    let format = match args.format.or_else(|| config.format.clone()) {
        Some(text) => ReportFormat::parse(&text)?,
        None => ReportFormat::Table,
    };
    let out = args.out.or_else(|| config.out.clone());

    let weights = load_weights(&weights_path)?;
    let (_, samples) = parse_dataset_csv(open(&dataset)?)?;
    let summary = evaluate(&samples, &weights, rounding)?;
    for &i in &summary.excluded_cases {
        eprintln!(
            "prevfuse: warning: case {} has an equal-weight score of 0; relative difference undefined, left out of the aggregate",
            i + 1
        );
    }
    write_output(out.as_deref(), &render_report(&summary, format))?;
    Ok(EXIT_OK)
}
