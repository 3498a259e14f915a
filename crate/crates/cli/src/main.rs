//! `disagg`: generate synthetic households, fit disaggregation models,
//! score them against sub-metered truth, and plot single days.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use disagg_core::data::{self, IngestOptions};
use disagg_core::evaluation::evaluate;
use disagg_core::model::EnergyDataset;
use disagg_core::synth::{self, SynthSpec};
use disagg_core::{trainer, Error, GroundTruth, Model, ModelConfig, Order, UpdateRule};
use log::info;

/// Default output directory when `--out-dir` is not given.
const OUT_DIR_ENV: &str = "DISAGG_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "disagg", version, about = "Fixed/shiftable household load disaggregation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic household from a spec file.
    Synth {
        spec: PathBuf,
        #[arg(long, env = OUT_DIR_ENV, default_value = "disagg-out")]
        out_dir: PathBuf,
    },
    /// Fit a model to a meter CSV.
    Fit(FitArgs),
    /// Score a fitted model against appliance columns of a meter CSV.
    Eval {
        model_dir: PathBuf,
        truth: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Draw one day of a fitted model as SVG.
    Plot {
        model_dir: PathBuf,
        day: usize,
        out_svg: PathBuf,
    },
}

#[derive(Args, Debug)]
struct FitArgs {
    data: PathBuf,
    config: PathBuf,
    #[arg(long, env = OUT_DIR_ENV, default_value = "disagg-out")]
    out_dir: PathBuf,

    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_parser = ["paper-kl", "frobenius"])]
    update_rule: Option<String>,
    /// Order of days within a shiftable sweep.
    #[arg(long, value_parser = ["sequential", "random"])]
    sample_order: Option<String>,
    /// Order of classes within a day.
    #[arg(long, value_parser = ["sequential", "random"])]
    class_order: Option<String>,

    /// Minutes per interval of the ingestion grid.
    #[arg(long, default_value_t = 1)]
    interval: u32,
    /// Drop Saturdays and Sundays.
    #[arg(long)]
    weekdays_only: bool,
    #[arg(long)]
    from: Option<NaiveDate>,
    #[arg(long)]
    to: Option<NaiveDate>,
    #[arg(long, default_value = "timestamp")]
    timestamp_column: String,
    #[arg(long, default_value = "kwh")]
    value_column: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) if e.is_numerical() => 3,
            Failure::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Synth { spec, out_dir } => cmd_synth(&spec, &out_dir),
        Command::Fit(args) => cmd_fit(&args),
        Command::Eval { model_dir, truth, json } => cmd_eval(&model_dir, &truth, json.as_deref()),
        Command::Plot { model_dir, day, out_svg } => cmd_plot(&model_dir, day, &out_svg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

/// Subdirectory of the synth output holding the generating model.
const TRUTH_MODEL_DIR: &str = "truth_model";
/// Meter-format CSV written by synth, with one ground-truth column per class.
const SERIES_FILE: &str = "series.csv";

fn cmd_synth(spec_path: &Path, out_dir: &Path) -> Result<(), Failure> {
    let spec: SynthSpec = data::read_toml(spec_path)?;
    spec.validate()?;
    // Generate before touching the output directory so a bad spec leaves
    // nothing behind.
    let generated = synth::generate::<f64>(&spec)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::Io { path: out_dir.into(), source: e })?;
    data::write_series_csv(out_dir.join(SERIES_FILE), &generated.dataset, Some(&generated.truth))?;
    let truth_dir = out_dir.join(TRUTH_MODEL_DIR);
    data::export_model(&generated.model, generated.dataset.day_labels(), &truth_dir)?;
    data::export_dataset(&generated.dataset, truth_dir.join(data::DATA_FILE))?;
    println!(
        "wrote {} days x {} intervals to {}",
        generated.dataset.n(),
        generated.dataset.d(),
        out_dir.display()
    );
    Ok(())
}

fn parse_choice<V: std::str::FromStr<Err = Error>>(value: &Option<String>) -> Result<Option<V>, Failure> {
    value.as_deref().map(str::parse).transpose().map_err(Failure::from)
}

fn apply_overrides(cfg: &mut ModelConfig, args: &FitArgs) -> Result<(), Failure> {
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    if let Some(max) = args.max_iters {
        cfg.max_iterations = max;
    }
    if let Some(tol) = args.tol {
        cfg.convergence_tol = tol;
    }
    if let Some(rule) = parse_choice::<UpdateRule>(&args.update_rule)? {
        cfg.update_rule = rule;
    }
    if let Some(order) = parse_choice::<Order>(&args.sample_order)? {
        cfg.sample_order = order;
    }
    if let Some(order) = parse_choice::<Order>(&args.class_order)? {
        cfg.class_order = order;
    }
    cfg.validate().map_err(Failure::from)
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let mut cfg = data::load_model_config(&args.config)?;
    apply_overrides(&mut cfg, args)?;
    let date_range = match (args.from, args.to) {
        (None, None) => None,
        (from, to) => Some((from.unwrap_or(NaiveDate::MIN), to.unwrap_or(NaiveDate::MAX))),
    };
    let opts = IngestOptions {
        interval_minutes: args.interval,
        date_range,
        weekday_filter: args.weekdays_only,
        timestamp_column: args.timestamp_column.clone(),
        value_column: args.value_column.clone(),
    };
    let ingested = data::ingest_csv::<f64>(&args.data, &opts)?;
    for r in &ingested.rejected {
        eprintln!("rejected {}: {} missing intervals", r.date, r.missing_intervals);
    }
    let dataset = ingested.dataset;
    info!("fitting {} days x {} intervals", dataset.n(), dataset.d());

    let started = Instant::now();
    let (model, report) = trainer::fit(&dataset, &cfg)?;
    data::export_disaggregation(&model, &dataset, &report, &args.out_dir)?;
    data::export_model(&model, dataset.day_labels(), &args.out_dir)?;
    data::export_dataset(&dataset, args.out_dir.join(data::DATA_FILE))?;
    println!(
        "{:?} after {} iterations, objective {:.6e}, {:.2?}",
        report.termination,
        report.iterations_run,
        report.final_objective(),
        started.elapsed()
    );
    Ok(())
}

/// Restricts an ingested truth file to the days the model was fitted on.
fn align_truth(
    dataset: &EnergyDataset<f64>,
    truth: &GroundTruth,
    days: &[String],
) -> Result<(EnergyDataset<f64>, GroundTruth), Failure> {
    let columns = days
        .iter()
        .map(|day| {
            dataset
                .day_labels()
                .iter()
                .position(|l| l == day)
                .ok_or_else(|| Failure::Core(Error::InvalidData(format!("truth file has no complete day {day}"))))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let pick = |m: &ndarray::Array2<f64>| m.select(ndarray::Axis(1), &columns);
    let aligned = EnergyDataset::new(pick(dataset.values()), dataset.interval_minutes(), days.to_vec())?;
    let names = truth.names().to_vec();
    let matrices = truth.iter().map(|(_, m)| pick(m)).collect();
    Ok((aligned, GroundTruth::new(names, matrices)?))
}

fn cmd_eval(model_dir: &Path, truth_path: &Path, json: Option<&Path>) -> Result<(), Failure> {
    let (model, manifest): (Model, _) = data::load_model(model_dir)?;
    if manifest.rows == 0 || 1440 % manifest.rows != 0 {
        return Err(Error::InvalidData(format!("model has {} intervals per day", manifest.rows)).into());
    }
    let opts = IngestOptions {
        interval_minutes: (1440 / manifest.rows) as u32,
        ..IngestOptions::default()
    };
    let ingested = data::ingest_csv::<f64>(truth_path, &opts)?;
    let truth = ingested.ground_truth.ok_or_else(|| {
        Failure::Core(Error::InvalidData(format!("{} has no appliance columns", truth_path.display())))
    })?;
    let (dataset, truth) = align_truth(&ingested.dataset, &truth, &manifest.days)?;
    let report = evaluate(&model, &truth, &dataset)?;
    println!("{report}");
    if let Some(path) = json {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        fs::write(path, text).map_err(|e| Error::Io { path: path.into(), source: e })?;
    }
    Ok(())
}

fn cmd_plot(model_dir: &Path, day: usize, out_svg: &Path) -> Result<(), Failure> {
    let (model, _): (Model, _) = data::load_model(model_dir)?;
    let dataset = data::read_dataset::<f64>(model_dir.join(data::DATA_FILE))?;
    if day >= dataset.n() {
        return Err(Failure::Usage(format!(
            "day {day} out of range: the model has {} days",
            dataset.n()
        )));
    }
    let svg = plot::render_day(&model, &dataset, day)?;
    fs::write(out_svg, svg).map_err(|e| Error::Io { path: out_svg.into(), source: e })?;
    Ok(())
}
