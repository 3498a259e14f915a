//! Reading meter CSVs into day-by-interval matrices, loading appliance
//! configuration, and writing fitted models and their reconstructions.
//!
//! # Input CSV
//!
//! One header row, then one row per reading:
//!
//! ```text
//! timestamp,kwh[,<appliance>...]
//! 2019-04-01T00:00:00-05:00,0.412,0.0,...
//! ```
//!
//! Timestamps are ISO-8601 with or without an offset (`T` or a space between
//! date and time). With an offset, the civil time at that offset decides the
//! day and the weekday; without one the timestamp is taken as local civil
//! time. Readings must sit on the ingestion grid (minute of day divisible by
//! the interval, zero seconds) and be finite and non-negative. Any column
//! other than the timestamp and value columns is read as sub-metered ground
//! truth for the appliance of that name. The column names are configurable,
//! e.g. `localminute`/`grid` for Pecan Street Dataport exports.
//!
//! # Matrix CSV
//!
//! Header `t,<label>...`, then one row per time index with the row number in
//! the first column. Values use shortest round-trip decimal formatting, so a
//! write followed by a read is bit-exact.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::basis::SparseBinaryBasis;
use crate::config::{validate_classes, ClassConfig, ModelConfig};
use crate::error::{Error, Result};
use crate::model::{DisaggregationModel, EnergyDataset, FixedLoadFactors, ShiftableLoadClass};
use crate::scalar::Scalar;
use crate::trainer::FitReport;

/// Sub-metered per-appliance usage aligned with an aggregate dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ApplianceGroundTruth<T> {
    names: Vec<String>,
    matrices: Vec<Array2<T>>,
}

impl<T: Scalar> ApplianceGroundTruth<T> {
    pub fn new(names: Vec<String>, matrices: Vec<Array2<T>>) -> Result<Self> {
        if names.len() != matrices.len() {
            return Err(Error::mismatch("ground truth", names.len(), matrices.len()));
        }
        let mut seen = HashSet::new();
        for (name, m) in names.iter().zip(&matrices) {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidData(format!("duplicate appliance {name:?}")));
            }
            if m.iter().any(|v| !(v.is_finite() && *v >= T::zero())) {
                return Err(Error::InvalidData(format!(
                    "appliance {name:?} has negative or non-finite entries"
                )));
            }
            if m.dim() != matrices[0].dim() {
                return Err(Error::mismatch(
                    format!("ground truth for {name:?}"),
                    format!("{:?}", matrices[0].dim()),
                    format!("{:?}", m.dim()),
                ));
            }
        }
        Ok(Self { names, matrices })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, name: &str) -> Option<&Array2<T>> {
        self.names.iter().position(|n| n == name).map(|i| &self.matrices[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array2<T>)> {
        self.names.iter().map(String::as_str).zip(&self.matrices)
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestOptions {
    pub interval_minutes: u32,
    /// Inclusive range of civil dates to keep.
    pub date_range: Option<(NaiveDate, NaiveDate)>,
    /// Drop Saturdays and Sundays.
    pub weekday_filter: bool,
    pub timestamp_column: String,
    pub value_column: String,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            interval_minutes: 1,
            date_range: None,
            weekday_filter: false,
            timestamp_column: "timestamp".into(),
            value_column: "kwh".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedDay {
    pub date: NaiveDate,
    pub missing_intervals: usize,
}

#[derive(Debug, Clone)]
pub struct Ingested<T> {
    pub dataset: EnergyDataset<T>,
    /// Present when the file carries appliance columns.
    pub ground_truth: Option<ApplianceGroundTruth<T>>,
    /// Days dropped for missing intervals, in date order.
    pub rejected: Vec<RejectedDay>,
}

struct DayBuffer<T> {
    total: Vec<Option<T>>,
    appliances: Vec<Vec<Option<T>>>,
}

pub fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(text) {
        return Some(t.naive_local());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S%#z", "%Y-%m-%dT%H:%M:%S%#z"] {
        if let Ok(t) = DateTime::parse_from_str(text, fmt) {
            return Some(t.naive_local());
        }
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(text, fmt).ok())
}

fn parse_reading<T: Scalar>(path: &Path, line: u64, column: &str, text: &str) -> Result<T> {
    let value: T = text.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("column {column:?}: cannot parse {text:?} as a number"),
    })?;
    if !(value.is_finite() && value >= T::zero()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("column {column:?}: reading {text:?} is negative or non-finite"),
        });
    }
    Ok(value)
}

/// Reads a meter CSV into a `D x N` dataset, `D = 1440 / interval_minutes`.
/// Days are ordered chronologically.
pub fn ingest_csv<T: Scalar>(path: impl AsRef<Path>, opts: &IngestOptions) -> Result<Ingested<T>> {
    let path = path.as_ref();
    if opts.interval_minutes == 0 || 1440 % opts.interval_minutes != 0 {
        return Err(Error::InvalidConfig(format!(
            "interval of {} minutes does not divide a day",
            opts.interval_minutes
        )));
    }
    let slots = (1440 / opts.interval_minutes) as usize;
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column {name:?}")))
    };
    let ts_col = find(&opts.timestamp_column)?;
    let value_col = find(&opts.value_column)?;
    let appliance_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != ts_col && *i != value_col)
        .map(|(i, h)| (i, h.to_string()))
        .collect();

    let mut days: BTreeMap<NaiveDate, DayBuffer<T>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let stamp = parse_timestamp(&record[ts_col])
            .ok_or_else(|| parse_err(line, format!("unrecognized timestamp {:?}", &record[ts_col])))?;
        let date = stamp.date();
        if let Some((from, to)) = opts.date_range {
            if date < from || date > to {
                continue;
            }
        }
        if opts.weekday_filter && matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            continue;
        }
        let minute = stamp.hour() * 60 + stamp.minute();
        if stamp.second() != 0 || stamp.nanosecond() != 0 || minute % opts.interval_minutes != 0 {
            return Err(parse_err(
                line,
                format!(
                    "timestamp {:?} is not on the {}-minute grid",
                    &record[ts_col], opts.interval_minutes
                ),
            ));
        }
        let slot = (minute / opts.interval_minutes) as usize;
        let total = parse_reading::<T>(path, line, &opts.value_column, &record[value_col])?;
        let appliances = appliance_cols
            .iter()
            .map(|(i, name)| parse_reading::<T>(path, line, name, &record[*i]))
            .collect::<Result<Vec<_>>>()?;

        let day = days.entry(date).or_insert_with(|| DayBuffer {
            total: vec![None; slots],
            appliances: vec![vec![None; slots]; appliance_cols.len()],
        });
        if day.total[slot].is_some() {
            return Err(parse_err(line, format!("duplicate reading for {date} slot {slot}")));
        }
        day.total[slot] = Some(total);
        for (buf, v) in day.appliances.iter_mut().zip(appliances) {
            buf[slot] = Some(v);
        }
    }

    let mut rejected = Vec::new();
    let mut labels = Vec::new();
    let mut columns: Vec<Vec<T>> = Vec::new();
    let mut appliance_columns: Vec<Vec<Vec<T>>> = vec![Vec::new(); appliance_cols.len()];
    for (date, day) in days {
        let missing = day.total.iter().filter(|v| v.is_none()).count();
        if missing > 0 {
            log::warn!("rejecting {date}: {missing} missing intervals");
            rejected.push(RejectedDay {
                date,
                missing_intervals: missing,
            });
            continue;
        }
        labels.push(date.format("%Y-%m-%d").to_string());
        columns.push(day.total.into_iter().flatten().collect());
        for (dst, src) in appliance_columns.iter_mut().zip(day.appliances) {
            dst.push(src.into_iter().flatten().collect());
        }
    }
    if columns.is_empty() {
        return Err(Error::NoDays(path.to_path_buf()));
    }

    let dataset = EnergyDataset::new(columns_to_matrix(slots, &columns), opts.interval_minutes, labels)?;
    let ground_truth = if appliance_cols.is_empty() {
        None
    } else {
        let names = appliance_cols.into_iter().map(|(_, n)| n).collect();
        let matrices = appliance_columns.iter().map(|c| columns_to_matrix(slots, c)).collect();
        Some(ApplianceGroundTruth::new(names, matrices)?)
    };
    Ok(Ingested {
        dataset,
        ground_truth,
        rejected,
    })
}

fn columns_to_matrix<T: Scalar>(rows: usize, columns: &[Vec<T>]) -> Array2<T> {
    Array2::from_shape_fn((rows, columns.len()), |(d, n)| columns[n][d])
}

/// Writes a dataset (and optional ground truth) in the input CSV format.
/// Day labels must be `YYYY-MM-DD` dates.
pub fn write_series_csv<T: Scalar>(
    path: impl AsRef<Path>,
    dataset: &EnergyDataset<T>,
    truth: Option<&ApplianceGroundTruth<T>>,
) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    let mut header = vec!["timestamp".to_string(), "kwh".to_string()];
    if let Some(truth) = truth {
        header.extend(truth.names().iter().cloned());
    }
    writer.write_record(&header)?;
    let step = dataset.interval_minutes();
    for (n, label) in dataset.day_labels().iter().enumerate() {
        let date = NaiveDate::parse_from_str(label, "%Y-%m-%d")
            .map_err(|_| Error::InvalidData(format!("day label {label:?} is not a YYYY-MM-DD date")))?;
        for d in 0..dataset.d() {
            let minute = d as u32 * step;
            let stamp = date.and_hms_opt(minute / 60, minute % 60, 0).expect("minute within day");
            let mut row = vec![stamp.format("%Y-%m-%dT%H:%M:%S").to_string(), dataset.values()[[d, n]].to_string()];
            if let Some(truth) = truth {
                row.extend(truth.iter().map(|(_, m)| m[[d, n]].to_string()));
            }
            writer.write_record(&row)?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidData(format!("{}: {other:?}", path.display())),
    }
}

fn toml_error(path: &Path, text: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.message().to_string(),
    }
}

/// Parses a TOML document from a file.
pub fn read_toml<C: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<C> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| toml_error(path, &text, e))
}

/// Reads a full training configuration (top-level options plus `[[class]]`
/// tables) and validates it.
pub fn load_model_config(path: impl AsRef<Path>) -> Result<ModelConfig> {
    let cfg: ModelConfig = read_toml(path)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads only the `[[class]]` tables of a configuration file.
pub fn load_appliance_config(path: impl AsRef<Path>) -> Result<Vec<ClassConfig>> {
    let cfg: ModelConfig = read_toml(path)?;
    validate_classes(&cfg.classes)?;
    Ok(cfg.classes)
}

pub fn write_matrix<T: Scalar>(path: impl AsRef<Path>, matrix: &Array2<T>, labels: &[String]) -> Result<()> {
    let path = path.as_ref();
    if labels.len() != matrix.ncols() {
        return Err(Error::mismatch("matrix column labels", matrix.ncols(), labels.len()));
    }
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    writer.write_record(std::iter::once("t").chain(labels.iter().map(String::as_str)))?;
    for (d, row) in matrix.axis_iter(Axis(0)).enumerate() {
        writer.write_record(std::iter::once(d.to_string()).chain(row.iter().map(|v| v.to_string())))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Reads a matrix CSV, returning the column labels and values.
pub fn read_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<(Vec<String>, Array2<T>)> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let labels: Vec<String> = reader.headers()?.iter().skip(1).map(String::from).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != labels.len() + 1 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} fields, found {}", labels.len() + 1, record.len()),
            });
        }
        for field in record.iter().skip(1) {
            values.push(field.parse::<T>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("cannot parse {field:?}"),
            })?);
        }
        rows += 1;
    }
    let matrix = Array2::from_shape_vec((rows, labels.len()), values).expect("row lengths checked");
    Ok((labels, matrix))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<C: serde::de::DeserializeOwned>(path: &Path) -> Result<C> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// File-system-safe stem for a class, prefixed with its position so distinct
/// names never collide.
pub fn class_file_stem(index: usize, name: &str) -> String {
    let slug: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    format!("{index}_{slug}")
}

pub const FIXED_FILE: &str = "fixed_load.csv";
pub const RECONSTRUCTION_FILE: &str = "reconstruction.csv";
pub const TRACE_FILE: &str = "objective_trace.csv";
pub const REPORT_FILE: &str = "report.json";
pub const DATA_FILE: &str = "data.csv";
pub const MANIFEST_FILE: &str = "model.json";

pub fn shiftable_file(index: usize, name: &str) -> String {
    format!("shiftable_{}.csv", class_file_stem(index, name))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes the per-class, fixed-load and aggregate reconstructions, the
/// objective trace, and the fit report. Returns the paths written.
pub fn export_disaggregation<T: Scalar>(
    model: &DisaggregationModel<T>,
    dataset: &EnergyDataset<T>,
    report: &FitReport,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    let dims = model.dims()?;
    if dims != dataset.values().dim() {
        return Err(Error::mismatch(
            "model vs dataset",
            format!("{:?}", dataset.values().dim()),
            format!("{dims:?}"),
        ));
    }
    create_dir(dir)?;
    let labels = dataset.day_labels();
    let mut written = Vec::new();
    let mut put = |name: String, m: Array2<T>| -> Result<()> {
        let path = dir.join(name);
        write_matrix(&path, &m, labels)?;
        written.push(path);
        Ok(())
    };
    for (j, class) in model.shiftable.iter().enumerate() {
        put(shiftable_file(j, &class.name), class.reconstruction())?;
    }
    put(FIXED_FILE.into(), model.fixed_reconstruction())?;
    put(RECONSTRUCTION_FILE.into(), model.reconstruct()?)?;

    let trace_path = dir.join(TRACE_FILE);
    let mut writer = csv::Writer::from_path(&trace_path).map_err(|e| csv_io(&trace_path, e))?;
    writer.write_record(["iteration", "objective"])?;
    for (i, v) in report.objective_trace.iter().enumerate() {
        writer.write_record([i.to_string(), v.to_string()])?;
    }
    writer.flush().map_err(|e| Error::io(&trace_path, e))?;
    written.push(trace_path);

    let report_path = dir.join(REPORT_FILE);
    write_json(&report_path, report)?;
    written.push(report_path);
    Ok(written)
}

/// Writes the raw data matrix.
pub fn export_dataset<T: Scalar>(dataset: &EnergyDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    write_matrix(path, dataset.values(), dataset.day_labels())
}

/// Reads a matrix written by [`export_dataset`].
pub fn read_dataset<T: Scalar>(path: impl AsRef<Path>) -> Result<EnergyDataset<T>> {
    let (labels, values) = read_matrix(path)?;
    let interval = if !values.is_empty() && 1440 % values.nrows() == 0 {
        (1440 / values.nrows()) as u32
    } else {
        1
    };
    EnergyDataset::new(values, interval, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassManifest {
    pub name: String,
    pub peak: f64,
    pub l0_budget: usize,
    /// Reconstruction file written by [`export_disaggregation`].
    pub reconstruction_file: String,
    pub weights_file: String,
    pub support_sets: Vec<Vec<usize>>,
}

/// Everything needed to rebuild a model from its exported factor files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub rows: usize,
    pub days: Vec<String>,
    pub fixed_rank: usize,
    pub classes: Vec<ClassManifest>,
}

/// Writes the factor matrices and a JSON manifest into `dir`.
pub fn export_model<T: Scalar>(model: &DisaggregationModel<T>, day_labels: &[String], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let (d, n) = model.dims()?;
    if day_labels.len() != n {
        return Err(Error::mismatch("day labels", n, day_labels.len()));
    }
    create_dir(dir)?;
    let mut written = Vec::new();
    let rank_labels: Vec<String> = (0..model.fixed.rank()).map(|k| format!("k{k}")).collect();
    let basis_path = dir.join("fixed_basis.csv");
    write_matrix(&basis_path, &model.fixed.basis, &rank_labels)?;
    written.push(basis_path);
    let weights_path = dir.join("fixed_weights.csv");
    write_matrix(&weights_path, &model.fixed.weights, day_labels)?;
    written.push(weights_path);

    let mut classes = Vec::new();
    for (j, class) in model.shiftable.iter().enumerate() {
        let weights_file = format!("weights_{}.csv", class_file_stem(j, &class.name));
        let path = dir.join(&weights_file);
        let as_int = class.weights.mapv(|b| if b { T::one() } else { T::zero() });
        write_matrix(&path, &as_int, day_labels)?;
        written.push(path);
        classes.push(ClassManifest {
            name: class.name.clone(),
            peak: class.peak.as_f64(),
            l0_budget: class.l0_budget,
            reconstruction_file: shiftable_file(j, &class.name),
            weights_file,
            support_sets: class.basis().support_sets().to_vec(),
        });
    }
    let manifest = ModelManifest {
        rows: d,
        days: day_labels.to_vec(),
        fixed_rank: model.fixed.rank(),
        classes,
    };
    let path = dir.join(MANIFEST_FILE);
    write_json(&path, &manifest)?;
    written.push(path);
    Ok(written)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<ModelManifest> {
    read_json(&dir.as_ref().join(MANIFEST_FILE))
}

pub fn read_report(dir: impl AsRef<Path>) -> Result<FitReport> {
    read_json(&dir.as_ref().join(REPORT_FILE))
}

/// Rebuilds a model written by [`export_model`].
pub fn load_model<T: Scalar>(dir: impl AsRef<Path>) -> Result<(DisaggregationModel<T>, ModelManifest)> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let (_, basis) = read_matrix::<T>(dir.join("fixed_basis.csv"))?;
    let (_, weights) = read_matrix::<T>(dir.join("fixed_weights.csv"))?;
    let n = manifest.days.len();
    let mut shiftable = Vec::new();
    for c in &manifest.classes {
        let basis = SparseBinaryBasis::new(manifest.rows, c.support_sets.clone())?;
        let (_, w) = read_matrix::<T>(dir.join(&c.weights_file))?;
        if w.iter().any(|v| *v != T::zero() && *v != T::one()) {
            return Err(Error::InvalidData(format!("{}: weights are not binary", c.weights_file)));
        }
        let mut class = ShiftableLoadClass::new(c.name.clone(), T::lit(c.peak), c.l0_budget, basis, n);
        if w.dim() != class.weights.dim() {
            return Err(Error::mismatch(
                format!("weights of {:?}", c.name),
                format!("{:?}", class.weights.dim()),
                format!("{:?}", w.dim()),
            ));
        }
        class.weights = w.mapv(|v| v == T::one());
        shiftable.push(class);
    }
    let model = DisaggregationModel {
        fixed: FixedLoadFactors { basis, weights },
        shiftable,
    };
    model.dims()?;
    Ok((model, manifest))
}
