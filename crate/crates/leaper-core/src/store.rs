//! Bit-exact persistence of datasets, sampling plans, spaces, surfaces, and
//! trained models.
//!
//! Two public data contracts:
//!
//! * **Dataset CSV** — header `env_id, <profile features...>,
//!   opt_<i>_<name>..., <response columns>`; one sample per row; UTF-8, `.`
//!   decimal, LF line endings. Option columns hold level indices (integers);
//!   response columns are any subset of `exec_ms, bram, dsp, ff, lut`, and an
//!   empty cell marks a response that was not measured for that row.
//! * **Model JSON** — `{"format_version": 1, "kind": "base"|"transfer",
//!   "model": {...}}` holding every trained component.
//!
//! Every floating-point value is written with 17 significant digits
//! (`d.dddddddddddddddde±x`), which pins the exact `f64` bit pattern, so a
//! load never drifts from what was saved and identical values always produce
//! identical bytes.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::base_model::{predict_base, BaseModel};
use crate::doe::DoePlan;
use crate::domain::{
    ApplicationProfile, Configuration, ConfigurationSpace, Dataset, Metric, Sample,
};
use crate::error::{Error, Result};
use crate::synth::SurfaceParams;
use crate::transfer::{predict_target, TransferModel};

/// Version written into every model file; loading any other version fails.
pub const FORMAT_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Float formatting
// ---------------------------------------------------------------------------

/// Formats `v` with 17 significant digits in scientific notation. 17 digits
/// uniquely identify an `f64`, so parsing the text recovers the exact value.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON formatter that writes every `f64` via [`format_float`]; everything
/// else follows the compact default.
struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes `value` as compact JSON with 17-significant-digit floats.
fn to_canonical_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut bytes, SigDigitFormatter);
    value.serialize(&mut ser)?;
    Ok(bytes)
}

/// Serializes `value` as a compact JSON string with 17-significant-digit
/// floats — the exact encoding every file in this module uses.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let bytes = to_canonical_json(value)?;
    Ok(String::from_utf8(bytes).expect("JSON output is UTF-8"))
}

/// Writes canonical JSON plus a trailing LF.
fn write_json_file<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut bytes = to_canonical_json(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Dataset CSV
// ---------------------------------------------------------------------------

fn option_columns(space: &ConfigurationSpace) -> Vec<String> {
    space
        .options
        .iter()
        .enumerate()
        .map(|(i, o)| format!("opt_{i}_{}", o.name()))
        .collect()
}

/// Response columns a dataset needs: every metric present in at least one
/// sample, in canonical metric order.
fn response_columns(dataset: &Dataset) -> Vec<Metric> {
    Metric::ALL
        .into_iter()
        .filter(|m| dataset.samples.iter().any(|s| s.responses.contains_key(m)))
        .collect()
}

fn check_unique_columns(columns: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for c in columns {
        if !seen.insert(c.as_str()) {
            return Err(Error::SchemaMismatch(format!("duplicate column {c:?}")));
        }
    }
    Ok(())
}

/// Writes `dataset` as CSV. Deterministic: identical datasets produce
/// byte-identical files.
pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let first = dataset.samples.first().ok_or(Error::EmptyInput("dataset"))?;
    let profile_names = first.profile.names();
    for (i, sample) in dataset.samples.iter().enumerate() {
        if sample.profile.names() != profile_names {
            return Err(Error::SchemaMismatch(format!(
                "sample {i} profile features {:?} differ from sample 0 {profile_names:?}",
                sample.profile.names()
            )));
        }
        dataset.space.validate_configuration(&sample.configuration)?;
    }

    let metrics = response_columns(dataset);
    let mut columns: Vec<String> = vec!["env_id".to_owned()];
    columns.extend(profile_names.iter().cloned());
    columns.extend(option_columns(&dataset.space));
    columns.extend(metrics.iter().map(|m| m.csv_column().to_owned()));
    check_unique_columns(&columns)?;

    let mut out = columns.join(",");
    out.push('\n');
    for sample in &dataset.samples {
        let mut fields: Vec<String> = vec![dataset.env_id.clone()];
        fields.extend(sample.profile.values().iter().map(|&v| format_float(v)));
        fields.extend(sample.configuration.assignments.iter().map(|l| l.to_string()));
        fields.extend(metrics.iter().map(|m| {
            sample.responses.get(m).map(|&v| format_float(v)).unwrap_or_default()
        }));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Parses the header row into (profile names, response metrics), verifying
/// the option block matches `space` exactly. Errors name the first offending
/// column.
fn parse_header(
    header: &str,
    space: &ConfigurationSpace,
) -> Result<(Vec<String>, Vec<Metric>)> {
    let cols: Vec<&str> = header.split(',').collect();
    if cols[0] != "env_id" {
        return Err(Error::SchemaMismatch(format!(
            "expected column \"env_id\", found {:?}",
            cols[0]
        )));
    }
    let opt_cols = option_columns(space);

    // The option block sits between the profile features and the response
    // columns. Locate its start; with no options the response suffix (known
    // metric names) bounds the profile block instead.
    let opt_start = if let Some(first_opt) = opt_cols.first() {
        match cols.iter().position(|c| c == first_opt) {
            Some(p) => p,
            None => {
                return Err(Error::SchemaMismatch(format!(
                    "missing option column {first_opt:?}"
                )))
            }
        }
    } else {
        let mut s = cols.len();
        while s > 1 && Metric::from_csv_column(cols[s - 1]).is_some() {
            s -= 1;
        }
        s
    };

    let profile_names: Vec<String> =
        cols[1..opt_start].iter().map(|c| (*c).to_owned()).collect();

    for (k, expected) in opt_cols.iter().enumerate() {
        match cols.get(opt_start + k) {
            Some(found) if found == expected => {}
            Some(found) => {
                return Err(Error::SchemaMismatch(format!(
                    "expected column {expected:?}, found {found:?}"
                )))
            }
            None => {
                return Err(Error::SchemaMismatch(format!(
                    "missing option column {expected:?}"
                )))
            }
        }
    }

    let mut metrics = Vec::new();
    for c in &cols[opt_start + opt_cols.len()..] {
        match Metric::from_csv_column(c) {
            Some(m) => metrics.push(m),
            None => {
                return Err(Error::SchemaMismatch(format!(
                    "unknown response column {c:?}"
                )))
            }
        }
    }

    check_unique_columns(&cols.iter().map(|c| (*c).to_owned()).collect::<Vec<_>>())?;
    Ok((profile_names, metrics))
}

fn parse_finite(field: &str, line: usize, column: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Malformed {
        line,
        message: format!("column {column:?}: invalid number {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Malformed {
            line,
            message: format!("column {column:?}: non-finite value {field:?}"),
        });
    }
    Ok(v)
}

/// Reads a dataset CSV written by [`write_dataset`] (or by any measurement
/// rig following the same layout). `space` supplies the option schema the
/// file must match. Row errors report the physical line number, the header
/// being line 1.
pub fn read_dataset(path: &Path, space: &ConfigurationSpace) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let header = lines.next().ok_or(Error::EmptyInput("dataset file"))?;
    let (profile_names, metrics) = parse_header(header, space)?;
    let n_fields = 1 + profile_names.len() + space.options.len() + metrics.len();

    let mut env_id: Option<String> = None;
    let mut samples = Vec::new();
    for (i, raw_line) in lines.enumerate() {
        let line = i + 2; // physical line number; header is line 1
        let fields: Vec<&str> = raw_line.split(',').collect();
        if fields.len() != n_fields {
            return Err(Error::Malformed {
                line,
                message: format!("expected {n_fields} fields, got {}", fields.len()),
            });
        }

        match &env_id {
            None => env_id = Some(fields[0].to_owned()),
            Some(first) if fields[0] != first => {
                return Err(Error::Malformed {
                    line,
                    message: format!(
                        "env_id {:?} differs from {first:?} on the first row",
                        fields[0]
                    ),
                })
            }
            Some(_) => {}
        }

        let mut cursor = 1;
        let mut values = Vec::with_capacity(profile_names.len());
        for name in &profile_names {
            values.push(parse_finite(fields[cursor], line, name)?);
            cursor += 1;
        }
        let profile = ApplicationProfile::new(profile_names.clone(), values)
            .map_err(|e| Error::Malformed { line, message: e.to_string() })?;

        let mut levels = Vec::with_capacity(space.options.len());
        for option in &space.options {
            let field = fields[cursor];
            let level: usize = field.parse().map_err(|_| Error::Malformed {
                line,
                message: format!(
                    "option {:?}: invalid level index {field:?}",
                    option.name()
                ),
            })?;
            if level >= option.level_count() {
                return Err(Error::Malformed {
                    line,
                    message: format!(
                        "option {:?} level {level} out of range ({} levels)",
                        option.name(),
                        option.level_count()
                    ),
                });
            }
            levels.push(level);
            cursor += 1;
        }

        let mut responses = std::collections::BTreeMap::new();
        for metric in &metrics {
            let field = fields[cursor];
            if !field.is_empty() {
                responses.insert(*metric, parse_finite(field, line, metric.csv_column())?);
            }
            cursor += 1;
        }

        samples.push(Sample {
            profile,
            configuration: Configuration::new(levels),
            responses,
        });
    }

    let env_id = env_id.ok_or(Error::EmptyInput("dataset file has no rows"))?;
    Ok(Dataset { env_id, space: space.clone(), samples })
}

/// Writes `dataset`'s identifying columns plus one `predicted_<metric>`
/// column holding `predictions` (row-aligned with the samples).
pub fn write_predictions(
    dataset: &Dataset,
    metric: Metric,
    predictions: &[f64],
    path: &Path,
) -> Result<()> {
    if predictions.len() != dataset.samples.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.samples.len(),
            actual: predictions.len(),
        });
    }
    let first = dataset.samples.first().ok_or(Error::EmptyInput("dataset"))?;
    let profile_names = first.profile.names();

    let mut columns: Vec<String> = vec!["env_id".to_owned()];
    columns.extend(profile_names.iter().cloned());
    columns.extend(option_columns(&dataset.space));
    columns.push(format!("predicted_{}", metric.csv_column()));
    check_unique_columns(&columns)?;

    let mut out = columns.join(",");
    out.push('\n');
    for (sample, &pred) in dataset.samples.iter().zip(predictions) {
        let mut fields: Vec<String> = vec![dataset.env_id.clone()];
        fields.extend(sample.profile.values().iter().map(|&v| format_float(v)));
        fields.extend(sample.configuration.assignments.iter().map(|l| l.to_string()));
        fields.push(format_float(pred));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Plans, spaces, surfaces
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PlanFile {
    seed: u64,
    configurations: Vec<Vec<usize>>,
}

/// Writes a sampling plan as JSON (`{"seed": ..., "configurations": [...]}}`).
pub fn write_plan(plan: &DoePlan, path: &Path) -> Result<()> {
    let file = PlanFile {
        seed: plan.seed,
        configurations: plan
            .configurations
            .iter()
            .map(|c| c.assignments.clone())
            .collect(),
    };
    write_json_file(&file, path)
}

/// Reads a sampling plan and validates every configuration against `space`.
pub fn read_plan(path: &Path, space: &ConfigurationSpace) -> Result<DoePlan> {
    let text = fs::read_to_string(path)?;
    let file: PlanFile = serde_json::from_str(&text)?;
    let configurations: Vec<Configuration> =
        file.configurations.into_iter().map(Configuration::new).collect();
    for c in &configurations {
        space.validate_configuration(c)?;
    }
    Ok(DoePlan { space: space.clone(), configurations, seed: file.seed })
}

/// Writes a configuration space as JSON.
pub fn write_space(space: &ConfigurationSpace, path: &Path) -> Result<()> {
    write_json_file(space, path)
}

/// Reads a configuration space (option names, kinds, levels) from JSON.
pub fn read_space(path: &Path) -> Result<ConfigurationSpace> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes synthetic-surface parameters as JSON.
pub fn write_surface(params: &SurfaceParams, path: &Path) -> Result<()> {
    write_json_file(params, path)
}

/// Reads synthetic-surface parameters; validate against the space before
/// generating (see [`SurfaceParams::validate`]).
pub fn read_surface(path: &Path) -> Result<SurfaceParams> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// A model loaded from disk: either a source-environment predictor or an
/// adapted target-environment predictor.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    Base(Box<BaseModel>),
    Transfer(Box<TransferModel>),
}

impl LoadedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadedModel::Base(_) => "base",
            LoadedModel::Transfer(_) => "transfer",
        }
    }

    pub fn space(&self) -> &ConfigurationSpace {
        match self {
            LoadedModel::Base(m) => &m.space,
            LoadedModel::Transfer(m) => &m.base.space,
        }
    }

    pub fn target_metric(&self) -> Metric {
        match self {
            LoadedModel::Base(m) => m.target_metric,
            LoadedModel::Transfer(m) => m.base.target_metric,
        }
    }

    /// Predicts the model's target metric for one input.
    pub fn predict(&self, profile: &ApplicationProfile, config: &Configuration) -> Result<f64> {
        match self {
            LoadedModel::Base(m) => predict_base(m, profile, config),
            LoadedModel::Transfer(m) => predict_target(m, profile, config),
        }
    }
}

#[derive(Serialize)]
struct ModelFileOut<'a, T: Serialize> {
    format_version: u32,
    kind: &'a str,
    model: &'a T,
}

#[derive(Deserialize)]
struct RawModelFile {
    format_version: u32,
    kind: String,
    model: serde_json::Value,
}

/// Saves a model as JSON. Identical models produce byte-identical files.
pub fn save_model(model: &LoadedModel, path: &Path) -> Result<()> {
    match model {
        LoadedModel::Base(m) => write_json_file(
            &ModelFileOut { format_version: FORMAT_VERSION, kind: "base", model: m.as_ref() },
            path,
        ),
        LoadedModel::Transfer(m) => write_json_file(
            &ModelFileOut {
                format_version: FORMAT_VERSION,
                kind: "transfer",
                model: m.as_ref(),
            },
            path,
        ),
    }
}

/// Loads a model saved by [`save_model`]. Predictions of the loaded model
/// equal the in-memory original exactly (bit-for-bit).
pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let text = fs::read_to_string(path)?;
    let raw: RawModelFile = serde_json::from_str(&text)?;
    if raw.format_version != FORMAT_VERSION {
        return Err(Error::UnsupportedFormatVersion(raw.format_version));
    }
    match raw.kind.as_str() {
        "base" => Ok(LoadedModel::Base(Box::new(serde_json::from_value(raw.model)?))),
        "transfer" => Ok(LoadedModel::Transfer(Box::new(serde_json::from_value(raw.model)?))),
        other => Err(Error::SchemaMismatch(format!("unknown model kind {other:?}"))),
    }
}
