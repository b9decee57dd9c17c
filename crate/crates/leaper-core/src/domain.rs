//! Core data model: optimization options, configuration spaces, application
//! profiles, and labeled samples.
//!
//! A configuration space is an ordered list of options; a configuration
//! assigns one level index to each option. Samples pair a configuration with
//! the profile of the application it was measured on and with whatever
//! response metrics were observed. Invalid values are representable on
//! purpose: [`validate_dataset`] reports them instead of constructors
//! rejecting them, so foreign data can be loaded first and audited second.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How an option's levels are interpreted when encoding features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Binary,
    Ordinal,
    Categorical,
}

/// Admissible levels of one option.
#[derive(Debug, Clone, PartialEq)]
pub enum OptionLevels {
    /// Exactly two states; encoded as 0.0 / 1.0 in label order.
    Binary([String; 2]),
    /// Strictly increasing numeric levels; encoded by their value.
    Ordinal(Vec<f64>),
    /// Unordered labels; one-hot encoded in label order.
    Categorical(Vec<String>),
}

/// One tunable knob of the accelerator design space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OptionSpec", into = "OptionSpec")]
pub struct OptimizationOption {
    name: String,
    levels: OptionLevels,
}

impl OptimizationOption {
    /// A two-state option with the conventional `off` / `on` labels.
    pub fn binary(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            levels: OptionLevels::Binary(["off".to_owned(), "on".to_owned()]),
        }
    }

    pub fn binary_with_labels(name: impl Into<String>, labels: [String; 2]) -> Result<Self> {
        let name = name.into();
        if labels[0] == labels[1] {
            return Err(Error::InvalidOption {
                option: name,
                message: "binary labels must be distinct".into(),
            });
        }
        Ok(Self { name, levels: OptionLevels::Binary(labels) })
    }

    pub fn ordinal(name: impl Into<String>, levels: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if levels.is_empty() {
            return Err(Error::InvalidOption {
                option: name,
                message: "ordinal option needs at least one level".into(),
            });
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidOption {
                option: name,
                message: "ordinal levels must be finite".into(),
            });
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidOption {
                option: name,
                message: "ordinal levels must be strictly increasing".into(),
            });
        }
        Ok(Self { name, levels: OptionLevels::Ordinal(levels) })
    }

    pub fn categorical(name: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        let name = name.into();
        if labels.is_empty() {
            return Err(Error::InvalidOption {
                option: name,
                message: "categorical option needs at least one label".into(),
            });
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::InvalidOption {
                    option: name,
                    message: format!("duplicate label {a:?}"),
                });
            }
        }
        Ok(Self { name, levels: OptionLevels::Categorical(labels) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> OptionKind {
        match self.levels {
            OptionLevels::Binary(_) => OptionKind::Binary,
            OptionLevels::Ordinal(_) => OptionKind::Ordinal,
            OptionLevels::Categorical(_) => OptionKind::Categorical,
        }
    }

    pub fn levels(&self) -> &OptionLevels {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        match &self.levels {
            OptionLevels::Binary(_) => 2,
            OptionLevels::Ordinal(v) => v.len(),
            OptionLevels::Categorical(v) => v.len(),
        }
    }

    /// Width this option contributes to the encoded feature vector.
    pub fn encoded_len(&self) -> usize {
        match &self.levels {
            OptionLevels::Binary(_) | OptionLevels::Ordinal(_) => 1,
            OptionLevels::Categorical(v) => v.len(),
        }
    }

    fn encode_into(&self, level: usize, out: &mut Vec<f64>) {
        match &self.levels {
            OptionLevels::Binary(_) => out.push(level as f64),
            OptionLevels::Ordinal(values) => out.push(values[level]),
            OptionLevels::Categorical(labels) => {
                for i in 0..labels.len() {
                    out.push(if i == level { 1.0 } else { 0.0 });
                }
            }
        }
    }

    /// Human-readable label of a level, used in reports and errors.
    pub fn level_label(&self, level: usize) -> String {
        match &self.levels {
            OptionLevels::Binary(labels) => labels[level].clone(),
            OptionLevels::Ordinal(values) => format!("{}", values[level]),
            OptionLevels::Categorical(labels) => labels[level].clone(),
        }
    }
}

/// Serialization schema for one option: `{"name", "kind", "levels"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct OptionSpec {
    name: String,
    kind: OptionKind,
    levels: Vec<serde_json::Value>,
}

impl TryFrom<OptionSpec> for OptimizationOption {
    type Error = Error;

    fn try_from(spec: OptionSpec) -> Result<Self> {
        let strings = |values: &[serde_json::Value], name: &str| -> Result<Vec<String>> {
            values
                .iter()
                .map(|v| {
                    v.as_str().map(str::to_owned).ok_or_else(|| Error::InvalidOption {
                        option: name.to_owned(),
                        message: format!("expected string level, got {v}"),
                    })
                })
                .collect()
        };
        match spec.kind {
            OptionKind::Binary => {
                let labels = strings(&spec.levels, &spec.name)?;
                let [a, b]: [String; 2] =
                    labels.try_into().map_err(|_| Error::InvalidOption {
                        option: spec.name.clone(),
                        message: "binary option needs exactly two levels".into(),
                    })?;
                Self::binary_with_labels(spec.name, [a, b])
            }
            OptionKind::Ordinal => {
                let values = spec
                    .levels
                    .iter()
                    .map(|v| {
                        v.as_f64().ok_or_else(|| Error::InvalidOption {
                            option: spec.name.clone(),
                            message: format!("expected numeric level, got {v}"),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Self::ordinal(spec.name, values)
            }
            OptionKind::Categorical => {
                let labels = strings(&spec.levels, &spec.name)?;
                Self::categorical(spec.name, labels)
            }
        }
    }
}

impl From<OptimizationOption> for OptionSpec {
    fn from(option: OptimizationOption) -> Self {
        let kind = option.kind();
        let levels = match option.levels {
            OptionLevels::Binary(labels) => {
                labels.iter().map(|l| serde_json::Value::from(l.as_str())).collect()
            }
            OptionLevels::Ordinal(values) => {
                values.into_iter().map(serde_json::Value::from).collect()
            }
            OptionLevels::Categorical(labels) => {
                labels.into_iter().map(serde_json::Value::from).collect()
            }
        };
        OptionSpec { name: option.name, kind, levels }
    }
}

/// An ordered list of options; order defines both configuration layout and
/// encoded feature layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationSpace {
    pub options: Vec<OptimizationOption>,
}

impl ConfigurationSpace {
    pub fn new(options: Vec<OptimizationOption>) -> Self {
        Self { options }
    }

    /// Number of distinct configurations; the empty space has exactly one
    /// (the empty configuration). Saturates at `u128::MAX`.
    pub fn cardinality(&self) -> u128 {
        self.options
            .iter()
            .fold(1u128, |acc, o| acc.saturating_mul(o.level_count() as u128))
    }

    /// Width of the encoded feature vector.
    pub fn encoded_len(&self) -> usize {
        self.options.iter().map(|o| o.encoded_len()).sum()
    }

    pub fn validate_configuration(&self, config: &Configuration) -> Result<()> {
        if config.assignments.len() != self.options.len() {
            let option = if config.assignments.len() < self.options.len() {
                let o = &self.options[config.assignments.len()];
                format!("{} (position {})", o.name(), config.assignments.len())
            } else {
                format!("<none> (expected {} options)", self.options.len())
            };
            return Err(Error::InvalidConfiguration {
                option,
                message: format!(
                    "configuration has {} assignments, space has {} options",
                    config.assignments.len(),
                    self.options.len()
                ),
            });
        }
        for (i, (&level, option)) in
            config.assignments.iter().zip(&self.options).enumerate()
        {
            if level >= option.level_count() {
                return Err(Error::InvalidConfiguration {
                    option: format!("{} (position {i})", option.name()),
                    message: format!(
                        "level index {level} out of range (option has {} levels)",
                        option.level_count()
                    ),
                });
            }
        }
        Ok(())
    }

    /// Encodes a configuration as a numeric feature vector: binary options as
    /// 0/1, ordinal options by level value, categorical options one-hot.
    /// The encoding is injective over valid configurations.
    pub fn encode(&self, config: &Configuration) -> Result<Vec<f64>> {
        self.validate_configuration(config)?;
        let mut out = Vec::with_capacity(self.encoded_len());
        for (&level, option) in config.assignments.iter().zip(&self.options) {
            option.encode_into(level, &mut out);
        }
        Ok(out)
    }

    /// Iterates every configuration in mixed-radix order, the last option
    /// varying fastest. Intended for spaces of enumerable cardinality.
    pub fn enumerate(&self) -> Enumerate<'_> {
        Enumerate { space: self, next: 0, total: self.cardinality() }
    }

    /// Decodes a mixed-radix index (same order as [`Self::enumerate`]).
    pub fn config_from_index(&self, mut index: u128) -> Configuration {
        let mut assignments = vec![0usize; self.options.len()];
        for (slot, option) in assignments.iter_mut().zip(&self.options).rev() {
            let radix = option.level_count() as u128;
            *slot = (index % radix) as usize;
            index /= radix;
        }
        Configuration::new(assignments)
    }
}

pub struct Enumerate<'a> {
    space: &'a ConfigurationSpace,
    next: u128,
    total: u128,
}

impl Iterator for Enumerate<'_> {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        if self.next >= self.total {
            return None;
        }
        let config = self.space.config_from_index(self.next);
        self.next += 1;
        Some(config)
    }
}

/// Level-index assignment, one entry per option in space order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    pub assignments: Vec<usize>,
}

impl Configuration {
    pub fn new(assignments: Vec<usize>) -> Self {
        Self { assignments }
    }
}

/// Static features of the application the accelerator is built for
/// (instruction mix, parallelism, data reuse, memory traffic, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationProfile {
    names: Vec<String>,
    values: Vec<f64>,
}

impl ApplicationProfile {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                actual: values.len(),
            });
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate profile feature name {name:?}"
                )));
            }
        }
        Ok(Self { names, values })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Response metrics a sample can carry. Execution time is in milliseconds;
/// the four resource metrics are fractions of the device's capacity.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ExecTimeMs,
    BramFrac,
    DspFrac,
    FfFrac,
    LutFrac,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::ExecTimeMs,
        Metric::BramFrac,
        Metric::DspFrac,
        Metric::FfFrac,
        Metric::LutFrac,
    ];

    /// Column name used in dataset CSV files.
    pub fn csv_column(&self) -> &'static str {
        match self {
            Metric::ExecTimeMs => "exec_ms",
            Metric::BramFrac => "bram",
            Metric::DspFrac => "dsp",
            Metric::FfFrac => "ff",
            Metric::LutFrac => "lut",
        }
    }

    pub fn from_csv_column(name: &str) -> Option<Metric> {
        Metric::ALL.iter().copied().find(|m| m.csv_column() == name)
    }

    /// Canonical identifier, also used as JSON value.
    pub fn canonical(&self) -> &'static str {
        match self {
            Metric::ExecTimeMs => "exec_time_ms",
            Metric::BramFrac => "bram_frac",
            Metric::DspFrac => "dsp_frac",
            Metric::FfFrac => "ff_frac",
            Metric::LutFrac => "lut_frac",
        }
    }

    /// Resource metrics are fractions in [0, 1]; execution time is not.
    pub fn is_fraction(&self) -> bool {
        !matches!(self, Metric::ExecTimeMs)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical())
    }
}

impl FromStr for Metric {
    type Err = Error;

    /// Accepts both the canonical identifier and the CSV column name.
    fn from_str(s: &str) -> Result<Metric> {
        Metric::ALL
            .iter()
            .copied()
            .find(|m| m.canonical() == s || m.csv_column() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown metric {s:?}")))
    }
}

/// One observation: a configuration, the profile of the application it ran
/// under, and the responses that were measured (possibly none, for inputs
/// that are yet to be predicted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub profile: ApplicationProfile,
    pub configuration: Configuration,
    pub responses: BTreeMap<Metric, f64>,
}

/// Samples collected in one environment (one platform + application pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub env_id: String,
    pub space: ConfigurationSpace,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(env_id: impl Into<String>, space: ConfigurationSpace) -> Self {
        Self { env_id: env_id.into(), space, samples: Vec::new() }
    }

    /// Profile feature names shared by the dataset (taken from the first
    /// sample; [`validate_dataset`] reports samples that deviate).
    pub fn profile_names(&self) -> Option<&[String]> {
        self.samples.first().map(|s| s.profile.names())
    }

    /// Labels for `metric` in sample order; errors list every sample where
    /// the metric is absent.
    pub fn require_metric(&self, metric: Metric) -> Result<Vec<f64>> {
        let mut labels = Vec::with_capacity(self.samples.len());
        let mut missing = Vec::new();
        for (i, sample) in self.samples.iter().enumerate() {
            match sample.responses.get(&metric) {
                Some(&v) => labels.push(v),
                None => missing.push(i),
            }
        }
        if missing.is_empty() {
            Ok(labels)
        } else {
            Err(Error::MetricAbsent { metric, indices: missing })
        }
    }
}

/// A single problem found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Sample index, or `None` for dataset-level problems.
    pub sample: Option<usize>,
    /// Offending field: an option name, profile feature name, or metric.
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits a dataset against the type invariants the modeling routines rely
/// on. Violations are data, not failures: the report is always produced.
pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut push = |sample: Option<usize>, field: &str, message: String| {
        report.violations.push(Violation { sample, field: field.to_owned(), message });
    };

    let schema = dataset.profile_names().map(<[String]>::to_vec);
    for (i, sample) in dataset.samples.iter().enumerate() {
        if let Some(schema) = &schema {
            if sample.profile.names() != schema.as_slice() {
                push(
                    Some(i),
                    "profile",
                    format!(
                        "profile schema {:?} differs from the dataset schema {:?}",
                        sample.profile.names(),
                        schema
                    ),
                );
            }
        }
        for (name, &value) in sample.profile.names().iter().zip(sample.profile.values()) {
            if !value.is_finite() {
                push(Some(i), name, format!("non-finite profile value {value}"));
            } else if (name.starts_with("mix_") || name.starts_with("reuse_"))
                && !(0.0..=1.0).contains(&value)
            {
                push(Some(i), name, format!("fraction feature out of [0, 1]: {value}"));
            } else if value < 0.0 {
                push(Some(i), name, format!("negative profile value {value}"));
            }
        }

        let n_opts = dataset.space.options.len();
        let n_assign = sample.configuration.assignments.len();
        if n_assign < n_opts {
            let missing = &dataset.space.options[n_assign];
            push(
                Some(i),
                missing.name(),
                format!(
                    "missing assignment for option {} (position {n_assign})",
                    missing.name()
                ),
            );
        } else if n_assign > n_opts {
            push(
                Some(i),
                "configuration",
                format!("{n_assign} assignments for a space with {n_opts} options"),
            );
        }
        for (pos, (&level, option)) in sample
            .configuration
            .assignments
            .iter()
            .zip(&dataset.space.options)
            .enumerate()
        {
            if level >= option.level_count() {
                push(
                    Some(i),
                    option.name(),
                    format!(
                        "level index {level} out of range at position {pos} \
                         (option has {} levels)",
                        option.level_count()
                    ),
                );
            }
        }

        if sample.responses.is_empty() {
            push(Some(i), "responses", "sample carries no response metrics".into());
        }
        for (&metric, &value) in &sample.responses {
            if !value.is_finite() {
                push(Some(i), metric.canonical(), format!("non-finite response {value}"));
            } else if metric.is_fraction() && !(0.0..=1.0).contains(&value) {
                push(
                    Some(i),
                    metric.canonical(),
                    format!("resource fraction out of [0, 1]: {value}"),
                );
            } else if metric == Metric::ExecTimeMs && value <= 0.0 {
                push(
                    Some(i),
                    metric.canonical(),
                    format!("execution time must be positive, got {value}"),
                );
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_option_space() -> ConfigurationSpace {
        ConfigurationSpace::new(vec![
            OptimizationOption::binary("PL"),
            OptimizationOption::ordinal("FR", vec![50.0, 100.0, 150.0, 200.0]).unwrap(),
        ])
    }

    fn mixed_space() -> ConfigurationSpace {
        ConfigurationSpace::new(vec![
            OptimizationOption::binary("PL"),
            OptimizationOption::ordinal("UR", vec![1.0, 2.0, 4.0]).unwrap(),
            OptimizationOption::categorical(
                "PR_type",
                vec!["block".into(), "cyclic".into(), "complete".into()],
            )
            .unwrap(),
        ])
    }

    #[test]
    fn cardinality_counts_all_combinations() {
        assert_eq!(ConfigurationSpace::new(vec![]).cardinality(), 1);
        assert_eq!(two_option_space().cardinality(), 8);
        assert_eq!(mixed_space().cardinality(), 18);
    }

    #[test]
    fn encoding_layout_matches_kinds() {
        let space = mixed_space();
        assert_eq!(space.encoded_len(), 5);
        let x = space.encode(&Configuration::new(vec![1, 2, 1])).unwrap();
        assert_eq!(x, vec![1.0, 4.0, 0.0, 1.0, 0.0]);
        let x = space.encode(&Configuration::new(vec![0, 0, 0])).unwrap();
        assert_eq!(x, vec![0.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn out_of_range_level_names_the_option() {
        let space = mixed_space();
        let err = space.encode(&Configuration::new(vec![0, 3, 0])).unwrap_err();
        assert!(err.to_string().contains("UR"), "{err}");
    }

    #[test]
    fn enumerate_visits_each_configuration_once_last_option_fastest() {
        let space = mixed_space();
        let all: Vec<Configuration> = space.enumerate().collect();
        assert_eq!(all.len(), 18);
        assert_eq!(all[0], Configuration::new(vec![0, 0, 0]));
        assert_eq!(all[1], Configuration::new(vec![0, 0, 1]));
        assert_eq!(all[3], Configuration::new(vec![0, 1, 0]));
        let mut unique = all.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), all.len());
        for (i, config) in all.iter().enumerate() {
            assert_eq!(&space.config_from_index(i as u128), config);
        }
    }

    #[test]
    fn ordinal_levels_must_increase() {
        assert!(OptimizationOption::ordinal("UR", vec![1.0, 1.0]).is_err());
        assert!(OptimizationOption::ordinal("UR", vec![2.0, 1.0]).is_err());
        assert!(OptimizationOption::ordinal("UR", vec![]).is_err());
    }

    #[test]
    fn space_json_round_trips() {
        let space = mixed_space();
        let json = serde_json::to_string(&space).unwrap();
        assert!(json.contains("\"kind\":\"categorical\""), "{json}");
        let back: ConfigurationSpace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, space);
    }

    #[test]
    fn space_json_rejects_wrong_level_types() {
        let json = r#"{"options":[{"name":"UR","kind":"ordinal","levels":["a"]}]}"#;
        assert!(serde_json::from_str::<ConfigurationSpace>(json).is_err());
        let json = r#"{"options":[{"name":"PL","kind":"binary","levels":["off"]}]}"#;
        assert!(serde_json::from_str::<ConfigurationSpace>(json).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for metric in Metric::ALL {
            assert_eq!(metric.canonical().parse::<Metric>().unwrap(), metric);
            assert_eq!(metric.csv_column().parse::<Metric>().unwrap(), metric);
        }
        assert!("watts".parse::<Metric>().is_err());
    }

    fn sample(space: &ConfigurationSpace, levels: Vec<usize>, exec: f64) -> Sample {
        let profile = ApplicationProfile::new(
            vec!["mix_0".into(), "ilp".into()],
            vec![1.0, 2.5],
        )
        .unwrap();
        let mut responses = BTreeMap::new();
        responses.insert(Metric::ExecTimeMs, exec);
        let _ = space;
        Sample { profile, configuration: Configuration::new(levels), responses }
    }

    #[test]
    fn validate_flags_out_of_range_fraction() {
        let space = two_option_space();
        let mut dataset = Dataset::new("e0", space.clone());
        let mut s = sample(&space, vec![0, 1], 3.0);
        s.responses.insert(Metric::BramFrac, 1.2);
        dataset.samples.push(s);
        let report = validate_dataset(&dataset);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].sample, Some(0));
        assert_eq!(report.violations[0].field, "bram_frac");
    }

    #[test]
    fn validate_flags_missing_assignment_by_option_name() {
        let space = two_option_space();
        let mut dataset = Dataset::new("e0", space.clone());
        dataset.samples.push(sample(&space, vec![0], 3.0));
        let report = validate_dataset(&dataset);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].field, "FR");
    }

    #[test]
    fn validate_flags_nonpositive_exec_time_and_empty_responses() {
        let space = two_option_space();
        let mut dataset = Dataset::new("e0", space.clone());
        dataset.samples.push(sample(&space, vec![0, 0], 0.0));
        let mut empty = sample(&space, vec![1, 1], 1.0);
        empty.responses.clear();
        dataset.samples.push(empty);
        let report = validate_dataset(&dataset);
        let fields: Vec<&str> =
            report.violations.iter().map(|v| v.field.as_str()).collect();
        assert_eq!(fields, vec!["exec_time_ms", "responses"]);
    }

    #[test]
    fn validate_accepts_clean_dataset() {
        let space = two_option_space();
        let mut dataset = Dataset::new("e0", space.clone());
        dataset.samples.push(sample(&space, vec![0, 1], 3.0));
        dataset.samples.push(sample(&space, vec![1, 3], 1.5));
        assert!(validate_dataset(&dataset).is_clean());
    }

    #[test]
    fn require_metric_lists_missing_samples() {
        let space = two_option_space();
        let mut dataset = Dataset::new("e0", space.clone());
        dataset.samples.push(sample(&space, vec![0, 1], 3.0));
        let mut missing = sample(&space, vec![1, 1], 1.0);
        missing.responses.clear();
        dataset.samples.push(missing);
        dataset.samples.push(sample(&space, vec![1, 2], 2.0));
        let err = dataset.require_metric(Metric::ExecTimeMs).unwrap_err();
        match err {
            Error::MetricAbsent { metric, indices } => {
                assert_eq!(metric, Metric::ExecTimeMs);
                assert_eq!(indices, vec![1]);
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert_eq!(dataset.require_metric(Metric::BramFrac).unwrap_err().to_string(),
            "metric bram_frac absent from samples [0, 1, 2]");
    }
}
