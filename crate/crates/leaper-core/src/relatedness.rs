//! Evaluation metrics and environment-relatedness analysis.
//!
//! Model quality is reported as mean relative error (MRE) and the derived
//! accuracy percentage. Environment relatedness is quantified two ways: the
//! Jensen-Shannon divergence between response distributions (0 = identical,
//! 1 = unrelated, base-2 logs) and the Pearson correlation of responses over
//! configurations both environments have labeled.

use serde::Serialize;

use crate::domain::{Dataset, Metric};
use crate::error::{Error, Result};

/// One (predicted, actual) observation. The actual value must be non-zero
/// because relative error divides by it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionPair {
    pub predicted: f64,
    pub actual: f64,
}

/// Zips prediction and actual slices into pairs.
pub fn pair_up(predicted: &[f64], actual: &[f64]) -> Result<Vec<PredictionPair>> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    Ok(predicted
        .iter()
        .zip(actual)
        .map(|(&predicted, &actual)| PredictionPair { predicted, actual })
        .collect())
}

/// Mean relative error: (1/N) Σ |y′ − y| / |y|.
///
/// The denominator takes the absolute value; responses here are positive
/// quantities and a sign-flipping denominator would make the mean
/// non-monotonic in the individual errors.
pub fn mre(pairs: &[PredictionPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("mre needs at least one pair"));
    }
    let mut sum = 0.0;
    for (i, pair) in pairs.iter().enumerate() {
        if pair.actual == 0.0 {
            return Err(Error::ZeroActual(i));
        }
        sum += (pair.predicted - pair.actual).abs() / pair.actual.abs();
    }
    Ok(sum / pairs.len() as f64)
}

/// Accuracy percentage for a given MRE: max(0, 1 − MRE) × 100.
pub fn accuracy_from_mre(mre: f64) -> f64 {
    (1.0 - mre).max(0.0) * 100.0
}

/// Accuracy percentage of a prediction set; floored at 0 for MRE > 1.
pub fn accuracy(pairs: &[PredictionPair]) -> Result<f64> {
    Ok(accuracy_from_mre(mre(pairs)?))
}

/// Shared binning for comparing two response distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramSpec {
    bins: usize,
    lo: f64,
    hi: f64,
}

impl HistogramSpec {
    pub const DEFAULT_BINS: usize = 32;

    pub fn new(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidParameter(format!(
                "histogram needs at least 2 bins, got {bins}"
            )));
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidParameter(format!(
                "histogram range must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { bins, lo, hi })
    }

    /// Equal-width bins spanning the union range of both value lists. A
    /// degenerate range (all values equal) is widened by 0.5 on each side so
    /// every value still lands in one shared bin.
    pub fn union_range(bins: usize, a: &[f64], b: &[f64]) -> Result<Self> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyInput("histogram range needs values on both sides"));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in a.iter().chain(b) {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite value {v} in histogram input"
                )));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        Self::new(bins, lo, hi)
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    fn bin_index(&self, value: f64) -> usize {
        let scaled = (value - self.lo) / (self.hi - self.lo) * self.bins as f64;
        (scaled.floor().max(0.0) as usize).min(self.bins - 1)
    }

    /// Probability masses of `values` over the bins; out-of-range values are
    /// clamped into the boundary bins.
    fn masses(&self, values: &[f64]) -> Vec<f64> {
        let mut counts = vec![0.0f64; self.bins];
        for &v in values {
            counts[self.bin_index(v)] += 1.0;
        }
        let total = values.len() as f64;
        for c in &mut counts {
            *c /= total;
        }
        counts
    }
}

/// Jensen-Shannon divergence between two value samples histogrammed on the
/// shared bins; base-2 logarithm, so the result lies in [0, 1].
pub fn jsd(p_values: &[f64], q_values: &[f64], spec: &HistogramSpec) -> Result<f64> {
    if p_values.is_empty() || q_values.is_empty() {
        return Err(Error::EmptyInput("jsd needs values on both sides"));
    }
    jsd_from_masses(&spec.masses(p_values), &spec.masses(q_values))
}

/// JSD over pre-binned masses. Masses are normalized before use, so raw
/// counts are accepted; 0·log(0/·) contributes 0.
pub fn jsd_from_masses(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), actual: q.len() });
    }
    if p.is_empty() {
        return Err(Error::EmptyInput("jsd needs at least one bin"));
    }
    let normalize = |masses: &[f64]| -> Result<Vec<f64>> {
        let mut total = 0.0;
        for &m in masses {
            // Also rejects NaN, which fails every comparison.
            if m < 0.0 || m.is_nan() {
                return Err(Error::InvalidParameter(format!("negative mass {m}")));
            }
            total += m;
        }
        if total <= 0.0 {
            return Err(Error::InvalidParameter("all-zero mass vector".into()));
        }
        Ok(masses.iter().map(|&m| m / total).collect())
    };
    let p = normalize(p)?;
    let q = normalize(q)?;
    // The two KL sums are accumulated separately and combined symmetrically,
    // which makes jsd(P,Q) == jsd(Q,P) bit-exact.
    let kl = |a: &[f64], m: &[f64]| -> f64 {
        a.iter()
            .zip(m)
            .filter(|(&ai, _)| ai > 0.0)
            .map(|(&ai, &mi)| ai * (ai / mi).log2())
            .sum()
    };
    let mid: Vec<f64> = p.iter().zip(&q).map(|(&pi, &qi)| 0.5 * (pi + qi)).collect();
    let divergence = 0.5 * kl(&p, &mid) + 0.5 * kl(&q, &mid);
    Ok(divergence.clamp(0.0, 1.0))
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter(
            "pearson needs at least 2 points".into(),
        ));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("first series is constant"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("second series is constant"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Relatedness summary of two environments for one metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelatednessReport {
    pub jsd: f64,
    /// `None` when no shared configurations (or spaces differ, or a series
    /// is constant); the reason lands in `warning`.
    pub pearson: Option<f64>,
    pub bins: usize,
    /// Number of (a, b) response pairs matched by configuration identity.
    pub shared_configs: usize,
    pub warning: Option<String>,
}

/// JSD over the two response distributions plus Pearson over responses of
/// configurations present in both datasets (paired by configuration
/// identity; the first occurrence in `a` provides the reference value).
pub fn relatedness_report(
    a: &Dataset,
    b: &Dataset,
    metric: Metric,
    spec: &HistogramSpec,
) -> Result<RelatednessReport> {
    let a_values = a.require_metric(metric)?;
    let b_values = b.require_metric(metric)?;
    let divergence = jsd(&a_values, &b_values, spec)?;

    let mut warning = None;
    let mut shared = Vec::new();
    if a.space == b.space {
        let mut by_config = std::collections::BTreeMap::new();
        for (sample, &value) in a.samples.iter().zip(&a_values) {
            by_config.entry(&sample.configuration).or_insert(value);
        }
        for (sample, &value) in b.samples.iter().zip(&b_values) {
            if let Some(&a_value) = by_config.get(&sample.configuration) {
                shared.push((a_value, value));
            }
        }
        if shared.len() < 2 {
            warning = Some(format!(
                "{} shared configurations; pearson needs at least 2",
                shared.len()
            ));
        }
    } else {
        warning = Some("configuration spaces differ; pearson skipped".into());
    }

    let correlation = if warning.is_none() {
        let (xs, ys): (Vec<f64>, Vec<f64>) = shared.iter().copied().unzip();
        match pearson(&xs, &ys) {
            Ok(r) => Some(r),
            Err(e) => {
                warning = Some(e.to_string());
                None
            }
        }
    } else {
        None
    };

    Ok(RelatednessReport {
        jsd: divergence,
        pearson: correlation,
        bins: spec.bins(),
        shared_configs: shared.len(),
        warning,
    })
}
