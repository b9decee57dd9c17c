//! Gaussian process regression with an RBF kernel.
//!
//! The kernel matrix is factored once at fit time by a dense Cholesky
//! decomposition (with escalating diagonal jitter when the matrix is
//! numerically semidefinite); the factor and the weight vector are stored so
//! a reloaded model reproduces its posterior bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::AugmentedRow;

/// Diagonal jitter ladder tried in order until the Cholesky factorization
/// succeeds; the last value is the documented maximum.
const JITTER_LADDER: [f64; 5] = [0.0, 1e-10, 1e-8, 1e-6, 1e-4];

/// RBF-plus-noise kernel hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpKernelParams {
    /// RBF length scale ℓ > 0.
    pub length_scale: f64,
    /// Signal variance σ_f² > 0 (the kernel value at zero distance).
    pub signal_variance: f64,
    /// Observation noise variance σ_n² >= 0 added to the diagonal.
    pub noise_variance: f64,
}

impl Default for GpKernelParams {
    fn default() -> Self {
        Self { length_scale: 1.0, signal_variance: 1.0, noise_variance: 1e-4 }
    }
}

impl GpKernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale.is_finite() && self.length_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "length_scale must be a positive finite number, got {}",
                self.length_scale
            )));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "signal_variance must be a positive finite number, got {}",
                self.signal_variance
            )));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_variance must be a non-negative finite number, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(&p, &q)| (p - q) * (p - q)).sum();
        self.signal_variance * (-sq / (2.0 * self.length_scale * self.length_scale)).exp()
    }
}

/// Exact GP regressor: training set, kernel, and the precomputed Cholesky
/// factor `L` of `K + (σ_n² + jitter) I` with weights
/// `alpha = (K + σ_n² I)⁻¹ (y − prior_mean)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianProcessModel {
    pub kernel: GpKernelParams,
    /// Constant prior mean: the mean of the training targets.
    pub prior_mean: f64,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Diagonal jitter that made the factorization succeed.
    pub jitter: f64,
    /// Lower-triangular Cholesky factor, row i holding i+1 entries.
    chol: Vec<Vec<f64>>,
    alpha: Vec<f64>,
}

impl GaussianProcessModel {
    pub fn n_features(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        Ok(self.posterior_unchecked(x))
    }

    pub(crate) fn posterior_unchecked(&self, x: &[f64]) -> (f64, f64) {
        let k_star: Vec<f64> =
            self.inputs.iter().map(|xi| self.kernel.kernel(xi, x)).collect();
        let mean = self.prior_mean
            + k_star.iter().zip(&self.alpha).map(|(&k, &a)| k * a).sum::<f64>();
        let v = forward_substitute(&self.chol, &k_star);
        let variance =
            (self.kernel.signal_variance - v.iter().map(|&t| t * t).sum::<f64>()).max(0.0);
        (mean, variance)
    }
}

/// Fits an exact GP to the rows; factorization failure past the maximum
/// jitter (1e-4) reports an ill-conditioned kernel.
pub fn fit_gp(rows: &[AugmentedRow], kernel: GpKernelParams) -> Result<GaussianProcessModel> {
    kernel.validate()?;
    if rows.is_empty() {
        return Err(Error::EmptyInput("gaussian process training rows"));
    }
    let d = rows[0].input.len();
    for (i, row) in rows.iter().enumerate() {
        if row.input.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: row.input.len() });
        }
        if let Some(j) = row.input.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, place: format!("column {j}") });
        }
        if !row.label.is_finite() {
            return Err(Error::NonFinite { row: i, place: "target".into() });
        }
    }

    let n = rows.len();
    let inputs: Vec<Vec<f64>> = rows.iter().map(|r| r.input.clone()).collect();
    let targets: Vec<f64> = rows.iter().map(|r| r.label).collect();
    let prior_mean = targets.iter().sum::<f64>() / n as f64;

    let mut base = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let k = kernel.kernel(&inputs[i], &inputs[j]);
            base[i][j] = k;
            base[j][i] = k;
        }
        base[i][i] += kernel.noise_variance;
    }

    let mut factored = None;
    for &jitter in &JITTER_LADDER {
        let mut k = base.clone();
        for (i, row) in k.iter_mut().enumerate() {
            row[i] += jitter;
        }
        if let Some(l) = cholesky(&k) {
            factored = Some((l, jitter));
            break;
        }
    }
    let Some((chol, jitter)) = factored else {
        return Err(Error::IllConditionedKernel);
    };

    let centered: Vec<f64> = targets.iter().map(|&t| t - prior_mean).collect();
    let alpha = back_substitute(&chol, &forward_substitute(&chol, &centered));

    Ok(GaussianProcessModel { kernel, prior_mean, inputs, targets, jitter, chol, alpha })
}

/// Posterior mean and (non-negative) latent variance at a query point.
pub fn gp_posterior(gp: &GaussianProcessModel, x: &[f64]) -> Result<(f64, f64)> {
    gp.posterior(x)
}

/// Dense Cholesky of a symmetric matrix; `None` when any pivot is
/// non-positive or non-finite. Row i of the result holds i+1 entries.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; i + 1]).collect();
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            let s = a[i][j] - dot;
            if i == j {
                if !(s.is_finite() && s > 0.0) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves L v = b for lower-triangular L.
fn forward_substitute(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut v = vec![0.0; n];
    for i in 0..n {
        let dot: f64 = (0..i).map(|k| l[i][k] * v[k]).sum();
        v[i] = (b[i] - dot) / l[i][i];
    }
    v
}

/// Solves Lᵀ w = b for lower-triangular L.
fn back_substitute(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut w = vec![0.0; n];
    for i in (0..n).rev() {
        let dot: f64 = (i + 1..n).map(|k| l[k][i] * w[k]).sum();
        w[i] = (b[i] - dot) / l[i][i];
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::rng::rng_from;

    fn random_rows(n: usize, d: usize, seed: u64) -> Vec<AugmentedRow> {
        let mut rng = rng_from(seed);
        (0..n)
            .map(|_| AugmentedRow {
                input: (0..d).map(|_| rng.random::<f64>() * 4.0).collect(),
                label: rng.random::<f64>() * 2.0,
            })
            .collect()
    }

    #[test]
    fn zero_noise_interpolates_training_points() {
        let rows = random_rows(12, 3, 42);
        let gp = fit_gp(
            &rows,
            GpKernelParams { noise_variance: 0.0, ..Default::default() },
        )
        .unwrap();
        for row in &rows {
            let (mean, var) = gp.posterior(&row.input).unwrap();
            assert!((mean - row.label).abs() <= 1e-6, "mean {mean} vs {}", row.label);
            assert!((0.0..=1e-6).contains(&var), "variance {var}");
        }
    }

    #[test]
    fn posterior_variance_is_never_negative() {
        let rows = random_rows(20, 2, 7);
        let gp = fit_gp(&rows, GpKernelParams::default()).unwrap();
        let mut rng = rng_from(8);
        for _ in 0..200 {
            let q: Vec<f64> = (0..2).map(|_| rng.random::<f64>() * 6.0 - 1.0).collect();
            let (_, var) = gp.posterior(&q).unwrap();
            assert!(var >= 0.0);
        }
    }

    #[test]
    fn distant_query_reverts_to_prior_mean_and_signal_variance() {
        let rows = vec![
            AugmentedRow { input: vec![0.0, 0.0], label: 3.0 },
            AugmentedRow { input: vec![0.1, 0.0], label: 5.0 },
        ];
        let params = GpKernelParams {
            length_scale: 0.5,
            signal_variance: 1.7,
            noise_variance: 1e-6,
        };
        let gp = fit_gp(&rows, params).unwrap();
        let (mean, var) = gp.posterior(&[1000.0, 0.0]).unwrap();
        assert!((mean - 4.0).abs() < 1e-9, "prior mean, got {mean}");
        assert!((var - 1.7).abs() < 1e-9, "signal variance, got {var}");
    }

    #[test]
    fn two_point_posterior_matches_a_hand_solved_system() {
        // Points x1=0, x2=1 with ℓ=1, σf²=2, σn²=0.1; query x*=0.25. The 2×2
        // system (K+σn²I)α = y−ȳ is solved here by Cramer's rule.
        let rows = vec![
            AugmentedRow { input: vec![0.0], label: 1.0 },
            AugmentedRow { input: vec![1.0], label: 3.0 },
        ];
        let params = GpKernelParams {
            length_scale: 1.0,
            signal_variance: 2.0,
            noise_variance: 0.1,
        };
        let gp = fit_gp(&rows, params).unwrap();

        let k = |a: f64, b: f64| 2.0 * (-(a - b) * (a - b) / 2.0).exp();
        let (a11, a12, a22) = (k(0.0, 0.0) + 0.1, k(0.0, 1.0), k(1.0, 1.0) + 0.1);
        let (b1, b2) = (1.0 - 2.0, 3.0 - 2.0);
        let det = a11 * a22 - a12 * a12;
        let alpha1 = (b1 * a22 - a12 * b2) / det;
        let alpha2 = (a11 * b2 - b1 * a12) / det;
        let expected = 2.0 + k(0.25, 0.0) * alpha1 + k(0.25, 1.0) * alpha2;

        let (mean, _) = gp.posterior(&[0.25]).unwrap();
        assert!((mean - expected).abs() < 1e-9, "got {mean}, expected {expected}");
    }

    #[test]
    fn constant_targets_predict_the_constant_everywhere() {
        let mut rows = random_rows(6, 2, 3);
        for row in &mut rows {
            row.label = 0.4;
        }
        let gp = fit_gp(&rows, GpKernelParams::default()).unwrap();
        for q in [[0.0, 0.0], [2.0, 1.0], [50.0, -3.0]] {
            let (mean, _) = gp.posterior(&q).unwrap();
            assert!((mean - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn unsalvageable_kernel_reports_ill_conditioned() {
        // Duplicate inputs with a signal variance so large that the whole
        // jitter ladder is absorbed by floating-point rounding.
        let rows = vec![
            AugmentedRow { input: vec![0.0], label: 1.0 },
            AugmentedRow { input: vec![0.0], label: 2.0 },
        ];
        let params = GpKernelParams {
            length_scale: 1.0,
            signal_variance: 1e20,
            noise_variance: 0.0,
        };
        assert!(matches!(fit_gp(&rows, params), Err(Error::IllConditionedKernel)));
    }

    #[test]
    fn duplicate_inputs_survive_via_jitter() {
        let rows = vec![
            AugmentedRow { input: vec![1.0, 1.0], label: 2.0 },
            AugmentedRow { input: vec![1.0, 1.0], label: 2.0 },
            AugmentedRow { input: vec![0.0, 0.0], label: 1.0 },
        ];
        let params = GpKernelParams { noise_variance: 0.0, ..Default::default() };
        let gp = fit_gp(&rows, params).unwrap();
        assert!(gp.jitter > 0.0, "expected escalated jitter, got {}", gp.jitter);
        let (mean, _) = gp.posterior(&[1.0, 1.0]).unwrap();
        assert!((mean - 2.0).abs() < 1e-3);
    }

    #[test]
    fn rejects_invalid_kernels_and_shapes() {
        let rows = random_rows(3, 2, 1);
        for bad in [
            GpKernelParams { length_scale: 0.0, ..Default::default() },
            GpKernelParams { signal_variance: -1.0, ..Default::default() },
            GpKernelParams { noise_variance: f64::NAN, ..Default::default() },
        ] {
            assert!(matches!(fit_gp(&rows, bad), Err(Error::InvalidParameter(_))));
        }
        assert!(matches!(
            fit_gp(&[], GpKernelParams::default()),
            Err(Error::EmptyInput(_))
        ));
        let gp = fit_gp(&rows, GpKernelParams::default()).unwrap();
        assert!(matches!(
            gp.posterior(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, actual: 1 })
        ));
    }
}
