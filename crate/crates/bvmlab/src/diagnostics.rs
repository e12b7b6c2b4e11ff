//! Diagnostics for the Gaussian limiting shape of rescaled posteriors.
//!
//! The total-variation statement on finite-dimensional projections is probed
//! through per-coordinate Kolmogorov-Smirnov distances and the empirical
//! covariance of `sqrt(n) pi_V(f - X)`; the infinite-dimensional weak limit is
//! tracked by the `H(delta')` tail-tightness fraction and the posterior-mean
//! linearity statistic. The 1-d bounded-Lipschitz metric is reported through
//! its Wasserstein-1 upper proxy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::model::Observation;
use crate::norms::{self, NormSpec};
use crate::posterior::{PosteriorField, QuadStat};
use crate::stats;

/// Finite-dimensional projection `V_J`: all coordinates of the listed levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionSpec {
    pub levels: Vec<i64>,
}

impl ProjectionSpec {
    pub fn positions(&self, basis: &crate::basis::BasisSpec) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for &l in &self.levels {
            if !basis.contains_level(l) {
                return Err(Error::LevelOutOfRange { level: l });
            }
            let off = basis.level_offset(l);
            out.extend(off..off + basis.level_size(l));
        }
        if out.is_empty() {
            return Err(Error::InvalidArgument(
                "projection must contain at least one coordinate".into(),
            ));
        }
        Ok(out)
    }
}

/// Shape diagnostics of one fitted posterior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BvmDiagnosticReport {
    /// One-sample KS distance to N(0,1) per projected coordinate.
    pub per_coordinate_ks: Vec<f64>,
    pub max_ks: f64,
    /// Largest entry of |empirical covariance - identity| on the projection.
    pub cov_deviation: f64,
}

/// Rescaled finite-dimensional shape check: draws joint posterior samples,
/// maps them through `f -> sqrt(n) pi_V(f - X)` and compares the marginals
/// and covariance with the standard Gaussian limit.
pub fn fidi_distance(
    post: &PosteriorField,
    obs: &Observation,
    proj: &ProjectionSpec,
    sample_count: usize,
    seed: u64,
) -> Result<BvmDiagnosticReport> {
    if sample_count < 500 {
        return Err(Error::SampleCountTooSmall {
            got: sample_count,
            min: 500,
        });
    }
    let positions = proj.positions(post.basis())?;
    let sqrt_n = (post.n() as f64).sqrt();
    let draws = post.sample_coordinates(&positions, sample_count, seed)?;
    let dim = positions.len();

    let mut rescaled: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for (col, &pos) in draws.iter().zip(&positions) {
        let x = obs.x.values()[pos];
        rescaled.push(col.iter().map(|v| sqrt_n * (v - x)).collect());
    }

    let per_coordinate_ks: Vec<f64> = rescaled
        .iter()
        .map(|col| stats::ks_standard_normal(col))
        .collect();
    let max_ks = per_coordinate_ks.iter().cloned().fold(0.0f64, f64::max);

    let means: Vec<f64> = rescaled
        .iter()
        .map(|col| col.iter().sum::<f64>() / sample_count as f64)
        .collect();
    let mut cov_deviation = 0.0f64;
    for i in 0..dim {
        for j in i..dim {
            let cov = rescaled[i]
                .iter()
                .zip(&rescaled[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                / sample_count as f64;
            let target = if i == j { 1.0 } else { 0.0 };
            cov_deviation = cov_deviation.max((cov - target).abs());
        }
    }

    Ok(BvmDiagnosticReport {
        per_coordinate_ks,
        max_ks,
        cov_deviation,
    })
}

/// Posterior mass escaping the `sqrt(M/n)` neighborhood of the truth in
/// `H(delta')`: the tail-tightness fraction behind the weak-limit argument.
pub fn hdelta_concentration(
    post: &PosteriorField,
    theta0: &CoefficientField,
    delta_prime: f64,
    m_test: f64,
    sample_count: usize,
    seed: u64,
) -> Result<f64> {
    if delta_prime <= 0.5 {
        return Err(Error::IncompatibleNorm(format!(
            "tail tightness needs delta' > 1/2, got {delta_prime}"
        )));
    }
    if m_test.is_infinite() {
        return Ok(0.0);
    }
    let weights = NormSpec::h_delta(delta_prime).coordinate_weights(post.basis())?;
    let dist2 = post
        .sample_quadratics(
            sample_count,
            seed,
            &[QuadStat {
                weights: &weights,
                center: theta0.values(),
            }],
        )?
        .remove(0);
    let n = post.n() as f64;
    Ok(dist2.iter().filter(|d| n * **d > m_test).count() as f64 / sample_count as f64)
}

/// `sqrt(n) || f_bar - X ||_{H(delta)}`: how far the posterior mean is from
/// being asymptotically linear in the observation.
pub fn mean_linearity(post: &PosteriorField, obs: &Observation, delta: f64) -> Result<f64> {
    let mean = post.posterior_mean();
    Ok((post.n() as f64).sqrt() * norms::h_delta_distance(&mean, &obs.x, delta)?)
}

/// Distance between two scalar samples in the bounded-Lipschitz sense,
/// reported through its exact Wasserstein-1 upper bound (BL <= W1).
pub fn empirical_bl_distance(samples_a: &[f64], samples_b: &[f64]) -> f64 {
    stats::wasserstein1(samples_a, samples_b)
}
