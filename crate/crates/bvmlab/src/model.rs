//! Ground-truth signals and white-noise sequence observations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::rng::{coord_rng, domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    Zero,
    /// Coefficients `theta_{0,lk} = M sigma_l u_lk`, `u_lk` uniform on [-1, 1],
    /// so the truth is dominated by `M sigma_l` by construction.
    HolderDecay {
        gamma: f64,
        m: f64,
        seed: u64,
    },
    /// Arbitrary coefficients, e.g. for negative controls.
    Explicit {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub kind: SignalKind,
    pub basis: BasisSpec,
}

/// Build the true coefficient field. `sigma` is the experiment's per-level
/// scale sequence (level order), which bounds Hoelder-decay signals.
pub fn make_signal(spec: &SignalSpec, sigma: &[f64]) -> Result<CoefficientField> {
    let basis = spec.basis;
    if sigma.len() != basis.levels().count() {
        return Err(Error::InvalidArgument(format!(
            "scale sequence has {} levels, basis has {}",
            sigma.len(),
            basis.levels().count()
        )));
    }
    if let Some(l) = sigma.iter().position(|s| *s <= 0.0) {
        return Err(Error::NonPositiveScale {
            level: basis.level_min() + l as i64,
        });
    }
    match &spec.kind {
        SignalKind::Zero => Ok(CoefficientField::zeros(basis)),
        SignalKind::Explicit { values } => CoefficientField::from_values(basis, values.clone()),
        SignalKind::HolderDecay { m, seed, .. } => {
            let mut field = CoefficientField::zeros(basis);
            let mut pos = 0usize;
            for (level_idx, l) in basis.levels().enumerate() {
                let bound = m * sigma[level_idx];
                for _k in 0..basis.level_size(l) {
                    // the coordinate substream makes the same (l, k) coefficient
                    // identical across different truncation levels
                    let mut rng = coord_rng(*seed, domain::SIGNAL, pos as u64);
                    field.values_mut()[pos] = bound * rng.random_range(-1.0..=1.0);
                    pos += 1;
                }
            }
            Ok(field)
        }
    }
}

/// One draw of the sequence-space white noise experiment at noise level
/// `1/sqrt(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub n: u64,
    pub x: CoefficientField,
    pub seed: u64,
}

/// Observe `x_lk = theta_{0,lk} + z_lk / sqrt(n)` with i.i.d. standard normal
/// `z_lk` from per-coordinate substreams of `seed`.
pub fn observe(theta0: &CoefficientField, n: u64, seed: u64) -> Observation {
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut x = theta0.clone();
    for (i, v) in x.values_mut().iter_mut().enumerate() {
        let mut rng = coord_rng(seed, domain::OBSERVE, i as u64);
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        *v += z * inv_sqrt_n;
    }
    Observation { n, x, seed }
}
