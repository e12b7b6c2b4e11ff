//! Sequence-space norms: Sobolev, logarithmic Sobolev, H(delta), L2 and the
//! wavelet sup-norm Hoelder scale.
//!
//! All weighted-L2 flavors are instances of
//! `||f||^2_{s,2,delta} = sum_l a_l^{2s} (log a_l)^{-2 delta} sum_k |theta_lk|^2`
//! with natural logarithms; `H(delta)` is the case `s = -1/2`, `delta > 1/2`.

use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, BasisSpec};
use crate::error::{Error, Result};
use crate::field::CoefficientField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flavor", rename_all = "snake_case")]
pub enum NormSpec {
    Sobolev2 { s: f64 },
    LogSobolev2 { s: f64, delta: f64 },
    Hdelta { delta: f64 },
    L2,
    HolderSup { s: f64 },
}

impl NormSpec {
    pub fn sobolev(s: f64) -> Self {
        NormSpec::Sobolev2 { s }
    }

    pub fn log_sobolev(s: f64, delta: f64) -> Self {
        NormSpec::LogSobolev2 { s, delta }
    }

    pub fn h_delta(delta: f64) -> Self {
        NormSpec::Hdelta { delta }
    }

    pub fn l2() -> Self {
        NormSpec::L2
    }

    pub fn holder_sup(s: f64) -> Self {
        NormSpec::HolderSup { s }
    }

    pub fn validate(&self, basis: &BasisSpec) -> Result<()> {
        match self {
            NormSpec::Hdelta { delta } => {
                if *delta <= 0.5 {
                    return Err(Error::IncompatibleNorm(format!(
                        "H(delta) requires delta > 1/2, got {delta}"
                    )));
                }
            }
            NormSpec::HolderSup { .. } => {
                if basis.kind != BasisKind::DyadicWavelet {
                    return Err(Error::HolderOnTrigonometric);
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Squared-norm weight applied to every coordinate of level `l`, for the
    /// weighted-L2 flavors.
    pub fn level_weight(&self, basis: &BasisSpec, l: i64) -> Result<f64> {
        let a = basis.characteristic(l)?;
        Ok(match self {
            NormSpec::Sobolev2 { s } => a.powf(2.0 * s),
            NormSpec::LogSobolev2 { s, delta } => a.powf(2.0 * s) / a.ln().powf(2.0 * delta),
            NormSpec::Hdelta { delta } => a.powf(-1.0) / a.ln().powf(2.0 * delta),
            NormSpec::L2 => 1.0,
            NormSpec::HolderSup { .. } => {
                return Err(Error::IncompatibleNorm(
                    "sup-norm flavor has no quadratic level weight".into(),
                ))
            }
        })
    }

    /// Per-coordinate weight vector in storage order (weighted-L2 flavors).
    pub fn coordinate_weights(&self, basis: &BasisSpec) -> Result<Vec<f64>> {
        self.validate(basis)?;
        let mut w = Vec::with_capacity(basis.dim());
        for l in basis.levels() {
            let lw = self.level_weight(basis, l)?;
            w.extend(std::iter::repeat_n(lw, basis.level_size(l)));
        }
        Ok(w)
    }
}

/// Norm of a coefficient field under the requested flavor.
pub fn norm(theta: &CoefficientField, spec: &NormSpec) -> Result<f64> {
    let basis = theta.basis();
    spec.validate(basis)?;
    match spec {
        NormSpec::HolderSup { s } => {
            let mut sup = 0.0f64;
            for (l, _k, v) in theta.iter_indexed() {
                let scale = ((*s + 0.5) * l as f64).exp2();
                sup = sup.max(scale * v.abs());
            }
            Ok(sup)
        }
        _ => {
            let mut total = 0.0;
            let mut pos = 0;
            for l in basis.levels() {
                let w = spec.level_weight(basis, l)?;
                let size = basis.level_size(l);
                let block: f64 = theta.values()[pos..pos + size].iter().map(|v| v * v).sum();
                total += w * block;
                pos += size;
            }
            Ok(total.sqrt())
        }
    }
}

/// `||a - b||_{H(delta)}` for fields on the same truncated basis.
pub fn h_delta_distance(a: &CoefficientField, b: &CoefficientField, delta: f64) -> Result<f64> {
    a.check_same_basis(b)?;
    norm(&a.sub(b)?, &NormSpec::h_delta(delta))
}
