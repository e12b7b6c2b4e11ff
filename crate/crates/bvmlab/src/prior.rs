//! Product priors over basis coordinates: `theta_lk ~ sigma_l^{-1} phi(. / sigma_l)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::basis::{BasisKind, BasisSpec};
use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::rng::{coord_rng, domain};
use crate::stats;

/// Base density `phi` of the rescaled coordinate prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BaseDensity {
    Gaussian,
    Uniform { tau: f64 },
    Laplace,
    StudentT { nu: f64 },
}

impl BaseDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            BaseDensity::Uniform { tau } if *tau <= 0.0 => Err(Error::InvalidPrior(format!(
                "uniform support tau must be positive, got {tau}"
            ))),
            BaseDensity::StudentT { nu } if *nu <= 2.0 => Err(Error::InvalidPrior(format!(
                "Student t needs nu > 2 for a finite second moment, got {nu}"
            ))),
            _ => Ok(()),
        }
    }

    /// Log density of the standardized `phi` (scale 1).
    pub fn log_density(&self, x: f64) -> f64 {
        match self {
            BaseDensity::Gaussian => -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln(),
            BaseDensity::Uniform { tau } => {
                if x.abs() <= *tau {
                    -(2.0 * tau).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            BaseDensity::Laplace => -x.abs() - 2f64.ln(),
            BaseDensity::StudentT { nu } => {
                let norm = ln_gamma((nu + 1.0) / 2.0)
                    - ln_gamma(nu / 2.0)
                    - 0.5 * (nu * std::f64::consts::PI).ln();
                norm - 0.5 * (nu + 1.0) * (1.0 + x * x / nu).ln()
            }
        }
    }

    /// One-sided derivative of `log phi` at `x` (standardized scale). The
    /// side only matters at kink points such as the Laplace peak.
    pub fn log_density_slope(&self, x: f64, from_right: bool) -> f64 {
        match self {
            BaseDensity::Gaussian => -x,
            BaseDensity::Uniform { .. } => 0.0,
            BaseDensity::Laplace => {
                if x > 0.0 || (x == 0.0 && from_right) {
                    -1.0
                } else {
                    1.0
                }
            }
            BaseDensity::StudentT { nu } => -(nu + 1.0) * x / (nu + x * x),
        }
    }

    /// Global density bound `C_phi`.
    pub fn density_sup(&self) -> f64 {
        self.log_density(0.0).exp()
    }

    /// Lower density bound `c_phi` on `(-tau, tau)`.
    pub fn density_inf_on(&self, tau: f64) -> f64 {
        self.log_density(tau).exp()
    }

    /// Quantile of the standardized density.
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&p));
        match self {
            BaseDensity::Gaussian => stats::normal_quantile(p),
            BaseDensity::Uniform { tau } => -tau + 2.0 * tau * p,
            BaseDensity::Laplace => {
                if p < 0.5 {
                    (2.0 * p).ln()
                } else {
                    -(2.0 * (1.0 - p)).ln()
                }
            }
            BaseDensity::StudentT { nu } => StudentsT::new(0.0, 1.0, *nu)
                .expect("validated nu")
                .inverse_cdf(p),
        }
    }

    /// Support endpoints when the density vanishes outside a compact set.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            BaseDensity::Uniform { tau } => Some((-tau, *tau)),
            _ => None,
        }
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            BaseDensity::Gaussian => rng.sample(rand_distr::StandardNormal),
            BaseDensity::Uniform { tau } => rng.random_range(-tau..*tau),
            BaseDensity::Laplace => {
                let u: f64 = rng.random::<f64>();
                self.quantile(u)
            }
            BaseDensity::StudentT { nu } => {
                rng.sample(rand_distr::StudentT::new(*nu).expect("validated nu"))
            }
        }
    }
}

/// Rule generating the scale sequence `sigma_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ScaleRule {
    /// `sigma_l = max(2, |l|)^{-1/2 - gamma}` on the trigonometric basis.
    PowerTrig { gamma: f64 },
    /// `sigma_l = 2^{-l (1/2 + gamma)}` on the dyadic basis.
    PowerDyadic { gamma: f64 },
    /// One scale per level, in level order.
    Explicit { sigmas: Vec<f64> },
}

impl ScaleRule {
    pub fn gamma(&self) -> Option<f64> {
        match self {
            ScaleRule::PowerTrig { gamma } | ScaleRule::PowerDyadic { gamma } => Some(*gamma),
            ScaleRule::Explicit { .. } => None,
        }
    }

    pub fn sigma(&self, basis: &BasisSpec, l: i64) -> Result<f64> {
        if !basis.contains_level(l) {
            return Err(Error::LevelOutOfRange { level: l });
        }
        let sigma = match self {
            ScaleRule::PowerTrig { gamma } => {
                (2.0f64.max(l.unsigned_abs() as f64)).powf(-0.5 - gamma)
            }
            ScaleRule::PowerDyadic { gamma } => (-(l as f64) * (0.5 + gamma)).exp2(),
            ScaleRule::Explicit { sigmas } => {
                let pos = (l - basis.level_min()) as usize;
                *sigmas.get(pos).ok_or(Error::LevelOutOfRange { level: l })?
            }
        };
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::NonPositiveScale { level: l });
        }
        Ok(sigma)
    }

    /// One scale per level of the basis, in level order.
    pub fn per_level(&self, basis: &BasisSpec) -> Result<Vec<f64>> {
        basis.levels().map(|l| self.sigma(basis, l)).collect()
    }

    /// Prior mass `sum_{l > l_max} |Z_l| sigma_l^2` beyond the truncation,
    /// over the full (untruncated) index set. `None` for explicit scales.
    pub fn tail_mass(&self, kind: BasisKind, l_max: u32) -> Option<f64> {
        match (self, kind) {
            (ScaleRule::PowerDyadic { gamma }, BasisKind::DyadicWavelet) => {
                // sum_{l > L} 2^l 2^{-l(1+2g)} = 2^{-2g(L+1)} / (1 - 2^{-2g})
                let g = *gamma;
                Some((-(2.0 * g) * (l_max as f64 + 1.0)).exp2() / (1.0 - (-2.0 * g).exp2()))
            }
            (ScaleRule::PowerTrig { gamma }, BasisKind::Trigonometric) => {
                // 2 * sum_{l > L} l^{-1-2g}, numerically with an integral tail
                let p = 1.0 + 2.0 * gamma;
                let start = l_max as f64 + 1.0;
                let mut total = 0.0;
                let mut l = start;
                while l < start + 4096.0 {
                    total += l.powf(-p);
                    l += 1.0;
                }
                total += (start + 4096.0).powf(1.0 - p) / (p - 1.0);
                Some(2.0 * total)
            }
            _ => None,
        }
    }

    /// Smallest truncation level whose prior tail mass drops below `tol`.
    pub fn suggested_l_max(&self, kind: BasisKind, tol: f64) -> Option<u32> {
        (1..=26u32).find(|&l| self.tail_mass(kind, l).map(|t| t < tol).unwrap_or(false))
    }
}

/// Full product prior: base density, scale rule, basis and the declared
/// signal bound `M` used when checking the prior's admissibility condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPriorSpec {
    pub base: BaseDensity,
    pub scale: ScaleRule,
    pub basis: BasisSpec,
    pub declared_m: f64,
}

impl ProductPriorSpec {
    pub fn validate(&self) -> Result<()> {
        self.basis.validate()?;
        self.base.validate()?;
        match (&self.scale, self.basis.kind) {
            (ScaleRule::PowerTrig { gamma }, BasisKind::Trigonometric)
            | (ScaleRule::PowerDyadic { gamma }, BasisKind::DyadicWavelet) => {
                if *gamma <= 0.0 {
                    return Err(Error::InvalidPrior(format!(
                        "power scale needs gamma > 0 for square-summable scales, got {gamma}"
                    )));
                }
            }
            (ScaleRule::Explicit { sigmas }, _) => {
                if sigmas.len() != self.basis.levels().count() {
                    return Err(Error::InvalidPrior(format!(
                        "explicit scale list has {} entries for {} levels",
                        sigmas.len(),
                        self.basis.levels().count()
                    )));
                }
            }
            _ => {
                return Err(Error::InvalidPrior(
                    "scale rule does not match the basis kind".into(),
                ))
            }
        }
        for l in self.basis.levels() {
            self.scale.sigma(&self.basis, l)?;
        }
        if let BaseDensity::Uniform { tau } = self.base {
            if tau <= self.declared_m {
                return Err(Error::InvalidPrior(format!(
                    "uniform base needs tau > declared M (tau = {tau}, M = {})",
                    self.declared_m
                )));
            }
        }
        Ok(())
    }

    /// Scales expanded to one entry per coordinate, in storage order.
    pub fn coordinate_sigmas(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.basis.dim());
        for l in self.basis.levels() {
            let s = self.scale.sigma(&self.basis, l)?;
            out.extend(std::iter::repeat_n(s, self.basis.level_size(l)));
        }
        Ok(out)
    }
}

/// Draw one field from the prior; deterministic in `seed`.
pub fn prior_sample(spec: &ProductPriorSpec, seed: u64) -> Result<CoefficientField> {
    let sigmas = spec.coordinate_sigmas()?;
    let mut field = CoefficientField::zeros(spec.basis);
    for (i, sigma) in sigmas.iter().enumerate() {
        let mut rng = coord_rng(seed, domain::PRIOR_SAMPLE, i as u64);
        field.values_mut()[i] = sigma * spec.base.sample(&mut rng);
    }
    Ok(field)
}

/// Outcome of checking the signal-domination condition against a truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Largest observed ratio `|theta_0| / sigma_l`.
    pub m_hat: f64,
    pub satisfied: bool,
    pub violating_indices: Vec<(i64, u32)>,
}

/// Check `sup |theta_{0,lk}| / sigma_l <= M` (and `tau > M_hat` for uniform
/// bases). Violations are reported, never raised, so negative controls run.
pub fn check_condition(spec: &ProductPriorSpec, theta0: &CoefficientField) -> ConditionReport {
    let sigmas = match spec.coordinate_sigmas() {
        Ok(s) => s,
        Err(_) => {
            return ConditionReport {
                m_hat: f64::INFINITY,
                satisfied: false,
                violating_indices: vec![],
            }
        }
    };
    let mut m_hat = 0.0f64;
    let mut violating = Vec::new();
    for ((l, k, v), sigma) in theta0.iter_indexed().zip(&sigmas) {
        let ratio = v.abs() / sigma;
        m_hat = m_hat.max(ratio);
        if ratio > spec.declared_m {
            violating.push((l, k));
        }
    }
    let tau_ok = match spec.base {
        BaseDensity::Uniform { tau } => tau > m_hat,
        _ => true,
    };
    ConditionReport {
        m_hat,
        satisfied: m_hat <= spec.declared_m && tau_ok,
        violating_indices: violating,
    }
}
