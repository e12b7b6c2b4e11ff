//! Declarative experiment configuration (TOML, schema version 1).
//!
//! A config fixes the basis, the true signal, the product prior, the credible
//! sets to construct, the diagnostics to record and the Monte Carlo layout
//! (`n_grid` x `replications`). Validation reports every issue with the field
//! path that caused it; the tail-mass truncation rule is checked per grid cell
//! and surfaces as a warning rather than an error.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, BasisSpec};
use crate::credible::{CenterKind, MarginVariant, SetKind};
use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::model::{make_signal, SignalKind, SignalSpec};
use crate::prior::{BaseDensity, ProductPriorSpec, ScaleRule};

pub const SCHEMA_VERSION: u32 = 1;

/// Truncation-rule constant: the prior tail mass beyond `l_max` should stay
/// below `TAIL_TOLERANCE / n`.
pub const TAIL_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub master_seed: u64,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<u64>,
    #[serde(default)]
    pub output: OutputConfig,
    pub basis: BasisConfig,
    pub signal: SignalConfig,
    pub prior: PriorConfig,
    #[serde(default, rename = "set")]
    pub sets: Vec<SetConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default, rename = "check")]
    pub checks: Vec<CheckConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Base path; the harness writes `<path>.json` and `<path>.csv`.
    pub path: PathBuf,
    /// Also write two-column plot-data CSV files under `<path>.plots/`.
    #[serde(default)]
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: PathBuf::from("bvmlab-report"),
            plots: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub kind: BasisKind,
    #[serde(default = "default_j0")]
    pub j0: u32,
    /// Fixed truncation level, or `"auto"` for the per-cell tail-mass rule.
    pub l_max: LevelChoice,
}

fn default_j0() -> u32 {
    1
}

fn default_replications() -> u32 {
    1000
}

fn default_n_grid() -> Vec<u64> {
    vec![1 << 8, 1 << 10, 1 << 12, 1 << 14, 1 << 16]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, rename_all = "snake_case")]
pub enum LevelChoice {
    Fixed(u32),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub kind: SignalKindConfig,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_one")]
    pub m: f64,
    #[serde(default)]
    pub seed: u64,
    /// Explicit coefficients (kind = "explicit" only; requires fixed l_max).
    #[serde(default)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKindConfig {
    Zero,
    HolderDecay,
    Explicit,
}

fn default_gamma() -> f64 {
    1.0
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub family: PriorFamily,
    /// Uniform support half-width (uniform family only).
    pub tau: Option<f64>,
    /// Student-t degrees of freedom (student_t family only).
    pub nu: Option<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Scale rule; defaults to the power rule matching the basis kind.
    #[serde(default)]
    pub scale: PriorScale,
    /// Explicit per-level scales (scale = "explicit" only).
    #[serde(default)]
    pub sigmas: Vec<f64>,
    /// Declared signal bound used by the admissibility check; defaults to the
    /// signal's `m`.
    pub m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorFamily {
    Gaussian,
    Uniform,
    Laplace,
    StudentT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorScale {
    #[default]
    Power,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    pub kind: SetKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_center")]
    pub center: CenterKind,
    #[serde(default = "default_one")]
    pub delta: f64,
    /// Smoothness used by Hoelder / norm constraints; defaults to the prior's.
    pub gamma: Option<f64>,
    /// Hoelder-ball radius for the intersected set.
    pub m: Option<f64>,
    #[serde(default = "default_margin")]
    pub delta_margin: f64,
    #[serde(default)]
    pub margin_variant: MarginVariant,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default = "default_samples")]
    pub sample_count: usize,
    /// Representer coefficients for linear functionals.
    #[serde(default)]
    pub g_l: Vec<GCoefficient>,
    /// Functional for nonlinear intervals; only "squared_l2" is configurable.
    pub psi: Option<PsiConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GCoefficient {
    pub l: i64,
    pub k: u32,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiConfig {
    SquaredL2,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_center() -> CenterKind {
    CenterKind::AtObservation
}

fn default_margin() -> f64 {
    0.2
}

fn default_grid() -> usize {
    1024
}

fn default_samples() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default)]
    pub enabled: Vec<DiagnosticKind>,
    /// Projection levels for the finite-dimensional shape check.
    #[serde(default)]
    pub fidi_levels: Vec<i64>,
    #[serde(default = "default_fidi_samples")]
    pub fidi_sample_count: usize,
    /// H(delta) index for risk and mean-linearity records.
    #[serde(default = "default_one")]
    pub delta: f64,
    #[serde(default = "default_delta_prime")]
    pub delta_prime: f64,
    /// Tail threshold for the concentration fraction.
    #[serde(default = "default_m_test")]
    pub m_test: f64,
    #[serde(default = "default_tail_samples")]
    pub tail_sample_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Fidi,
    HdeltaTail,
    MeanLinearity,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            enabled: Vec::new(),
            fidi_levels: Vec::new(),
            fidi_sample_count: default_fidi_samples(),
            delta: 1.0,
            delta_prime: default_delta_prime(),
            m_test: default_m_test(),
            tail_sample_count: default_tail_samples(),
        }
    }
}

fn default_fidi_samples() -> usize {
    8192
}

fn default_delta_prime() -> f64 {
    0.6
}

fn default_m_test() -> f64 {
    40.0
}

fn default_tail_samples() -> usize {
    512
}

/// Post-run acceptance window on an aggregate metric, enforced by `--check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    /// Set index the metric refers to (set metrics only).
    pub set: Option<usize>,
    /// Restrict to one grid cell by its n; default all cells.
    pub n: Option<u64>,
    pub metric: CheckMetric,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMetric {
    Coverage,
    Credibility,
    RnMedian,
    MnMedian,
    WidthMedian,
    DiameterMedian,
    RiskL2Median,
    NHdeltaRiskMedian,
    MeanLinearityMedian,
    FidiMaxKsMedian,
    CovDeviationMedian,
    TailFractionMean,
}

/// A validation finding with the config path it refers to.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
    pub warning: bool,
}

impl ConfigIssue {
    fn error(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigIssue {
            path: path.into(),
            message: message.into(),
            warning: false,
        }
    }

    fn warning(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigIssue {
            path: path.into(),
            message: message.into(),
            warning: true,
        }
    }
}

/// One fully resolved grid cell: concrete truncation, prior and truth.
#[derive(Debug, Clone)]
pub struct ResolvedCell {
    pub index: usize,
    pub n: u64,
    pub basis: BasisSpec,
    pub prior: ProductPriorSpec,
    pub theta0: CoefficientField,
    /// Analytic prior tail mass beyond the truncation, when available.
    pub tail_mass: Option<f64>,
    /// Whether the tail mass meets the `1e-4 / n` truncation rule.
    pub tail_rule_ok: Option<bool>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("<config>", e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    fn scale_rule(&self) -> ScaleRule {
        match (self.prior.scale, self.basis.kind) {
            (PriorScale::Explicit, _) => ScaleRule::Explicit {
                sigmas: self.prior.sigmas.clone(),
            },
            (PriorScale::Power, BasisKind::Trigonometric) => ScaleRule::PowerTrig {
                gamma: self.prior.gamma,
            },
            (PriorScale::Power, BasisKind::DyadicWavelet) => ScaleRule::PowerDyadic {
                gamma: self.prior.gamma,
            },
        }
    }

    fn base_density(&self) -> BaseDensity {
        match self.prior.family {
            PriorFamily::Gaussian => BaseDensity::Gaussian,
            PriorFamily::Uniform => BaseDensity::Uniform {
                tau: self.prior.tau.unwrap_or(0.0),
            },
            PriorFamily::Laplace => BaseDensity::Laplace,
            PriorFamily::StudentT => BaseDensity::StudentT {
                nu: self.prior.nu.unwrap_or(0.0),
            },
        }
    }

    pub fn declared_m(&self) -> f64 {
        self.prior.m.unwrap_or(self.signal.m)
    }

    /// Truncation level for one grid cell.
    pub fn l_max_for(&self, n: u64) -> Result<u32> {
        match self.basis.l_max {
            LevelChoice::Fixed(l) => Ok(l),
            LevelChoice::Auto(_) => {
                let rule = self.scale_rule();
                rule.suggested_l_max(self.basis.kind, TAIL_TOLERANCE / n as f64)
                    .ok_or_else(|| {
                        Error::config(
                            "basis.l_max",
                            "auto truncation is only available for power scale rules",
                        )
                    })
            }
        }
    }

    fn basis_for(&self, l_max: u32) -> BasisSpec {
        match self.basis.kind {
            BasisKind::Trigonometric => BasisSpec::trigonometric(l_max),
            BasisKind::DyadicWavelet => BasisSpec::dyadic_wavelet(self.basis.j0, l_max),
        }
    }

    /// Resolve every grid cell: truncation level, prior, truth.
    pub fn resolve_cells(&self) -> Result<Vec<ResolvedCell>> {
        let mut cells = Vec::with_capacity(self.n_grid.len());
        for (index, &n) in self.n_grid.iter().enumerate() {
            let l_max = self.l_max_for(n)?;
            let basis = self.basis_for(l_max);
            basis.validate()?;
            let prior = ProductPriorSpec {
                base: self.base_density(),
                scale: self.scale_rule(),
                basis,
                declared_m: self.declared_m(),
            };
            prior.validate()?;
            let signal_kind = match self.signal.kind {
                SignalKindConfig::Zero => SignalKind::Zero,
                SignalKindConfig::Explicit => SignalKind::Explicit {
                    values: self.signal.values.clone(),
                },
                SignalKindConfig::HolderDecay => SignalKind::HolderDecay {
                    gamma: self.signal.gamma,
                    m: self.signal.m,
                    seed: self.signal.seed,
                },
            };
            // Hoelder-decay truths decay with the signal's own gamma so that
            // signal/prior smoothness mismatches stay expressible.
            let signal_sigma = match self.basis.kind {
                BasisKind::Trigonometric => ScaleRule::PowerTrig {
                    gamma: self.signal.gamma,
                },
                BasisKind::DyadicWavelet => ScaleRule::PowerDyadic {
                    gamma: self.signal.gamma,
                },
            }
            .per_level(&basis)?;
            let theta0 = make_signal(
                &SignalSpec {
                    kind: signal_kind,
                    basis,
                },
                &signal_sigma,
            )?;
            let tail_mass = self.scale_rule().tail_mass(self.basis.kind, l_max);
            let tail_rule_ok = tail_mass.map(|t| t < TAIL_TOLERANCE / n as f64);
            cells.push(ResolvedCell {
                index,
                n,
                basis,
                prior,
                theta0,
                tail_mass,
                tail_rule_ok,
            });
        }
        Ok(cells)
    }

    /// Validate the whole config; errors abort a run, warnings do not.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            issues.push(ConfigIssue::error(
                "schema_version",
                format!("expected {SCHEMA_VERSION}"),
            ));
        }
        if self.n_grid.is_empty() {
            issues.push(ConfigIssue::error("n_grid", "at least one n is required"));
        }
        for (i, &n) in self.n_grid.iter().enumerate() {
            if n < 1 {
                issues.push(ConfigIssue::error(format!("n_grid[{i}]"), "n must be >= 1"));
            }
        }

        // prior family parameters
        match self.prior.family {
            PriorFamily::Uniform => match self.prior.tau {
                None => issues.push(ConfigIssue::error(
                    "prior.tau",
                    "uniform family requires tau",
                )),
                Some(tau) => {
                    if tau <= 0.0 {
                        issues.push(ConfigIssue::error("prior.tau", "tau must be positive"));
                    } else if tau <= self.declared_m() {
                        issues.push(ConfigIssue::error(
                            "prior.tau",
                            format!(
                                "tau = {tau} must exceed the declared signal bound M = {}",
                                self.declared_m()
                            ),
                        ));
                    }
                }
            },
            PriorFamily::StudentT => match self.prior.nu {
                None => issues.push(ConfigIssue::error(
                    "prior.nu",
                    "student_t family requires nu",
                )),
                Some(nu) if nu <= 2.0 => issues.push(ConfigIssue::error(
                    "prior.nu",
                    "student_t needs nu > 2 for a finite second moment",
                )),
                _ => {}
            },
            _ => {}
        }
        if self.prior.scale == PriorScale::Power && self.prior.gamma <= 0.0 {
            issues.push(ConfigIssue::error("prior.gamma", "gamma must be positive"));
        }
        if self.prior.scale == PriorScale::Explicit {
            if matches!(self.basis.l_max, LevelChoice::Auto(_)) {
                issues.push(ConfigIssue::error(
                    "prior.scale",
                    "explicit scales require a fixed basis.l_max",
                ));
            }
            if self.prior.sigmas.is_empty() {
                issues.push(ConfigIssue::error(
                    "prior.sigmas",
                    "explicit scale rule needs per-level sigmas",
                ));
            }
        }

        // signal
        match self.signal.kind {
            SignalKindConfig::HolderDecay => {
                if self.signal.gamma <= 0.0 {
                    issues.push(ConfigIssue::error("signal.gamma", "gamma must be positive"));
                }
                if self.signal.m <= 0.0 {
                    issues.push(ConfigIssue::error("signal.m", "m must be positive"));
                }
                if (self.signal.gamma - self.prior.gamma).abs() > 1e-12 {
                    issues.push(ConfigIssue::warning(
                        "signal.gamma",
                        "signal and prior smoothness differ; admissibility may fail",
                    ));
                }
            }
            SignalKindConfig::Explicit => {
                if matches!(self.basis.l_max, LevelChoice::Auto(_)) {
                    issues.push(ConfigIssue::error(
                        "signal.values",
                        "explicit signals require a fixed basis.l_max",
                    ));
                }
            }
            SignalKindConfig::Zero => {}
        }

        // sets
        for (j, set) in self.sets.iter().enumerate() {
            let path = |field: &str| format!("set[{j}].{field}");
            if !(0.0 < set.alpha && set.alpha < 1.0) {
                issues.push(ConfigIssue::error(path("alpha"), "alpha must be in (0,1)"));
            }
            if set.delta <= 0.5 {
                issues.push(ConfigIssue::error(path("delta"), "delta must exceed 1/2"));
            }
            if set.sample_count < 100 {
                issues.push(ConfigIssue::error(
                    path("sample_count"),
                    "need at least 100 posterior samples",
                ));
            }
            let gamma = set.gamma.unwrap_or(self.prior.gamma);
            match set.kind {
                SetKind::HolderIntersected => {
                    if self.basis.kind != BasisKind::DyadicWavelet {
                        issues.push(ConfigIssue::error(
                            path("kind"),
                            "holder_intersected needs the dyadic wavelet basis",
                        ));
                    }
                    if self.prior.family != PriorFamily::Uniform {
                        issues.push(ConfigIssue::error(
                            path("kind"),
                            "holder_intersected needs the uniform prior family",
                        ));
                    }
                    if set.m.unwrap_or(self.signal.m) <= 0.0 {
                        issues.push(ConfigIssue::error(path("m"), "m must be positive"));
                    }
                }
                SetKind::NormEstimated => {
                    if set.delta_margin <= 0.0 {
                        issues.push(ConfigIssue::error(
                            path("delta_margin"),
                            "delta_margin must be positive",
                        ));
                    }
                    if let Some(&n_min) = self.n_grid.iter().min() {
                        let delta_n = (n_min.max(2) as f64).ln().powf(-0.25);
                        let floor = (100.0 / delta_n).ceil() as usize;
                        if set.sample_count < floor {
                            issues.push(ConfigIssue::error(
                                path("sample_count"),
                                format!("norm_estimated at n = {n_min} needs >= {floor} samples"),
                            ));
                        }
                    }
                }
                SetKind::ConvolutionBand => {
                    if self.basis.kind != BasisKind::Trigonometric {
                        issues.push(ConfigIssue::error(
                            path("kind"),
                            "convolution_band needs the trigonometric basis",
                        ));
                    }
                    if gamma <= 0.5 {
                        issues.push(ConfigIssue::error(
                            path("gamma"),
                            "convolution bands need smoothness gamma > 1/2",
                        ));
                    }
                    if !set.grid_size.is_power_of_two() {
                        issues.push(ConfigIssue::error(
                            path("grid_size"),
                            "grid_size must be a power of two",
                        ));
                    } else if let LevelChoice::Fixed(l_max) = self.basis.l_max {
                        let dim = self.basis_for(l_max).dim();
                        if set.grid_size < dim {
                            issues.push(ConfigIssue::error(
                                path("grid_size"),
                                format!("grid_size must cover {dim} coordinates"),
                            ));
                        }
                    }
                }
                SetKind::LinearFunctional => {
                    if set.g_l.is_empty() || set.g_l.iter().all(|c| c.value == 0.0) {
                        issues.push(ConfigIssue::error(
                            path("g_l"),
                            "linear functionals need nonzero representer coefficients",
                        ));
                    }
                }
                SetKind::NonlinearFunctional => {
                    if set.psi.is_none() {
                        issues.push(ConfigIssue::error(
                            path("psi"),
                            "nonlinear functionals need psi = \"squared_l2\"",
                        ));
                    }
                }
                SetKind::HdeltaBall => {}
            }
        }

        // diagnostics
        let d = &self.diagnostics;
        if d.enabled.contains(&DiagnosticKind::Fidi) {
            if d.fidi_levels.is_empty() {
                issues.push(ConfigIssue::error(
                    "diagnostics.fidi_levels",
                    "fidi diagnostics need projection levels",
                ));
            }
            if d.fidi_sample_count < 500 {
                issues.push(ConfigIssue::error(
                    "diagnostics.fidi_sample_count",
                    "fidi needs at least 500 samples",
                ));
            }
        }
        if d.delta <= 0.5 {
            issues.push(ConfigIssue::error(
                "diagnostics.delta",
                "delta must exceed 1/2",
            ));
        }
        if d.delta_prime <= 0.5 {
            issues.push(ConfigIssue::error(
                "diagnostics.delta_prime",
                "delta' must exceed 1/2",
            ));
        }

        // checks
        for (i, check) in self.checks.iter().enumerate() {
            let path = format!("check[{i}]");
            let set_metric = matches!(
                check.metric,
                CheckMetric::Coverage
                    | CheckMetric::Credibility
                    | CheckMetric::RnMedian
                    | CheckMetric::MnMedian
                    | CheckMetric::WidthMedian
                    | CheckMetric::DiameterMedian
            );
            match (set_metric, check.set) {
                (true, None) => issues.push(ConfigIssue::error(
                    format!("{path}.set"),
                    "this metric needs a set index",
                )),
                (true, Some(s)) if s >= self.sets.len() => issues.push(ConfigIssue::error(
                    format!("{path}.set"),
                    format!("set index {s} out of range"),
                )),
                _ => {}
            }
            if check.min.is_none() && check.max.is_none() {
                issues.push(ConfigIssue::error(path, "need at least one of min/max"));
            }
        }

        // cell resolution issues (tail rule, basis feasibility)
        match self.resolve_cells() {
            Err(e) => issues.push(ConfigIssue::error("basis", e.to_string())),
            Ok(cells) => {
                for cell in &cells {
                    if cell.tail_rule_ok == Some(false) {
                        issues.push(ConfigIssue::warning(
                            "basis.l_max",
                            format!(
                                "prior tail mass {:.3e} at n = {} exceeds the {:.1e}/n truncation rule",
                                cell.tail_mass.unwrap_or(f64::NAN),
                                cell.n,
                                TAIL_TOLERANCE,
                            ),
                        ));
                    }
                    for (j, set) in self.sets.iter().enumerate() {
                        if set.kind == SetKind::ConvolutionBand && set.grid_size < cell.basis.dim()
                        {
                            issues.push(ConfigIssue::error(
                                format!("set[{j}].grid_size"),
                                format!(
                                    "grid {} below coordinate count {} at n = {}",
                                    set.grid_size,
                                    cell.basis.dim(),
                                    cell.n
                                ),
                            ));
                        }
                        if set.kind == SetKind::LinearFunctional {
                            for (ci, c) in set.g_l.iter().enumerate() {
                                if cell.basis.position(c.l, c.k).is_none() {
                                    issues.push(ConfigIssue::error(
                                        format!("set[{j}].g_l[{ci}]"),
                                        format!(
                                            "coordinate ({}, {}) outside the basis at n = {}",
                                            c.l, c.k, cell.n
                                        ),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        issues
    }

    /// Errors only, as a single combined failure.
    pub fn ensure_valid(&self) -> Result<()> {
        let errors: Vec<ConfigIssue> = self.validate().into_iter().filter(|i| !i.warning).collect();
        if errors.is_empty() {
            return Ok(());
        }
        let joined = errors
            .iter()
            .map(|i| format!("{}: {}", i.path, i.message))
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::config("config", joined))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"
schema_version = 1
master_seed = 42
replications = 4
n_grid = [256, 1024]

[output]
path = "out/test-report"

[basis]
kind = "dyadic_wavelet"
j0 = 1
l_max = "auto"

[signal]
kind = "holder_decay"
gamma = 1.0
m = 0.8
seed = 7

[prior]
family = "gaussian"
gamma = 1.0

[[set]]
kind = "hdelta_ball"
alpha = 0.05
delta = 1.0
sample_count = 256
"#;

    #[test]
    fn minimal_config_parses_and_validates() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let issues = cfg.validate();
        assert!(
            issues.iter().all(|i| i.warning),
            "unexpected errors: {issues:?}"
        );
        assert!(cfg.ensure_valid().is_ok());
        let cells = cfg.resolve_cells().unwrap();
        assert_eq!(cells.len(), 2);
        // auto truncation obeys the tail rule and grows with n
        assert!(cells[0].basis.l_max < cells[1].basis.l_max);
        assert_eq!(cells[0].tail_rule_ok, Some(true));
    }

    #[test]
    fn truncation_consistency_across_cells() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let cells = cfg.resolve_cells().unwrap();
        let short = &cells[0].theta0;
        let long = &cells[1].theta0;
        assert_eq!(
            short.values(),
            &long.values()[..short.values().len()],
            "the same truth must extend across truncations"
        );
    }

    #[test]
    fn grid_and_replications_have_defaults() {
        let text = MINIMAL
            .replace("replications = 4\n", "")
            .replace("n_grid = [256, 1024]\n", "");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg.replications, 1000);
        assert_eq!(cfg.n_grid, vec![256, 1024, 4096, 16384, 65536]);
    }

    #[test]
    fn uniform_tau_below_declared_m_is_an_error() {
        let text = MINIMAL.replace("family = \"gaussian\"", "family = \"uniform\"\ntau = 0.5");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let errors: Vec<_> = cfg.validate().into_iter().filter(|i| !i.warning).collect();
        assert!(errors.iter().any(|i| i.path == "prior.tau"), "{errors:?}");
        assert!(cfg.ensure_valid().is_err());
    }

    #[test]
    fn student_t_requires_nu_above_two() {
        let text = MINIMAL.replace("family = \"gaussian\"", "family = \"student_t\"\nnu = 1.5");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert!(cfg
            .validate()
            .iter()
            .any(|i| i.path == "prior.nu" && !i.warning));
    }

    #[test]
    fn band_on_wavelet_basis_is_rejected_with_a_field_path() {
        let text = MINIMAL.replace("kind = \"hdelta_ball\"", "kind = \"convolution_band\"");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let errors: Vec<_> = cfg.validate().into_iter().filter(|i| !i.warning).collect();
        assert!(errors.iter().any(|i| i.path == "set[0].kind"));
    }

    #[test]
    fn tiny_sample_counts_are_flagged() {
        let text = MINIMAL.replace("sample_count = 256", "sample_count = 50");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert!(cfg
            .validate()
            .iter()
            .any(|i| i.path == "set[0].sample_count" && !i.warning));
    }

    #[test]
    fn unknown_fields_are_rejected_at_parse_time() {
        let text = MINIMAL.replace("master_seed = 42", "master_seed = 42\nbogus = 1");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let again = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, again);
    }
}
