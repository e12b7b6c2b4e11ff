//! Coordinate-wise posteriors under product priors in the white noise model.
//!
//! Each coordinate posterior is proportional to
//! `exp(-n (theta - x_lk)^2 / 2) * phi_lk(theta)`. A Gaussian base gives the
//! conjugate closed form; every other base is represented on a quadrature
//! grid that resolves the likelihood width `1/sqrt(n)`, the prior scale
//! `sigma_l` and the prior tails. All exponentials are max-subtracted in log
//! space; moments and the CDF integrate cell-by-cell with endpoint-corrected
//! trapezoid rules (the log-density slopes are known analytically), which
//! keeps spacing changes and density kinks at O(h^4).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::basis::BasisSpec;
use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::model::Observation;
use crate::norms::NormSpec;
use crate::prior::{BaseDensity, ProductPriorSpec};
use crate::rng::{coord_rng, domain};
use crate::stats;

const GUIDE_BINS: usize = 256;

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Run the quadrature engine even for Gaussian bases (cross-checks).
    pub force_gridded: bool,
    /// Nodes across the likelihood window `x +- 8/sqrt(n)`.
    pub likelihood_nodes: usize,
    /// Nodes across the prior's central 99.99% region (or support).
    pub prior_nodes: usize,
    /// Log-density drop per cell for the tail extension of unbounded bases.
    pub tail_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            force_gridded: false,
            likelihood_nodes: 512,
            prior_nodes: 128,
            tail_step: 0.35,
        }
    }
}

impl FitOptions {
    /// Same engine with every resolution multiplied; used as the
    /// grid-refinement oracle in tests.
    pub fn refined(mut self, factor: usize) -> Self {
        self.likelihood_nodes *= factor;
        self.prior_nodes *= factor;
        self.tail_step /= factor as f64;
        self
    }
}

/// Normalized quadrature representation of one coordinate posterior.
#[derive(Debug, Clone)]
pub struct GriddedPosterior {
    pub nodes: Vec<f64>,
    /// Node masses in log space; logsumexp is zero.
    pub log_weights: Vec<f64>,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
    guide: Vec<u32>,
    mean: f64,
    var: f64,
}

#[derive(Debug, Clone)]
pub enum PosteriorForm {
    ClosedFormGaussian { mean: f64, var: f64 },
    Gridded(GriddedPosterior),
}

#[derive(Debug, Clone)]
pub struct CoordinatePosterior {
    pub l: i64,
    pub k: u32,
    pub n: u64,
    pub x: f64,
    pub sigma: f64,
    pub form: PosteriorForm,
}

impl CoordinatePosterior {
    pub fn mean(&self) -> f64 {
        match &self.form {
            PosteriorForm::ClosedFormGaussian { mean, .. } => *mean,
            PosteriorForm::Gridded(g) => g.mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match &self.form {
            PosteriorForm::ClosedFormGaussian { var, .. } => *var,
            PosteriorForm::Gridded(g) => g.var,
        }
    }

    /// Posterior second moment about `c`.
    pub fn second_moment_about(&self, c: f64) -> f64 {
        let d = self.mean() - c;
        self.variance() + d * d
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match &self.form {
            PosteriorForm::ClosedFormGaussian { mean, var } => {
                mean + var.sqrt() * stats::normal_quantile(p)
            }
            PosteriorForm::Gridded(g) => g.quantile(p),
        }
    }

    /// Fill `out` with i.i.d. posterior draws from `rng`.
    pub fn draw_into(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match &self.form {
            PosteriorForm::ClosedFormGaussian { mean, var } => {
                let sd = var.sqrt();
                for v in out.iter_mut() {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    *v = mean + sd * z;
                }
            }
            PosteriorForm::Gridded(g) => {
                for v in out.iter_mut() {
                    *v = g.draw(rng.random::<f64>());
                }
            }
        }
    }
}

impl GriddedPosterior {
    /// Inverse CDF with linear interpolation within grid cells.
    pub fn draw(&self, u: f64) -> f64 {
        let bin = ((u * GUIDE_BINS as f64) as usize).min(GUIDE_BINS - 1);
        let mut i = self.guide[bin] as usize;
        let last_cell = self.nodes.len() - 2;
        while i < last_cell && self.cdf[i + 1] < u {
            i += 1;
        }
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let frac = if f1 > f0 { (u - f0) / (f1 - f0) } else { 0.5 };
        self.nodes[i] + frac * (self.nodes[i + 1] - self.nodes[i])
    }

    /// Quantile by monotone piecewise-cubic inversion of the CDF.
    ///
    /// The density values are exact CDF slopes at the nodes, so a
    /// Fritsch-Carlson limited Hermite cubic stays monotone and is accurate to
    /// O(h^4) where plain linear interpolation would cap accuracy at O(h^2).
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let mut lo = 0usize;
        let mut hi = self.nodes.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] <= p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (t0, t1) = (self.nodes[lo], self.nodes[lo + 1]);
        let (f0, f1) = (self.cdf[lo], self.cdf[lo + 1]);
        let h = t1 - t0;
        let delta = (f1 - f0) / h;
        if delta <= 0.0 {
            return 0.5 * (t0 + t1);
        }
        let (mut d0, mut d1) = (self.pdf[lo], self.pdf[lo + 1]);
        let (alpha, beta) = (d0 / delta, d1 / delta);
        let r = alpha * alpha + beta * beta;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            d0 *= tau;
            d1 *= tau;
        }
        let cubic = |s: f64| {
            let s2 = s * s;
            let s3 = s2 * s;
            f0 * (2.0 * s3 - 3.0 * s2 + 1.0)
                + h * d0 * (s3 - 2.0 * s2 + s)
                + f1 * (-2.0 * s3 + 3.0 * s2)
                + h * d1 * (s3 - s2)
        };
        let (mut a, mut b) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (a + b);
            if cubic(mid) <= p {
                a = mid;
            } else {
                b = mid;
            }
        }
        t0 + 0.5 * (a + b) * h
    }
}

fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

fn fit_gridded(
    base: &BaseDensity,
    sigma: f64,
    n: u64,
    x: f64,
    opts: &FitOptions,
) -> Result<GriddedPosterior> {
    let sqrt_n = (n as f64).sqrt();
    let (plo, phi) = match base.support() {
        Some((lo, hi)) => (lo * sigma, hi * sigma),
        None => (
            base.quantile(5e-5) * sigma,
            base.quantile(1.0 - 5e-5) * sigma,
        ),
    };
    // Likelihood window centered at x, or at the nearest support point when
    // the observation falls outside a bounded support. The restricted
    // likelihood then decays like exp(-n |x - c| d) in the distance d from the
    // boundary, so the window must cover enough e-foldings of that rate.
    let center = x.clamp(plo, phi);
    let dist = (x - center).abs();
    let span = if dist * sqrt_n > 1.0 {
        45.0 / (n as f64 * dist)
    } else {
        8.0 / sqrt_n
    };
    let (llo, lhi) = ((center - span).max(plo), (center + span).min(phi));

    let m_lik = opts.likelihood_nodes.max(2);
    let m_pri = (opts.prior_nodes.max(2)) | 1; // odd count puts a node at the center
    let mut nodes = Vec::with_capacity(m_lik + m_pri + 200);
    if lhi > llo {
        for i in 0..m_lik {
            nodes.push(llo + (lhi - llo) * i as f64 / (m_lik - 1) as f64);
        }
    }
    for i in 0..m_pri {
        nodes.push(plo + (phi - plo) * i as f64 / (m_pri - 1) as f64);
    }
    // Unbounded bases carry ~1e-4 prior mass beyond the core region; extend
    // each side with nodes spaced by a constant log-density drop until that
    // remainder is e^-21 of itself, so moments see the full tail.
    if base.support().is_none() {
        let max_tail_nodes = (2.0 + 21.0 / opts.tail_step).ceil() as usize;
        for side in [-1.0f64, 1.0] {
            let mut t = if side > 0.0 { phi } else { plo };
            let mut dropped = 0.0;
            for _ in 0..max_tail_nodes {
                let slope = base.log_density_slope(t / sigma, side < 0.0).abs() / sigma;
                let step = opts.tail_step / slope.max(1e-100);
                t += side * step;
                if !t.is_finite() {
                    break;
                }
                nodes.push(t);
                dropped += opts.tail_step;
                if dropped >= 21.0 {
                    break;
                }
            }
        }
    }
    // a node at the density kink of symmetric bases (|x| in the exponent)
    if plo < 0.0 && phi > 0.0 {
        nodes.push(0.0);
    }
    nodes.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let eps = 1e-12 * (phi - plo).abs().max(lhi - llo).max(f64::MIN_POSITIVE);
    nodes.dedup_by(|a, b| (*a - *b).abs() <= eps);
    if nodes.len() < 2 {
        return Err(Error::NumericalUnderflow { x, sigma, n });
    }

    let log_sigma = sigma.ln();
    let loglik: Vec<f64> = nodes
        .iter()
        .map(|t| {
            let d = t - x;
            -0.5 * n as f64 * d * d + base.log_density(t / sigma) - log_sigma
        })
        .collect();
    let ll_max = loglik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !ll_max.is_finite() {
        return Err(Error::NumericalUnderflow { x, sigma, n });
    }
    // One-sided log-density slopes in t; the sides differ only at kinks.
    let slope = |t: f64, from_right: bool| {
        -(n as f64) * (t - x) + base.log_density_slope(t / sigma, from_right) / sigma
    };
    // Max-subtracted density values and endpoint-corrected trapezoid cells:
    // int g = h/2 (g0 + g1) + h^2/12 (g0' - g1'), exact for cubics, so kinks
    // and spacing changes cost O(h^4) instead of O(h^2).
    let y: Vec<f64> = loglik.iter().map(|ll| (ll - ll_max).exp()).collect();
    let mut cell_mass = vec![0.0f64; nodes.len() - 1];
    let (mut z, mut m1, mut m2) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..nodes.len() - 1 {
        let (t0, t1) = (nodes[i], nodes[i + 1]);
        let h = t1 - t0;
        let (y0, y1) = (y[i], y[i + 1]);
        let (d0, d1) = (y0 * slope(t0, true), y1 * slope(t1, false));
        let mass = (0.5 * h * (y0 + y1) + h * h / 12.0 * (d0 - d1)).max(0.0);
        cell_mass[i] = mass;
        z += mass;
        m1 += 0.5 * h * (t0 * y0 + t1 * y1) + h * h / 12.0 * ((y0 + t0 * d0) - (y1 + t1 * d1));
        m2 += 0.5 * h * (t0 * t0 * y0 + t1 * t1 * y1)
            + h * h / 12.0 * ((2.0 * t0 * y0 + t0 * t0 * d0) - (2.0 * t1 * y1 + t1 * t1 * d1));
    }
    if z <= 0.0 || !z.is_finite() {
        return Err(Error::NumericalUnderflow { x, sigma, n });
    }
    let mean = m1 / z;
    let var = (m2 / z - mean * mean).max(0.0);

    // Node masses (plain trapezoid weights), normalized among themselves.
    let mut log_weights: Vec<f64> = Vec::with_capacity(nodes.len());
    for i in 0..nodes.len() {
        let cell = if i == 0 {
            nodes[1] - nodes[0]
        } else if i + 1 == nodes.len() {
            nodes[i] - nodes[i - 1]
        } else {
            nodes[i + 1] - nodes[i - 1]
        };
        log_weights.push(loglik[i] + (0.5 * cell).ln());
    }
    let logz = logsumexp(&log_weights);
    if !logz.is_finite() {
        return Err(Error::NumericalUnderflow { x, sigma, n });
    }
    for w in log_weights.iter_mut() {
        *w -= logz;
    }

    let pdf: Vec<f64> = y.iter().map(|v| v / z).collect();
    let mut cdf = vec![0.0f64; nodes.len()];
    for i in 1..nodes.len() {
        cdf[i] = cdf[i - 1] + cell_mass[i - 1] / z;
    }
    cdf[nodes.len() - 1] = 1.0;

    let mut guide = vec![0u32; GUIDE_BINS];
    let mut cell = 0usize;
    for (bin, slot) in guide.iter_mut().enumerate() {
        let u = bin as f64 / GUIDE_BINS as f64;
        while cell + 2 < cdf.len() && cdf[cell + 1] <= u {
            cell += 1;
        }
        *slot = cell as u32;
    }

    Ok(GriddedPosterior {
        nodes,
        log_weights,
        pdf,
        cdf,
        guide,
        mean,
        var,
    })
}

/// Joint posterior: independent coordinates over the basis index set.
#[derive(Debug, Clone)]
pub struct PosteriorField {
    basis: BasisSpec,
    n: u64,
    coords: Vec<CoordinatePosterior>,
}

/// Weighted quadratic statistic `sum_i w_i (theta_i - c_i)^2` accumulated per
/// joint posterior sample.
pub struct QuadStat<'a> {
    pub weights: &'a [f64],
    pub center: &'a [f64],
}

impl PosteriorField {
    pub fn fit(prior: &ProductPriorSpec, obs: &Observation) -> Result<Self> {
        Self::fit_with(prior, obs, &FitOptions::default())
    }

    pub fn fit_with(
        prior: &ProductPriorSpec,
        obs: &Observation,
        opts: &FitOptions,
    ) -> Result<Self> {
        prior.validate()?;
        if *obs.x.basis() != prior.basis {
            return Err(Error::BasisMismatch(
                "observation and prior bases differ".into(),
            ));
        }
        if obs.n == 0 {
            return Err(Error::InvalidArgument("noise index n must be >= 1".into()));
        }
        let sigmas = prior.coordinate_sigmas()?;
        let nf = obs.n as f64;
        let mut coords = Vec::with_capacity(prior.basis.dim());
        for ((l, k), (x, sigma)) in prior
            .basis
            .index_set()
            .into_iter()
            .zip(obs.x.values().iter().zip(&sigmas))
        {
            let form = match prior.base {
                BaseDensity::Gaussian if !opts.force_gridded => {
                    let s2 = sigma * sigma;
                    PosteriorForm::ClosedFormGaussian {
                        mean: x * nf * s2 / (nf * s2 + 1.0),
                        var: s2 / (nf * s2 + 1.0),
                    }
                }
                _ => PosteriorForm::Gridded(fit_gridded(&prior.base, *sigma, obs.n, *x, opts)?),
            };
            coords.push(CoordinatePosterior {
                l,
                k,
                n: obs.n,
                x: *x,
                sigma: *sigma,
                form,
            });
        }
        Ok(PosteriorField {
            basis: prior.basis,
            n: obs.n,
            coords,
        })
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn coords(&self) -> &[CoordinatePosterior] {
        &self.coords
    }

    /// Coordinate-wise posterior expectation, the plug-in center `f_bar`.
    pub fn posterior_mean(&self) -> CoefficientField {
        let mut f = CoefficientField::zeros(self.basis);
        for (v, c) in f.values_mut().iter_mut().zip(&self.coords) {
            *v = c.mean();
        }
        f
    }

    pub fn variances(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c.variance()).collect()
    }

    /// Per-coordinate posterior second moment about the truth.
    pub fn b_lk(&self, theta0: &CoefficientField) -> Result<Vec<f64>> {
        if *theta0.basis() != self.basis {
            return Err(Error::BasisMismatch("truth lives on another basis".into()));
        }
        Ok(self
            .coords
            .iter()
            .zip(theta0.values())
            .map(|(c, t)| c.second_moment_about(*t))
            .collect())
    }

    /// Integrated posterior risk `int ||f - f0||^2 dPi(f | X)` in a weighted-L2
    /// norm; exact given the coordinate moments, no sampling.
    pub fn contraction_risk(&self, theta0: &CoefficientField, spec: &NormSpec) -> Result<f64> {
        if matches!(spec, NormSpec::HolderSup { .. }) {
            return Err(Error::IncompatibleNorm(
                "contraction risk needs a quadratic norm flavor".into(),
            ));
        }
        let weights = spec.coordinate_weights(&self.basis)?;
        let b = self.b_lk(theta0)?;
        Ok(weights.iter().zip(&b).map(|(w, b)| w * b).sum())
    }

    /// Joint i.i.d. draws as full coefficient fields.
    pub fn sample_fields(&self, count: usize, seed: u64) -> Result<Vec<CoefficientField>> {
        if count == 0 {
            return Err(Error::SampleCountTooSmall { got: 0, min: 1 });
        }
        let mut fields = vec![CoefficientField::zeros(self.basis); count];
        let mut buf = vec![0.0f64; count];
        for (i, coord) in self.coords.iter().enumerate() {
            let mut rng = coord_rng(seed, domain::POSTERIOR_SAMPLE, i as u64);
            coord.draw_into(&mut rng, &mut buf);
            for (s, field) in fields.iter_mut().enumerate() {
                field.values_mut()[i] = buf[s];
            }
        }
        Ok(fields)
    }

    /// Accumulate several weighted quadratic statistics over `count` joint
    /// draws without materializing the fields. Coordinate `i` always consumes
    /// the same substream as in `sample_fields`, so the joint draws coincide.
    pub fn sample_quadratics(
        &self,
        count: usize,
        seed: u64,
        stats: &[QuadStat<'_>],
    ) -> Result<Vec<Vec<f64>>> {
        for st in stats {
            if st.weights.len() != self.coords.len() || st.center.len() != self.coords.len() {
                return Err(Error::InvalidArgument(
                    "quadratic statistic arrays must match the coordinate count".into(),
                ));
            }
        }
        let mut acc = vec![vec![0.0f64; count]; stats.len()];
        let mut buf = vec![0.0f64; count];
        for (i, coord) in self.coords.iter().enumerate() {
            if stats.iter().all(|st| st.weights[i] == 0.0) {
                continue; // coordinate substreams are independent, safe to skip
            }
            let mut rng = coord_rng(seed, domain::POSTERIOR_SAMPLE, i as u64);
            coord.draw_into(&mut rng, &mut buf);
            for (st, acc_j) in stats.iter().zip(acc.iter_mut()) {
                let w = st.weights[i];
                if w == 0.0 {
                    continue;
                }
                let c = st.center[i];
                for (a, v) in acc_j.iter_mut().zip(&buf) {
                    let d = v - c;
                    *a += w * d * d;
                }
            }
        }
        Ok(acc)
    }

    /// Per-sample values of the linear functional `sum_i coeff_i theta_i`.
    pub fn sample_linear(&self, count: usize, seed: u64, coeff: &[f64]) -> Result<Vec<f64>> {
        if coeff.len() != self.coords.len() {
            return Err(Error::InvalidArgument(
                "linear coefficient array must match the coordinate count".into(),
            ));
        }
        let mut acc = vec![0.0f64; count];
        let mut buf = vec![0.0f64; count];
        for (i, coord) in self.coords.iter().enumerate() {
            let c = coeff[i];
            if c == 0.0 {
                continue;
            }
            let mut rng = coord_rng(seed, domain::POSTERIOR_SAMPLE, i as u64);
            coord.draw_into(&mut rng, &mut buf);
            for (a, v) in acc.iter_mut().zip(&buf) {
                *a += c * v;
            }
        }
        Ok(acc)
    }

    /// Draws restricted to the listed coordinate positions (one vector of
    /// `count` draws per coordinate), identical to the corresponding marginals
    /// of `sample_fields` under the same seed.
    pub fn sample_coordinates(
        &self,
        positions: &[usize],
        count: usize,
        seed: u64,
    ) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(positions.len());
        for &i in positions {
            let coord = self
                .coords
                .get(i)
                .ok_or_else(|| Error::InvalidArgument(format!("coordinate {i} out of range")))?;
            let mut rng = coord_rng(seed, domain::POSTERIOR_SAMPLE, i as u64);
            let mut buf = vec![0.0f64; count];
            coord.draw_into(&mut rng, &mut buf);
            out.push(buf);
        }
        Ok(out)
    }
}
