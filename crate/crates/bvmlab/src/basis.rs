//! Orthonormal basis index structure for sequence-space computations.
//!
//! Two families are provided. The trigonometric basis indexes one coordinate
//! per integer level `l`, with `l > 0` the cosine and `l < 0` the sine of
//! frequency `|l|` and `l = 0` the constant; its characteristic sequence is
//! `a_l = max(2, |l|)`. The dyadic (periodized Haar) wavelet basis stores the
//! coarse-scale coefficients at level `j0 - 1` together with the level-(j0-1)
//! wavelets, so every level `l >= j0` carries `2^l` coordinates and
//! `a_l = max(2, 2^l)`; the clamp keeps `log a_l` positive at the coarse level.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CoefficientField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Trigonometric,
    DyadicWavelet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub kind: BasisKind,
    /// Coarsest wavelet resolution; ignored for the trigonometric basis.
    pub j0: u32,
    /// Largest retained level: `|l| <= l_max` (trig), `l <= l_max` (wavelet).
    pub l_max: u32,
}

impl BasisSpec {
    pub fn trigonometric(l_max: u32) -> Self {
        BasisSpec {
            kind: BasisKind::Trigonometric,
            j0: 0,
            l_max,
        }
    }

    pub fn dyadic_wavelet(j0: u32, l_max: u32) -> Self {
        BasisSpec {
            kind: BasisKind::DyadicWavelet,
            j0,
            l_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            BasisKind::Trigonometric => {
                if self.l_max > 1 << 26 {
                    return Err(Error::InvalidArgument(format!(
                        "trigonometric l_max {} too large (coordinate count would exhaust memory)",
                        self.l_max
                    )));
                }
                Ok(())
            }
            BasisKind::DyadicWavelet => {
                if (self.l_max as i64) < self.j0 as i64 - 1 {
                    return Err(Error::InvalidArgument(format!(
                        "wavelet l_max {} below coarse level {}",
                        self.l_max,
                        self.j0 as i64 - 1
                    )));
                }
                if self.l_max > 26 {
                    return Err(Error::InvalidArgument(format!(
                        "wavelet l_max {} too large (coordinate count would exhaust memory)",
                        self.l_max
                    )));
                }
                Ok(())
            }
        }
    }

    /// Lowest retained level.
    pub fn level_min(&self) -> i64 {
        match self.kind {
            BasisKind::Trigonometric => -(self.l_max as i64),
            BasisKind::DyadicWavelet => self.j0 as i64 - 1,
        }
    }

    /// Highest retained level.
    pub fn level_max(&self) -> i64 {
        self.l_max as i64
    }

    pub fn levels(&self) -> impl Iterator<Item = i64> {
        self.level_min()..=self.level_max()
    }

    pub fn contains_level(&self, l: i64) -> bool {
        l >= self.level_min() && l <= self.level_max()
    }

    /// Number of coordinates at level `l` (the paper-facing |Z_l|).
    ///
    /// For the wavelet basis the coarse level `j0 - 1` carries the `2^(j0-1)`
    /// scaling coefficients together with the `2^(j0-1)` coarsest wavelet
    /// coefficients, giving `2^j0` slots; regular levels carry `2^l`.
    pub fn level_size(&self, l: i64) -> usize {
        match self.kind {
            BasisKind::Trigonometric => 1,
            BasisKind::DyadicWavelet => {
                if l == self.j0 as i64 - 1 {
                    1usize << self.j0
                } else {
                    1usize << l
                }
            }
        }
    }

    /// Characteristic sequence value `a_l`.
    pub fn characteristic(&self, l: i64) -> Result<f64> {
        if !self.contains_level(l) {
            return Err(Error::LevelOutOfRange { level: l });
        }
        Ok(match self.kind {
            BasisKind::Trigonometric => 2.0f64.max(l.unsigned_abs() as f64),
            BasisKind::DyadicWavelet => 2.0f64.max((l as f64).exp2()),
        })
    }

    /// Total coordinate count over the truncated index set.
    pub fn dim(&self) -> usize {
        match self.kind {
            BasisKind::Trigonometric => 2 * self.l_max as usize + 1,
            BasisKind::DyadicWavelet => 1usize << (self.l_max + 1),
        }
    }

    /// Flat position of the first coordinate of level `l`.
    pub fn level_offset(&self, l: i64) -> usize {
        debug_assert!(self.contains_level(l));
        match self.kind {
            BasisKind::Trigonometric => (l + self.l_max as i64) as usize,
            BasisKind::DyadicWavelet => {
                if l == self.j0 as i64 - 1 {
                    0
                } else {
                    // coarse block (2^j0 slots) plus levels j0..l-1 sum to 2^l
                    1usize << l
                }
            }
        }
    }

    /// Flat position of coordinate `(l, k)`.
    pub fn position(&self, l: i64, k: u32) -> Option<usize> {
        if !self.contains_level(l) || (k as usize) >= self.level_size(l) {
            return None;
        }
        Some(self.level_offset(l) + k as usize)
    }

    /// Deterministic coordinate enumeration: level-major, then k ascending.
    pub fn index_set(&self) -> Vec<(i64, u32)> {
        let mut out = Vec::with_capacity(self.dim());
        for l in self.levels() {
            for k in 0..self.level_size(l) {
                out.push((l, k as u32));
            }
        }
        out
    }
}

/// Evaluate `f(j / grid_size)` for `j = 0..grid_size` from basis coefficients.
///
/// `grid_size` must be a power of two at least the coordinate count, so the
/// trigonometric synthesis is alias-free and Haar blocks align with grid cells.
pub fn synthesize(theta: &CoefficientField, grid_size: usize) -> Result<Vec<f64>> {
    let spec = theta.basis();
    if !grid_size.is_power_of_two() || grid_size < spec.dim() {
        return Err(Error::GridTooCoarse {
            grid: grid_size,
            dim: spec.dim(),
        });
    }
    match spec.kind {
        BasisKind::Trigonometric => synthesize_trig(theta, grid_size),
        BasisKind::DyadicWavelet => synthesize_haar(theta, grid_size),
    }
}

fn synthesize_trig(theta: &CoefficientField, grid_size: usize) -> Result<Vec<f64>> {
    Ok(TrigSynthesizer::new(*theta.basis(), grid_size)?.run(theta))
}

fn synthesize_haar(theta: &CoefficientField, grid_size: usize) -> Result<Vec<f64>> {
    let spec = theta.basis();
    let mut out = vec![0.0f64; grid_size];
    let coarse = spec.j0 as i64 - 1;
    for (i, (l, k)) in spec.index_set().into_iter().enumerate() {
        let c = theta.values()[i];
        if c == 0.0 {
            continue;
        }
        let (resolution, shift, is_wavelet) = if l == coarse {
            let half = spec.level_size(l) / 2;
            if spec.j0 == 0 {
                (0i64, 0usize, false) // single constant scaling function
            } else if (k as usize) < half {
                (coarse, k as usize, false)
            } else {
                (coarse, k as usize - half, true)
            }
        } else {
            (l, k as usize, true)
        };
        let block = grid_size >> resolution; // support length in grid cells
        let start = shift * block;
        let amp = c * (resolution as f64 / 2.0).exp2();
        if is_wavelet {
            let half = block / 2;
            for v in &mut out[start..start + half] {
                *v += amp;
            }
            for v in &mut out[start + half..start + block] {
                *v -= amp;
            }
        } else {
            for v in &mut out[start..start + block] {
                *v += amp;
            }
        }
    }
    Ok(out)
}

/// Reusable trigonometric synthesis plan for evaluating many fields on the
/// same grid (the FFT plan is built once).
pub struct TrigSynthesizer {
    spec: BasisSpec,
    grid_size: usize,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl TrigSynthesizer {
    pub fn new(spec: BasisSpec, grid_size: usize) -> Result<Self> {
        if spec.kind != BasisKind::Trigonometric {
            return Err(Error::TrigonometricRequired);
        }
        if !grid_size.is_power_of_two() || grid_size < spec.dim() {
            return Err(Error::GridTooCoarse {
                grid: grid_size,
                dim: spec.dim(),
            });
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_inverse(grid_size);
        Ok(TrigSynthesizer {
            spec,
            grid_size,
            fft,
        })
    }

    pub fn run(&self, theta: &CoefficientField) -> Vec<f64> {
        debug_assert_eq!(*theta.basis(), self.spec);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.grid_size];
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        buf[0] = Complex64::new(theta.get(0, 0), 0.0);
        for m in 1..=self.spec.l_max as i64 {
            let c = Complex64::new(theta.get(m, 0) * inv_sqrt2, -theta.get(-m, 0) * inv_sqrt2);
            buf[m as usize] = c;
            buf[self.grid_size - m as usize] = c.conj();
        }
        self.fft.process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }
}

/// Periodic convolution of two trigonometric-basis fields.
///
/// With complex coefficients `c(m) = (theta_m - i theta_{-m}) / sqrt(2)` the
/// convolution multiplies coefficients frequency-wise; this maps the product
/// back to the cosine/sine pair storage.
pub fn convolve(f: &CoefficientField, g: &CoefficientField) -> Result<CoefficientField> {
    let spec = f.basis();
    if spec.kind != BasisKind::Trigonometric {
        return Err(Error::TrigonometricRequired);
    }
    f.check_same_basis(g)?;
    let mut out = CoefficientField::zeros(*spec);
    out.set(0, 0, f.get(0, 0) * g.get(0, 0));
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for m in 1..=spec.l_max as i64 {
        let (fc, fs) = (f.get(m, 0), f.get(-m, 0));
        let (gc, gs) = (g.get(m, 0), g.get(-m, 0));
        out.set(m, 0, (fc * gc - fs * gs) * inv_sqrt2);
        out.set(-m, 0, (fc * gs + fs * gc) * inv_sqrt2);
    }
    Ok(out)
}

/// Self-convolution `f * f` by frequency-wise squaring.
pub fn self_convolve(f: &CoefficientField) -> Result<CoefficientField> {
    convolve(f, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use std::f64::consts::PI;

    #[test]
    fn trig_index_set_enumerates_symmetric_levels() {
        let spec = BasisSpec::trigonometric(1);
        assert_eq!(spec.index_set(), vec![(-1, 0), (0, 0), (1, 0)]);
        assert_eq!(spec.dim(), 3);
    }

    #[test]
    fn haar_index_set_counts_eight_coordinates_at_l_max_two() {
        let spec = BasisSpec::dyadic_wavelet(1, 2);
        // coarse level 0 holds the scaling coefficient plus the mother wavelet
        let expected = vec![
            (0, 0),
            (0, 1),
            (1, 0),
            (1, 1),
            (2, 0),
            (2, 1),
            (2, 2),
            (2, 3),
        ];
        assert_eq!(spec.index_set(), expected);
        assert_eq!(spec.dim(), 8);
        assert_eq!(spec.dim(), 1 << (spec.l_max + 1));
    }

    #[test]
    fn characteristic_matches_definitions() {
        let trig = BasisSpec::trigonometric(8);
        assert_eq!(trig.characteristic(0).unwrap(), 2.0);
        assert_eq!(trig.characteristic(5).unwrap(), 5.0);
        assert_eq!(trig.characteristic(-7).unwrap(), 7.0);
        assert_eq!(trig.characteristic(1).unwrap(), 2.0);
        let wav = BasisSpec::dyadic_wavelet(1, 5);
        assert_eq!(wav.characteristic(3).unwrap(), 8.0);
        assert_eq!(wav.characteristic(0).unwrap(), 2.0);
        assert!(wav.characteristic(9).is_err());
    }

    #[test]
    fn characteristic_is_monotone_in_level_magnitude() {
        let spec = BasisSpec::trigonometric(30);
        let mut prev = 0.0;
        for l in 0..=30 {
            let a = spec.characteristic(l).unwrap();
            assert!(a >= prev);
            assert_eq!(a, spec.characteristic(-l).unwrap());
            prev = a;
        }
    }

    #[test]
    fn positions_are_a_bijection() {
        for spec in [BasisSpec::trigonometric(4), BasisSpec::dyadic_wavelet(1, 3)] {
            let idx = spec.index_set();
            assert_eq!(idx.len(), spec.dim());
            for (pos, (l, k)) in idx.iter().enumerate() {
                assert_eq!(spec.position(*l, *k), Some(pos));
            }
        }
        assert_eq!(BasisSpec::trigonometric(4).position(5, 0), None);
        assert_eq!(BasisSpec::dyadic_wavelet(1, 3).position(2, 4), None);
    }

    #[test]
    fn constant_coefficient_synthesizes_to_constant() {
        let spec = BasisSpec::trigonometric(2);
        let mut theta = CoefficientField::zeros(spec);
        theta.set(0, 0, 1.0);
        let values = synthesize(&theta, 16).unwrap();
        for v in values {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn unit_cosine_and_sine_coefficients_synthesize_to_waves() {
        let spec = BasisSpec::trigonometric(2);
        let mut theta = CoefficientField::zeros(spec);
        theta.set(1, 0, 1.0);
        theta.set(-1, 0, 1.0);
        let g = 32;
        let values = synthesize(&theta, g).unwrap();
        for (j, v) in values.iter().enumerate() {
            let t = j as f64 / g as f64;
            let expected = 2f64.sqrt() * ((2.0 * PI * t).cos() + (2.0 * PI * t).sin());
            assert_relative_eq!(*v, expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn trig_synthesis_matches_direct_summation() {
        let spec = BasisSpec::trigonometric(4);
        let mut theta = CoefficientField::zeros(spec);
        let mut rng = crate::rng::coord_rng(11, 99, 0);
        for (l, k) in spec.index_set() {
            theta.set(l, k, rng.random_range(-1.0..1.0));
        }
        let g = 64;
        let fast = synthesize(&theta, g).unwrap();
        for (j, v) in fast.iter().enumerate() {
            let t = j as f64 / g as f64;
            let mut direct = theta.get(0, 0);
            for m in 1..=4i64 {
                direct += theta.get(m, 0) * 2f64.sqrt() * (2.0 * PI * m as f64 * t).cos();
                direct += theta.get(-m, 0) * 2f64.sqrt() * (2.0 * PI * m as f64 * t).sin();
            }
            assert_relative_eq!(*v, direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn haar_synthesis_matches_direct_summation() {
        let spec = BasisSpec::dyadic_wavelet(1, 3);
        let mut theta = CoefficientField::zeros(spec);
        let mut rng = crate::rng::coord_rng(12, 99, 0);
        for (l, k) in spec.index_set() {
            theta.set(l, k, rng.random_range(-1.0..1.0));
        }
        let g = 64;
        let fast = synthesize(&theta, g).unwrap();
        let psi = |t: f64| -> f64 {
            if (0.0..0.5).contains(&t) {
                1.0
            } else if (0.5..1.0).contains(&t) {
                -1.0
            } else {
                0.0
            }
        };
        for (j, v) in fast.iter().enumerate() {
            let t = j as f64 / g as f64;
            // coarse level: scaling constant + mother wavelet, then levels 1..3
            let mut direct = theta.get(0, 0) + theta.get(0, 1) * psi(t);
            for l in 1..=3i64 {
                for k in 0..(1 << l) as u32 {
                    let scale = (l as f64 / 2.0).exp2();
                    direct += theta.get(l, k) * scale * psi((l as f64).exp2() * t - k as f64);
                }
            }
            assert_relative_eq!(*v, direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn parseval_holds_on_fine_grids() {
        for spec in [BasisSpec::trigonometric(4), BasisSpec::dyadic_wavelet(1, 3)] {
            let mut theta = CoefficientField::zeros(spec);
            let mut rng = crate::rng::coord_rng(13, 99, 0);
            for (l, k) in spec.index_set() {
                theta.set(l, k, rng.random_range(-1.0..1.0));
            }
            let g = 8 * spec.dim().next_power_of_two();
            let values = synthesize(&theta, g).unwrap();
            let grid_energy: f64 = values.iter().map(|v| v * v).sum::<f64>() / g as f64;
            let coeff_energy: f64 = theta.values().iter().map(|v| v * v).sum();
            assert_relative_eq!(grid_energy, coeff_energy, epsilon = 1e-8);
        }
    }

    #[test]
    fn grid_must_be_power_of_two_and_fine_enough() {
        let spec = BasisSpec::trigonometric(4);
        let theta = CoefficientField::zeros(spec);
        assert!(synthesize(&theta, 12).is_err());
        assert!(synthesize(&theta, 8).is_err());
        assert!(synthesize(&theta, 16).is_ok());
    }

    #[test]
    fn self_convolution_of_constant_squares_it() {
        let spec = BasisSpec::trigonometric(3);
        let mut theta = CoefficientField::zeros(spec);
        theta.set(0, 0, 1.5);
        let conv = self_convolve(&theta).unwrap();
        let values = synthesize(&conv, 8).unwrap();
        for v in values {
            assert_relative_eq!(v, 2.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn coefficient_squaring_matches_direct_circular_convolution() {
        let spec = BasisSpec::trigonometric(6);
        let mut f = CoefficientField::zeros(spec);
        let mut rng = crate::rng::coord_rng(14, 99, 0);
        for (l, k) in spec.index_set() {
            f.set(l, k, rng.random_range(-1.0..1.0));
        }
        let g = 64;
        let conv_grid = synthesize(&self_convolve(&f).unwrap(), g).unwrap();
        let f_grid = synthesize(&f, g).unwrap();
        // Riemann sum of the circular convolution is exact for band-limited f.
        for j in 0..g {
            let mut direct = 0.0;
            for k in 0..g {
                direct += f_grid[k] * f_grid[(j + g - k) % g];
            }
            direct /= g as f64;
            assert_relative_eq!(conv_grid[j], direct, epsilon = 1e-8);
        }
    }

    #[test]
    fn convolution_bilinearity_identity_holds_on_grid() {
        let spec = BasisSpec::trigonometric(5);
        let mut rng = crate::rng::coord_rng(15, 99, 0);
        let mut f = CoefficientField::zeros(spec);
        let mut g = CoefficientField::zeros(spec);
        for (l, k) in spec.index_set() {
            f.set(l, k, rng.random_range(-1.0..1.0));
            g.set(l, k, rng.random_range(-1.0..1.0));
        }
        // (f+g)*(f+g) - f*f = 2 f*g + g*g
        let sum = f.add(&g).unwrap();
        let lhs = self_convolve(&sum)
            .unwrap()
            .sub(&self_convolve(&f).unwrap())
            .unwrap();
        let rhs = convolve(&f, &g)
            .unwrap()
            .scale(2.0)
            .add(&self_convolve(&g).unwrap())
            .unwrap();
        let grid = 64;
        let a = synthesize(&lhs, grid).unwrap();
        let b = synthesize(&rhs, grid).unwrap();
        for j in 0..grid {
            assert_relative_eq!(a[j], b[j], epsilon = 1e-8);
        }
    }
}
