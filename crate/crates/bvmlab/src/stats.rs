//! Small statistical utilities shared across modules.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Standard normal quantile, polished by one Newton step so the round trip
/// through the CDF is accurate to machine precision.
pub fn normal_quantile(p: f64) -> f64 {
    let q = Normal::standard().inverse_cdf(p);
    if !(0.0..1.0).contains(&p) || !q.is_finite() {
        return q;
    }
    let pdf = (-0.5 * q * q).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if pdf > 0.0 {
        q - (normal_cdf(q) - p) / pdf
    } else {
        q
    }
}

/// Nearest-rank empirical quantile: the `ceil(p * len)`-th smallest value.
///
/// `values` need not be sorted; `p` must lie in (0, 1].
pub fn nearest_rank_quantile(values: &[f64], p: f64) -> f64 {
    debug_assert!(!values.is_empty());
    debug_assert!(p > 0.0 && p <= 1.0);
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    sorted_nearest_rank(&sorted, p)
}

/// Nearest-rank quantile on an already sorted slice.
pub fn sorted_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Median via nearest-rank on a copy.
pub fn median(values: &[f64]) -> f64 {
    nearest_rank_quantile(values, 0.5)
}

/// One-sample Kolmogorov-Smirnov statistic against the standard normal.
pub fn ks_standard_normal(samples: &[f64]) -> f64 {
    ks_against_cdf(samples, normal_cdf)
}

/// One-sample Kolmogorov-Smirnov statistic against an arbitrary CDF.
pub fn ks_against_cdf<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i as f64 + 1.0) / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// Exact Wasserstein-1 distance between two empirical measures on the line.
///
/// Computed as the integral of |F_a - F_b| over the merged support.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut total = 0.0;
    let mut prev = xs[0].min(ys[0]);
    while i < xs.len() || j < ys.len() {
        let next = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - prev);
        while i < xs.len() && xs[i] == next {
            i += 1;
        }
        while j < ys.len() && ys[j] == next {
            j += 1;
        }
        prev = next;
    }
    total
}

/// Least-squares slope of `y` against `x` with its standard error.
///
/// Errors unless there are at least `min_points` points and the `x` range
/// spans at least `min_span`.
pub fn slope_with_stderr(
    x: &[f64],
    y: &[f64],
    min_points: usize,
    min_span: f64,
) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < min_points {
        return Err(Error::InvalidArgument(format!(
            "need at least {min_points} points for a rate fit, got {}",
            x.len()
        )));
    }
    let span = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - x.iter().cloned().fold(f64::INFINITY, f64::min);
    if span < min_span {
        return Err(Error::InvalidArgument(format!(
            "x-range {span:.3} too narrow for a rate fit (need >= {min_span:.3})"
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = (x.len() as i64 - 2).max(1) as f64;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(u, v)| (v - intercept - slope * u).powi(2))
        .sum();
    let stderr = (ssr / dof / sxx).sqrt();
    Ok((slope, stderr))
}

/// Binomial standard error sqrt(p(1-p)/n).
pub fn binomial_se(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}
