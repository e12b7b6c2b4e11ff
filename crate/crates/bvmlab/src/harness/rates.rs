//! Rate fits: least-squares slope of log(median quantity) against log n.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stats;

use super::report::CoverageReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateQuantity {
    L2Risk,
    Diameter,
}

impl FromStr for RateQuantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2risk" | "l2_risk" => Ok(RateQuantity::L2Risk),
            "diameter" => Ok(RateQuantity::Diameter),
            other => Err(Error::InvalidArgument(format!(
                "unknown rate quantity `{other}` (expected l2risk or diameter)"
            ))),
        }
    }
}

/// Fit `log(median) ~ slope * log n` over the non-aborted grid cells.
/// Requires at least 4 points spanning two decades of n.
pub fn rate_fit(report: &CoverageReport, quantity: RateQuantity) -> Result<(f64, f64)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for cell in report.cells.iter().filter(|c| !c.aborted) {
        let value = match quantity {
            RateQuantity::L2Risk => cell.metrics.risk_l2_median,
            RateQuantity::Diameter => cell.sets.iter().find_map(|s| s.diameter_median),
        };
        if let Some(v) = value {
            if v > 0.0 {
                xs.push((cell.n as f64).ln());
                ys.push(v.ln());
            }
        }
    }
    stats::slope_with_stderr(&xs, &ys, 4, 100f64.ln())
}

/// Generic slope helper for acceptance-style checks on any per-cell series.
pub fn slope_of_series(ns: &[u64], values: &[f64]) -> Result<(f64, f64)> {
    let xs: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    stats::slope_with_stderr(&xs, &ys, 4, 100f64.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_power_law_recovers_its_exponent() {
        let ns: Vec<u64> = (8..=16).step_by(2).map(|e| 1u64 << e).collect();
        let values: Vec<f64> = ns
            .iter()
            .map(|n| 3.2 * (*n as f64).powf(-2.0 / 3.0))
            .collect();
        let (slope, stderr) = slope_of_series(&ns, &values).unwrap();
        assert_relative_eq!(slope, -2.0 / 3.0, epsilon = 1e-12);
        assert!(stderr < 1e-12);
    }

    #[test]
    fn narrow_grids_are_rejected() {
        let ns = vec![256u64, 512];
        let values = vec![1.0, 0.5];
        assert!(slope_of_series(&ns, &values).is_err());
        let ns = vec![256u64, 300, 330, 350];
        let values = vec![1.0, 0.9, 0.85, 0.8];
        assert!(slope_of_series(&ns, &values).is_err());
    }
}
