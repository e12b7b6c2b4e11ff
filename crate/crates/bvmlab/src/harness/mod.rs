//! Declarative experiment harness: config parsing and validation, the Monte
//! Carlo runner, report serialization and rate fits.

pub mod config;
pub mod rates;
pub mod report;
pub mod runner;

pub use config::{ConfigIssue, ExperimentConfig};
pub use rates::{rate_fit, RateQuantity};
pub use report::{load_report, write_outputs, CoverageReport};
pub use runner::{run, RunOutput};

use config::{CheckConfig, CheckMetric};
use report::CellReport;

/// One acceptance-window violation found by `--check`.
#[derive(Debug, Clone)]
pub struct CheckBreach {
    pub check: CheckConfig,
    pub cell: usize,
    pub n: u64,
    pub value: Option<f64>,
}

fn metric_value(cell: &CellReport, check: &CheckConfig) -> Option<f64> {
    let set = check.set.and_then(|j| cell.sets.get(j));
    match check.metric {
        CheckMetric::Coverage => set.map(|s| s.coverage),
        CheckMetric::Credibility => set.map(|s| s.credibility_mean),
        CheckMetric::RnMedian => set.map(|s| s.rn_median),
        CheckMetric::MnMedian => set.and_then(|s| s.mn_median),
        CheckMetric::WidthMedian => set.and_then(|s| s.width_median),
        CheckMetric::DiameterMedian => set.and_then(|s| s.diameter_median),
        CheckMetric::RiskL2Median => cell.metrics.risk_l2_median,
        CheckMetric::NHdeltaRiskMedian => cell.metrics.n_hdelta_risk_median,
        CheckMetric::MeanLinearityMedian => cell.metrics.mean_linearity_median,
        CheckMetric::FidiMaxKsMedian => cell.metrics.fidi_max_ks_median,
        CheckMetric::CovDeviationMedian => cell.metrics.cov_deviation_median,
        CheckMetric::TailFractionMean => cell.metrics.tail_fraction_mean,
    }
}

/// Evaluate every configured acceptance window against a finished report.
pub fn evaluate_checks(report: &CoverageReport) -> Vec<CheckBreach> {
    let mut breaches = Vec::new();
    for check in &report.config.checks {
        for cell in &report.cells {
            if let Some(n) = check.n {
                if cell.n != n {
                    continue;
                }
            }
            let value = metric_value(cell, check);
            let ok = match value {
                None => false,
                Some(v) => {
                    check.min.map(|lo| v >= lo).unwrap_or(true)
                        && check.max.map(|hi| v <= hi).unwrap_or(true)
                }
            };
            if !ok || cell.aborted {
                breaches.push(CheckBreach {
                    check: check.clone(),
                    cell: cell.index,
                    n: cell.n,
                    value,
                });
            }
        }
    }
    breaches
}
