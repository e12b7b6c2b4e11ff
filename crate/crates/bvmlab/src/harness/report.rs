//! Machine-readable run outputs: a JSON summary plus the per-replication CSV
//! stream the aggregates are recomputable from.
//!
//! The JSON never contains wall-clock or other volatile data, so two runs
//! from the same master seed produce byte-identical files at any worker count
//! (timing goes to stderr instead).

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::credible::{CredibleSetReport, SetKind};
use crate::error::{Error, Result};

use super::config::{ExperimentConfig, OutputConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    pub schema_version: u32,
    pub master_seed: u64,
    pub replications: u32,
    pub n_grid: Vec<u64>,
    /// The resolved input config, echoed for provenance.
    pub config: ExperimentConfig,
    pub cells: Vec<CellReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub index: usize,
    pub n: u64,
    pub l_max: u32,
    pub dim: usize,
    pub tail_mass: Option<f64>,
    pub tail_rule_ok: Option<bool>,
    pub completed: u32,
    pub aborted: bool,
    pub failures: Vec<Failure>,
    pub metrics: CellMetrics,
    pub sets: Vec<SetAggregate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Failure {
    pub rep: u32,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellMetrics {
    pub risk_l2_median: Option<f64>,
    pub risk_hdelta_median: Option<f64>,
    /// Median of `n * integrated H(delta) risk` (bounded under the theory).
    pub n_hdelta_risk_median: Option<f64>,
    pub mean_linearity_median: Option<f64>,
    pub fidi_max_ks_median: Option<f64>,
    pub cov_deviation_median: Option<f64>,
    pub tail_fraction_mean: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SetAggregate {
    pub kind: SetKind,
    pub alpha: f64,
    pub coverage: f64,
    pub coverage_se: f64,
    pub credibility_mean: f64,
    pub rn_median: f64,
    pub rn_q25: f64,
    pub rn_q75: f64,
    pub mn_median: Option<f64>,
    pub mn_infinite: u32,
    pub diameter_median: Option<f64>,
    /// Median of `sqrt(n) (nu_n - mu_n)` for functional intervals.
    pub width_median: Option<f64>,
    pub efficient_halfwidth_median: Option<f64>,
    pub representer_median: Option<f64>,
    pub degenerate_count: u32,
}

/// Per-set slice of one replication record.
#[derive(Debug, Clone)]
pub struct SetRecord {
    pub covers: bool,
    pub rn: f64,
    pub mn: Option<f64>,
    pub credibility: f64,
    pub diameter: Option<f64>,
    /// `sqrt(n) (nu_n - mu_n)` for functional intervals.
    pub width: Option<f64>,
    pub efficient_halfwidth: Option<f64>,
    pub representer_l2: Option<f64>,
    pub degenerate: bool,
}

impl SetRecord {
    pub fn from_report(report: &CredibleSetReport) -> Self {
        SetRecord {
            covers: report.covers_truth,
            rn: report.radius_rn,
            mn: report.mn,
            credibility: report.credibility,
            diameter: report.l2_diameter_bound,
            width: report.interval.map(|_| 2.0 * report.radius_rn),
            efficient_halfwidth: report.efficient_halfwidth,
            representer_l2: report.representer_l2,
            degenerate: report.degenerate,
        }
    }
}

/// One replication's record; the CSV stream carries these.
#[derive(Debug, Clone)]
pub struct RepRecord {
    pub cell: usize,
    pub n: u64,
    pub rep: u32,
    pub risk_l2: f64,
    pub risk_hdelta: f64,
    pub mean_linearity: f64,
    pub fidi_max_ks: Option<f64>,
    pub fidi_cov_dev: Option<f64>,
    pub tail_fraction: Option<f64>,
    pub sets: Vec<SetRecord>,
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x.is_infinite() => "inf".into(),
        Some(x) => format!("{x}"),
    }
}

/// Render the per-replication stream as CSV with one row per replication.
pub fn records_csv(records: &[RepRecord], set_count: usize) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "cell".to_string(),
        "n".to_string(),
        "rep".to_string(),
        "risk_l2".to_string(),
        "risk_hdelta".to_string(),
        "mean_linearity".to_string(),
        "fidi_max_ks".to_string(),
        "fidi_cov_dev".to_string(),
        "tail_fraction".to_string(),
    ];
    for j in 0..set_count {
        for field in [
            "covers",
            "rn",
            "mn",
            "credibility",
            "diameter",
            "width",
            "efficient_halfwidth",
        ] {
            header.push(format!("set{j}_{field}"));
        }
    }
    writer
        .write_record(&header)
        .map_err(|e| Error::Report(e.to_string()))?;
    for r in records {
        let mut row = vec![
            r.cell.to_string(),
            r.n.to_string(),
            r.rep.to_string(),
            format!("{}", r.risk_l2),
            format!("{}", r.risk_hdelta),
            format!("{}", r.mean_linearity),
            fmt_opt(r.fidi_max_ks),
            fmt_opt(r.fidi_cov_dev),
            fmt_opt(r.tail_fraction),
        ];
        for s in &r.sets {
            row.push(if s.covers { "1".into() } else { "0".into() });
            row.push(format!("{}", s.rn));
            row.push(fmt_opt(s.mn));
            row.push(format!("{}", s.credibility));
            row.push(fmt_opt(s.diameter));
            row.push(fmt_opt(s.width));
            row.push(fmt_opt(s.efficient_halfwidth));
        }
        writer
            .write_record(&row)
            .map_err(|e| Error::Report(e.to_string()))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

pub fn report_json(report: &CoverageReport) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

/// Write `<base>.json`, `<base>.csv` and optional plot data; returns the two
/// file paths.
pub fn write_outputs(
    report: &CoverageReport,
    records: &[RepRecord],
    out: &OutputConfig,
) -> Result<(PathBuf, PathBuf)> {
    if let Some(parent) = out.path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let json_path = out.path.with_extension("json");
    let csv_path = out.path.with_extension("csv");
    std::fs::write(&json_path, report_json(report)?)?;
    std::fs::write(&csv_path, records_csv(records, report.config.sets.len())?)?;
    if out.plots {
        write_plot_data(report, &out.path.with_extension("plots"))?;
    }
    Ok((json_path, csv_path))
}

fn two_column_csv(path: &Path, rows: &[(f64, f64)]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "log_n,value")?;
    for (x, y) in rows {
        writeln!(file, "{x},{y}")?;
    }
    Ok(())
}

/// Plot-data files: one two-column CSV (log n vs quantity) per figure.
pub fn write_plot_data(report: &CoverageReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let series = |pick: &dyn Fn(&CellReport) -> Option<f64>| -> Vec<(f64, f64)> {
        report
            .cells
            .iter()
            .filter(|c| !c.aborted)
            .filter_map(|c| pick(c).map(|v| ((c.n as f64).ln(), v)))
            .collect()
    };
    two_column_csv(
        &dir.join("l2risk.csv"),
        &series(&|c| c.metrics.risk_l2_median),
    )?;
    two_column_csv(
        &dir.join("n_hdelta_risk.csv"),
        &series(&|c| c.metrics.n_hdelta_risk_median),
    )?;
    two_column_csv(
        &dir.join("mean_linearity.csv"),
        &series(&|c| c.metrics.mean_linearity_median),
    )?;
    for j in 0..report.config.sets.len() {
        two_column_csv(
            &dir.join(format!("set{j}_coverage.csv")),
            &series(&|c| c.sets.get(j).map(|s| s.coverage)),
        )?;
        two_column_csv(
            &dir.join(format!("set{j}_rn.csv")),
            &series(&|c| c.sets.get(j).map(|s| s.rn_median)),
        )?;
        let diam = series(&|c| c.sets.get(j).and_then(|s| s.diameter_median));
        if !diam.is_empty() {
            two_column_csv(&dir.join(format!("set{j}_diameter.csv")), &diam)?;
        }
    }
    Ok(())
}

pub fn load_report(path: &Path) -> Result<CoverageReport> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Report(format!("{}: {e}", path.display())))
}

/// Aggregate table for `bvmlab report --format csv`.
pub fn aggregates_csv(report: &CoverageReport) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "cell",
            "n",
            "l_max",
            "dim",
            "set",
            "kind",
            "alpha",
            "coverage",
            "coverage_se",
            "credibility",
            "rn_median",
            "mn_median",
            "diameter_median",
            "width_median",
            "risk_l2_median",
            "n_hdelta_risk_median",
            "mean_linearity_median",
        ])
        .map_err(|e| Error::Report(e.to_string()))?;
    for cell in &report.cells {
        let base = [
            cell.index.to_string(),
            cell.n.to_string(),
            cell.l_max.to_string(),
            cell.dim.to_string(),
        ];
        if cell.sets.is_empty() {
            let mut row = base.to_vec();
            row.extend([String::new(), String::new(), String::new(), String::new()]);
            row.extend([String::new(), String::new(), String::new(), String::new()]);
            row.push(String::new());
            row.push(fmt_opt(cell.metrics.risk_l2_median));
            row.push(fmt_opt(cell.metrics.n_hdelta_risk_median));
            row.push(fmt_opt(cell.metrics.mean_linearity_median));
            writer
                .write_record(&row)
                .map_err(|e| Error::Report(e.to_string()))?;
        }
        for (j, set) in cell.sets.iter().enumerate() {
            let mut row = base.to_vec();
            row.push(j.to_string());
            row.push(format!("{:?}", set.kind));
            row.push(format!("{}", set.alpha));
            row.push(format!("{}", set.coverage));
            row.push(format!("{}", set.coverage_se));
            row.push(format!("{}", set.credibility_mean));
            row.push(format!("{}", set.rn_median));
            row.push(fmt_opt(set.mn_median));
            row.push(fmt_opt(set.diameter_median));
            row.push(fmt_opt(set.width_median));
            row.push(fmt_opt(cell.metrics.risk_l2_median));
            row.push(fmt_opt(cell.metrics.n_hdelta_risk_median));
            row.push(fmt_opt(cell.metrics.mean_linearity_median));
            writer
                .write_record(&row)
                .map_err(|e| Error::Report(e.to_string()))?;
        }
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}
