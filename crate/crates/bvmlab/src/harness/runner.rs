//! Monte Carlo experiment runner: sweeps the `n_grid x sets` cells, runs
//! replications in parallel and aggregates deterministically.
//!
//! Every random draw comes from a substream keyed by (master seed, cell,
//! replication, purpose), so reports are byte-identical for any worker count.

use rayon::prelude::*;

use crate::credible::{self, CredibleSetReport, FunctionalSpec, SetKind};
use crate::diagnostics::{self, ProjectionSpec};
use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::model::{observe, Observation};
use crate::norms::NormSpec;
use crate::posterior::PosteriorField;
use crate::rng::derive_seed;
use crate::stats;

use super::config::{
    DiagnosticKind, ExperimentConfig, PsiConfig, ResolvedCell, SetConfig, SCHEMA_VERSION,
};
use super::report::{
    CellMetrics, CellReport, CoverageReport, Failure, RepRecord, SetAggregate, SetRecord,
};

const PURPOSE_OBSERVE: u64 = 1;
const PURPOSE_SET_BASE: u64 = 16;
const PURPOSE_FIDI: u64 = 64;
const PURPOSE_TAIL: u64 = 65;

/// Everything one run produces: the aggregate report plus the per-replication
/// record stream that the CSV output carries.
pub struct RunOutput {
    pub report: CoverageReport,
    pub records: Vec<RepRecord>,
}

/// Run the full experiment described by `config`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.ensure_valid()?;
    let cells = config.resolve_cells()?;
    let reps = config.replications;
    let tasks: Vec<(usize, u32)> = (0..cells.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();

    let results: Vec<std::result::Result<RepRecord, (usize, u32, String)>> = tasks
        .par_iter()
        .map(|&(cell_idx, rep)| {
            run_replication(config, &cells[cell_idx], rep)
                .map_err(|e| (cell_idx, rep, e.to_string()))
        })
        .collect();

    let mut per_cell_records: Vec<Vec<RepRecord>> = vec![Vec::new(); cells.len()];
    let mut per_cell_failures: Vec<Vec<Failure>> = vec![Vec::new(); cells.len()];
    for result in results {
        match result {
            Ok(record) => per_cell_records[record.cell].push(record),
            Err((cell, rep, message)) => per_cell_failures[cell].push(Failure { rep, message }),
        }
    }

    let mut cell_reports = Vec::with_capacity(cells.len());
    let mut records = Vec::new();
    for (cell, resolved) in cells.iter().enumerate() {
        let failures = std::mem::take(&mut per_cell_failures[cell]);
        let mut cell_records = std::mem::take(&mut per_cell_records[cell]);
        cell_records.sort_by_key(|r| r.rep);
        let aborted = !failures.is_empty() && failures.len() as f64 > 0.01 * reps.max(1) as f64;
        let report = aggregate_cell(config, resolved, &cell_records, failures, aborted);
        cell_reports.push(report);
        if !aborted {
            records.extend(cell_records);
        }
    }

    Ok(RunOutput {
        report: CoverageReport {
            schema_version: SCHEMA_VERSION,
            master_seed: config.master_seed,
            replications: reps,
            n_grid: config.n_grid.clone(),
            config: config.clone(),
            cells: cell_reports,
        },
        records,
    })
}

fn functional_field(cell: &ResolvedCell, set: &SetConfig) -> Result<CoefficientField> {
    let mut g = CoefficientField::zeros(cell.basis);
    for c in &set.g_l {
        if cell.basis.position(c.l, c.k).is_none() {
            return Err(Error::InvalidArgument(format!(
                "functional coordinate ({}, {}) outside the basis",
                c.l, c.k
            )));
        }
        g.set(c.l, c.k, c.value);
    }
    Ok(g)
}

fn run_set(
    config: &ExperimentConfig,
    cell: &ResolvedCell,
    set: &SetConfig,
    post: &PosteriorField,
    seed: u64,
) -> Result<CredibleSetReport> {
    let gamma = set.gamma.unwrap_or(config.prior.gamma);
    match set.kind {
        SetKind::HdeltaBall => credible::hdelta_ball(
            post,
            &cell.theta0,
            set.center,
            set.alpha,
            set.delta,
            set.sample_count,
            seed,
        ),
        SetKind::HolderIntersected => credible::holder_intersected(
            post,
            &cell.theta0,
            &cell.prior,
            set.alpha,
            gamma,
            set.m.unwrap_or(config.signal.m),
            set.delta,
            set.sample_count,
            seed,
        ),
        SetKind::NormEstimated => credible::norm_estimated(
            post,
            &cell.theta0,
            set.alpha,
            gamma,
            set.delta,
            set.delta_margin,
            set.margin_variant,
            set.sample_count,
            seed,
        ),
        SetKind::ConvolutionBand => credible::convolution_band(
            post,
            &cell.theta0,
            set.alpha,
            set.grid_size,
            set.sample_count,
            seed,
        ),
        SetKind::LinearFunctional => {
            let g = functional_field(cell, set)?;
            credible::linear_functional_interval(
                post,
                &cell.theta0,
                &g,
                set.alpha,
                set.center,
                set.sample_count,
                seed,
            )
        }
        SetKind::NonlinearFunctional => {
            let psi = match set.psi {
                Some(PsiConfig::SquaredL2) | None => FunctionalSpec::SquaredL2Norm,
            };
            credible::nonlinear_functional_interval(
                post,
                &cell.theta0,
                &psi,
                set.alpha,
                set.sample_count,
                seed,
            )
        }
    }
}

fn run_replication(config: &ExperimentConfig, cell: &ResolvedCell, rep: u32) -> Result<RepRecord> {
    let master = config.master_seed;
    let obs_seed = derive_seed(master, cell.index as u64, rep as u64, PURPOSE_OBSERVE);
    let obs: Observation = observe(&cell.theta0, cell.n, obs_seed);
    let post = PosteriorField::fit(&cell.prior, &obs)?;

    let diag = &config.diagnostics;
    let risk_l2 = post.contraction_risk(&cell.theta0, &NormSpec::l2())?;
    let risk_hdelta = post.contraction_risk(&cell.theta0, &NormSpec::h_delta(diag.delta))?;
    let mean_linearity = diagnostics::mean_linearity(&post, &obs, diag.delta)?;

    let mut sets = Vec::with_capacity(config.sets.len());
    for (j, set) in config.sets.iter().enumerate() {
        let seed = derive_seed(
            master,
            cell.index as u64,
            rep as u64,
            PURPOSE_SET_BASE + j as u64,
        );
        let report = run_set(config, cell, set, &post, seed)?;
        sets.push(SetRecord::from_report(&report));
    }

    let mut fidi_max_ks = None;
    let mut fidi_cov_dev = None;
    let mut tail_fraction = None;
    if diag.enabled.contains(&DiagnosticKind::Fidi) {
        let seed = derive_seed(master, cell.index as u64, rep as u64, PURPOSE_FIDI);
        let proj = ProjectionSpec {
            levels: diag
                .fidi_levels
                .iter()
                .cloned()
                .filter(|l| cell.basis.contains_level(*l))
                .collect(),
        };
        let report = diagnostics::fidi_distance(&post, &obs, &proj, diag.fidi_sample_count, seed)?;
        fidi_max_ks = Some(report.max_ks);
        fidi_cov_dev = Some(report.cov_deviation);
    }
    if diag.enabled.contains(&DiagnosticKind::HdeltaTail) {
        let seed = derive_seed(master, cell.index as u64, rep as u64, PURPOSE_TAIL);
        let frac = diagnostics::hdelta_concentration(
            &post,
            &cell.theta0,
            diag.delta_prime,
            diag.m_test,
            diag.tail_sample_count,
            seed,
        )?;
        tail_fraction = Some(frac);
    }

    Ok(RepRecord {
        cell: cell.index,
        n: cell.n,
        rep,
        risk_l2,
        risk_hdelta,
        mean_linearity,
        fidi_max_ks,
        fidi_cov_dev,
        tail_fraction,
        sets,
    })
}

fn median_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        None
    } else {
        Some(stats::median(&v))
    }
}

fn aggregate_cell(
    config: &ExperimentConfig,
    cell: &ResolvedCell,
    records: &[RepRecord],
    failures: Vec<Failure>,
    aborted: bool,
) -> CellReport {
    let completed = records.len() as u32;
    let mut sets = Vec::new();
    if !aborted && completed > 0 {
        for (j, set_cfg) in config.sets.iter().enumerate() {
            let outcomes: Vec<&SetRecord> = records.iter().map(|r| &r.sets[j]).collect();
            let covered = outcomes.iter().filter(|o| o.covers).count() as f64;
            let coverage = covered / completed as f64;
            let rns: Vec<f64> = outcomes.iter().map(|o| o.rn).collect();
            let mn_finite: Vec<f64> = outcomes
                .iter()
                .filter_map(|o| o.mn)
                .filter(|v| v.is_finite())
                .collect();
            let mn_infinite = outcomes
                .iter()
                .filter(|o| o.mn.map(|v| v.is_infinite()).unwrap_or(false))
                .count() as u32;
            sets.push(SetAggregate {
                kind: set_cfg.kind,
                alpha: set_cfg.alpha,
                coverage,
                coverage_se: stats::binomial_se(coverage, completed as usize),
                credibility_mean: outcomes.iter().map(|o| o.credibility).sum::<f64>()
                    / completed as f64,
                rn_median: stats::median(&rns),
                rn_q25: stats::nearest_rank_quantile(&rns, 0.25),
                rn_q75: stats::nearest_rank_quantile(&rns, 0.75),
                mn_median: if mn_finite.is_empty() {
                    None
                } else {
                    Some(stats::median(&mn_finite))
                },
                mn_infinite,
                diameter_median: median_of(outcomes.iter().filter_map(|o| o.diameter)),
                width_median: median_of(outcomes.iter().filter_map(|o| o.width)),
                efficient_halfwidth_median: median_of(
                    outcomes.iter().filter_map(|o| o.efficient_halfwidth),
                ),
                representer_median: median_of(outcomes.iter().filter_map(|o| o.representer_l2)),
                degenerate_count: outcomes.iter().filter(|o| o.degenerate).count() as u32,
            });
        }
    }
    let metrics = CellMetrics {
        risk_l2_median: median_of(records.iter().map(|r| r.risk_l2)),
        risk_hdelta_median: median_of(records.iter().map(|r| r.risk_hdelta)),
        n_hdelta_risk_median: median_of(records.iter().map(|r| cell.n as f64 * r.risk_hdelta)),
        mean_linearity_median: median_of(records.iter().map(|r| r.mean_linearity)),
        fidi_max_ks_median: median_of(records.iter().filter_map(|r| r.fidi_max_ks)),
        cov_deviation_median: median_of(records.iter().filter_map(|r| r.fidi_cov_dev)),
        tail_fraction_mean: {
            let v: Vec<f64> = records.iter().filter_map(|r| r.tail_fraction).collect();
            if v.is_empty() {
                None
            } else {
                Some(v.iter().sum::<f64>() / v.len() as f64)
            }
        },
    };
    CellReport {
        index: cell.index,
        n: cell.n,
        l_max: cell.basis.l_max,
        dim: cell.basis.dim(),
        tail_mass: cell.tail_mass,
        tail_rule_ok: cell.tail_rule_ok,
        completed,
        aborted,
        failures,
        metrics,
        sets,
    }
}
