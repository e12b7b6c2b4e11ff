//! Fuzz the stored-report loader and everything downstream of it: the rates
//! subcommand, check evaluation and re-serialization all consume reports from
//! disk and must tolerate arbitrary JSON.

#![no_main]

use bvmlab::harness::{self, report::CoverageReport, RateQuantity};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(report) = serde_json::from_str::<CoverageReport>(text) else {
        return;
    };
    let _ = harness::evaluate_checks(&report);
    let _ = harness::rate_fit(&report, RateQuantity::L2Risk);
    let _ = harness::rate_fit(&report, RateQuantity::Diameter);
    let _ = harness::report::report_json(&report);
    let _ = harness::report::aggregates_csv(&report);
});
