//! Fuzz the experiment-config parser and validator.
//!
//! Every config reaching the harness comes through this path, so parsing and
//! validation must never panic or hang on arbitrary bytes. Cell resolution
//! allocates per-coordinate state, so it only runs for small problem sizes.

#![no_main]

use bvmlab::harness::config::{ExperimentConfig, LevelChoice};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = ExperimentConfig::from_toml_str(text) else {
        return;
    };
    let small_levels = match config.basis.l_max {
        LevelChoice::Fixed(l) => l <= 12,
        LevelChoice::Auto(_) => true,
    };
    let small = small_levels
        && config.n_grid.len() <= 8
        && config.n_grid.iter().all(|n| *n <= 1 << 20)
        && config.signal.values.len() <= 1 << 14
        && config.prior.sigmas.len() <= 1 << 14;
    if small {
        let _ = config.validate();
        let _ = config.resolve_cells();
    }
    // serialization of parsed configs must round-trip
    if let Ok(text) = toml::to_string(&config) {
        let _ = ExperimentConfig::from_toml_str(&text);
    }
});
