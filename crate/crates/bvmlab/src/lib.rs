//! Sequence-space laboratory for nonparametric Bayesian inference in the
//! Gaussian white noise model.
//!
//! The library simulates observations `X_lk = theta_lk + eps_lk / sqrt(n)`
//! over an orthonormal basis of `L^2[0,1]`, fits coordinate-wise product
//! posteriors (conjugate Gaussian or quadrature-based), constructs credible
//! sets (weighted-ellipsoid balls, Hoelder-intersected and norm-estimated
//! variants, sup-norm bands for self-convolutions, functional intervals) and
//! measures their frequentist coverage, contraction rates and Gaussian
//! limiting shape over Monte Carlo replications.
//!
//! The `harness` module drives declarative experiment configs and produces
//! machine-readable reports; the `bvmlab` binary wraps it in a CLI.

pub mod basis;
pub mod credible;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod harness;
pub mod model;
pub mod norms;
pub mod posterior;
pub mod prior;
pub mod rng;
pub mod stats;

pub use basis::{BasisKind, BasisSpec};
pub use error::{Error, Result};
pub use field::CoefficientField;
pub use norms::NormSpec;
