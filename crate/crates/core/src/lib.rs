//! Copula-graphic survival estimation, permutation tests for equal survival
//! under dependent censoring, and survival trees built on those tests.
//!
//! The crate is organised bottom-up:
//!
//! - [`copula`]: Archimedean generators, Kendall's tau conversion and dependent
//!   uniform sampling.
//! - [`survcurve`]: exact step-function survival curves (naive survivor,
//!   copula-graphic estimator, Kaplan-Meier) and their integrals.
//! - [`twosample`]: the integrated-distance statistic, its Monte Carlo
//!   permutation test, an exact enumeration oracle and the logrank test.
//! - [`tree`]: recursive partitioning with the permutation test as the split
//!   criterion.
//! - [`metrics`]: split precision, Harrell's C and the integrated Brier score.
//! - [`simgen`]: scenario generators and Monte Carlo study runners.

pub mod copula;
pub mod data;
pub mod error;
pub mod metrics;
pub mod rng;
pub mod simgen;
pub mod survcurve;
pub mod tree;
pub mod twosample;

pub use copula::{CopulaSpec, Family, UniformPair};
pub use data::{Dataset, Observation};
pub use error::{Error, Result};
pub use survcurve::StepFunction;
