//! Monte Carlo workbench for the quadratic covariation `[f(eps W), eps W]` of a
//! non-smooth function of Brownian motion.
//!
//! Modules, bottom-up:
//!
//! * [`paths`]: Brownian paths on nested grids, time reversal, `beta`.
//! * [`testfuncs`]: bounded test functions with certified moduli of continuity.
//! * [`covariation`]: the discrete and fine-grid approximating processes.
//! * [`bounds`]: closed-form tail bounds and rate schedules.
//! * [`montecarlo`]: replicated experiments, binomial intervals, rate fits.
//! * [`suites`]: identity and refinement panels.

pub mod bounds;
pub mod covariation;
pub mod error;
pub mod montecarlo;
pub mod paths;
pub mod rng;
pub mod stats;
pub mod suites;
pub mod sum;
pub mod testfuncs;

pub use error::{Error, Result};
pub use paths::{FineGrid, SamplePath, UniformPartition};
pub use testfuncs::{CertifiedFunction, TestFunction};
