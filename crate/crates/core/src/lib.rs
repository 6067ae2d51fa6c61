//! Simulation laboratory for the finite-sample bias of leave-one-out
//! cross-validation on time series.
//!
//! The CV mean squared error of a candidate model splits exactly into
//!
//! ```text
//! (1/T) Σ ẽᵢ² = (1/T) Σ εᵢ² + (2/T) Σ μᵢεᵢ − (2/T) Σ μ̃₋ᵢεᵢ + (1/T) Σ (μᵢ − μ̃₋ᵢ)²
//! ```
//!
//! and CV ranks models by their mean average squared error only when the
//! cross term `E[(1/T) Σ μ̃₋ᵢεᵢ]` vanishes. With simulated data the true
//! `μᵢ` and `εᵢ` are known, so every term can be measured directly.
//!
//! * [`dgp`] simulates AR(1), VAR(p) and i.i.d. regression processes with
//!   Gaussian or ARCH(1) (martingale difference) errors.
//! * [`estimators`] fits OLS and leave-one-out refits, with a rank-one
//!   downdate fast path.
//! * [`cv`] holds the CV schemes, the decomposition, ASE and selection.
//! * [`mc`] runs replications in parallel with results that do not depend
//!   on the thread count.
//! * [`cli`] implements the batch commands behind the `cvbias` binary.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod cv;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod mc;
pub mod rng;
pub mod stats;

pub use cv::{CvDecomposition, CvScheme};
pub use dgp::{DgpSpec, ErrorSpec, MeanKind, SimulatedPath};
pub use error::{Error, Result};
pub use estimators::{FitResult, ModelSpec};
pub use mc::{McConfig, McReport, RunOptions};
