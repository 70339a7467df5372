//! Worst-case multi-tone jammer design against the L-tap Wiener
//! interpolation filter used for interference excision in DSSS receivers.
//!
//! The crate is `no_std` with `alloc`; enable the `std` feature to get
//! `std::error::Error` impls and the std-backed RNG conveniences.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod analytic;
pub mod blind;
pub mod error;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod seed;

pub use analytic::{analytic_bmse, dirichlet, CovarianceModel, FilterSource, WienerFilter};
pub use blind::{blind_wiener, SampleCovariances};
pub use error::{Error, Result};
pub use linalg::C64;
pub use model::{SampleStream, SystemParams, ToneSet};
pub use optimizer::{design_jammer, DesignMethod, DesignResult, OptimizerConfig};
