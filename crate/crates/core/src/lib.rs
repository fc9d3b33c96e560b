//! Valuation-ratio return predictability.
//!
//! The crate covers the full quantitative pipeline around the cyclically
//! adjusted price-earnings ratio:
//!
//! * [`market`]: real (CPI deflated) monthly series, CAPE, log EP, log DP,
//!   log gross returns and multi-horizon yields.
//! * [`regression`]: OLS, AR(1), the second-order bias-corrected AR(1)
//!   coefficient and the augmented predictive regression.
//! * [`bootstrap`]: paired residual bootstrap test of `beta = 0`.
//! * [`dynamics`]: the momentum/value linear stochastic difference system,
//!   the mean-reverting log dividend-price process and their closed-form
//!   moments.
//! * [`calibration`]: rolling-window estimation of every model parameter.
//! * [`scenario`]: seeded Monte Carlo scenarios and analytical bands.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature. The `parallel` feature evaluates bootstrap replicas and scenario
//! paths on a rayon pool; results are identical to the sequential build.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

pub mod bootstrap;
pub mod calibration;
pub mod dynamics;
mod error;
pub mod linalg;
pub mod market;
pub mod regression;
pub mod rng;
pub mod scenario;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
