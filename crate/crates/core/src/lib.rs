//! Information-based asset pricing.
//!
//! Market factors are revealed gradually through Brownian-bridge
//! information processes `xi_t = sigma * H_T * t + beta_tT`. Prices are
//! discounted conditional expectations of cash flows given the information
//! observed so far.

pub mod arrow_debreu;
pub mod cli;
pub mod credit;
pub mod curve;
pub mod equity;
pub mod error;
pub mod numerics;
pub mod options;
pub mod process;
pub mod rates;
pub mod rng;
pub mod xfactor;
pub mod zfactor;

pub use curve::DiscountCurve;
pub use error::{Error, Result};
pub use process::{
    ContinuousDensity, DiscretePayoff, Factor, InformationProcessSpec, PathSample, TimeGrid,
};
