//! Predictive status-update protocol library: online LMS predictors, the
//! calibration/confirmation/correction link protocol, a C-V2X Mode-4 style
//! MAC abstraction, vehicle and UAV plant models, and the SMART scheduler.

pub mod error;
pub mod mac;
pub mod plant;
pub mod predictor;
pub mod protocol;
pub mod rng;
pub mod smart;
pub mod types;

pub use error::{Error, Result};
