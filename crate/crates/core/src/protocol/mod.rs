//! Parallel transmitter and receiver for one source-destination pair.
//!
//! The source samples every slot and transmits a status over the air only
//! when the shared model's prediction misses by more than `delta`. Both ends
//! run the same model on the same estimate history, so when nothing is sent
//! the destination's estimate still tracks the source.

mod estimator;
mod packet;
mod receiver;
mod transmitter;

pub use estimator::Estimator;
pub use packet::{Delivery, Destination, ModelTag, NodeId, Packet, PacketKind, Payload};
pub use receiver::Receiver;
pub use transmitter::Transmitter;

use crate::error::Result;
use crate::types::{status_error, ErrorMeasure, SlotTime, StatusVector};

/// Per-link protocol parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    /// Transmit threshold on `g(s, s̄)`.
    pub delta: f64,
    pub g: ErrorMeasure,
    /// Slots between transmit decisions.
    pub decision_period: u64,
    /// Slots between model calibrations (`T_model`).
    pub calib_period: u64,
    /// Slots between correction packets; `None` disables them.
    pub correction_period: Option<u64>,
    /// Shifts calibration and correction ticks so that links sharing a
    /// channel do not all fire on the same slot. Corrections sit half a
    /// calibration period after calibrations.
    pub tick_offset: u64,
    /// Fitted models whose spectral radius exceeds this are not sent.
    pub max_radius: Option<f64>,
    /// Slots after a calibration goes on air within which a confirmation
    /// must arrive.
    pub confirm_timeout: u64,
    /// Repetitions of each confirmation.
    pub confirm_repeats: usize,
    pub n_input: usize,
    pub window: usize,
    /// Which status components the model predicts.
    pub mask: Vec<bool>,
    /// Whether the MAC reports delivery outcomes to the sender. Without it
    /// every transmission is assumed successful.
    pub feedback: bool,
    /// Whether received statuses are placed at their carried stamp.
    pub timestamping: bool,
    /// How many past slots the estimators can replay.
    pub replay_horizon: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            g: ErrorMeasure::L1,
            decision_period: 10,
            calib_period: 100,
            correction_period: Some(1000),
            tick_offset: 0,
            max_radius: None,
            confirm_timeout: 10,
            confirm_repeats: 3,
            n_input: 1,
            window: 100,
            mask: vec![true, true, false],
            feedback: true,
            timestamping: true,
            replay_horizon: 4096,
        }
    }
}

impl LinkConfig {
    /// Whether a confirmation on air at `conf_air` validly confirms the
    /// calibration stamped `calib_stamp` that went on air at `calib_air`.
    /// Both ends evaluate this on air slots so they agree on the outcome.
    pub fn confirmation_valid(&self, calib_stamp: SlotTime, calib_air: SlotTime, conf_air: SlotTime) -> bool {
        conf_air > calib_air
            && conf_air <= calib_air + self.confirm_timeout
            && conf_air < calib_stamp + self.calib_period
    }

    /// First slot that uses a confirmed model: the slot after its
    /// calibration stamp. Both ends anchor the calibration's status at the
    /// stamp, so the new model rolls forward from a fresh status rather than
    /// from whatever the old model predicted. Adoption is retroactive and
    /// replayed by the estimators.
    pub fn adoption_slot(&self, calib_stamp: SlotTime) -> SlotTime {
        calib_stamp + 1
    }
}

/// Transmit decision: true iff `g(s, s̄) > delta` (strict).
pub fn tx_decide(s: &StatusVector, s_bar: &StatusVector, delta: f64, g: ErrorMeasure) -> Result<bool> {
    Ok(status_error(s, s_bar, g)? > delta)
}

/// Slot at which a received status takes effect at the destination.
pub fn apply_timestamp_alignment(stamp: SlotTime, processed_at: SlotTime, timestamping: bool) -> SlotTime {
    if timestamping {
        stamp
    } else {
        processed_at
    }
}
