use std::sync::Arc;

use super::estimator::Estimator;
use super::packet::{Delivery, Destination, ModelTag, NodeId, Packet, Payload};
use super::{apply_timestamp_alignment, LinkConfig};
use crate::predictor::LinearModel;
use crate::types::{SlotTime, StatusVector};

const MAX_STAGED: usize = 4;

#[derive(Debug, Clone)]
struct Staged {
    model: Arc<LinearModel>,
    stamp: SlotTime,
    air: SlotTime,
}

/// Destination-side protocol state (the parallel receive function block).
#[derive(Debug, Clone)]
pub struct Receiver {
    node: NodeId,
    peer: NodeId,
    cfg: LinkConfig,
    est: Estimator,
    staged: Vec<Staged>,
    held: Vec<Delivery>,
    last_received: Option<StatusVector>,
    last_calib: Option<SlotTime>,
}

impl Receiver {
    pub fn new(node: NodeId, peer: NodeId, cfg: LinkConfig, initial: StatusVector, model: LinearModel) -> Self {
        let est = Estimator::new(Arc::new(model), initial.clone(), cfg.replay_horizon);
        Self {
            node,
            peer,
            cfg,
            est,
            staged: Vec::new(),
            held: Vec::new(),
            last_received: Some(initial),
            last_calib: None,
        }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn peer(&self) -> NodeId {
        self.peer
    }

    pub fn estimator(&self) -> &Estimator {
        &self.est
    }

    /// `ŝ'(t)`.
    pub fn estimate(&self) -> &StatusVector {
        self.est.estimate()
    }

    pub fn last_calibration(&self) -> Option<SlotTime> {
        self.last_calib
    }

    pub fn staged_versions(&self) -> Vec<SlotTime> {
        self.staged.iter().map(|s| s.stamp).collect()
    }

    /// Whether a calibrated model has been adopted.
    pub fn is_calibrated(&self) -> bool {
        self.est.model().version() > SlotTime::ZERO
    }

    /// Status handed to the controller: `ŝ'` once a calibrated model is in
    /// use; before that, the freshest received status (held), since an
    /// uncalibrated model's output carries no information. The initial
    /// status counts as received.
    pub fn control_view(&self) -> &StatusVector {
        match (&self.last_received, self.is_calibrated()) {
            (Some(r), false) => r,
            _ => self.est.estimate(),
        }
    }

    /// Advances to slot `slot` with this slot's exogenous inputs.
    pub fn advance(&mut self, slot: SlotTime, exogenous: &[f64]) -> &StatusVector {
        self.est.advance(slot, exogenous);
        if !self.held.is_empty() {
            let ready: Vec<Delivery> = {
                let (ready, keep): (Vec<_>, Vec<_>) =
                    self.held.drain(..).partition(|d| d.packet.stamp <= slot);
                self.held = keep;
                ready
            };
            for d in ready {
                self.on_delivery(&d, slot);
            }
        }
        self.est.estimate()
    }

    /// Slot-synchronous form of the receive update: `ŝ'(t) = r(t)` when a
    /// status was decoded this slot, the model prediction otherwise.
    pub fn step(&mut self, slot: SlotTime, exogenous: &[f64], received: Option<&StatusVector>) -> &StatusVector {
        self.advance(slot, exogenous);
        if let Some(r) = received {
            let at = apply_timestamp_alignment(r.stamp, slot, self.cfg.timestamping);
            self.est.anchor(at, &r.values);
            self.last_received = Some(r.clone());
        }
        self.est.estimate()
    }

    fn effective(&self, stamp: SlotTime, now: SlotTime) -> SlotTime {
        apply_timestamp_alignment(stamp, now, self.cfg.timestamping)
    }

    fn anchor_status(&mut self, status: &StatusVector, now: SlotTime) {
        let at = self.effective(status.stamp, now);
        self.est.anchor(at, &status.values);
        if self.last_received.as_ref().is_none_or(|r| r.stamp <= status.stamp) {
            self.last_received = Some(status.clone());
        }
    }

    fn on_tag(&mut self, tag: ModelTag, now: SlotTime) {
        if tag.version > self.est.latest_version() {
            if let Some(s) = self.staged.iter().find(|s| s.stamp == tag.version) {
                let from = self.effective(tag.adopted_at, now);
                self.est.adopt_from(from, s.model.clone());
            }
        }
        self.staged.retain(|s| s.stamp > tag.version);
    }

    /// Handles a decoded packet at slot `now` and returns any reply.
    pub fn on_delivery(&mut self, d: &Delivery, now: SlotTime) -> Option<Packet> {
        if d.packet.stamp > now {
            self.held.push(d.clone());
            return None;
        }
        match &d.packet.payload {
            Payload::ModelCalibration { model, status, calib_stamp } => {
                self.staged.retain(|s| s.stamp != *calib_stamp);
                self.staged.push(Staged { model: model.clone(), stamp: *calib_stamp, air: self.effective(d.air, now) });
                if self.staged.len() > MAX_STAGED {
                    self.staged.remove(0);
                }
                self.last_calib = Some(*calib_stamp);
                self.anchor_status(status, now);
                Some(Packet {
                    src: self.node,
                    dst: Destination::Node(self.peer),
                    stamp: now,
                    payload: Payload::ModelConfirmation { calib_stamp: *calib_stamp },
                })
            }
            Payload::StatusOta { status, tag } => {
                self.on_tag(*tag, now);
                self.anchor_status(status, now);
                None
            }
            Payload::Correction { model, status, tag } => {
                let at = self.effective(status.stamp, now);
                self.est.overwrite_model_from(at, model.clone());
                self.on_tag(*tag, now);
                self.anchor_status(status, now);
                None
            }
            _ => None,
        }
    }

    /// MAC outcome of one of our confirmations. With delivery feedback a
    /// delivered copy tells the destination that the source will adopt the
    /// staged model, so it schedules the same adoption slot.
    pub fn on_tx_outcome(&mut self, pkt: &Packet, air: SlotTime, delivered: bool) {
        if !self.cfg.feedback || !delivered {
            return;
        }
        let Payload::ModelConfirmation { calib_stamp } = pkt.payload else {
            return;
        };
        let Some(s) = self.staged.iter().find(|s| s.stamp == calib_stamp) else {
            return;
        };
        if calib_stamp <= self.est.latest_version() {
            return;
        }
        if !self.cfg.confirmation_valid(calib_stamp, s.air, air) {
            return;
        }
        self.est.adopt_from(self.cfg.adoption_slot(calib_stamp), s.model.clone());
        self.staged.retain(|s| s.stamp > calib_stamp);
    }
}
