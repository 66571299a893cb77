use std::sync::Arc;

use super::estimator::Estimator;
use super::packet::{Delivery, Destination, ModelTag, NodeId, Packet, Payload};
use super::LinkConfig;
use crate::error::{Error, Result};
use crate::predictor::{fit_lms, LinearModel, SampleWindow};
use crate::types::{SlotTime, StatusVector};

#[derive(Debug, Clone)]
struct Outstanding {
    model: Arc<LinearModel>,
    stamp: SlotTime,
    air: Option<SlotTime>,
}

/// Source-side protocol state (the parallel transmit function block).
#[derive(Debug, Clone)]
pub struct Transmitter {
    node: NodeId,
    peer: NodeId,
    cfg: LinkConfig,
    est: Estimator,
    window: SampleWindow,
    tags: Vec<ModelTag>,
    outstanding: Vec<Outstanding>,
    sensed: Option<StatusVector>,
}

impl Transmitter {
    pub fn new(node: NodeId, peer: NodeId, cfg: LinkConfig, initial: StatusVector, model: LinearModel) -> Self {
        let est = Estimator::new(Arc::new(model), initial, cfg.replay_horizon);
        let window = SampleWindow::new(cfg.window);
        Self {
            node,
            peer,
            cfg,
            est,
            window,
            tags: vec![ModelTag::default()],
            outstanding: Vec::new(),
            sensed: None,
        }
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn peer(&self) -> NodeId {
        self.peer
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn estimator(&self) -> &Estimator {
        &self.est
    }

    /// `ŝ(t)`.
    pub fn estimate(&self) -> &StatusVector {
        self.est.estimate()
    }

    /// `s̄(t)`.
    pub fn prediction(&self) -> Option<&StatusVector> {
        self.est.prediction()
    }

    pub fn sensed(&self) -> Option<&StatusVector> {
        self.sensed.as_ref()
    }

    pub fn now(&self) -> Option<SlotTime> {
        self.est.current_slot()
    }

    /// Calibration stamps awaiting confirmation.
    pub fn pending(&self) -> Vec<SlotTime> {
        self.outstanding.iter().map(|o| o.stamp).collect()
    }

    pub fn adopted_tag(&self) -> ModelTag {
        *self.tags.last().expect("tags never empty")
    }

    fn tag_at(&self, slot: SlotTime) -> ModelTag {
        self.tags
            .iter()
            .rev()
            .find(|t| t.adopted_at <= slot)
            .copied()
            .unwrap_or_default()
    }

    /// Takes the sensed status for its slot and advances the estimate.
    pub fn sense(&mut self, s: StatusVector, exogenous: &[f64]) -> Result<()> {
        self.window.push(s.clone())?;
        let slot = s.stamp;
        self.est.advance(slot, exogenous);
        self.sensed = Some(s);
        let horizon = self.cfg.calib_period + self.cfg.confirm_timeout + self.cfg.replay_horizon as u64;
        self.outstanding.retain(|o| o.stamp + horizon > slot);
        Ok(())
    }

    /// Slot-synchronous form: sense, then apply this slot's delivery outcome.
    pub fn step(&mut self, s: StatusVector, exogenous: &[f64], ack: bool) -> Result<&StatusVector> {
        let slot = s.stamp;
        let values = s.values.clone();
        self.sense(s, exogenous)?;
        if ack || !self.cfg.feedback {
            self.est.anchor(slot, &values);
        }
        Ok(self.est.estimate())
    }

    pub fn is_decision_epoch(&self) -> bool {
        self.now().is_some_and(|t| t.is_multiple_of(self.cfg.decision_period))
    }

    /// `g` restricted to the predicted components, between `s(t)` and `s̄(t)`.
    pub fn prediction_error(&self) -> Result<f64> {
        let (Some(s), Some(p)) = (self.sensed.as_ref(), self.prediction()) else {
            return Err(Error::InvalidArgument("no sample sensed yet".into()));
        };
        let mask = &self.cfg.mask;
        let pick = |v: &StatusVector| -> Vec<f64> {
            v.values.iter().zip(mask).filter(|(_, m)| **m).map(|(x, _)| *x).collect()
        };
        Ok(self.cfg.g.distance(&pick(s), &pick(p)))
    }

    /// Threshold trigger for the current slot.
    pub fn trigger(&self) -> Result<bool> {
        Ok(self.prediction_error()? > self.cfg.delta)
    }

    pub fn status_packet(&self) -> Option<Packet> {
        let s = self.sensed.clone()?;
        Some(Packet {
            src: self.node,
            dst: Destination::Node(self.peer),
            stamp: s.stamp,
            payload: Payload::StatusOta { tag: self.tag_at(s.stamp), status: s },
        })
    }

    /// Fits a fresh model and emits a calibration on calibration slots. The
    /// source keeps predicting with its adopted model until confirmed.
    pub fn calibration_tick(&mut self, now: SlotTime) -> Option<Packet> {
        if !SlotTime(now.get() + self.cfg.tick_offset).is_multiple_of(self.cfg.calib_period) {
            return None;
        }
        let model = match fit_lms(&self.window, &self.cfg.mask, self.cfg.n_input) {
            Ok(m) => Arc::new(m.with_version(now)),
            Err(_) => return None,
        };
        if self.cfg.max_radius.is_some_and(|r| model.spectral_radius() > r) {
            return None;
        }
        let status = self.sensed.clone()?;
        self.outstanding.retain(|o| o.air.is_some());
        self.outstanding.push(Outstanding { model: model.clone(), stamp: now, air: None });
        Some(Packet {
            src: self.node,
            dst: Destination::Node(self.peer),
            stamp: now,
            payload: Payload::ModelCalibration { model, status, calib_stamp: now },
        })
    }

    /// Periodic model + status retransmission.
    pub fn correction_tick(&mut self, now: SlotTime) -> Option<Packet> {
        let period = self.cfg.correction_period?;
        if !SlotTime(now.get() + self.cfg.tick_offset + self.cfg.calib_period / 2).is_multiple_of(period) {
            return None;
        }
        let status = self.sensed.clone()?;
        let model = self.est.model_at(now).cloned().unwrap_or_else(|| self.est.model().clone());
        Some(Packet {
            src: self.node,
            dst: Destination::Node(self.peer),
            stamp: now,
            payload: Payload::Correction { model, status, tag: self.tag_at(now) },
        })
    }

    /// MAC outcome of one of our transmissions, at the end of its air slot.
    pub fn on_tx_outcome(&mut self, pkt: &Packet, air: SlotTime, delivered: bool) {
        let delivered = delivered || !self.cfg.feedback;
        match &pkt.payload {
            Payload::StatusOta { status, .. } | Payload::Correction { status, .. } => {
                if delivered {
                    self.est.anchor(status.stamp, &status.values);
                }
            }
            Payload::ModelCalibration { status, calib_stamp, .. } => {
                if delivered {
                    if let Some(o) = self.outstanding.iter_mut().find(|o| o.stamp == *calib_stamp) {
                        o.air = Some(air);
                    }
                    self.est.anchor(status.stamp, &status.values);
                } else {
                    self.outstanding.retain(|o| o.stamp != *calib_stamp);
                }
            }
            _ => {}
        }
    }

    /// Marks a calibration that the MAC dropped before it went on air.
    pub fn on_cancelled(&mut self, pkt: &Packet) {
        if let Payload::ModelCalibration { calib_stamp, .. } = pkt.payload {
            self.outstanding.retain(|o| o.stamp != calib_stamp);
        }
    }

    /// Handles a packet from the peer, processed at slot `now`.
    pub fn on_delivery(&mut self, d: &Delivery, _now: SlotTime) {
        let Payload::ModelConfirmation { calib_stamp } = d.packet.payload else {
            return;
        };
        let Some(pos) = self.outstanding.iter().position(|o| o.stamp == calib_stamp) else {
            return;
        };
        let o = &self.outstanding[pos];
        let Some(calib_air) = o.air else {
            return;
        };
        if !self.cfg.confirmation_valid(calib_stamp, calib_air, d.air) {
            return;
        }
        if calib_stamp <= self.est.latest_version() {
            return;
        }
        let from = self.cfg.adoption_slot(calib_stamp);
        self.est.adopt_from(from, o.model.clone());
        self.tags.push(ModelTag { version: calib_stamp, adopted_at: from });
        if self.tags.len() > 8 {
            self.tags.remove(0);
        }
        self.outstanding.retain(|o| o.stamp > calib_stamp);
    }
}
