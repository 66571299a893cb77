use std::fmt;
use std::sync::Arc;

use crate::predictor::LinearModel;
use crate::types::{SlotTime, StatusVector};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Destination {
    Node(NodeId),
    Broadcast,
}

impl Destination {
    pub fn includes(self, node: NodeId) -> bool {
        match self {
            Destination::Node(n) => n == node,
            Destination::Broadcast => true,
        }
    }
}

/// Identifies the model a source was running when it stamped a packet.
///
/// `version` is the calibration stamp; `adopted_at` is the first slot the
/// source predicted with it. Receivers use the tag to line up model
/// adoption after a confirmation whose delivery they could not observe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelTag {
    pub version: SlotTime,
    pub adopted_at: SlotTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PacketKind {
    StatusOta,
    ModelCalibration,
    ModelConfirmation,
    Correction,
    Control,
}

impl PacketKind {
    pub const ALL: [PacketKind; 5] = [
        PacketKind::StatusOta,
        PacketKind::ModelCalibration,
        PacketKind::ModelConfirmation,
        PacketKind::Correction,
        PacketKind::Control,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::StatusOta => "ota",
            PacketKind::ModelCalibration => "calib",
            PacketKind::ModelConfirmation => "confirm",
            PacketKind::Correction => "correction",
            PacketKind::Control => "control",
        }
    }

    pub fn parse(s: &str) -> Option<PacketKind> {
        PacketKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    StatusOta {
        status: StatusVector,
        tag: ModelTag,
    },
    ModelCalibration {
        model: Arc<LinearModel>,
        status: StatusVector,
        calib_stamp: SlotTime,
    },
    ModelConfirmation {
        calib_stamp: SlotTime,
    },
    Correction {
        model: Arc<LinearModel>,
        status: StatusVector,
        tag: ModelTag,
    },
    Control {
        /// Commanded acceleration per follower and axis, m/s^2.
        commands: Vec<(NodeId, Vec<f64>)>,
        /// Last calibration stamp the controller received from each follower.
        last_calib: Vec<(NodeId, SlotTime)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub src: NodeId,
    pub dst: Destination,
    /// Sender's clock when the packet was built.
    pub stamp: SlotTime,
    pub payload: Payload,
}

impl Packet {
    pub fn kind(&self) -> PacketKind {
        match self.payload {
            Payload::StatusOta { .. } => PacketKind::StatusOta,
            Payload::ModelCalibration { .. } => PacketKind::ModelCalibration,
            Payload::ModelConfirmation { .. } => PacketKind::ModelConfirmation,
            Payload::Correction { .. } => PacketKind::Correction,
            Payload::Control { .. } => PacketKind::Control,
        }
    }

    /// The status carried by the packet, if any.
    pub fn status(&self) -> Option<&StatusVector> {
        match &self.payload {
            Payload::StatusOta { status, .. }
            | Payload::ModelCalibration { status, .. }
            | Payload::Correction { status, .. } => Some(status),
            _ => None,
        }
    }
}

/// A packet as seen by a receiver: what was sent and the slot it was on air.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub packet: Packet,
    pub air: SlotTime,
}
