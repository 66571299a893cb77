//! Age of information of over-the-air status deliveries.

use std::collections::BTreeMap;

use parcomm_core::mac::Outcome;
use parcomm_core::protocol::PacketKind;

use crate::trace::{Event, TraceRow};

/// Mean of `AoI(t) = t - freshest delivered stamp` over `first delivery <=
/// t < end`. `deliveries` are `(air slot, stamp)` pairs in air order.
pub fn mean_aoi(deliveries: &[(u64, u64)], end: u64) -> Option<f64> {
    let &(first, _) = deliveries.first()?;
    if first >= end {
        return None;
    }
    let mut total: u128 = 0;
    let mut freshest = 0u64;
    let mut i = 0;
    for t in first..end {
        while i < deliveries.len() && deliveries[i].0 <= t {
            freshest = freshest.max(deliveries[i].1);
            i += 1;
        }
        total += (t - freshest.min(t)) as u128;
    }
    Some(total as f64 / (end - first) as f64)
}

fn carries_status(kind: Option<PacketKind>) -> bool {
    matches!(kind, Some(PacketKind::StatusOta | PacketKind::ModelCalibration | PacketKind::Correction))
}

/// Mean AoI per `(source, destination)` pair over a trace ending at `end`.
/// Only over-the-air deliveries count; model predictions do not refresh age.
pub fn compute_aoi(rows: &[TraceRow], end: u64) -> BTreeMap<(usize, usize), f64> {
    let mut per_pair: BTreeMap<(usize, usize), Vec<(u64, u64)>> = BTreeMap::new();
    for r in rows {
        if r.event != Event::Tx || !carries_status(r.kind) || r.outcome != Some(Outcome::Delivered) {
            continue;
        }
        let (Some(peer), Some(stamp)) = (r.peer, r.stamp) else { continue };
        per_pair.entry((r.node, peer)).or_default().push((r.slot, stamp));
    }
    per_pair
        .into_iter()
        .filter_map(|(k, d)| mean_aoi(&d, end).map(|a| (k, a)))
        .collect()
}
