//! Run summary, folded from trace rows so a trace file reproduces it.

use std::collections::{BTreeMap, BTreeSet};

use parcomm_core::mac::Outcome;
use parcomm_core::protocol::PacketKind;
use serde::{Deserialize, Serialize};

use crate::aoi::mean_aoi;
use crate::trace::{Event, TraceRow};

/// Run facts the summary needs besides the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub scenario: String,
    pub mode: String,
    pub seed: u64,
    pub duration: u64,
    pub subchannels: u64,
    pub d_des: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistance {
    pub node: usize,
    pub front: usize,
    pub min_distance: f64,
    /// `d_des - min_distance`; larger is worse.
    pub min_safe_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Misalignment {
    /// Maximal runs of slots with `shat != shatp` over all links.
    pub episodes: u64,
    pub misaligned_slots: u64,
    pub longest: u64,
    /// `histogram[k]` counts episodes lasting `[2^k, 2^(k+1))` slots.
    pub histogram: Vec<u64>,
}

impl Misalignment {
    fn record(&mut self, len: u64) {
        if len == 0 {
            return;
        }
        self.episodes += 1;
        self.misaligned_slots += len;
        self.longest = self.longest.max(len);
        let bin = (63 - len.leading_zeros()) as usize;
        if self.histogram.len() <= bin {
            self.histogram.resize(bin + 1, 0);
        }
        self.histogram[bin] += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub meta: RunMeta,
    /// StatusOTA attempts per source node.
    pub ota_per_node: BTreeMap<usize, u64>,
    /// Attempts per packet kind (a repeated copy is one attempt).
    pub attempts: BTreeMap<String, u64>,
    /// Outcomes at intended receivers.
    pub delivered: u64,
    pub collisions: u64,
    pub half_duplex: u64,
    pub channel_losses: u64,
    pub occupancy: f64,
    pub pairs: Vec<PairDistance>,
    /// Worst encroachment over all pairs, 0 without pairs.
    pub min_safe_distance: f64,
    pub crash: bool,
    /// Standard deviation of `distance - d_des` over all pairs and slots.
    pub distance_std: f64,
    pub mean_error: f64,
    pub max_error: f64,
    pub misalignment: Misalignment,
    /// Mean over links of the per-link mean AoI, in slots.
    pub mean_aoi: Option<f64>,
    pub aoi: BTreeMap<String, f64>,
    /// Last SMART auxiliary cost seen per source.
    pub final_m: BTreeMap<usize, f64>,
}

impl RunSummary {
    pub fn total_ota(&self) -> u64 {
        self.ota_per_node.values().sum()
    }

    pub fn attempts_of(&self, kind: PacketKind) -> u64 {
        self.attempts.get(kind.as_str()).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).sqrt()
        }
    }
}

/// Incremental summary; feed rows in trace order.
#[derive(Debug)]
pub struct SummaryBuilder {
    meta: RunMeta,
    ota_per_node: BTreeMap<usize, u64>,
    attempts: BTreeMap<String, u64>,
    last_attempt: Option<(u64, usize, u64)>,
    outcomes: [u64; 4],
    used: u64,
    slot_used: (u64, BTreeSet<u64>),
    pairs: BTreeMap<usize, (usize, f64)>,
    distance: Welford,
    error_sum: f64,
    error_n: u64,
    max_error: f64,
    misalignment: Misalignment,
    runs: BTreeMap<(usize, usize), u64>,
    deliveries: BTreeMap<(usize, usize), Vec<(u64, u64)>>,
    final_m: BTreeMap<usize, f64>,
}

impl SummaryBuilder {
    pub fn new(meta: RunMeta) -> Self {
        SummaryBuilder {
            meta,
            ota_per_node: BTreeMap::new(),
            attempts: BTreeMap::new(),
            last_attempt: None,
            outcomes: [0; 4],
            used: 0,
            slot_used: (u64::MAX, BTreeSet::new()),
            pairs: BTreeMap::new(),
            distance: Welford::default(),
            error_sum: 0.0,
            error_n: 0,
            max_error: 0.0,
            misalignment: Misalignment::default(),
            runs: BTreeMap::new(),
            deliveries: BTreeMap::new(),
            final_m: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: &TraceRow) {
        match row.event {
            Event::Tx => self.push_tx(row),
            Event::State => self.push_state(row),
            Event::Plant => self.push_plant(row),
        }
    }

    fn push_tx(&mut self, row: &TraceRow) {
        let sub = row.subchannel.unwrap_or(0);
        let key = (row.slot, row.node, sub);
        let kind = row.kind.expect("tx rows carry a kind");
        if self.last_attempt != Some(key) {
            self.last_attempt = Some(key);
            *self.attempts.entry(kind.as_str().to_string()).or_default() += 1;
            if kind == PacketKind::StatusOta {
                *self.ota_per_node.entry(row.node).or_default() += 1;
            }
            if self.slot_used.0 != row.slot {
                self.slot_used = (row.slot, BTreeSet::new());
            }
            if self.slot_used.1.insert(sub) {
                self.used += 1;
            }
        }
        let idx = match row.outcome {
            Some(Outcome::Delivered) => 0,
            Some(Outcome::Collision) => 1,
            Some(Outcome::HalfDuplex) => 2,
            Some(Outcome::ChannelLoss) => 3,
            None => return,
        };
        self.outcomes[idx] += 1;
        let status_kind = matches!(kind, PacketKind::StatusOta | PacketKind::ModelCalibration | PacketKind::Correction);
        if idx == 0 && status_kind {
            if let (Some(peer), Some(stamp)) = (row.peer, row.stamp) {
                self.deliveries.entry((row.node, peer)).or_default().push((row.slot, stamp));
            }
        }
    }

    fn push_state(&mut self, row: &TraceRow) {
        if let Some(e) = row.error {
            self.error_sum += e;
            self.error_n += 1;
            self.max_error = self.max_error.max(e);
        }
        if let Some(m) = row.m {
            self.final_m.insert(row.node, m);
        }
        let link = (row.node, row.peer.unwrap_or(usize::MAX));
        let aligned = row.shat.len() == row.shatp.len()
            && row.shat.iter().zip(&row.shatp).all(|(a, b)| a.to_bits() == b.to_bits());
        let run = self.runs.entry(link).or_default();
        if aligned {
            self.misalignment.record(*run);
            *run = 0;
        } else {
            *run += 1;
        }
    }

    fn push_plant(&mut self, row: &TraceRow) {
        let (Some(front), Some(d)) = (row.peer, row.distance) else { return };
        let e = self.pairs.entry(row.node).or_insert((front, f64::INFINITY));
        e.1 = e.1.min(d);
        self.distance.push(d - self.meta.d_des);
    }

    pub fn finish(mut self) -> RunSummary {
        for (_, run) in std::mem::take(&mut self.runs) {
            self.misalignment.record(run);
        }
        let d_des = self.meta.d_des;
        let pairs: Vec<PairDistance> = self
            .pairs
            .iter()
            .map(|(&node, &(front, min))| PairDistance { node, front, min_distance: min, min_safe_distance: d_des - min })
            .collect();
        let end = self.meta.duration + 1;
        let aoi: BTreeMap<(usize, usize), f64> = self
            .deliveries
            .iter()
            .filter_map(|(&k, d)| mean_aoi(d, end).map(|a| (k, a)))
            .collect();
        let mean_aoi = (!aoi.is_empty()).then(|| aoi.values().sum::<f64>() / aoi.len() as f64);
        let capacity = self.meta.duration * self.meta.subchannels;
        RunSummary {
            ota_per_node: self.ota_per_node,
            attempts: self.attempts,
            delivered: self.outcomes[0],
            collisions: self.outcomes[1],
            half_duplex: self.outcomes[2],
            channel_losses: self.outcomes[3],
            occupancy: if capacity == 0 { 0.0 } else { self.used as f64 / capacity as f64 },
            min_safe_distance: pairs.iter().map(|p| p.min_safe_distance).fold(0.0, f64::max),
            crash: pairs.iter().any(|p| p.min_distance < 0.0),
            pairs,
            distance_std: self.distance.std(),
            mean_error: if self.error_n == 0 { 0.0 } else { self.error_sum / self.error_n as f64 },
            max_error: self.max_error,
            misalignment: self.misalignment,
            mean_aoi,
            aoi: aoi.into_iter().map(|((s, d), a)| (format!("{s}->{d}"), a)).collect(),
            final_m: self.final_m,
            meta: self.meta,
        }
    }
}

/// Summary recomputed from a complete list of trace rows.
pub fn summarize(meta: RunMeta, rows: &[TraceRow]) -> RunSummary {
    let mut b = SummaryBuilder::new(meta);
    for r in rows {
        b.push(r);
    }
    b.finish()
}
