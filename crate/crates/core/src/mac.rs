//! Simplified C-V2X Mode-4 sidelink MAC.
//!
//! Time is a grid of 1 ms subframes by `subchannels` frequency resources.
//! A packet enqueued at slot `t` picks one resource uniformly from the next
//! selection window `t+1 ..= t+rri`. Two packets on the same subframe and
//! subchannel collide everywhere; a node cannot receive in a subframe in
//! which it transmits (half duplex).

use std::collections::{BTreeSet, HashMap};

use crate::error::{invalid, Result};
use crate::protocol::{NodeId, Packet, PacketKind};
use crate::rng::RngStream;
use crate::types::SlotTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourcePool {
    /// Subframes per selection window.
    pub rri: u64,
    pub subchannels: u64,
}

impl Default for ResourcePool {
    fn default() -> Self {
        Self { rri: 10, subchannels: 2 }
    }
}

impl ResourcePool {
    pub fn new(rri: u64, subchannels: u64) -> Result<Self> {
        if rri == 0 || subchannels == 0 {
            return Err(invalid("resource pool must have at least one subframe and subchannel"));
        }
        Ok(Self { rri, subchannels })
    }

    pub fn size(&self) -> u64 {
        self.rri * self.subchannels
    }
}

/// Uniform choice of `(subframe, subchannel)` from the pool.
pub fn select_resource(pool: &ResourcePool, rng: &mut RngStream) -> (u64, u64) {
    let r = rng.below(pool.size());
    (r / pool.subchannels, r % pool.subchannels)
}

/// `count` distinct resources (as many as the pool holds), uniformly.
pub fn select_resources(pool: &ResourcePool, count: usize, rng: &mut RngStream) -> Vec<(u64, u64)> {
    let size = pool.size();
    let count = (count as u64).min(size);
    let mut picked = BTreeSet::new();
    let mut out = Vec::with_capacity(count as usize);
    while (out.len() as u64) < count {
        let r = rng.below(size);
        if picked.insert(r) {
            out.push((r / pool.subchannels, r % pool.subchannels));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Delivered,
    Collision,
    HalfDuplex,
    ChannelLoss,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Delivered => "delivered",
            Outcome::Collision => "collision",
            Outcome::HalfDuplex => "half_duplex",
            Outcome::ChannelLoss => "channel_loss",
        }
    }

    pub fn parse(s: &str) -> Option<Outcome> {
        [Outcome::Delivered, Outcome::Collision, Outcome::HalfDuplex, Outcome::ChannelLoss]
            .into_iter()
            .find(|o| o.as_str() == s)
    }
}

/// Resolves the attempts sharing one subframe. `attempts` holds
/// `(sender, subchannel)`; the result holds, per attempt, the outcome at
/// every listener other than its sender.
pub fn resolve_subframe(attempts: &[(NodeId, u64)], listeners: &[NodeId]) -> Vec<Vec<(NodeId, Outcome)>> {
    attempts
        .iter()
        .enumerate()
        .map(|(i, &(sender, subchannel))| {
            let collided = attempts
                .iter()
                .enumerate()
                .any(|(j, &(_, sc))| j != i && sc == subchannel);
            listeners
                .iter()
                .filter(|&&l| l != sender)
                .map(|&l| {
                    let outcome = if collided {
                        Outcome::Collision
                    } else if attempts.iter().any(|&(s, _)| s == l) {
                        Outcome::HalfDuplex
                    } else {
                        Outcome::Delivered
                    };
                    (l, outcome)
                })
                .collect()
        })
        .collect()
}

/// Fraction of grid resources carrying at least one attempt.
pub fn occupancy(used: &[(u64, u64)], slots: u64, subchannels: u64) -> f64 {
    let total = slots * subchannels;
    if total == 0 {
        return 0.0;
    }
    let distinct: BTreeSet<&(u64, u64)> = used.iter().collect();
    distinct.len() as f64 / total as f64
}

#[derive(Debug, Clone)]
struct Scheduled {
    id: u64,
    packet: Packet,
    air: SlotTime,
    subchannel: u64,
}

/// One resolved transmission.
#[derive(Debug, Clone)]
pub struct AttemptReport {
    pub id: u64,
    pub packet: Packet,
    pub air: SlotTime,
    pub subframe: u64,
    pub subchannel: u64,
    pub outcomes: Vec<(NodeId, Outcome)>,
}

impl AttemptReport {
    pub fn outcome_at(&self, node: NodeId) -> Option<Outcome> {
        self.outcomes.iter().find(|(n, _)| *n == node).map(|(_, o)| *o)
    }

    pub fn delivered_to(&self, node: NodeId) -> bool {
        self.outcome_at(node) == Some(Outcome::Delivered)
    }

    /// Receivers the packet is addressed to.
    pub fn intended(&self) -> impl Iterator<Item = &(NodeId, Outcome)> {
        let dst = self.packet.dst;
        self.outcomes.iter().filter(move |(n, _)| dst.includes(*n))
    }
}

/// Decides whether a given (packet, air slot, receiver) is forcibly lost.
pub type LossInjector = Box<dyn FnMut(&Packet, SlotTime, NodeId) -> bool + Send>;

/// The shared medium: schedules attempts and resolves them slot by slot.
pub struct Medium {
    pool: ResourcePool,
    nodes: Vec<NodeId>,
    p_loss: f64,
    ideal: bool,
    mac_rng: RngStream,
    channel_rng: RngStream,
    pending: Vec<Scheduled>,
    next_id: u64,
    injector: Option<LossInjector>,
}

impl Medium {
    /// `ideal` delivers every attempt to every listener regardless of
    /// contention (used for lossless protocol checks).
    pub fn new(pool: ResourcePool, nodes: Vec<NodeId>, p_loss: f64, ideal: bool, seed: u64) -> Self {
        use crate::rng::streams;
        Self {
            pool,
            nodes,
            p_loss,
            ideal,
            mac_rng: RngStream::new(seed, streams::MAC),
            channel_rng: RngStream::new(seed, streams::CHANNEL),
            pending: Vec::new(),
            next_id: 0,
            injector: None,
        }
    }

    pub fn pool(&self) -> &ResourcePool {
        &self.pool
    }

    pub fn set_injector(&mut self, injector: LossInjector) {
        self.injector = Some(injector);
    }

    pub fn mac_rng(&mut self) -> &mut RngStream {
        &mut self.mac_rng
    }

    /// Queues `packet` at slot `now` with `repeats` copies on distinct
    /// resources. A still-unsent packet of the same sender, kind and
    /// destination is dropped in favour of the new one and returned.
    pub fn enqueue(&mut self, now: SlotTime, packet: Packet, repeats: usize) -> Vec<Packet> {
        let key = (packet.src, packet.kind(), packet.dst);
        let mut cancelled = Vec::new();
        self.pending.retain(|s| {
            let same = (s.packet.src, s.packet.kind(), s.packet.dst) == key;
            if same && s.air > now {
                cancelled.push(s.packet.clone());
            }
            !(same && s.air > now)
        });
        cancelled.dedup();
        for (subframe, subchannel) in select_resources(&self.pool, repeats.max(1), &mut self.mac_rng) {
            self.pending.push(Scheduled {
                id: self.next_id,
                packet: packet.clone(),
                air: now + 1 + subframe,
                subchannel,
            });
        }
        self.next_id += 1;
        cancelled
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Resolves every attempt scheduled at slot `now`, in enqueue order.
    pub fn resolve(&mut self, now: SlotTime) -> Vec<AttemptReport> {
        let mut due = Vec::new();
        self.pending.retain(|s| {
            if s.air == now {
                due.push(s.clone());
                false
            } else {
                true
            }
        });
        due.sort_by_key(|s| (s.id, s.subchannel));
        let contenders: Vec<(NodeId, u64)> = due.iter().map(|s| (s.packet.src, s.subchannel)).collect();
        let resolved = if self.ideal {
            due.iter()
                .map(|s| self.nodes.iter().filter(|&&n| n != s.packet.src).map(|&n| (n, Outcome::Delivered)).collect())
                .collect()
        } else {
            resolve_subframe(&contenders, &self.nodes)
        };
        let subframe_of = |air: SlotTime| air.get() % self.pool.rri;
        let mut reports = Vec::with_capacity(due.len());
        for (s, mut outcomes) in due.into_iter().zip(resolved) {
            for (node, outcome) in outcomes.iter_mut() {
                if *outcome != Outcome::Delivered {
                    continue;
                }
                if let Some(inj) = self.injector.as_mut() {
                    if inj(&s.packet, now, *node) {
                        *outcome = Outcome::ChannelLoss;
                        continue;
                    }
                }
                if self.p_loss > 0.0 && s.packet.dst.includes(*node) && self.channel_rng.bernoulli(self.p_loss) {
                    *outcome = Outcome::ChannelLoss;
                }
            }
            reports.push(AttemptReport {
                id: s.id,
                subframe: subframe_of(s.air),
                packet: s.packet,
                air: s.air,
                subchannel: s.subchannel,
                outcomes,
            });
        }
        reports
    }
}

/// Per-kind attempt counts, handy for summaries.
pub fn count_by_kind(reports: &[AttemptReport]) -> HashMap<PacketKind, usize> {
    let mut m = HashMap::new();
    for r in reports {
        *m.entry(r.packet.kind()).or_insert(0) += 1;
    }
    m
}
