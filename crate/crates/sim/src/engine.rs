//! Slot-by-slot engine composing plant, links, MAC, control and SMART.

use std::collections::VecDeque;
use std::path::Path;

use parcomm_core::mac::{AttemptReport, LossInjector, Medium, Outcome, ResourcePool};
use parcomm_core::predictor::LinearModel;
use parcomm_core::protocol::{Delivery, Destination, LinkConfig, NodeId, Packet, PacketKind, Payload, Receiver, Transmitter};
use parcomm_core::rng::{streams, RngStream};
use parcomm_core::smart::{error_chain, smart_tx_gate, AdaptationState, AuxCostGrid, ErrorQuantizer, PolicyBank};
use parcomm_core::types::{add_sensing_noise, SlotTime, StatusVector};

use crate::config::{ConfigError, InitialModel, Mode, ScenarioConfig};
use crate::scenario::World;
use crate::summary::{RunMeta, RunSummary, SummaryBuilder};
use crate::trace::{Event, TraceError, TraceRow, TraceWriter};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Core(#[from] parcomm_core::Error),
}

/// One source -> destination status link.
#[derive(Debug, Clone)]
pub struct Link {
    pub src: NodeId,
    pub dst: NodeId,
    pub tx: Transmitter,
    pub rx: Receiver,
    inbox: VecDeque<(u64, Delivery)>,
    phase: u64,
    truth: Vec<f64>,
}

#[derive(Debug)]
struct Smart {
    bank: PolicyBank,
    quantizer: ErrorQuantizer,
    grid: AuxCostGrid,
    adapt: Vec<AdaptationState>,
    adaptive: bool,
    /// Per platoon: count, sum and sum of squares of `distance - d_des`.
    window: Vec<(u64, f64, f64)>,
    collisions: Vec<u64>,
}

pub struct Engine {
    pub cfg: ScenarioConfig,
    pub world: World,
    pub links: Vec<Link>,
    link_of: Vec<Option<usize>>,
    medium: Medium,
    sensing: RngStream,
    link_cfg: LinkConfig,
    smart: Option<Smart>,
    /// Per source: slots from which the next delivered StatusOta is lost
    /// without the sender noticing.
    pending_loss: Vec<VecDeque<u64>>,
    t: u64,
}

fn pick(mask: &[bool], v: &[f64]) -> Vec<f64> {
    v.iter().zip(mask).filter(|(_, m)| **m).map(|(x, _)| *x).collect()
}

impl Engine {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, EngineError> {
        cfg.validate()?;
        let world = World::build(cfg);
        let dim = world.dim;
        let link_cfg = cfg.link_config(dim);
        let mut scenario_rng = RngStream::new(cfg.seed, streams::SCENARIO);
        let mut links = Vec::new();
        let mut link_of = vec![None; world.n_nodes()];
        let n_links: u64 = world.platoons.iter().map(|p| p.followers.len() as u64).sum();
        for p in &world.platoons {
            for &f in &p.followers {
                let lc = LinkConfig { tick_offset: links.len() as u64 * cfg.calib_period / n_links.max(1), ..link_cfg.clone() };
                let init = StatusVector::new(world.status(f), SlotTime::ZERO);
                let model = match (cfg.mode, cfg.initial_model) {
                    (Mode::Parallel, InitialModel::Zero) => LinearModel::zero(link_cfg.mask.clone(), link_cfg.n_input),
                    _ => LinearModel::hold(link_cfg.mask.clone(), link_cfg.n_input),
                };
                link_of[f] = Some(links.len());
                links.push(Link {
                    src: f,
                    dst: p.leader,
                    tx: Transmitter::new(f, p.leader, lc.clone(), init.clone(), model.clone()),
                    rx: Receiver::new(p.leader, f, lc, init, model),
                    inbox: VecDeque::new(),
                    phase: scenario_rng.below(cfg.baseline_interval),
                    truth: Vec::new(),
                });
            }
        }
        let pool = ResourcePool::new(cfg.rri, cfg.subchannels)?;
        let medium = Medium::new(pool, (0..world.n_nodes()).collect(), cfg.p_loss, cfg.ideal_mac, cfg.seed);
        let mut slots = cfg.loss_inject_slots.clone();
        slots.sort_unstable();
        let pending_loss = vec![slots.into_iter().collect::<VecDeque<u64>>(); world.n_nodes()];
        let smart = if cfg.smart && cfg.mode == Mode::Parallel { Some(Self::build_smart(cfg, world.platoons.len())?) } else { None };
        Ok(Engine {
            cfg: cfg.clone(),
            world,
            links,
            link_of,
            medium,
            sensing: RngStream::new(cfg.seed, streams::SENSING),
            link_cfg,
            smart,
            pending_loss,
            t: 0,
        })
    }

    fn build_smart(cfg: &ScenarioConfig, platoons: usize) -> Result<Smart, EngineError> {
        let grid = cfg.grid();
        let mdp = error_chain(cfg.smart_levels, cfg.smart_p_grow);
        let bank = if cfg.smart_bank.is_empty() {
            PolicyBank::build(grid, &mdp)?
        } else {
            PolicyBank::load_or_build(Path::new(&cfg.smart_bank), grid, &mdp)?
        };
        let quantizer = ErrorQuantizer::uniform(cfg.smart_levels, cfg.delta)?;
        let delta = (cfg.smart_delta > 0.0).then_some(cfg.smart_delta);
        let m0 = grid.point(grid.nearest(cfg.m_init));
        Ok(Smart {
            bank,
            quantizer,
            grid,
            adapt: (0..platoons).map(|_| AdaptationState::new(m0, &grid, cfg.eval_int, delta)).collect(),
            adaptive: cfg.smart_adaptive,
            window: vec![(0, 0.0, 0.0); platoons],
            collisions: vec![0; platoons],
        })
    }

    pub fn meta(&self) -> RunMeta {
        RunMeta {
            scenario: toml::Value::try_from(self.cfg.scenario).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default(),
            mode: toml::Value::try_from(self.cfg.mode).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default(),
            seed: self.cfg.seed,
            duration: self.cfg.duration,
            subchannels: self.cfg.subchannels,
            d_des: self.cfg.d_des,
        }
    }

    pub fn now(&self) -> u64 {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.cfg.duration
    }

    pub fn link_config(&self) -> &LinkConfig {
        &self.link_cfg
    }

    pub fn link_from(&self, node: NodeId) -> Option<&Link> {
        self.link_of.get(node).copied().flatten().map(|i| &self.links[i])
    }

    /// Auxiliary cost currently used by `platoon`, when SMART is on.
    pub fn aux_cost(&self, platoon: usize) -> Option<f64> {
        self.smart.as_ref().map(|s| s.adapt[platoon].m)
    }

    /// Replaces the loss injector, e.g. to drop chosen calibrations.
    pub fn set_injector(&mut self, injector: LossInjector) {
        self.medium.set_injector(injector);
    }

    fn enqueue(&mut self, now: u64, pkt: Packet, repeats: usize) {
        for cancelled in self.medium.enqueue(SlotTime(now), pkt, repeats) {
            if cancelled.kind() == PacketKind::ModelCalibration {
                if let Some(i) = self.link_of[cancelled.src] {
                    self.links[i].tx.on_cancelled(&cancelled);
                }
            }
        }
    }

    /// Applies a scheduled injected loss to a delivered StatusOta: the
    /// destination misses it while the sender's feedback still reports
    /// success.
    fn silent_loss(&mut self, r: &mut AttemptReport, t: u64) -> bool {
        let Destination::Node(dst) = r.packet.dst else { return false };
        let q = &mut self.pending_loss[r.packet.src];
        if r.delivered_to(dst) && q.front().is_some_and(|&s| s <= t) {
            q.pop_front();
            for o in r.outcomes.iter_mut().filter(|(n, _)| *n == dst) {
                o.1 = Outcome::ChannelLoss;
            }
            return true;
        }
        false
    }

    /// Runs one slot and hands every trace row to `emit`.
    pub fn step(&mut self, emit: &mut impl FnMut(&TraceRow)) -> Result<(), EngineError> {
        let t = self.t + 1;
        self.t = t;
        let slot = SlotTime(t);
        self.world.step(t);

        // Sensing.
        let mut sensed = Vec::with_capacity(self.links.len());
        for link in &mut self.links {
            let truth = self.world.status(link.src);
            let s = add_sensing_noise(&StatusVector::new(truth.clone(), slot), &self.world.sigmas, &mut self.sensing)?;
            let exo = self.world.exogenous(link.src);
            link.tx.sense(s.clone(), &exo)?;
            link.rx.advance(slot, &exo);
            link.truth = truth;
            sensed.push(s);
        }

        // Source ticks.
        for i in 0..self.links.len() {
            let mut out = Vec::new();
            let link = &mut self.links[i];
            match self.cfg.mode {
                Mode::Parallel => {
                    // A correction carries this slot's status, so it replaces the OTA.
                    let correction = link.tx.correction_tick(slot);
                    if correction.is_none() && link.tx.is_decision_epoch() && link.tx.trigger()? {
                        let gate = match &self.smart {
                            Some(sm) => {
                                let m = sm.adapt[self.world.platoon_of(link.src)].m;
                                smart_tx_gate(&sm.bank, &sm.quantizer, m, link.tx.prediction_error()?)
                            }
                            None => true,
                        };
                        if gate {
                            out.extend(link.tx.status_packet());
                        }
                    }
                    out.extend(link.tx.calibration_tick(slot));
                    out.extend(correction);
                }
                Mode::Baseline => {
                    if (t + link.phase).is_multiple_of(self.cfg.baseline_interval) {
                        out.extend(link.tx.status_packet());
                    }
                }
            }
            for pkt in out {
                self.enqueue(t, pkt, 1);
            }
        }

        // MAC.
        for mut r in self.medium.resolve(slot) {
            let kind = r.packet.kind();
            let silent = kind == PacketKind::StatusOta && self.silent_loss(&mut r, t);
            let interested: Vec<NodeId> = match r.packet.dst {
                Destination::Node(n) => vec![n],
                Destination::Broadcast => self.world.platoons[self.world.platoon_of(r.packet.src)].followers.clone(),
            };
            for &n in &interested {
                let mut row = TraceRow::new(t, Event::Tx, r.packet.src);
                row.peer = Some(n);
                row.kind = Some(kind);
                row.stamp = Some(r.packet.stamp.get());
                row.subframe = Some(r.subframe);
                row.subchannel = Some(r.subchannel);
                row.outcome = r.outcome_at(n);
                emit(&row);
            }
            match kind {
                PacketKind::StatusOta | PacketKind::ModelCalibration | PacketKind::Correction => {
                    let Some(i) = self.link_of[r.packet.src] else { continue };
                    let link = &mut self.links[i];
                    let outcome = r.outcome_at(link.dst);
                    let delivered = outcome == Some(Outcome::Delivered);
                    link.tx.on_tx_outcome(&r.packet, slot, delivered || silent);
                    if delivered {
                        link.inbox.push_back((t + self.cfg.latency, Delivery { packet: r.packet.clone(), air: slot }));
                    }
                    if outcome == Some(Outcome::Collision) {
                        if let Some(sm) = &mut self.smart {
                            sm.collisions[self.world.platoon_of(link.src)] += 1;
                        }
                    }
                }
                PacketKind::ModelConfirmation => {
                    let Destination::Node(f) = r.packet.dst else { continue };
                    let Some(i) = self.link_of[f] else { continue };
                    let delivered = r.delivered_to(f);
                    let link = &mut self.links[i];
                    link.rx.on_tx_outcome(&r.packet, slot, delivered);
                    if delivered {
                        link.tx.on_delivery(&Delivery { packet: r.packet.clone(), air: slot }, slot);
                    }
                }
                PacketKind::Control => {
                    let Payload::Control { commands, .. } = &r.packet.payload else { continue };
                    for (n, cmd) in commands {
                        if r.delivered_to(*n) {
                            self.world.set_command(*n, cmd);
                        }
                    }
                }
            }
        }

        // Destination processing.
        let mut replies = Vec::new();
        for link in &mut self.links {
            while link.inbox.front().is_some_and(|(due, _)| *due <= t) {
                let (_, d) = link.inbox.pop_front().expect("non-empty");
                replies.extend(link.rx.on_delivery(&d, slot));
            }
        }
        for reply in replies {
            self.enqueue(t, reply, self.cfg.confirm_repeats);
        }

        // Control epoch.
        if t.is_multiple_of(self.cfg.control_period) {
            for p in 0..self.world.platoons.len() {
                let platoon = self.world.platoons[p].clone();
                let views: Vec<Vec<f64>> = platoon
                    .followers
                    .iter()
                    .map(|&f| self.links[self.link_of[f].expect("follower link")].rx.control_view().values.clone())
                    .collect();
                let truth = StatusVector::new(self.world.physical(platoon.leader), slot);
                let leader_obs = add_sensing_noise(&truth, &self.world.sigmas, &mut self.sensing)?;
                let commands = self.world.control(p, t, &views, &leader_obs.values);
                let last_calib = platoon
                    .followers
                    .iter()
                    .map(|&f| {
                        let rx = &self.links[self.link_of[f].expect("follower link")].rx;
                        (f, rx.last_calibration().unwrap_or_default())
                    })
                    .collect();
                let pkt = Packet {
                    src: platoon.leader,
                    dst: Destination::Broadcast,
                    stamp: slot,
                    payload: Payload::Control { commands, last_calib },
                };
                self.enqueue(t, pkt, 1);
            }
        }

        // SMART adaptation.
        if let Some(sm) = &mut self.smart {
            for (p, platoon) in self.world.platoons.iter().enumerate() {
                for &f in &platoon.followers {
                    let e = self.world.distance(f).unwrap_or(self.cfg.d_des) - self.cfg.d_des;
                    let w = &mut sm.window[p];
                    w.0 += 1;
                    w.1 += e;
                    w.2 += e * e;
                }
            }
            if t.is_multiple_of(self.cfg.eval_int) {
                for p in 0..sm.adapt.len() {
                    let (n, s, ss) = std::mem::take(&mut sm.window[p]);
                    let mean = s / n.max(1) as f64;
                    let cost = (ss / n.max(1) as f64 - mean * mean).max(0.0).sqrt();
                    let collisions = std::mem::take(&mut sm.collisions[p]);
                    if sm.adaptive {
                        sm.adapt[p].observe_window(cost, collisions, &sm.grid);
                    }
                }
            }
        }

        // Trace.
        for node in 0..self.world.n_nodes() {
            let mut row = TraceRow::new(t, Event::Plant, node);
            row.peer = self.world.front_of(node);
            row.s = self.world.physical(node);
            row.distance = self.world.distance(node);
            emit(&row);
        }
        let mask = &self.link_cfg.mask;
        let g = self.link_cfg.g;
        for (link, s) in self.links.iter().zip(&sensed) {
            let mut row = TraceRow::new(t, Event::State, link.src);
            row.peer = Some(link.dst);
            let truth = pick(mask, &link.truth);
            row.error = Some(g.distance(&truth, &pick(mask, &link.rx.estimate().values)));
            row.noise = Some(g.distance(&truth, &pick(mask, &s.values)));
            row.m = self.smart.as_ref().map(|sm| sm.adapt[self.world.platoon_of(link.src)].m);
            row.s = link.truth.clone();
            row.shat = link.tx.estimate().values.clone();
            row.shatp = link.rx.estimate().values.clone();
            emit(&row);
        }
        Ok(())
    }

    /// Runs to the end of the configured duration.
    pub fn run_to_end(&mut self, emit: &mut impl FnMut(&TraceRow)) -> Result<(), EngineError> {
        while !self.is_done() {
            self.step(emit)?;
        }
        Ok(())
    }
}

/// Runs `cfg` to completion, optionally writing the trace, and returns the
/// summary together with the final engine state.
pub fn run(cfg: &ScenarioConfig, trace: Option<&Path>) -> Result<(RunSummary, Engine), EngineError> {
    let mut engine = Engine::new(cfg)?;
    let mut summary = SummaryBuilder::new(engine.meta());
    let mut writer = match trace {
        Some(p) => Some(TraceWriter::create(p, engine.world.dim)?),
        None => None,
    };
    let mut io_error = None;
    engine.run_to_end(&mut |row: &TraceRow| {
        summary.push(row);
        if let Some(w) = writer.as_mut() {
            if io_error.is_none() {
                if let Err(e) = w.write(row) {
                    io_error = Some(e);
                }
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    Ok((summary.finish(), engine))
}

/// The status-unaware baseline: periodic raw status every `interval` slots.
pub fn run_baseline(cfg: &ScenarioConfig, interval: u64, trace: Option<&Path>) -> Result<(RunSummary, Engine), EngineError> {
    let cfg = ScenarioConfig { mode: Mode::Baseline, baseline_interval: interval, ..cfg.clone() };
    run(&cfg, trace)
}
