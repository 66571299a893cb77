//! Simulation-driven acceptance checks, shared by the `verify` command and
//! the acceptance test target.

use std::collections::BTreeMap;
use std::fmt;

use parcomm_core::mac::Outcome;
use parcomm_core::protocol::{NodeId, Packet, PacketKind, Payload};
use parcomm_core::rng::{streams, RngStream};
use parcomm_core::types::SlotTime;

use parcomm_core::smart::{error_chain, solve_decoupled_mdp, PolicyBank};

use crate::config::{InitialModel, Mode, ScenarioConfig, ScenarioKind};
use crate::engine::{run, Engine, EngineError};
use crate::summary::{RunSummary, SummaryBuilder};
use crate::sweep::{default_threads, run_many};
use crate::trace::{Event, TraceRow};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "criterion {:>2} {verdict} {}: {}", self.id, self.name, self.detail)
    }
}

impl CheckResult {
    fn new(id: u32, name: &'static str, passed: bool, detail: String) -> Self {
        CheckResult { id, name, passed, detail }
    }

    fn error(id: u32, name: &'static str, e: EngineError) -> Self {
        CheckResult::new(id, name, false, format!("engine error: {e}"))
    }
}

/// Runs `cfg` and keeps every trace row.
pub fn collect_rows(cfg: &ScenarioConfig) -> Result<(Vec<TraceRow>, Engine), EngineError> {
    let mut engine = Engine::new(cfg)?;
    let mut rows = Vec::new();
    engine.run_to_end(&mut |r: &TraceRow| rows.push(r.clone()))?;
    Ok((rows, engine))
}

fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn single_link(seed: u64) -> ScenarioConfig {
    ScenarioConfig { seed, ..ScenarioConfig::defaults(ScenarioKind::SingleLink) }
}

// ---------------------------------------------------------------- alignment

/// Lossless, zero-latency single-link runs keep both estimates bitwise equal.
pub fn alignment(runs: u64) -> CheckResult {
    const NAME: &str = "alignment exactness";
    let mut slots = 0u64;
    for i in 0..runs {
        let seed = 1000 + i;
        // Vary the protocol knobs from the seed as well.
        let cfg = ScenarioConfig {
            ideal_mac: true,
            latency: 0,
            delta: [0.05, 0.1, 0.2][(i % 3) as usize],
            calib_period: [50, 100, 250][(i / 3 % 3) as usize],
            n_input: 1 + (i % 2) as usize,
            raw_parabola: i % 5 == 0,
            ..single_link(seed)
        };
        let (rows, _) = match collect_rows(&cfg) {
            Ok(r) => r,
            Err(e) => return CheckResult::error(2, NAME, e),
        };
        for r in rows.iter().filter(|r| r.event == Event::State) {
            slots += 1;
            if !bits_equal(&r.shat, &r.shatp) {
                return CheckResult::new(2, NAME, false, format!("seed {seed}: estimates differ at slot {}", r.slot));
            }
        }
    }
    CheckResult::new(2, NAME, true, format!("{runs} runs, {slots} slots bitwise equal"))
}

// ------------------------------------------------------------ single-link

/// Rates measured on one single-link run.
#[derive(Debug, Clone, Default)]
pub struct TriggerProfile {
    pub pre_epochs: u64,
    pub pre_attempts: u64,
    pub cruise_epochs: u64,
    pub cruise_attempts: u64,
    pub onset_epochs: u64,
    pub onset_attempts: u64,
    /// Deliveries whose anchored estimate did not match the sensed status.
    pub reset_mismatches: u64,
    pub deliveries: u64,
}

impl TriggerProfile {
    fn add(&mut self, o: &TriggerProfile) {
        self.pre_epochs += o.pre_epochs;
        self.pre_attempts += o.pre_attempts;
        self.cruise_epochs += o.cruise_epochs;
        self.cruise_attempts += o.cruise_attempts;
        self.onset_epochs += o.onset_epochs;
        self.onset_attempts += o.onset_attempts;
        self.reset_mismatches += o.reset_mismatches;
        self.deliveries += o.deliveries;
    }

    pub fn cruise_rate(&self) -> f64 {
        self.cruise_attempts as f64 / self.cruise_epochs.max(1) as f64
    }

    pub fn onset_rate(&self) -> f64 {
        self.onset_attempts as f64 / self.onset_epochs.max(1) as f64
    }
}

/// Slot at which the leader starts accelerating in the single-link profile.
pub const ONSET: u64 = 478;
const ONSET_SPAN: u64 = 200;

/// Steps a single-link run and classifies decision epochs by phase.
pub fn trigger_profile(cfg: &ScenarioConfig) -> Result<TriggerProfile, EngineError> {
    let mut engine = Engine::new(cfg)?;
    let g = engine.link_config().g;
    let mask = engine.link_config().mask.clone();
    let pick = |v: &[f64]| -> Vec<f64> { v.iter().zip(&mask).filter(|(_, m)| **m).map(|(x, _)| *x).collect() };

    let mut ota_stamps = std::collections::BTreeSet::new();
    let mut delivered: Vec<(u64, u64)> = Vec::new();
    let mut adoption: Option<u64> = None;
    // Per slot: true status and the sensing-noise error.
    let mut truth: BTreeMap<u64, (Vec<f64>, f64)> = BTreeMap::new();
    let mut out = TriggerProfile::default();

    while !engine.is_done() {
        let mut rows = Vec::new();
        engine.step(&mut |r: &TraceRow| rows.push(r.clone()))?;
        let t = engine.now();
        for r in &rows {
            match (r.event, r.kind) {
                (Event::Tx, Some(PacketKind::StatusOta)) => {
                    ota_stamps.insert(r.stamp.unwrap_or_default());
                    if r.outcome == Some(Outcome::Delivered) {
                        delivered.push((t, r.stamp.unwrap_or_default()));
                    }
                }
                (Event::Tx, Some(PacketKind::ModelConfirmation)) if r.outcome == Some(Outcome::Delivered) => {
                    if adoption.is_none() {
                        adoption = Some(t);
                    }
                }
                (Event::State, _) => {
                    truth.insert(t, (r.s.clone(), r.noise.unwrap_or(f64::NAN)));
                }
                _ => {}
            }
        }
        // Check the anchored estimate for deliveries processed this slot.
        let link = &engine.links[0];
        for &(_, stamp) in delivered.iter().filter(|(air, _)| *air + cfg.latency == t) {
            out.deliveries += 1;
            let Some(est) = link.rx.estimator().estimate_at(SlotTime(stamp)) else {
                continue;
            };
            let Some((s, noise)) = truth.get(&stamp) else { continue };
            let err = g.distance(&pick(s), &pick(&est.values));
            if (err - noise).abs() > 1e-12 {
                out.reset_mismatches += 1;
            }
        }
    }

    let adoption = adoption.unwrap_or(u64::MAX);
    for epoch in (cfg.decision_period..=cfg.duration).step_by(cfg.decision_period as usize) {
        let hit = ota_stamps.contains(&epoch) as u64;
        if epoch < adoption {
            out.pre_epochs += 1;
            out.pre_attempts += hit;
        } else if epoch < ONSET {
            out.cruise_epochs += 1;
            out.cruise_attempts += hit;
        } else if epoch < ONSET + ONSET_SPAN {
            out.onset_epochs += 1;
            out.onset_attempts += hit;
        }
    }
    Ok(out)
}

pub fn trigger_pattern(seeds: u64) -> CheckResult {
    const NAME: &str = "single-link trigger pattern";
    let mut total = TriggerProfile::default();
    let mut pre_all = true;
    for seed in 1..=seeds {
        match trigger_profile(&single_link(seed)) {
            Ok(p) => {
                pre_all &= p.pre_epochs > 0 && p.pre_attempts == p.pre_epochs;
                total.add(&p);
            }
            Err(e) => return CheckResult::error(3, NAME, e),
        }
    }
    let (cruise, onset) = (total.cruise_rate(), total.onset_rate());
    let a = pre_all;
    let b = total.cruise_epochs > 0 && cruise < 0.10;
    let c = total.deliveries > 0 && total.reset_mismatches == 0;
    let d = onset >= 3.0 * cruise && onset > 0.0;
    CheckResult::new(
        3,
        NAME,
        a && b && c && d,
        format!(
            "(a) every pre-calibration epoch {} | (b) cruise rate {:.3} | (c) {} of {} resets off | (d) onset rate {:.3} = {:.1}x cruise",
            if a { "transmits" } else { "NOT all transmit" },
            cruise,
            total.reset_mismatches,
            total.deliveries,
            onset,
            onset / cruise.max(1e-12),
        ),
    )
}

// ------------------------------------------------------------ misalignment

/// A maximal run of slots on which the two estimates differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Divergence {
    pub start: u64,
    pub len: u64,
    /// Still diverged when the run ended.
    pub open: bool,
}

/// Divergence episodes of the link from `src`, from its state rows.
pub fn divergences(rows: &[TraceRow], src: usize) -> Vec<Divergence> {
    let mut out = Vec::new();
    let mut cur: Option<(u64, u64)> = None;
    for r in rows.iter().filter(|r| r.event == Event::State && r.node == src) {
        let diverged = !bits_equal(&r.shat, &r.shatp);
        cur = match (cur, diverged) {
            (None, true) => Some((r.slot, r.slot)),
            (Some((s, _)), true) => Some((s, r.slot)),
            (Some((s, e)), false) => {
                out.push(Divergence { start: s, len: e - s + 1, open: false });
                None
            }
            (None, false) => None,
        };
    }
    if let Some((s, e)) = cur {
        out.push(Divergence { start: s, len: e - s + 1, open: true });
    }
    out
}

const CORRECTION: u64 = 1000;
const RESTORE_LIMIT: u64 = 1000;
const PERSIST_LIMIT: u64 = 2000;

/// Single link without delivery feedback, so the source cannot notice
/// its own losses.
fn misalignment_base(seed: u64, correction: bool) -> ScenarioConfig {
    ScenarioConfig {
        feedback: false,
        ideal_mac: true,
        correction_period: if correction { CORRECTION } else { 0 },
        ..single_link(seed)
    }
}

/// One calibration/confirmation loss pattern on the calibration stamped
/// `target`.
fn pattern_trial(lose_calib: bool, lose_confirm: bool, correction: bool) -> Result<Vec<Divergence>, EngineError> {
    let target = 1000;
    let cfg = ScenarioConfig { calib_period: 1000, duration: 4000, ..misalignment_base(7, correction) };
    let mut engine = Engine::new(&cfg)?;
    engine.set_injector(Box::new(move |pkt: &Packet, _air: SlotTime, _node: NodeId| match &pkt.payload {
        Payload::ModelCalibration { calib_stamp, .. } => lose_calib && calib_stamp.get() == target,
        Payload::ModelConfirmation { calib_stamp } => lose_confirm && calib_stamp.get() == target,
        _ => false,
    }));
    let mut rows = Vec::new();
    engine.run_to_end(&mut |r: &TraceRow| rows.push(r.clone()))?;
    Ok(divergences(&rows, 1))
}

/// Hold model, calibration off: one StatusOTA lost at or after `lose_at`.
fn ota_loss_trial(seed: u64, lose_at: u64, correction: bool) -> Result<Vec<Divergence>, EngineError> {
    let cfg = ScenarioConfig {
        initial_model: InitialModel::Hold,
        calib_period: 1_000_000,
        duration: 12_000,
        loss_inject_slots: vec![lose_at],
        ..misalignment_base(seed, correction)
    };
    let (rows, _) = collect_rows(&cfg)?;
    Ok(divergences(&rows, 1))
}

pub fn misalignment(random_trials: u64) -> CheckResult {
    const NAME: &str = "misalignment countermeasures";
    let mut trials: Vec<Box<dyn Fn(bool) -> Result<Vec<Divergence>, EngineError>>> = Vec::new();
    for (lc, lf) in [(false, false), (true, false), (false, true), (true, true)] {
        trials.push(Box::new(move |c| pattern_trial(lc, lf, c)));
    }
    let mut rng = RngStream::new(4, streams::SCENARIO);
    for k in 0..random_trials {
        let lose_at = 500 + rng.below(8501);
        trials.push(Box::new(move |c| ota_loss_trial(100 + k, lose_at, c)));
    }
    let (mut restored, mut worst_with, mut worst_without, mut diverged_trials) = (0usize, 0u64, 0u64, 0usize);
    for trial in &trials {
        let with = match trial(true) {
            Ok(d) => d,
            Err(e) => return CheckResult::error(4, NAME, e),
        };
        let without = match trial(false) {
            Ok(d) => d,
            Err(e) => return CheckResult::error(4, NAME, e),
        };
        // An episode still open at the end only fails once it is too long.
        let longest = with.iter().map(|d| d.len).max().unwrap_or(0);
        restored += (longest <= RESTORE_LIMIT) as usize;
        worst_with = worst_with.max(longest);
        worst_without = worst_without.max(without.iter().map(|d| d.len).max().unwrap_or(0));
        diverged_trials += (!without.is_empty()) as usize;
    }
    let n = trials.len();
    let passed = restored == n && worst_without > PERSIST_LIMIT;
    CheckResult::new(
        4,
        NAME,
        passed,
        format!(
            "with correction {restored}/{n} trials restored within {RESTORE_LIMIT} (longest {worst_with}); \
             without correction {diverged_trials} trials diverged, longest {worst_without} (need > {PERSIST_LIMIT})"
        ),
    )
}

// ------------------------------------------------------------ multi-platoon

fn multi_platoon(seed: u64) -> ScenarioConfig {
    ScenarioConfig { seed, ..ScenarioConfig::defaults(ScenarioKind::MultiPlatoon) }
}

/// Runs `cfg`, feeding every row to `visit` and to a summary.
fn run_streaming(cfg: &ScenarioConfig, mut visit: impl FnMut(&TraceRow)) -> Result<(RunSummary, Engine), EngineError> {
    let mut engine = Engine::new(cfg)?;
    let mut summary = SummaryBuilder::new(engine.meta());
    engine.run_to_end(&mut |r: &TraceRow| {
        summary.push(r);
        visit(r);
    })?;
    Ok((summary.finish(), engine))
}

/// Running count, sum and sum of squares.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    sum: f64,
    sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sq += x * x;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n.max(1.0)
    }

    fn std(&self) -> f64 {
        (self.sq / self.n.max(1.0) - self.mean().powi(2)).max(0.0).sqrt()
    }
}

pub const BASELINE_INTERVALS: std::ops::RangeInclusive<u64> = 1..=15;

/// Baseline interval sweep; per seed the best interval must be interior.
pub fn baseline_optimum(seeds: u64) -> CheckResult {
    const NAME: &str = "baseline interval optimum";
    let intervals: Vec<u64> = BASELINE_INTERVALS.map(|k| 10 * k).collect();
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in 1..=seeds {
        let configs: Vec<ScenarioConfig> = intervals
            .iter()
            .map(|&i| ScenarioConfig { mode: Mode::Baseline, baseline_interval: i, ..multi_platoon(seed) })
            .collect();
        let summaries = match run_many(&configs, default_threads()) {
            Ok(s) => s,
            Err(e) => return CheckResult::error(5, NAME, e),
        };
        let curve: Vec<f64> = summaries.iter().map(|s| s.min_safe_distance).collect();
        let (best, best_v) = curve
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
        let opt = intervals[best];
        let interior = (20..=70).contains(&opt) && curve[0] > best_v && curve[curve.len() - 1] > best_v;
        ok &= interior;
        lines.push(format!("seed {seed} optimum {opt} ms ({best_v:.3} m; 10 ms {:.3}, 150 ms {:.3})", curve[0], curve[curve.len() - 1]));
    }
    CheckResult::new(5, NAME, ok, lines.join("; "))
}

const BIAS_LOSS_SLOT: u64 = 10_000;
const BIAS_SPAN: u64 = 5000;

/// Largest per-follower mean of `distance - d_des` over the slots after an
/// injected loss.
fn post_loss_bias(cfg: &ScenarioConfig) -> Result<f64, EngineError> {
    let mut per: BTreeMap<usize, Moments> = BTreeMap::new();
    let (lo, hi) = (BIAS_LOSS_SLOT, BIAS_LOSS_SLOT + BIAS_SPAN);
    run_streaming(cfg, |r| {
        if r.event == Event::Plant && (lo..hi).contains(&r.slot) {
            if let Some(d) = r.distance {
                per.entry(r.node).or_default().push(d - cfg.d_des);
            }
        }
    })?;
    Ok(per.values().map(Moments::mean).fold(f64::NEG_INFINITY, f64::max))
}

pub fn parallel_vs_baseline(seeds: u64) -> CheckResult {
    const NAME: &str = "parallel vs baseline";
    let mut lines = Vec::new();
    let (mut a, mut b) = (true, true);
    for seed in 1..=seeds {
        let par = run_streaming(&multi_platoon(seed), |_| {});
        let base = run_streaming(&ScenarioConfig { mode: Mode::Baseline, baseline_interval: 40, ..multi_platoon(seed) }, |_| {});
        let (par, base) = match (par, base) {
            (Ok(p), Ok(b)) => (p.0, b.0),
            (Err(e), _) | (_, Err(e)) => return CheckResult::error(6, NAME, e),
        };
        let ratio = par.total_ota() as f64 / base.total_ota().max(1) as f64;
        a &= ratio <= 0.5;
        b &= par.distance_std <= 1.1 * base.distance_std;
        lines.push(format!(
            "seed {seed}: OTA {} vs {} ({:.0}% fewer), std {:.4} vs {:.4}",
            par.total_ota(),
            base.total_ota(),
            100.0 * (1.0 - ratio),
            par.distance_std,
            base.distance_std
        ));
    }
    // Silent loss with and without correction packets.
    let lossy = |correction| ScenarioConfig { correction_period: correction, loss_inject_slots: vec![BIAS_LOSS_SLOT], ..multi_platoon(1) };
    let (with, without) = match (post_loss_bias(&lossy(500)), post_loss_bias(&lossy(0))) {
        (Ok(w), Ok(wo)) => (w, wo),
        (Err(e), _) | (_, Err(e)) => return CheckResult::error(6, NAME, e),
    };
    let c = without > 0.05 && without > 3.0 * with.max(0.0);
    lines.push(format!("post-loss gap bias {without:.3} m without correction vs {with:.3} m with"));
    CheckResult::new(6, NAME, a && b && c, lines.join("; "))
}

// ---------------------------------------------------------------- SMART

/// Mean over platoons of the distance-deviation std in the last
/// evaluation window.
fn final_window_cost(cfg: &ScenarioConfig) -> Result<f64, EngineError> {
    let engine = Engine::new(cfg)?;
    let platoon_of: Vec<Option<usize>> = (0..engine.world.n_nodes())
        .map(|n| (!engine.world.is_leader(n)).then(|| engine.world.platoon_of(n)))
        .collect();
    drop(engine);
    let from = cfg.duration.saturating_sub(cfg.eval_int);
    let mut per = vec![Moments::default(); cfg.platoons];
    run_streaming(cfg, |r| {
        if r.event == Event::Plant && r.slot > from {
            if let (Some(p), Some(d)) = (platoon_of[r.node], r.distance) {
                per[p].push(d - cfg.d_des);
            }
        }
    })?;
    Ok(per.iter().map(Moments::std).sum::<f64>() / cfg.platoons as f64)
}

pub fn smart_adaptation(platoon_counts: &[usize]) -> CheckResult {
    const NAME: &str = "SMART adaptation";
    let mut lines = Vec::new();
    let mut ok = true;
    for &platoons in platoon_counts {
        let base = ScenarioConfig { platoons, smart: true, ..multi_platoon(1) };
        let grid = base.grid();
        let starts = [base.m_min, grid.point(grid.nearest((base.m_min + base.m_max) / 2.0)), base.m_max];
        let mut adaptive = Vec::new();
        for &m in &starts {
            match final_window_cost(&ScenarioConfig { m_init: m, smart_adaptive: true, ..base.clone() }) {
                Ok(c) => adaptive.push(c),
                Err(e) => return CheckResult::error(7, NAME, e),
            }
        }
        let mut worst_fixed = f64::NEG_INFINITY;
        for m in grid.points() {
            match final_window_cost(&ScenarioConfig { m_init: m, smart_adaptive: false, ..base.clone() }) {
                Ok(c) => worst_fixed = worst_fixed.max(c),
                Err(e) => return CheckResult::error(7, NAME, e),
            }
        }
        let lo = adaptive.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = adaptive.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let agree = hi <= 1.2 * lo;
        let beat = adaptive.iter().all(|&c| c <= 0.8 * worst_fixed);
        ok &= agree && beat;
        lines.push(format!(
            "{platoons} platoons: adaptive {} vs worst fixed {worst_fixed:.2e}",
            adaptive.iter().map(|c| format!("{c:.2e}")).collect::<Vec<_>>().join("/")
        ));
    }
    CheckResult::new(7, NAME, ok, lines.join("; "))
}

/// Bellman residuals of the banked policies and monotonicity of the
/// transmit sets in the auxiliary cost.
pub fn bank_residuals() -> CheckResult {
    const NAME: &str = "Bellman residuals";
    let cfg = ScenarioConfig::defaults(ScenarioKind::MultiPlatoon);
    let grid = cfg.grid();
    let mdp = error_chain(cfg.smart_levels, cfg.smart_p_grow);
    let bank = match PolicyBank::build(grid, &mdp) {
        Ok(b) => b,
        Err(e) => return CheckResult::error(10, NAME, e.into()),
    };
    let worst = bank.entries.iter().map(|e| mdp.residual(e.m, &e.solution.f)).fold(0.0, f64::max);
    let chain = error_chain(5, cfg.smart_p_grow);
    let sets: Vec<Vec<bool>> = match grid.points().map(|m| solve_decoupled_mdp(&chain, m)).collect::<Result<Vec<_>, _>>() {
        Ok(sols) => sols.iter().map(|s| (0..5).map(|x| s.transmits(x)).collect()).collect(),
        Err(e) => return CheckResult::error(10, NAME, e.into()),
    };
    // A larger cost can only shrink the set of transmitting states.
    let monotone = sets.windows(2).all(|w| w[1].iter().zip(&w[0]).all(|(hi, lo)| !*hi || *lo));
    CheckResult::new(
        10,
        NAME,
        worst <= 1e-6 && monotone,
        format!("{} policies, worst span residual {worst:.2e}; monotone over {} grid pairs: {monotone}", bank.entries.len(), sets.len() - 1),
    )
}

// ------------------------------------------------------------ determinism

/// Writes the trace of `cfg` twice and compares the files byte for byte.
pub fn determinism(configs: &[ScenarioConfig]) -> CheckResult {
    const NAME: &str = "determinism";
    let dir = std::env::temp_dir().join(format!("parcomm-determinism-{}", std::process::id()));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return CheckResult::new(11, NAME, false, format!("cannot create {}: {e}", dir.display()));
    }
    let mut bytes = 0usize;
    let mut ok = true;
    for (i, cfg) in configs.iter().enumerate() {
        let mut files = Vec::new();
        for rep in 0..2 {
            let path = dir.join(format!("trace-{i}-{rep}.csv"));
            if let Err(e) = run(cfg, Some(&path)) {
                return CheckResult::error(11, NAME, e);
            }
            files.push(std::fs::read(&path).unwrap_or_default());
        }
        bytes += files[0].len();
        ok &= !files[0].is_empty() && files[0] == files[1];
    }
    let _ = std::fs::remove_dir_all(&dir);
    CheckResult::new(11, NAME, ok, format!("{} configurations, {bytes} trace bytes, identical: {ok}", configs.len()))
}

/// Short runs covering every scenario kind and both SMART and baseline.
pub fn determinism_configs() -> Vec<ScenarioConfig> {
    let short = |kind, duration| ScenarioConfig { duration, ..ScenarioConfig::defaults(kind) };
    vec![
        short(ScenarioKind::SingleLink, 3000),
        short(ScenarioKind::Platoon, 3000),
        ScenarioConfig { smart: true, p_loss: 0.05, ..short(ScenarioKind::MultiPlatoon, 3000) },
        ScenarioConfig { mode: Mode::Baseline, ..short(ScenarioKind::MultiPlatoon, 2000) },
        short(ScenarioKind::Uav, 2000),
    ]
}

/// Every check the library can run on its own, in criterion order.
pub fn run_all(quick: bool) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(alignment(if quick { 10 } else { 50 }));
    out.push(trigger_pattern(if quick { 3 } else { 10 }));
    out.push(misalignment(100));
    out.push(baseline_optimum(if quick { 1 } else { 5 }));
    out.push(parallel_vs_baseline(if quick { 1 } else { 3 }));
    out.push(smart_adaptation(if quick { &[2] } else { &[2, 3] }));
    out.push(bank_residuals());
    out.push(determinism(&determinism_configs()));
    out
}
