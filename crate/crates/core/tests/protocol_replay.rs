use std::sync::{Arc, Mutex};

use parcomm_core::mac::{Medium, ResourcePool};
use parcomm_core::predictor::LinearModel;
use parcomm_core::protocol::{Delivery, LinkConfig, Packet, PacketKind, Receiver, Transmitter};
use parcomm_core::rng::RngStream;
use parcomm_core::types::{status_error, ErrorMeasure, SlotTime, StatusVector};
use proptest::prelude::*;

const SRC: usize = 0;
const DST: usize = 1;

/// Smooth reference trajectory `[d, v, a]` with optional sensing noise.
fn truth(t: u64) -> [f64; 3] {
    let w = 2.0 * std::f64::consts::PI / 5000.0;
    let x = w * t as f64 * 1e-3 * 1e3;
    [10.0 + 2.0 * x.sin(), 2.0 * w * 1e3 * x.cos(), -2.0 * (w * 1e3).powi(2) * x.sin()]
}

type Script = Arc<Mutex<dyn FnMut(&Packet, SlotTime) -> bool + Send>>;

struct Run {
    cfg: LinkConfig,
    rri: u64,
    tau: u64,
    sigma: f64,
    slots: u64,
    initial_model: LinearModel,
    lose: Option<Script>,
    seed: u64,
}

impl Run {
    fn new(cfg: LinkConfig) -> Self {
        let initial_model = LinearModel::zero(cfg.mask.clone(), cfg.n_input);
        Run { cfg, rri: 1, tau: 0, sigma: 0.0, slots: 3000, initial_model, lose: None, seed: 5 }
    }
}

#[derive(Default)]
struct Outcome {
    /// End-of-slot `(ŝ, ŝ')`.
    ends: Vec<(Vec<f64>, Vec<f64>)>,
    /// End-of-slot model versions `(source, destination)`.
    versions: Vec<(u64, u64)>,
    /// Final replayed logs of both ends.
    src_log: Vec<Vec<f64>>,
    dst_log: Vec<Vec<f64>>,
    /// Air slots of delivered status-carrying packets with their stamps.
    delivered: Vec<(u64, u64, PacketKind)>,
    ota_attempts: usize,
    sensed: Vec<Vec<f64>>,
    errors_at_epochs: Vec<(u64, f64, bool)>,
}

fn simulate(run: Run) -> Outcome {
    let cfg = run.cfg.clone();
    let init = StatusVector::new(truth(0).to_vec(), SlotTime(0));
    let mut tx = Transmitter::new(SRC, DST, cfg.clone(), init.clone(), run.initial_model.clone());
    let mut rx = Receiver::new(DST, SRC, cfg.clone(), init, run.initial_model.clone());
    let mut medium = Medium::new(ResourcePool::new(run.rri, 4).unwrap(), vec![SRC, DST], 0.0, true, run.seed);
    if let Some(script) = run.lose.clone() {
        medium.set_injector(Box::new(move |p, air, node| node == p.dst_node() && (script.lock().unwrap())(p, air)));
    }
    let mut noise = RngStream::new(run.seed, 1);
    let mut inbox: Vec<(SlotTime, Delivery)> = Vec::new();
    let mut out = Outcome::default();
    let mut last_ota: Option<u64> = None;

    for t in 1..=run.slots {
        let now = SlotTime(t);
        let x = truth(t);
        let sensed = vec![x[0] + run.sigma * noise.standard_normal(), x[1] + run.sigma * noise.standard_normal(), x[2]];
        let exo = [x[2]];
        tx.sense(StatusVector::new(sensed.clone(), now), &exo).unwrap();
        rx.advance(now, &exo);
        out.sensed.push(sensed);

        for r in medium.resolve(now) {
            let d = Delivery { packet: r.packet.clone(), air: now };
            if r.packet.src == SRC {
                let ok = r.delivered_to(DST);
                tx.on_tx_outcome(&r.packet, now, ok);
                if ok {
                    if let Some(s) = r.packet.status() {
                        out.delivered.push((t, s.stamp.get(), r.packet.kind()));
                    }
                    inbox.push((now + run.tau, d));
                }
            } else {
                let ok = r.delivered_to(SRC);
                rx.on_tx_outcome(&r.packet, now, ok);
                if ok {
                    tx.on_delivery(&d, now);
                }
            }
        }
        let (due, keep): (Vec<_>, Vec<_>) = inbox.drain(..).partition(|(at, _)| *at <= now);
        inbox = keep;
        for (_, d) in due {
            if let Some(reply) = rx.on_delivery(&d, now) {
                medium.enqueue(now, reply, cfg.confirm_repeats);
            }
        }

        if tx.is_decision_epoch() {
            let e = tx.prediction_error().unwrap();
            let fire = tx.trigger().unwrap();
            out.errors_at_epochs.push((t, e, fire));
            if fire && last_ota != Some(t) {
                medium.enqueue(now, tx.status_packet().unwrap(), 1);
                out.ota_attempts += 1;
                last_ota = Some(t);
            }
        }
        if let Some(p) = tx.calibration_tick(now) {
            for c in medium.enqueue(now, p, 1) {
                tx.on_cancelled(&c);
            }
        }
        if let Some(p) = tx.correction_tick(now) {
            medium.enqueue(now, p, 1);
        }
        out.ends.push((tx.estimate().values.clone(), rx.estimate().values.clone()));
        out.versions.push((tx.estimator().model().version().get(), rx.estimator().model().version().get()));
    }
    for t in 1..=run.slots {
        if let (Some(a), Some(b)) = (tx.estimator().estimate_at(SlotTime(t)), rx.estimator().estimate_at(SlotTime(t))) {
            out.src_log.push(a.values.clone());
            out.dst_log.push(b.values.clone());
        }
    }
    out
}

trait DstNode {
    fn dst_node(&self) -> usize;
}

impl DstNode for Packet {
    fn dst_node(&self) -> usize {
        match self.dst {
            parcomm_core::protocol::Destination::Node(n) => n,
            parcomm_core::protocol::Destination::Broadcast => usize::MAX,
        }
    }
}

fn script(f: impl FnMut(&Packet, SlotTime) -> bool + Send + 'static) -> Option<Script> {
    Some(Arc::new(Mutex::new(f)))
}

fn aligned(out: &Outcome, from: usize) -> bool {
    out.ends[from..].iter().all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()))
}

#[test]
fn lossless_link_stays_bitwise_aligned() {
    let mut run = Run::new(LinkConfig::default());
    run.sigma = 0.01;
    let out = simulate(run);
    assert!(aligned(&out, 0));
    assert!(out.versions.iter().all(|(a, b)| a == b));
    assert!(out.versions.last().unwrap().0 > 0, "a calibrated model must be adopted");
}

#[test]
fn random_mac_delay_keeps_alignment() {
    let mut run = Run::new(LinkConfig::default());
    run.rri = 10;
    run.sigma = 0.01;
    let out = simulate(run);
    assert!(aligned(&out, 0));
    assert!(out.versions.last().unwrap().0 > 0);
}

#[test]
fn calibration_confirmation_loss_patterns() {
    for (lose_calib, lose_conf) in [(false, false), (true, false), (false, true), (true, true)] {
        let mut run = Run::new(LinkConfig::default());
        run.sigma = 0.01;
        run.lose = script(move |p, _| match p.kind() {
            PacketKind::ModelCalibration => lose_calib && p.stamp == SlotTime(500),
            PacketKind::ModelConfirmation => lose_conf && p.stamp.get() / 100 == 5,
            _ => false,
        });
        let out = simulate(run);
        assert!(out.versions.iter().all(|(a, b)| a == b), "pattern {lose_calib}/{lose_conf}");
        assert!(aligned(&out, 0));
        let v = out.versions[549].0;
        if lose_calib || lose_conf {
            assert_eq!(v, 400, "pattern {lose_calib}/{lose_conf}: old model kept");
        } else {
            assert_eq!(v, 500);
        }
        assert!(out.versions.last().unwrap().0 >= 2900);
    }
}

#[test]
fn without_feedback_lost_ota_diverges_until_next_delivery() {
    let mut cfg = LinkConfig::default();
    cfg.feedback = false;
    cfg.correction_period = None;
    cfg.calib_period = 1_000_000;
    let mut run = Run::new(cfg);
    run.initial_model = LinearModel::hold(run.cfg.mask.clone(), 1);
    run.slots = 1500;
    let lost = Arc::new(Mutex::new(None));
    let lost_w = lost.clone();
    run.lose = script(move |p, _| {
        let mut l = lost_w.lock().unwrap();
        if p.kind() == PacketKind::StatusOta && p.stamp.get() > 400 && l.is_none() {
            *l = Some(p.stamp.get());
            return true;
        }
        false
    });
    let out = simulate(run);
    let lost = lost.lock().unwrap().expect("an OTA was lost");
    let next = out.delivered.iter().find(|(_, stamp, _)| *stamp > lost).map(|(air, _, _)| *air).expect("later delivery");
    for t in lost + 1..next {
        let (a, b) = &out.ends[t as usize - 1];
        assert_ne!(a, b, "slot {t} should be misaligned");
    }
    assert!(aligned(&out, next as usize - 1));
}

fn misalignment_after_loss(correction: Option<u64>) -> (u64, u64) {
    let mut cfg = LinkConfig::default();
    cfg.feedback = false;
    cfg.correction_period = correction;
    cfg.calib_period = 1_000_000;
    cfg.delta = 0.5;
    let mut run = Run::new(cfg);
    run.initial_model = LinearModel::hold(run.cfg.mask.clone(), 1);
    run.slots = 4000;
    let lost = Arc::new(Mutex::new(None));
    let lost_w = lost.clone();
    run.lose = script(move |p, _| {
        let mut l = lost_w.lock().unwrap();
        if p.kind() == PacketKind::StatusOta && p.stamp.get() > 1100 && l.is_none() {
            *l = Some(p.stamp.get());
            return true;
        }
        false
    });
    let out = simulate(run);
    let lost = lost.lock().unwrap().expect("an OTA was lost");
    let back = (lost + 1..=4000).find(|t| {
        let (a, b) = &out.ends[*t as usize - 1];
        a == b
    });
    (lost, back.expect("realigned"))
}

#[test]
fn correction_bounds_misalignment() {
    let (lost, back) = misalignment_after_loss(Some(1000));
    assert!(back - lost <= 1000, "misaligned for {} slots", back - lost);
    assert!(back > lost);
}

#[test]
fn timestamp_alignment_replays_latency() {
    let base = {
        let mut run = Run::new(LinkConfig::default());
        run.sigma = 0.01;
        simulate(run)
    };
    let delayed = {
        let mut run = Run::new(LinkConfig::default());
        run.sigma = 0.01;
        run.tau = 3;
        simulate(run)
    };
    assert_eq!(base.dst_log.len(), delayed.dst_log.len());
    for (a, b) in base.dst_log.iter().zip(&delayed.dst_log).take(2990) {
        assert_eq!(a, b);
    }
    assert_eq!(delayed.src_log[..2990], delayed.dst_log[..2990]);
}

#[test]
fn latency_without_timestamps_diverges() {
    let mut cfg = LinkConfig::default();
    cfg.timestamping = false;
    let mut run = Run::new(cfg);
    run.sigma = 0.01;
    run.tau = 3;
    let out = simulate(run);
    let diverged = out.src_log.iter().zip(&out.dst_log).skip(1000).filter(|(a, b)| a != b).count();
    assert!(diverged > 1000, "only {diverged} slots diverged");
}

#[test]
fn superseded_calibration_converges_to_latest() {
    let mut cfg = LinkConfig::default();
    cfg.calib_period = 20;
    cfg.confirm_timeout = 10;
    let mut run = Run::new(cfg);
    run.rri = 10;
    run.slots = 400;
    run.lose = script(|p, _| p.kind() == PacketKind::ModelConfirmation && p.stamp.get() < 200 && p.stamp.get() % 40 < 20);
    let out = simulate(run);
    assert!(out.versions.iter().all(|(a, b)| a == b));
    assert!(aligned(&out, 0));
    assert!(out.versions.last().unwrap().0 >= 360);
}

#[test]
fn trigger_contract_and_reset() {
    let mut run = Run::new(LinkConfig::default());
    run.slots = 2000;
    let out = simulate(run);
    for (_, e, fired) in &out.errors_at_epochs {
        assert!(*e <= 0.1 || *fired);
    }
    for (_, stamp, kind) in &out.delivered {
        if *kind == PacketKind::StatusOta {
            let s = StatusVector::new(out.sensed[*stamp as usize - 1].clone(), SlotTime(*stamp));
            let e = StatusVector::new(out.dst_log[*stamp as usize - 1].clone(), SlotTime(*stamp));
            assert_eq!(status_error(&s, &e, ErrorMeasure::L1).unwrap(), 0.0);
        }
    }
}

#[test]
fn larger_threshold_sends_fewer_statuses() {
    let mut prev = usize::MAX;
    for delta in [0.02, 0.05, 0.1, 0.2, 0.4] {
        let mut cfg = LinkConfig::default();
        cfg.delta = delta;
        let mut run = Run::new(cfg);
        run.sigma = 0.01;
        let n = simulate(run).ota_attempts;
        assert!(n <= prev, "delta {delta}: {n} > {prev}");
        prev = n;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn handshake_never_splits_models(seed in any::<u64>(), p in 0.05f64..0.6, feedback in any::<bool>()) {
        let mut cfg = LinkConfig::default();
        cfg.feedback = feedback;
        let bound = cfg.confirm_timeout + cfg.correction_period.unwrap();
        let mut run = Run::new(cfg);
        run.sigma = 0.01;
        run.rri = 10;
        run.slots = 2500;
        run.seed = seed;
        let mut rng = RngStream::new(seed, 77);
        run.lose = script(move |_, _| rng.bernoulli(p));
        let out = simulate(run);
        if feedback {
            prop_assert!(out.versions.iter().all(|(a, b)| a == b));
            prop_assert!(aligned(&out, 0));
        } else {
            let mut split = 0u64;
            for (a, b) in &out.versions {
                split = if a == b { 0 } else { split + 1 };
                prop_assert!(split <= bound);
            }
        }
    }
}
