//! Average-cost decoupled MDP for one source with a per-transmission
//! auxiliary cost `m`, solved by relative value iteration.

use crate::error::{invalid, Error, Result};

pub const SOLVE_TOLERANCE: f64 = 1e-8;
pub const MAX_SWEEPS: usize = 100_000;

/// Aperiodicity transform weight; keeps relative value iteration convergent
/// on periodic chains without changing the optimal policy.
const APERIODICITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Silent,
    Transmit,
}

/// Per-state costs and transition matrices for both actions.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledMdp {
    pub cost_silent: Vec<f64>,
    pub cost_transmit: Vec<f64>,
    pub p_silent: Vec<Vec<f64>>,
    pub p_transmit: Vec<Vec<f64>>,
}

impl DecoupledMdp {
    pub fn n_states(&self) -> usize {
        self.cost_silent.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_states();
        if n == 0 {
            return Err(invalid("empty state space"));
        }
        if self.cost_transmit.len() != n || self.p_silent.len() != n || self.p_transmit.len() != n {
            return Err(invalid("inconsistent state-space sizes"));
        }
        if self.cost_silent.iter().chain(&self.cost_transmit).any(|c| !c.is_finite()) {
            return Err(invalid("non-finite cost"));
        }
        for (name, p) in [("silent", &self.p_silent), ("transmit", &self.p_transmit)] {
            for (s, row) in p.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.len() != n || row.iter().any(|x| !(*x >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!("{name} transition row {s} is not stochastic")));
                }
            }
        }
        Ok(())
    }

    /// `(Q_silent, Q_transmit)` at state `s` for relative values `h`.
    pub fn q_values(&self, s: usize, m: f64, h: &[f64]) -> (f64, f64) {
        let dot = |row: &[f64]| row.iter().zip(h).map(|(p, v)| p * v).sum::<f64>();
        let q0 = self.cost_silent[s] + dot(&self.p_silent[s]);
        let q1 = m + self.cost_transmit[s] + dot(&self.p_transmit[s]);
        (q0, q1)
    }

    /// Bellman operator; returns `(Th, policy)`.
    pub fn bellman(&self, m: f64, h: &[f64]) -> (Vec<f64>, Vec<Action>) {
        (0..self.n_states())
            .map(|s| {
                let (q0, q1) = self.q_values(s, m, h);
                if prefers_transmit(q0, q1) {
                    (q1, Action::Transmit)
                } else {
                    (q0, Action::Silent)
                }
            })
            .unzip()
    }

    /// Span seminorm of `Th - h`.
    pub fn residual(&self, m: f64, h: &[f64]) -> f64 {
        let (th, _) = self.bellman(m, h);
        span(th.iter().zip(h).map(|(a, b)| a - b))
    }
}

/// Ties (within rounding) go to silent.
fn prefers_transmit(q_silent: f64, q_transmit: f64) -> bool {
    q_transmit < q_silent - 1e-9 * (1.0 + q_silent.abs())
}

fn span(it: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    hi - lo
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpSolution {
    pub policy: Vec<Action>,
    /// Relative cost-to-go, normalised to 0 at state 0.
    pub f: Vec<f64>,
    /// Optimal average cost per step.
    pub avg_cost: f64,
    pub sweeps: usize,
    pub residual: f64,
}

impl MdpSolution {
    pub fn transmits(&self, s: usize) -> bool {
        self.policy[s] == Action::Transmit
    }
}

/// Solves `f(x) + J = min{E0 + P0 f, m + E1 + P1 f}`.
pub fn solve_decoupled_mdp(mdp: &DecoupledMdp, m: f64) -> Result<MdpSolution> {
    mdp.validate()?;
    if !m.is_finite() {
        return Err(invalid("auxiliary cost must be finite"));
    }
    let n = mdp.n_states();
    let tau = APERIODICITY;
    let mut h = vec![0.0; n];
    for sweep in 1..=MAX_SWEEPS {
        let (th, _) = mdp.bellman(m, &h);
        let diff_span = span(th.iter().zip(&h).map(|(a, b)| a - b));
        // Damped step of the transformed chain, renormalised at state 0.
        let next: Vec<f64> = th.iter().zip(&h).map(|(t, v)| (1.0 - tau) * v + tau * t).collect();
        let r = next[0];
        h = next.into_iter().map(|v| v - r).collect();
        if diff_span < SOLVE_TOLERANCE {
            let (th, policy) = mdp.bellman(m, &h);
            let d: Vec<f64> = th.iter().zip(&h).map(|(a, b)| a - b).collect();
            let (lo, hi) = d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
            return Ok(MdpSolution {
                policy,
                f: h,
                avg_cost: 0.5 * (lo + hi),
                sweeps: sweep,
                residual: hi - lo,
            });
        }
    }
    Err(Error::NotConverged { sweeps: MAX_SWEEPS, span: mdp.residual(m, &h) })
}

/// Error chain of `n` levels: silent steps grow the error by one level with
/// probability `p_grow` (capped at the top); a transmission restarts the
/// step from level 0. Cost per step is the level index.
pub fn error_chain(n: usize, p_grow: f64) -> DecoupledMdp {
    let silent_row = |s: usize| {
        let mut row = vec![0.0; n];
        if s + 1 < n {
            row[s] += 1.0 - p_grow;
            row[s + 1] += p_grow;
        } else {
            row[s] = 1.0;
        }
        row
    };
    let p_silent: Vec<Vec<f64>> = (0..n).map(silent_row).collect();
    let p_transmit = vec![p_silent[0].clone(); n];
    let cost: Vec<f64> = (0..n).map(|s| s as f64).collect();
    DecoupledMdp { cost_silent: cost.clone(), cost_transmit: cost, p_silent, p_transmit }
}
