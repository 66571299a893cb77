//! Whittle-style indices derived from the decoupled MDP.

use super::mdp::{solve_decoupled_mdp, DecoupledMdp};
use crate::error::Result;

/// Smallest auxiliary cost in `[lo, hi]` at which `state` stops
/// transmitting, found by bisection to `tol`. Returns `hi` when the state
/// still transmits at `hi`.
pub fn whittle_index(mdp: &DecoupledMdp, state: usize, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if solve_decoupled_mdp(mdp, hi)?.transmits(state) {
        return Ok(hi);
    }
    if !solve_decoupled_mdp(mdp, lo)?.transmits(state) {
        return Ok(lo);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if solve_decoupled_mdp(mdp, mid)?.transmits(state) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

pub fn whittle_indices(mdp: &DecoupledMdp, lo: f64, hi: f64, tol: f64) -> Result<Vec<f64>> {
    (0..mdp.n_states()).map(|s| whittle_index(mdp, s, lo, hi, tol)).collect()
}

/// Index of the largest value; ties go to the lowest index.
pub fn largest_index(indices: &[f64]) -> Option<usize> {
    indices
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}
