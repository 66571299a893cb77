//! Online auxiliary-cost adaptation.

use super::bank::AuxCostGrid;

pub const DEFAULT_EVAL_INT: u64 = 1000;
pub const DEFAULT_DELTA_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationState {
    pub m: f64,
    pub cost_prev: Option<f64>,
    pub eval_int: u64,
    /// Cost-change threshold; `None` means "5% of the first window".
    pub delta: Option<f64>,
    pub collisions_prev: Option<u64>,
}

impl AdaptationState {
    pub fn new(m: f64, grid: &AuxCostGrid, eval_int: u64, delta: Option<f64>) -> Self {
        AdaptationState {
            m: grid.point(grid.nearest(m)),
            cost_prev: None,
            eval_int: eval_int.max(1),
            delta,
            collisions_prev: None,
        }
    }

    /// Feeds one evaluation window. The first window only initialises the
    /// reference cost, the default threshold and the collision count.
    pub fn observe_window(&mut self, window_cost: f64, collisions: u64, grid: &AuxCostGrid) -> f64 {
        let increased = self.collisions_prev.is_some_and(|prev| collisions > prev);
        self.collisions_prev = Some(collisions);
        if self.cost_prev.is_none() {
            if self.delta.is_none() {
                self.delta = Some(DEFAULT_DELTA_FRACTION * window_cost.abs());
            }
            self.cost_prev = Some(window_cost);
            return self.m;
        }
        adapt_cost(self, window_cost, increased, grid)
    }
}

/// One adaptation step. Moves `m` one grid step up when the cost rose by
/// more than δ together with collisions, keeps it when the cost moved less
/// than δ, and otherwise moves it one step down.
pub fn adapt_cost(state: &mut AdaptationState, window_cost: f64, collisions_increased: bool, grid: &AuxCostGrid) -> f64 {
    let delta = state.delta.unwrap_or(0.0);
    let k = grid.nearest(state.m);
    let last = grid.len() - 1;
    let k = match state.cost_prev {
        Some(prev) => {
            let change = window_cost - prev;
            if change > delta && collisions_increased {
                (k + 1).min(last)
            } else if change.abs() < delta {
                k
            } else {
                k.saturating_sub(1)
            }
        }
        None => k,
    };
    state.m = grid.point(k);
    state.cost_prev = Some(window_cost);
    state.m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> AuxCostGrid {
        AuxCostGrid::new(0.0, 0.5, 2.0).unwrap()
    }

    fn state(m: f64) -> AdaptationState {
        let mut s = AdaptationState::new(m, &grid(), 1000, Some(1.0));
        s.cost_prev = Some(10.0);
        s
    }

    #[test]
    fn clamps_at_top() {
        let mut s = state(2.0);
        assert_eq!(adapt_cost(&mut s, 12.0, true, &grid()), 2.0);
    }

    #[test]
    fn small_change_keeps_m() {
        let mut s = state(1.0);
        assert_eq!(adapt_cost(&mut s, 10.5, true, &grid()), 1.0);
        assert_eq!(s.cost_prev, Some(10.5));
    }

    #[test]
    fn improvement_clamps_at_bottom() {
        let mut s = state(0.0);
        assert_eq!(adapt_cost(&mut s, 8.0, false, &grid()), 0.0);
    }

    #[test]
    fn rise_without_collisions_steps_down() {
        let mut s = state(1.0);
        assert_eq!(adapt_cost(&mut s, 12.0, false, &grid()), 0.5);
    }

    #[test]
    fn first_window_sets_default_delta() {
        let mut s = AdaptationState::new(1.0, &grid(), 1000, None);
        assert_eq!(s.observe_window(40.0, 3, &grid()), 1.0);
        assert_eq!(s.delta, Some(2.0));
        assert_eq!(s.observe_window(45.0, 5, &grid()), 1.5);
    }
}
