//! Longitudinal vehicle and 3-axis UAV kinematics, the CACC law and the
//! leader acceleration profiles.

/// Integration step, seconds.
pub const DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub length: f64,
}

impl VehicleState {
    pub fn new(position: f64, velocity: f64) -> Self {
        Self { position, velocity, acceleration: 0.0, length: 5.0 }
    }

    /// Bumper-to-bumper gap to the vehicle in front.
    pub fn gap_to(&self, front: &VehicleState) -> f64 {
        front.position - self.position - front.length
    }
}

/// Semi-implicit Euler: `v += a dt; x += v dt`.
pub fn kinematics_step(state: VehicleState, a: f64, dt: f64) -> VehicleState {
    let velocity = state.velocity + a * dt;
    VehicleState {
        position: state.position + velocity * dt,
        velocity,
        acceleration: a,
        length: state.length,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clamp {
    pub min: f64,
    pub max: f64,
}

impl Clamp {
    pub const VEHICLE: Clamp = Clamp { min: -2.94, max: 4.0 };
    pub const UAV: Clamp = Clamp { min: -4.0, max: 4.0 };

    pub fn apply(&self, a: f64) -> f64 {
        a.clamp(self.min, self.max)
    }
}

/// Gains `ω1..ω5` of the CACC law, desired gap and actuator clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaccGains {
    pub omega: [f64; 5],
    pub d_des: f64,
    pub clamp: Clamp,
}

impl CaccGains {
    /// Classical CACC parameterisation with feed-forward weight `c1`,
    /// damping `xi` and bandwidth `omega_n` (rad/s).
    pub fn from_bandwidth(c1: f64, xi: f64, omega_n: f64, d_des: f64, clamp: Clamp) -> Self {
        let root = xi + (xi * xi - 1.0).max(0.0).sqrt();
        Self {
            omega: [
                -omega_n * omega_n,
                -(2.0 * xi - c1 * root) * omega_n,
                -c1 * root * omega_n,
                1.0 - c1,
                c1,
            ],
            d_des,
            clamp,
        }
    }
}

impl Default for CaccGains {
    fn default() -> Self {
        CaccGains::from_bandwidth(0.5, 1.0, 1.0, 10.0, Clamp::VEHICLE)
    }
}

/// Inputs of one CACC evaluation, all taken from the controller's view.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CaccInputs {
    pub gap: f64,
    pub velocity: f64,
    pub front_velocity: f64,
    pub leader_velocity: f64,
    pub front_desired_accel: f64,
    pub leader_accel: f64,
}

pub fn cacc_accel_unclamped(g: &CaccGains, x: &CaccInputs) -> f64 {
    let [w1, w2, w3, w4, w5] = g.omega;
    w1 * (g.d_des - x.gap)
        + w2 * (x.velocity - x.front_velocity)
        + w3 * (x.velocity - x.leader_velocity)
        + w4 * x.front_desired_accel
        + w5 * x.leader_accel
}

pub fn cacc_accel(g: &CaccGains, x: &CaccInputs) -> f64 {
    g.clamp.apply(cacc_accel_unclamped(g, x))
}

/// Parabolic leader acceleration burst on `[t0, t1]` (slots). Normalised so
/// the midpoint value equals `peak`.
pub fn leader_accel_parabola(t: u64, t0: u64, t1: u64, peak: f64) -> f64 {
    if t < t0 || t > t1 || t0 >= t1 {
        return 0.0;
    }
    let (t, t0, t1) = (t as f64, t0 as f64, t1 as f64);
    peak * 4.0 * (t1 - t) * (t - t0) / ((t1 - t0) * (t1 - t0))
}

/// The same burst as printed, `c (t1 - t)(t - t0)` with `t` in slots.
pub fn leader_accel_parabola_raw(t: u64, t0: u64, t1: u64, c: f64) -> f64 {
    if t < t0 || t > t1 {
        return 0.0;
    }
    c * (t1 - t) as f64 * (t - t0) as f64
}

/// Piecewise-constant acceleration schedule: `(start, end, accel)` with
/// `start <= t < end` in slots.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccelSchedule {
    pub segments: Vec<(u64, u64, f64)>,
}

impl AccelSchedule {
    pub fn at(&self, t: u64) -> f64 {
        self.segments
            .iter()
            .find(|(s, e, _)| *s <= t && t < *e)
            .map(|(_, _, a)| *a)
            .unwrap_or(0.0)
    }

    /// Builds a schedule from speed targets: each `(start_s, duration_s,
    /// target_speed)` ramps linearly from the previous speed.
    pub fn from_speed_ramps(initial_speed: f64, ramps: &[(f64, f64, f64)]) -> Self {
        let mut v = initial_speed;
        let segments = ramps
            .iter()
            .map(|&(start, dur, target)| {
                let a = (target - v) / dur;
                v = target;
                let s = (start * 1000.0).round() as u64;
                (s, s + (dur * 1000.0).round() as u64, a)
            })
            .collect();
        Self { segments }
    }
}

/// Encroachment below the desired gap over a trace, and whether any gap
/// went negative (a crash).
pub fn min_safe_distance(distances: &[f64], d_des: f64) -> Option<(f64, bool)> {
    let min = distances.iter().cloned().fold(f64::INFINITY, f64::min);
    if distances.is_empty() {
        return None;
    }
    Some((d_des - min, min < 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisState {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
}

/// A UAV with independent x, y, z axes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavState {
    pub axes: [AxisState; 3],
    /// Desired offset from the formation leader on each axis.
    pub offset: [f64; 3],
}

pub fn uav_step(state: UavState, command: [f64; 3], clamp: Clamp, dt: f64) -> UavState {
    let mut next = state;
    for (axis, cmd) in next.axes.iter_mut().zip(command) {
        let a = clamp.apply(cmd);
        axis.velocity += a * dt;
        axis.position += axis.velocity * dt;
        axis.acceleration = a;
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_gains() -> CaccGains {
        CaccGains { omega: [0.5, -0.3, -0.2, 0.4, 0.1], d_des: 10.0, clamp: Clamp::VEHICLE }
    }

    #[test]
    fn cacc_examples() {
        let g = spec_gains();
        let at_rest = CaccInputs {
            gap: 10.0,
            velocity: 10.0,
            front_velocity: 10.0,
            leader_velocity: 10.0,
            ..Default::default()
        };
        assert_eq!(cacc_accel(&g, &at_rest), 0.0);
        let close = CaccInputs { gap: 9.0, ..at_rest };
        assert!((cacc_accel(&g, &close) - 0.5).abs() < 1e-12);
        let hard = CaccGains { omega: [6.0, 0.0, 0.0, 0.0, 0.0], ..g };
        assert_eq!(cacc_accel(&hard, &CaccInputs { gap: 9.0, ..at_rest }), 4.0);
    }

    #[test]
    fn cacc_partials_match_gains() {
        let g = CaccGains::default();
        let base = CaccInputs {
            gap: 10.3,
            velocity: 12.0,
            front_velocity: 12.1,
            leader_velocity: 11.9,
            front_desired_accel: 0.2,
            leader_accel: 0.1,
        };
        let h = 1e-3;
        let f0 = cacc_accel_unclamped(&g, &base);
        let bumps: [(fn(&mut CaccInputs, f64), f64); 6] = [
            (|x, h| x.gap += h, -g.omega[0]),
            (|x, h| x.velocity += h, g.omega[1] + g.omega[2]),
            (|x, h| x.front_velocity += h, -g.omega[1]),
            (|x, h| x.leader_velocity += h, -g.omega[2]),
            (|x, h| x.front_desired_accel += h, g.omega[3]),
            (|x, h| x.leader_accel += h, g.omega[4]),
        ];
        for (bump, expected) in bumps {
            let mut x = base;
            bump(&mut x, h);
            let fd = (cacc_accel_unclamped(&g, &x) - f0) / h;
            assert!((fd - expected).abs() < 1e-9, "{fd} vs {expected}");
        }
    }

    #[test]
    fn parabola_shape() {
        assert_eq!(leader_accel_parabola(100, 478, 2478, 4.0), 0.0);
        assert_eq!(leader_accel_parabola(478, 478, 2478, 4.0), 0.0);
        assert_eq!(leader_accel_parabola(2478, 478, 2478, 4.0), 0.0);
        assert_eq!(leader_accel_parabola(1478, 478, 2478, 4.0), 4.0);
        for k in 0..=2000 {
            assert_eq!(
                leader_accel_parabola(478 + k, 478, 2478, 4.0),
                leader_accel_parabola(2478 - k, 478, 2478, 4.0)
            );
        }
        assert_eq!(leader_accel_parabola_raw(1478, 478, 2478, 4.0), 4.0e6);
    }

    #[test]
    fn euler_examples() {
        let s = VehicleState::new(0.0, 10.0);
        let n = kinematics_step(s, 0.0, DT);
        assert_eq!(n.position, 10.0 * DT);

        let mut s = VehicleState::new(0.0, 3.0);
        for _ in 0..64 {
            s = kinematics_step(s, 0.5, 0.0625);
        }
        assert_eq!(s.velocity, 3.0 + 64.0 * 0.5 * 0.0625);
    }

    #[test]
    fn parabola_integrates_to_closed_form() {
        let (t0, t1, peak) = (478u64, 2478u64, 4.0);
        let mut s = VehicleState::new(0.0, 10.0);
        for t in 0..3000 {
            s = kinematics_step(s, leader_accel_parabola(t, t0, t1, peak), DT);
        }
        let expected = 10.0 + peak * (t1 - t0) as f64 * (2.0 / 3.0) * DT;
        assert!(((s.velocity - expected) / expected).abs() < 1e-3);
        // Stays inside the highway speed range.
        assert!(s.velocity < 22.2);
    }

    #[test]
    fn speed_ramps() {
        let sched = AccelSchedule::from_speed_ramps(10.0, &[(0.0, 5.0, 22.2), (15.0, 5.0, 9.7), (20.0, 15.0, 22.2)]);
        let mut s = VehicleState::new(0.0, 10.0);
        let mut at = Vec::new();
        for t in 0..35_000u64 {
            s = kinematics_step(s, sched.at(t), DT);
            if [4999, 19_999, 34_999].contains(&t) {
                at.push(s.velocity);
            }
        }
        for (v, target) in at.iter().zip([22.2, 9.7, 22.2]) {
            assert!((v - target).abs() < 0.05, "{v} vs {target}");
        }
    }

    #[test]
    fn min_safe_distance_examples() {
        assert_eq!(min_safe_distance(&[10.0; 5], 10.0), Some((0.0, false)));
        let (m, crash) = min_safe_distance(&[10.0, 9.5, 8.8, 9.9], 10.0).unwrap();
        assert!((m - 1.2).abs() < 1e-12 && !crash);
        assert!(min_safe_distance(&[3.0, -0.1, 2.0], 10.0).unwrap().1);
        assert_eq!(min_safe_distance(&[], 10.0), None);
    }

    #[test]
    fn uav_examples() {
        let s = UavState {
            axes: [AxisState { position: 0.0, velocity: 1.0, acceleration: 0.0 }; 3],
            offset: [0.0; 3],
        };
        let n = uav_step(s, [0.0; 3], Clamp::UAV, DT);
        assert!(n.axes.iter().all(|a| a.position == DT));
        let n = uav_step(s, [5.0, 0.0, 0.0], Clamp::UAV, DT);
        assert_eq!(n.axes[0].acceleration, 4.0);
        let mut s = UavState::default();
        for _ in 0..100 {
            s = uav_step(s, [0.0, 1.5, 1.5], Clamp::UAV, DT);
        }
        assert_eq!(s.axes[1], s.axes[2]);
    }
}
