use parcomm_core::plant::{
    cacc_accel, kinematics_step, leader_accel_parabola, CaccGains, CaccInputs, VehicleState, DT,
};
use proptest::prelude::*;

/// Eight vehicles with perfect information; returns the peak absolute gap
/// error of each follower and the final states.
fn simulate(peak: f64, slots: u64) -> (Vec<f64>, Vec<VehicleState>) {
    let g = CaccGains::default();
    let n = 8;
    let mut cars: Vec<VehicleState> = (0..n).map(|i| VehicleState::new(-(i as f64) * 15.0, 10.0)).collect();
    // The first follower starts one metre behind its slot.
    cars[1].position -= 1.0;
    let mut worst = vec![0.0; n - 1];
    for t in 0..slots {
        let lead_a = leader_accel_parabola(t, 500, 2500, peak);
        let mut cmd = vec![lead_a; n];
        for i in 1..n {
            let x = CaccInputs {
                gap: cars[i].gap_to(&cars[i - 1]),
                velocity: cars[i].velocity,
                front_velocity: cars[i - 1].velocity,
                leader_velocity: cars[0].velocity,
                front_desired_accel: cmd[i - 1],
                leader_accel: lead_a,
            };
            cmd[i] = cacc_accel(&g, &x);
        }
        cars = cars.iter().zip(&cmd).map(|(c, &a)| kinematics_step(*c, a, DT)).collect();
        for i in 1..n {
            let e: f64 = (cars[i].gap_to(&cars[i - 1]) - g.d_des).abs();
            worst[i - 1] = f64::max(worst[i - 1], e);
        }
    }
    (worst, cars)
}

#[test]
fn gap_errors_do_not_amplify_down_the_string() {
    let (worst, cars) = simulate(2.0, 15_000);
    assert!(worst[0] > 0.99);
    for w in worst.windows(2) {
        assert!(w[1] <= w[0] * 1.0001 + 1e-9, "{worst:?}");
    }
    // Settled: every vehicle back at a common speed and the desired gap.
    for i in 1..cars.len() {
        assert!((cars[i].velocity - cars[0].velocity).abs() < 1e-2);
        assert!((cars[i].gap_to(&cars[i - 1]) - 10.0).abs() < 1e-2);
    }
}

#[test]
fn leader_speed_gain_matches_pulse_area() {
    // Integral of 4p(t1-t)(t-t0)/(t1-t0)^2 over the window is 2p(t1-t0)/3.
    let (_, cars) = simulate(1.5, 4000);
    let expected = 10.0 + 2.0 * 1.5 * 2.0 / 3.0;
    assert!((cars[0].velocity - expected).abs() < 1e-2, "{}", cars[0].velocity);
}

proptest! {
    #[test]
    fn constant_accel_kinematics(a in -3.0f64..4.0, v0 in 0.0f64..30.0, steps in 1usize..2000) {
        let mut s = VehicleState::new(0.0, v0);
        for _ in 0..steps {
            s = kinematics_step(s, a, DT);
        }
        let t = steps as f64 * DT;
        prop_assert!((s.velocity - (v0 + a * t)).abs() < 1e-9);
        // Semi-implicit Euler adds a*dt*t/2 over the exact position.
        let exact = v0 * t + 0.5 * a * t * t + 0.5 * a * DT * t;
        prop_assert!((s.position - exact).abs() < 1e-7);
    }
}
