//! Scenario layouts: node roles, initial plant state, leader motion and the
//! per-platoon control law.

use parcomm_core::plant::{
    cacc_accel, kinematics_step, leader_accel_parabola, leader_accel_parabola_raw, uav_step, AccelSchedule,
    CaccGains, CaccInputs, Clamp, UavState, VehicleState, DT,
};
use parcomm_core::protocol::NodeId;

use crate::config::{LeaderProfile, ScenarioConfig, ScenarioKind};

/// Leader acceleration as a function of the slot, per axis.
#[derive(Debug, Clone)]
pub enum LeaderMotion {
    Cruise,
    Parabola { t0: u64, t1: u64, peak: f64, raw: bool },
    Schedule(AccelSchedule),
    Axes([AccelSchedule; 3]),
}

impl LeaderMotion {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let parabola = |t0, t1| LeaderMotion::Parabola { t0, t1, peak: cfg.pulse_peak, raw: cfg.raw_parabola };
        match cfg.leader_profile {
            LeaderProfile::Cruise => LeaderMotion::Cruise,
            LeaderProfile::Pulse => parabola(478, 2478),
            LeaderProfile::LatePulse => parabola(2400, 4000),
            LeaderProfile::Highway => LeaderMotion::Schedule(highway_schedule(cfg.initial_velocity)),
            LeaderProfile::Formation => LeaderMotion::Axes(formation_schedule(cfg.initial_velocity)),
        }
    }

    pub fn accel(&self, t: u64) -> [f64; 3] {
        match self {
            LeaderMotion::Cruise => [0.0; 3],
            LeaderMotion::Parabola { t0, t1, peak, raw } => {
                let a = if *raw {
                    leader_accel_parabola_raw(t, *t0, *t1, *peak)
                } else {
                    leader_accel_parabola(t, *t0, *t1, *peak)
                };
                [a, 0.0, 0.0]
            }
            LeaderMotion::Schedule(s) => [s.at(t), 0.0, 0.0],
            LeaderMotion::Axes(s) => [s[0].at(t), s[1].at(t), s[2].at(t)],
        }
    }
}

/// 10 -> 22.2 m/s over 5 s, 22.2 -> 9.7 m/s from 15 s over 5 s, back to
/// 22.2 m/s from 20 s over 15 s.
pub fn highway_schedule(initial_speed: f64) -> AccelSchedule {
    AccelSchedule::from_speed_ramps(initial_speed, &[(0.0, 5.0, 22.2), (15.0, 5.0, 9.7), (20.0, 15.0, 22.2)])
}

pub fn formation_schedule(initial_speed: f64) -> [AccelSchedule; 3] {
    let targets = [(0.49, 0.245), (1.715, 1.0682), (0.49, 0.0)];
    targets.map(|(up, down)| AccelSchedule::from_speed_ramps(initial_speed, &[(0.0, 0.5, up), (0.5, 0.5, down)]))
}

/// A leader and its followers, front to back.
#[derive(Debug, Clone, PartialEq)]
pub struct Platoon {
    pub leader: NodeId,
    pub followers: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub enum Plant {
    Road { vehicles: Vec<VehicleState>, commands: Vec<f64> },
    Air { uavs: Vec<UavState>, commands: Vec<[f64; 3]> },
}

#[derive(Debug, Clone)]
pub struct World {
    pub plant: Plant,
    pub platoons: Vec<Platoon>,
    pub motion: LeaderMotion,
    pub gains: CaccGains,
    pub clamp: Clamp,
    /// Status dimension of every link.
    pub dim: usize,
    /// Noise on the status (and on the physical state) per component.
    pub sigmas: Vec<f64>,
    front: Vec<Option<NodeId>>,
    platoon_of: Vec<usize>,
}

impl World {
    pub fn build(cfg: &ScenarioConfig) -> Self {
        let motion = LeaderMotion::from_config(cfg);
        let gains = cfg.gains();
        let clamp = cfg.clamp();
        match cfg.scenario {
            ScenarioKind::Uav => Self::air(cfg, motion, gains, clamp),
            ScenarioKind::SingleLink => Self::road(cfg, 1, 2, motion, gains, clamp),
            _ => Self::road(cfg, cfg.platoons, cfg.vehicles_per_platoon, motion, gains, clamp),
        }
    }

    fn road(cfg: &ScenarioConfig, platoons: usize, size: usize, motion: LeaderMotion, gains: CaccGains, clamp: Clamp) -> Self {
        let pitch = cfg.vehicle_length + cfg.d_des;
        let platoon_pitch = size as f64 * pitch + cfg.platoon_spacing;
        let mut vehicles = Vec::new();
        let mut groups = Vec::new();
        let mut front = Vec::new();
        let mut platoon_of = Vec::new();
        for p in 0..platoons {
            let base = p * size;
            for k in 0..size {
                let x = -(p as f64 * platoon_pitch + k as f64 * pitch);
                vehicles.push(VehicleState { length: cfg.vehicle_length, ..VehicleState::new(x, cfg.initial_velocity) });
                front.push((k > 0).then(|| base + k - 1));
                platoon_of.push(p);
            }
            groups.push(Platoon { leader: base, followers: (base + 1..base + size).collect() });
        }
        let n = vehicles.len();
        World {
            plant: Plant::Road { vehicles, commands: vec![0.0; n] },
            platoons: groups,
            motion,
            gains,
            clamp,
            dim: 3,
            sigmas: vec![cfg.noise_distance, cfg.noise_velocity, cfg.noise_acceleration],
            front,
            platoon_of,
        }
    }

    fn air(cfg: &ScenarioConfig, motion: LeaderMotion, gains: CaccGains, clamp: Clamp) -> Self {
        let n = cfg.uavs;
        let uavs = (0..n)
            .map(|k| {
                let offset = formation_offset(k, cfg.d_des);
                let mut u = UavState { offset, ..UavState::default() };
                for (axis, off) in u.axes.iter_mut().zip(offset) {
                    axis.position = off;
                    axis.velocity = cfg.initial_velocity;
                }
                u
            })
            .collect();
        let sigmas = [cfg.noise_distance, cfg.noise_velocity, cfg.noise_acceleration]
            .iter()
            .flat_map(|&s| [s; 3])
            .collect();
        World {
            plant: Plant::Air { uavs, commands: vec![[0.0; 3]; n] },
            platoons: vec![Platoon { leader: 0, followers: (1..n).collect() }],
            motion,
            gains,
            clamp,
            dim: 9,
            sigmas,
            front: (0..n).map(|k| (k > 0).then_some(0)).collect(),
            platoon_of: vec![0; n],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.front.len()
    }

    pub fn is_leader(&self, node: NodeId) -> bool {
        self.front[node].is_none()
    }

    pub fn front_of(&self, node: NodeId) -> Option<NodeId> {
        self.front[node]
    }

    pub fn platoon_of(&self, node: NodeId) -> usize {
        self.platoon_of[node]
    }

    /// Advances every vehicle by one slot; leaders follow the leader motion.
    pub fn step(&mut self, t: u64) {
        let lead = self.motion.accel(t);
        let clamp = self.clamp;
        match &mut self.plant {
            Plant::Road { vehicles, commands } => {
                for (i, v) in vehicles.iter_mut().enumerate() {
                    let a = if self.front[i].is_none() { lead[0] } else { commands[i] };
                    *v = kinematics_step(*v, clamp.apply(a), DT);
                }
            }
            Plant::Air { uavs, commands } => {
                for (i, u) in uavs.iter_mut().enumerate() {
                    let a = if self.front[i].is_none() { lead } else { commands[i] };
                    *u = uav_step(*u, a, clamp, DT);
                }
            }
        }
    }

    pub fn set_command(&mut self, node: NodeId, cmd: &[f64]) {
        match &mut self.plant {
            Plant::Road { commands, .. } => commands[node] = cmd[0],
            Plant::Air { commands, .. } => {
                for (c, v) in commands[node].iter_mut().zip(cmd) {
                    *c = *v;
                }
            }
        }
    }

    /// Physical state: `[x, v, a]` on the road, `[p(3), v(3), a(3)]` in the air.
    pub fn physical(&self, node: NodeId) -> Vec<f64> {
        match &self.plant {
            Plant::Road { vehicles, .. } => {
                let v = &vehicles[node];
                vec![v.position, v.velocity, v.acceleration]
            }
            Plant::Air { uavs, .. } => uav_vector(&uavs[node]),
        }
    }

    /// True link status of a follower: `[gap, v, a]` on the road, the
    /// physical state in the air.
    pub fn status(&self, node: NodeId) -> Vec<f64> {
        match &self.plant {
            Plant::Road { vehicles, .. } => {
                let v = &vehicles[node];
                let gap = self.front[node].map_or(0.0, |f| v.gap_to(&vehicles[f]));
                vec![gap, v.velocity, v.acceleration]
            }
            Plant::Air { uavs, .. } => uav_vector(&uavs[node]),
        }
    }

    /// Applied acceleration, known at both ends of a link.
    pub fn exogenous(&self, node: NodeId) -> Vec<f64> {
        match &self.plant {
            Plant::Road { vehicles, .. } => vec![vehicles[node].acceleration],
            Plant::Air { uavs, .. } => uavs[node].axes.iter().map(|a| a.acceleration).collect(),
        }
    }

    /// Road: gap to the front vehicle. Air: `d_des` minus the distance from
    /// the assigned formation slot, so encroachment reads as formation error.
    pub fn distance(&self, node: NodeId) -> Option<f64> {
        let front = self.front[node]?;
        Some(match &self.plant {
            Plant::Road { vehicles, .. } => vehicles[node].gap_to(&vehicles[front]),
            Plant::Air { uavs, .. } => {
                let dev = formation_error(&uavs[node], &uavs[front]);
                self.gains.d_des - dev.iter().map(|e| e * e).sum::<f64>().sqrt()
            }
        })
    }

    /// CACC law evaluated for every follower of platoon `p`, front to back.
    /// `views[k]` is the controller's view of follower `k`; `leader_obs` is
    /// the leader's own (noisy) physical state.
    pub fn control(&self, p: usize, t: u64, views: &[Vec<f64>], leader_obs: &[f64]) -> Vec<(NodeId, Vec<f64>)> {
        let platoon = &self.platoons[p];
        let lead_a = self.motion.accel(t);
        let g = &self.gains;
        match &self.plant {
            Plant::Road { .. } => {
                let v_lead = leader_obs[1];
                let (mut v_prev, mut a_prev) = (v_lead, lead_a[0]);
                platoon
                    .followers
                    .iter()
                    .zip(views)
                    .map(|(&n, view)| {
                        let a = cacc_accel(
                            g,
                            &CaccInputs {
                                gap: view[0],
                                velocity: view[1],
                                front_velocity: v_prev,
                                leader_velocity: v_lead,
                                front_desired_accel: a_prev,
                                leader_accel: lead_a[0],
                            },
                        );
                        v_prev = view[1];
                        a_prev = a;
                        (n, vec![a])
                    })
                    .collect()
            }
            Plant::Air { uavs, .. } => platoon
                .followers
                .iter()
                .zip(views)
                .map(|(&n, view)| {
                    let off = uavs[n].offset;
                    let cmd = (0..3)
                        .map(|j| {
                            let err = view[j] - (leader_obs[j] + off[j]);
                            let v_lead = leader_obs[3 + j];
                            cacc_accel(
                                g,
                                &CaccInputs {
                                    gap: g.d_des - err,
                                    velocity: view[3 + j],
                                    front_velocity: v_lead,
                                    leader_velocity: v_lead,
                                    front_desired_accel: lead_a[j],
                                    leader_accel: lead_a[j],
                                },
                            )
                        })
                        .collect();
                    (n, cmd)
                })
                .collect(),
        }
    }
}

fn uav_vector(u: &UavState) -> Vec<f64> {
    let a = &u.axes;
    vec![
        a[0].position, a[1].position, a[2].position,
        a[0].velocity, a[1].velocity, a[2].velocity,
        a[0].acceleration, a[1].acceleration, a[2].acceleration,
    ]
}

fn formation_error(u: &UavState, leader: &UavState) -> [f64; 3] {
    std::array::from_fn(|j| u.axes[j].position - leader.axes[j].position - u.offset[j])
}

/// Followers sit on a 3-wide grid behind the leader, `d_des` apart.
pub fn formation_offset(k: usize, d_des: f64) -> [f64; 3] {
    if k == 0 {
        return [0.0; 3];
    }
    let row = ((k - 1) / 3 + 1) as f64;
    let col = ((k - 1) % 3) as f64 - 1.0;
    [-d_des * row, d_des * col, 0.0]
}
