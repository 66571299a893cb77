//! Flat, typed run configuration loaded from TOML.
//!
//! Every key has a scenario-dependent default. A file only lists the keys it
//! changes; unknown keys are rejected. CLI overrides use the same `key=value`
//! syntax with TOML values.

use std::path::Path;

use parcomm_core::plant::{CaccGains, Clamp};
use parcomm_core::protocol::LinkConfig;
use parcomm_core::smart::AuxCostGrid;
use parcomm_core::types::ErrorMeasure;
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    SingleLink,
    Platoon,
    MultiPlatoon,
    Uav,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Threshold-triggered transmissions with shared models.
    Parallel,
    /// Status-unaware periodic transmission of raw statuses.
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeaderProfile {
    /// Constant speed.
    Cruise,
    /// Single parabolic acceleration pulse over `[478, 2478]` ms.
    Pulse,
    /// Single parabolic acceleration pulse over `[2400, 4000]` ms.
    LatePulse,
    /// Highway speed ramps 10 -> 22.2 -> 9.7 -> 22.2 m/s.
    Highway,
    /// UAV per-axis speed schedule.
    Formation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialModel {
    /// Predicts zeros until the first confirmed calibration.
    Zero,
    /// Holds the last status.
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    L1,
    L2,
}

impl From<Measure> for ErrorMeasure {
    fn from(m: Measure) -> Self {
        match m {
            Measure::L1 => ErrorMeasure::L1,
            Measure::L2 => ErrorMeasure::L2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub scenario: ScenarioKind,
    pub mode: Mode,
    pub seed: u64,
    /// Run length in slots (1 slot = 1 ms).
    pub duration: u64,

    pub platoons: usize,
    pub vehicles_per_platoon: usize,
    /// Gap between the last vehicle of one platoon and the next leader, m.
    pub platoon_spacing: f64,
    pub uavs: usize,

    pub delta: f64,
    pub error_measure: Measure,
    pub decision_period: u64,
    pub calib_period: u64,
    /// Slots between correction packets; 0 disables them.
    pub correction_period: u64,
    pub confirm_timeout: u64,
    pub confirm_repeats: usize,
    pub n_input: usize,
    pub window: usize,
    /// Model both ends start from in parallel mode.
    pub initial_model: InitialModel,
    /// Calibrations whose model has a larger spectral radius are withheld;
    /// 0 disables the check.
    pub calib_max_radius: f64,
    pub feedback: bool,
    pub timestamping: bool,
    /// Destination processing latency, slots.
    pub latency: u64,

    pub rri: u64,
    pub subchannels: u64,
    pub p_loss: f64,
    /// Deliver every attempt regardless of contention.
    pub ideal_mac: bool,
    /// For each listed slot, every source loses its first status packet on
    /// air at or after that slot.
    pub loss_inject_slots: Vec<u64>,

    pub noise_distance: f64,
    pub noise_velocity: f64,
    pub noise_acceleration: f64,

    pub d_des: f64,
    pub vehicle_length: f64,
    pub initial_velocity: f64,
    pub accel_min: f64,
    pub accel_max: f64,
    pub cacc_gains: [f64; 5],
    pub control_period: u64,
    pub leader_profile: LeaderProfile,
    /// Use the parabola exactly as printed (peak scales with the window).
    pub raw_parabola: bool,
    pub pulse_peak: f64,

    pub baseline_interval: u64,

    pub smart: bool,
    pub smart_adaptive: bool,
    pub m_min: f64,
    pub m_int: f64,
    pub m_max: f64,
    pub m_init: f64,
    pub eval_int: u64,
    /// Adaptation threshold; 0 means 5% of the first window's cost.
    pub smart_delta: f64,
    pub smart_levels: usize,
    /// Per-epoch probability that an unreported error grows by one level.
    pub smart_p_grow: f64,
    /// Policy bank file; empty keeps the bank in memory.
    pub smart_bank: String,

    pub aoi: bool,
}

impl ScenarioConfig {
    pub fn defaults(kind: ScenarioKind) -> Self {
        let base = ScenarioConfig {
            version: CONFIG_VERSION,
            scenario: kind,
            mode: Mode::Parallel,
            seed: 1,
            duration: 3000,
            platoons: 1,
            vehicles_per_platoon: 2,
            platoon_spacing: 100.0,
            uavs: 10,
            delta: 0.1,
            error_measure: Measure::L1,
            decision_period: 10,
            calib_period: 100,
            correction_period: 1000,
            confirm_timeout: 10,
            confirm_repeats: 3,
            n_input: 1,
            window: 100,
            initial_model: InitialModel::Zero,
            calib_max_radius: 1.01,
            feedback: true,
            timestamping: true,
            latency: 0,
            rri: 10,
            subchannels: 2,
            p_loss: 0.0,
            ideal_mac: false,
            loss_inject_slots: Vec::new(),
            noise_distance: 0.01,
            noise_velocity: 0.01,
            noise_acceleration: 0.0,
            d_des: 10.0,
            vehicle_length: 5.0,
            initial_velocity: 10.0,
            accel_min: Clamp::VEHICLE.min,
            accel_max: Clamp::VEHICLE.max,
            cacc_gains: CaccGains::default().omega,
            control_period: 10,
            leader_profile: LeaderProfile::Pulse,
            raw_parabola: false,
            pulse_peak: 4.0,
            baseline_interval: 40,
            smart: false,
            smart_adaptive: true,
            m_min: 0.0,
            m_int: 0.5,
            m_max: 5.0,
            m_init: 0.0,
            eval_int: 1000,
            smart_delta: 0.0,
            smart_levels: 6,
            smart_p_grow: 0.5,
            smart_bank: String::new(),
            aoi: true,
        };
        match kind {
            ScenarioKind::SingleLink => base,
            ScenarioKind::Platoon => ScenarioConfig {
                vehicles_per_platoon: 3,
                duration: 5000,
                delta: 0.15,
                leader_profile: LeaderProfile::LatePulse,
                ..base
            },
            ScenarioKind::MultiPlatoon => ScenarioConfig {
                platoons: 3,
                vehicles_per_platoon: 8,
                duration: 35_000,
                calib_period: 500,
                correction_period: 500,
                noise_distance: 0.0,
                noise_velocity: 0.0,
                leader_profile: LeaderProfile::Highway,
                ..base
            },
            ScenarioKind::Uav => ScenarioConfig {
                duration: 20_000,
                calib_period: 1000,
                correction_period: 1000,
                rri: 5,
                window: 1000,
                initial_model: InitialModel::Hold,
                noise_distance: 0.0,
                noise_velocity: 0.0,
                d_des: 5.0,
                initial_velocity: 0.0,
                accel_min: Clamp::UAV.min,
                accel_max: Clamp::UAV.max,
                leader_profile: LeaderProfile::Formation,
                ..base
            },
        }
    }

    /// Parses a TOML document, filling missing keys from the defaults of
    /// its `scenario` (single-link when absent).
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        Self::from_table(table)
    }

    pub fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        let kind = match table.get("scenario") {
            Some(v) => v
                .clone()
                .try_into::<ScenarioKind>()
                .map_err(|e| ConfigError::Parse(format!("scenario: {e}")))?,
            None => ScenarioKind::SingleLink,
        };
        let mut merged = Self::defaults(kind).to_table();
        for (k, v) in table {
            merged.insert(k, v);
        }
        let cfg: ScenarioConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("config serializes to a table")
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Returns a copy with `key` set to `value` (TOML syntax, e.g. `0.2`,
    /// `true`, `"baseline"`, `[1, 2]`). Bare words are taken as strings.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self, ConfigError> {
        let mut table = self.to_table();
        if !table.contains_key(key) {
            return Err(ConfigError::Parse(format!("unknown key `{key}`")));
        }
        table.insert(key.to_string(), parse_value(value)?);
        // Changing the scenario must not reset the other keys.
        let cfg: ScenarioConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(format!("{key}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `key=value` overrides in order.
    pub fn with_overrides<'a>(&self, pairs: impl IntoIterator<Item = &'a str>) -> Result<Self, ConfigError> {
        let mut cfg = self.clone();
        for pair in pairs {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| ConfigError::Parse(format!("override `{pair}` is not key=value")))?;
            cfg = cfg.with_override(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(ok: bool, key: &'static str, reason: &str) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Invalid { key, reason: reason.to_string() })
            }
        }
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        check(self.version == CONFIG_VERSION, "version", "unsupported config version")?;
        check(self.platoons >= 1, "platoons", "must be at least 1")?;
        check(self.vehicles_per_platoon >= 2, "vehicles_per_platoon", "must be at least 2")?;
        check(self.uavs >= 2, "uavs", "must be at least 2")?;
        check(finite_nonneg(self.platoon_spacing), "platoon_spacing", "must be finite and >= 0")?;
        check(finite_nonneg(self.delta), "delta", "must be finite and >= 0")?;
        check(self.decision_period >= 1, "decision_period", "must be >= 1")?;
        check(self.calib_period >= 1, "calib_period", "must be >= 1")?;
        check(self.confirm_timeout >= 1, "confirm_timeout", "must be >= 1")?;
        check(self.confirm_repeats >= 1, "confirm_repeats", "must be >= 1")?;
        check(self.n_input >= 1, "n_input", "must be >= 1")?;
        check(self.window > self.n_input, "window", "must exceed n_input")?;
        check(self.rri >= 1, "rri", "must be >= 1")?;
        check(self.subchannels >= 1, "subchannels", "must be >= 1")?;
        check(self.confirm_repeats as u64 <= self.rri * self.subchannels, "confirm_repeats", "exceeds the resource pool")?;
        check((0.0..=1.0).contains(&self.p_loss), "p_loss", "must lie in [0, 1]")?;
        check(finite_nonneg(self.noise_distance), "noise_distance", "must be finite and >= 0")?;
        check(finite_nonneg(self.noise_velocity), "noise_velocity", "must be finite and >= 0")?;
        check(finite_nonneg(self.noise_acceleration), "noise_acceleration", "must be finite and >= 0")?;
        check(self.d_des.is_finite() && self.d_des > 0.0, "d_des", "must be positive")?;
        check(finite_nonneg(self.vehicle_length), "vehicle_length", "must be finite and >= 0")?;
        check(self.initial_velocity.is_finite(), "initial_velocity", "must be finite")?;
        check(
            self.accel_min.is_finite() && self.accel_max.is_finite() && self.accel_min < self.accel_max,
            "accel_min",
            "clamp needs accel_min < accel_max",
        )?;
        check(self.cacc_gains.iter().all(|g| g.is_finite()), "cacc_gains", "must be finite")?;
        check(self.control_period >= 1, "control_period", "must be >= 1")?;
        check(self.pulse_peak.is_finite(), "pulse_peak", "must be finite")?;
        check(self.baseline_interval >= 1, "baseline_interval", "must be >= 1")?;
        check(AuxCostGrid::new(self.m_min, self.m_int, self.m_max).is_ok(), "m_int", "grid needs m_int > 0, m_min <= m_max")?;
        check(self.m_init.is_finite(), "m_init", "must be finite")?;
        check(self.eval_int >= 1, "eval_int", "must be >= 1")?;
        check(finite_nonneg(self.smart_delta), "smart_delta", "must be finite and >= 0")?;
        check(self.smart_levels >= 2, "smart_levels", "must be >= 2")?;
        check(self.smart_p_grow > 0.0 && self.smart_p_grow < 1.0, "smart_p_grow", "must lie in (0, 1)")?;
        Ok(())
    }

    pub fn link_config(&self, dim: usize) -> LinkConfig {
        let mask = match self.scenario {
            ScenarioKind::Uav => (0..dim).map(|i| i < 6).collect(),
            _ => vec![true, true, false],
        };
        LinkConfig {
            delta: self.delta,
            g: self.error_measure.into(),
            decision_period: self.decision_period,
            calib_period: self.calib_period,
            correction_period: (self.correction_period > 0).then_some(self.correction_period),
            tick_offset: 0,
            max_radius: (self.calib_max_radius > 0.0).then_some(self.calib_max_radius),
            confirm_timeout: self.confirm_timeout,
            confirm_repeats: self.confirm_repeats,
            n_input: self.n_input,
            window: self.window,
            mask,
            feedback: self.feedback,
            timestamping: self.timestamping,
            replay_horizon: 4096.max(self.latency as usize + self.calib_period as usize + 64),
        }
    }

    pub fn gains(&self) -> CaccGains {
        CaccGains { omega: self.cacc_gains, d_des: self.d_des, clamp: self.clamp() }
    }

    pub fn clamp(&self) -> Clamp {
        Clamp { min: self.accel_min, max: self.accel_max }
    }

    pub fn grid(&self) -> AuxCostGrid {
        AuxCostGrid::new(self.m_min, self.m_int, self.m_max).expect("validated grid")
    }
}

fn parse_value(text: &str) -> Result<toml::Value, ConfigError> {
    let doc = format!("v = {text}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => Ok(t.remove("v").expect("key present")),
        Err(_) if !text.is_empty() && text.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '/' || c == '.') => {
            Ok(toml::Value::String(text.to_string()))
        }
        Err(e) => Err(ConfigError::Parse(format!("bad value `{text}`: {e}"))),
    }
}
