//! Shared domain types: the slotted clock, status vectors and error measures.

use std::fmt;
use std::ops::{Add, Sub};

use crate::error::{invalid, Result};
use crate::rng::RngStream;

/// One slot of simulated time. A slot is 1 ms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SlotTime(pub u64);

impl SlotTime {
    pub const ZERO: SlotTime = SlotTime(0);

    /// Slot duration in seconds.
    pub const SECONDS: f64 = 1e-3;

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn is_multiple_of(self, period: u64) -> bool {
        period != 0 && self.0 % period == 0
    }

    pub fn saturating_sub(self, slots: u64) -> SlotTime {
        SlotTime(self.0.saturating_sub(slots))
    }
}

impl Add<u64> for SlotTime {
    type Output = SlotTime;
    fn add(self, rhs: u64) -> SlotTime {
        SlotTime(self.0 + rhs)
    }
}

impl Sub for SlotTime {
    type Output = u64;
    fn sub(self, rhs: SlotTime) -> u64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SlotTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A timestamped vector of physical statuses (distance, velocity, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct StatusVector {
    pub values: Vec<f64>,
    pub stamp: SlotTime,
}

impl StatusVector {
    pub fn new(values: Vec<f64>, stamp: SlotTime) -> Self {
        Self { values, stamp }
    }

    pub fn zeros(dim: usize, stamp: SlotTime) -> Self {
        Self { values: vec![0.0; dim], stamp }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn with_stamp(mut self, stamp: SlotTime) -> Self {
        self.stamp = stamp;
        self
    }

    /// Bitwise equality of the values; stamps are ignored.
    pub fn same_values(&self, other: &StatusVector) -> bool {
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Error measure `g` used by the transmit trigger and the recovery metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMeasure {
    #[default]
    L1,
    L2,
}

impl ErrorMeasure {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| x - y);
        match self {
            ErrorMeasure::L1 => diffs.map(f64::abs).sum(),
            ErrorMeasure::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        }
    }
}

impl std::str::FromStr for ErrorMeasure {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(ErrorMeasure::L1),
            "l2" => Ok(ErrorMeasure::L2),
            other => Err(format!("unknown error measure `{other}`")),
        }
    }
}

impl fmt::Display for ErrorMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorMeasure::L1 => "l1",
            ErrorMeasure::L2 => "l2",
        })
    }
}

/// `g(a, b)`: the l1 or l2 norm of `a - b`.
pub fn status_error(a: &StatusVector, b: &StatusVector, g: ErrorMeasure) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(invalid(format!(
            "status dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(g.distance(&a.values, &b.values))
}

/// Perturbs each component with independent zero-mean Gaussian noise.
pub fn add_sensing_noise(
    s: &StatusVector,
    sigmas: &[f64],
    rng: &mut RngStream,
) -> Result<StatusVector> {
    if sigmas.len() != s.dim() {
        return Err(invalid(format!(
            "noise vector has {} components, status has {}",
            sigmas.len(),
            s.dim()
        )));
    }
    if let Some(bad) = sigmas.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(invalid(format!("noise sigma must be finite and >= 0, got {bad}")));
    }
    let values = s
        .values
        .iter()
        .zip(sigmas)
        .map(|(&v, &sigma)| if sigma == 0.0 { v } else { v + sigma * rng.standard_normal() })
        .collect();
    Ok(StatusVector::new(values, s.stamp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> StatusVector {
        StatusVector::new(v.to_vec(), SlotTime(0))
    }

    #[test]
    fn error_examples() {
        let z = sv(&[0.0, 0.0, 0.0]);
        assert_eq!(status_error(&z, &z, ErrorMeasure::L1).unwrap(), 0.0);
        let e = status_error(&sv(&[1.0, 2.0]), &sv(&[1.05, 2.03]), ErrorMeasure::L1).unwrap();
        assert!((e - 0.08).abs() < 1e-12);
        let e = status_error(&sv(&[3.0, 0.0]), &sv(&[0.0, 4.0]), ErrorMeasure::L2).unwrap();
        assert_eq!(e, 5.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = status_error(&sv(&[1.0]), &sv(&[1.0, 2.0]), ErrorMeasure::L1);
        assert!(matches!(err, Err(crate::Error::InvalidArgument(_))));
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = sv(&[1.5, -2.0, 0.25]);
        let mut rng = RngStream::new(7, 0);
        let out = add_sensing_noise(&s, &[0.0; 3], &mut rng).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn negative_sigma_rejected() {
        let mut rng = RngStream::new(7, 0);
        assert!(add_sensing_noise(&sv(&[1.0]), &[-0.1], &mut rng).is_err());
    }

    #[test]
    fn noise_moments() {
        let mut rng = RngStream::new(11, 3);
        let s = sv(&[2.0]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| add_sensing_noise(&s, &[1.0], &mut rng).unwrap().values[0])
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.02, "std {}", var.sqrt());
    }

    #[test]
    fn noise_is_reproducible() {
        let s = sv(&[1.0, 2.0]);
        let a = add_sensing_noise(&s, &[0.3, 0.3], &mut RngStream::new(5, 1)).unwrap();
        let b = add_sensing_noise(&s, &[0.3, 0.3], &mut RngStream::new(5, 1)).unwrap();
        assert!(a.same_values(&b));
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-100.0f64..100.0, 3)
    }

    proptest! {
        #[test]
        fn metric_axioms(a in vec3(), b in vec3(), c in vec3()) {
            for g in [ErrorMeasure::L1, ErrorMeasure::L2] {
                let (a, b, c) = (sv(&a), sv(&b), sv(&c));
                let ab = status_error(&a, &b, g).unwrap();
                prop_assert_eq!(status_error(&a, &a, g).unwrap(), 0.0);
                prop_assert!(ab >= 0.0);
                prop_assert_eq!(ab, status_error(&b, &a, g).unwrap());
                let ac = status_error(&a, &c, g).unwrap();
                let cb = status_error(&c, &b, g).unwrap();
                prop_assert!(ab <= ac + cb + 1e-9);
            }
        }
    }
}
