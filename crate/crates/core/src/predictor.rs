//! Online linear status models fitted by least squares over a sliding window.
//!
//! A model maps the stacked last `n_input` statuses (oldest first) to the
//! predicted components of the next status. Components outside the
//! prediction mask are exogenous: they are known at both ends of a link
//! (e.g. a commanded acceleration) and are copied through instead of
//! being predicted.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::types::{SlotTime, StatusVector};

/// Singular values below this fraction of the largest one are treated as zero.
pub const PINV_RELATIVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    a: DMatrix<f64>,
    n_input: usize,
    mask: Vec<bool>,
    version: SlotTime,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>, n_input: usize, mask: Vec<bool>, version: SlotTime) -> Result<Self> {
        let d_pred = mask.iter().filter(|m| **m).count();
        if n_input == 0 {
            return Err(invalid("n_input must be positive"));
        }
        if a.nrows() != d_pred || a.ncols() != n_input * mask.len() {
            return Err(invalid(format!(
                "model matrix is {}x{}, expected {}x{}",
                a.nrows(),
                a.ncols(),
                d_pred,
                n_input * mask.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(invalid("model matrix has non-finite entries"));
        }
        Ok(Self { a, n_input, mask, version })
    }

    /// The all-zero model, used at both ends before the first calibration.
    pub fn zero(mask: Vec<bool>, n_input: usize) -> Self {
        let d_pred = mask.iter().filter(|m| **m).count();
        let a = DMatrix::zeros(d_pred, n_input * mask.len());
        Self { a, n_input, mask, version: SlotTime::ZERO }
    }

    /// Holds the most recent value of every predicted component.
    pub fn hold(mask: Vec<bool>, n_input: usize) -> Self {
        let dim = mask.len();
        let predicted = predicted_indices(&mask);
        let mut a = DMatrix::zeros(predicted.len(), n_input * dim);
        let newest = (n_input - 1) * dim;
        for (row, &c) in predicted.iter().enumerate() {
            a[(row, newest + c)] = 1.0;
        }
        Self { a, n_input, mask, version: SlotTime::ZERO }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn n_input(&self) -> usize {
        self.n_input
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn status_dim(&self) -> usize {
        self.mask.len()
    }

    pub fn version(&self) -> SlotTime {
        self.version
    }

    pub fn with_version(mut self, version: SlotTime) -> Self {
        self.version = version;
        self
    }

    pub fn exogenous_dim(&self) -> usize {
        self.mask.iter().filter(|m| !**m).count()
    }

    /// Largest eigenvalue magnitude of the free rollout, with exogenous
    /// inputs held at zero. Above 1 the predictions grow without bound.
    pub fn spectral_radius(&self) -> f64 {
        let predicted = predicted_indices(&self.mask);
        let d = predicted.len();
        let dim = self.mask.len();
        let n = self.n_input * d;
        if n == 0 {
            return 0.0;
        }
        // State: predicted components of the last n_input statuses, oldest first.
        let mut c = DMatrix::zeros(n, n);
        for blk in 0..self.n_input.saturating_sub(1) {
            for i in 0..d {
                c[(blk * d + i, (blk + 1) * d + i)] = 1.0;
            }
        }
        let last = (self.n_input - 1) * d;
        for r in 0..d {
            for blk in 0..self.n_input {
                for (j, &col) in predicted.iter().enumerate() {
                    c[(last + r, blk * d + j)] = self.a[(r, blk * dim + col)];
                }
            }
        }
        c.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn predicted_indices(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i).collect()
}

/// Sliding window of sensed statuses, oldest first.
#[derive(Debug, Clone)]
pub struct SampleWindow {
    capacity: usize,
    buf: VecDeque<StatusVector>,
}

impl SampleWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        Self { capacity, buf: VecDeque::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn push(&mut self, s: StatusVector) -> Result<()> {
        if let Some(last) = self.buf.back() {
            if s.stamp <= last.stamp {
                return Err(invalid(format!(
                    "window samples must have increasing stamps ({} after {})",
                    s.stamp, last.stamp
                )));
            }
            if s.dim() != last.dim() {
                return Err(invalid("window sample dimension changed"));
            }
        }
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(s);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = &StatusVector> {
        self.buf.iter()
    }

    pub fn latest(&self) -> Option<&StatusVector> {
        self.buf.back()
    }
}

impl FromIterator<StatusVector> for SampleWindow {
    fn from_iter<I: IntoIterator<Item = StatusVector>>(iter: I) -> Self {
        let items: Vec<StatusVector> = iter.into_iter().collect();
        let mut w = SampleWindow::new(items.len().max(1));
        for s in items {
            w.push(s).expect("samples in order");
        }
        w
    }
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cutoff.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let largest = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    svd.pseudo_inverse(PINV_RELATIVE_TOLERANCE * largest)
        .expect("svd computed with both factors")
}

/// Least-squares fit `A = W * S^+` over the window.
///
/// Column k of `S` stacks the `n_input` statuses preceding target k; column
/// k of `W` holds the predicted components of target k.
pub fn fit_lms(window: &SampleWindow, mask: &[bool], n_input: usize) -> Result<LinearModel> {
    if n_input == 0 {
        return Err(invalid("n_input must be positive"));
    }
    let samples: Vec<&StatusVector> = window.iter().collect();
    if samples.len() < n_input + 1 {
        return Err(Error::InsufficientData { needed: n_input + 1, have: samples.len() });
    }
    let dim = samples[0].dim();
    if mask.len() != dim {
        return Err(invalid(format!("mask has {} entries, status has {dim}", mask.len())));
    }
    let predicted = predicted_indices(mask);
    let targets = samples.len() - n_input;
    let d_in = n_input * dim;

    let regressors = DMatrix::from_fn(d_in, targets, |r, k| {
        samples[k + r / dim].values[r % dim]
    });
    let outputs = DMatrix::from_fn(predicted.len(), targets, |r, k| {
        samples[k + n_input].values[predicted[r]]
    });

    let a = outputs * pseudo_inverse(&regressors);
    let version = samples.last().map(|s| s.stamp).unwrap_or_default();
    LinearModel::new(a, n_input, mask.to_vec(), version)
}

/// One-step prediction from the last `n_input` statuses (oldest first).
pub fn predict(
    model: &LinearModel,
    history: &[StatusVector],
    exogenous: &[f64],
    stamp: SlotTime,
) -> Result<StatusVector> {
    if history.len() != model.n_input {
        return Err(invalid(format!(
            "history has {} statuses, model needs {}",
            history.len(),
            model.n_input
        )));
    }
    if exogenous.len() != model.exogenous_dim() {
        return Err(invalid(format!(
            "got {} exogenous inputs, model needs {}",
            exogenous.len(),
            model.exogenous_dim()
        )));
    }
    let dim = model.status_dim();
    if history.iter().any(|h| h.dim() != dim) {
        return Err(invalid("history status dimension mismatch"));
    }
    Ok(predict_unchecked(model, history.iter(), exogenous, stamp))
}

/// Prediction without argument validation, for hot loops that already
/// guarantee the shapes.
pub(crate) fn predict_unchecked<'a>(
    model: &LinearModel,
    history: impl Iterator<Item = &'a StatusVector>,
    exogenous: &[f64],
    stamp: SlotTime,
) -> StatusVector {
    let dim = model.status_dim();
    let mut stacked = DVector::zeros(model.n_input * dim);
    for (i, h) in history.enumerate() {
        stacked.rows_mut(i * dim, dim).copy_from_slice(&h.values);
    }
    let pred = &model.a * stacked;
    let mut values = Vec::with_capacity(dim);
    let (mut p, mut e) = (0, 0);
    for &m in &model.mask {
        if m {
            values.push(pred[p]);
            p += 1;
        } else {
            values.push(exogenous[e]);
            e += 1;
        }
    }
    StatusVector::new(values, stamp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64], t: u64) -> StatusVector {
        StatusVector::new(v.to_vec(), SlotTime(t))
    }

    #[test]
    fn spectral_radius_of_simple_models() {
        let mask = vec![true, true, false];
        assert_eq!(LinearModel::zero(mask.clone(), 2).spectral_radius(), 0.0);
        assert!((LinearModel::hold(mask.clone(), 1).spectral_radius() - 1.0).abs() < 1e-12);
        let a = DMatrix::from_row_slice(2, 3, &[0.0, 2.0, 5.0, -0.5, 0.0, 1.0]);
        let m = LinearModel::new(a, 1, mask, SlotTime(0)).unwrap();
        assert!((m.spectral_radius() - 1.0).abs() < 1e-12);
        // x' = 1.5 x - 0.56 x_prev has roots 0.7 and 0.8.
        let a = DMatrix::from_row_slice(1, 2, &[-0.56, 1.5]);
        let m = LinearModel::new(a, 2, vec![true], SlotTime(0)).unwrap();
        assert!((m.spectral_radius() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn zero_window_gives_zero_model() {
        let w: SampleWindow = (0..10).map(|t| sv(&[0.0, 0.0, 0.0], t)).collect();
        let m = fit_lms(&w, &[true, true, false], 1).unwrap();
        assert!(m.matrix().iter().all(|v| *v == 0.0));
        assert_eq!(m.matrix().shape(), (2, 3));
    }

    #[test]
    fn too_few_samples() {
        let w: SampleWindow = (0..2).map(|t| sv(&[1.0], t)).collect();
        assert_eq!(
            fit_lms(&w, &[true], 2),
            Err(Error::InsufficientData { needed: 3, have: 2 })
        );
    }

    #[test]
    fn window_evicts_oldest_and_rejects_stale() {
        let mut w = SampleWindow::new(3);
        for t in 0..5 {
            w.push(sv(&[t as f64], t)).unwrap();
        }
        assert_eq!(w.len(), 3);
        assert_eq!(w.iter().next().unwrap().stamp, SlotTime(2));
        assert!(w.push(sv(&[0.0], 4)).is_err());
    }

    #[test]
    fn zero_model_predicts_zero_and_copies_exogenous() {
        let m = LinearModel::zero(vec![true, true, false], 1);
        let p = predict(&m, &[sv(&[3.0, 4.0, 1.0], 0)], &[0.5], SlotTime(1)).unwrap();
        assert_eq!(p.values, vec![0.0, 0.0, 0.5]);
        assert_eq!(p.stamp, SlotTime(1));
    }

    #[test]
    fn identity_model_reproduces_history() {
        let m = LinearModel::hold(vec![true, true, false], 1);
        let h = sv(&[3.0, 4.0, 1.0], 0);
        let p = predict(&m, &[h], &[9.0], SlotTime(1)).unwrap();
        assert_eq!(p.values, vec![3.0, 4.0, 9.0]);
    }

    #[test]
    fn history_length_checked() {
        let m = LinearModel::zero(vec![true], 2);
        assert!(predict(&m, &[sv(&[1.0], 0)], &[], SlotTime(1)).is_err());
    }

    #[test]
    fn predict_is_linear_in_history() {
        let a = DMatrix::from_row_slice(2, 6, &[
            0.9, 0.1, 0.0, 0.2, -0.3, 0.5, //
            0.0, 1.1, 0.4, -0.7, 0.0, 0.3,
        ]);
        let m = LinearModel::new(a, 2, vec![true, true, false], SlotTime(0)).unwrap();
        let h1 = [sv(&[1.0, 2.0, 3.0], 0), sv(&[-1.0, 0.5, 2.0], 1)];
        let h2 = [sv(&[0.3, -2.0, 1.0], 0), sv(&[4.0, 0.0, -1.0], 1)];
        let (alpha, beta) = (1.7, -0.4);
        let mix: Vec<StatusVector> = h1
            .iter()
            .zip(&h2)
            .map(|(x, y)| {
                let v = x.values.iter().zip(&y.values).map(|(a, b)| alpha * a + beta * b).collect();
                StatusVector::new(v, x.stamp)
            })
            .collect();
        let p1 = predict(&m, &h1, &[0.0], SlotTime(2)).unwrap();
        let p2 = predict(&m, &h2, &[0.0], SlotTime(2)).unwrap();
        let pm = predict(&m, &mix, &[0.0], SlotTime(2)).unwrap();
        for c in 0..2 {
            assert!((pm.values[c] - (alpha * p1.values[c] + beta * p2.values[c])).abs() < 1e-12);
        }
    }
}
