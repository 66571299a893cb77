//! Replayable status estimator shared by both ends of a link.
//!
//! Every slot appends one entry holding the model prediction `s̄(t)`, the
//! estimate `ŝ(t)`, the exogenous inputs and the model in force. Received
//! statuses are anchored at the slot they were sampled (their stamp), and
//! model switches take effect at an agreed slot, so both ends re-roll their
//! predictions from the affected slot and end up with identical estimates
//! regardless of when they learned about the event.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::predictor::{predict_unchecked, LinearModel};
use crate::types::{SlotTime, StatusVector};

#[derive(Debug, Clone)]
struct Entry {
    slot: SlotTime,
    predicted: StatusVector,
    estimate: StatusVector,
    exogenous: Vec<f64>,
    model: Arc<LinearModel>,
    anchor: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Estimator {
    /// Estimates preceding the first log entry, oldest first.
    prefix: VecDeque<StatusVector>,
    log: VecDeque<Entry>,
    horizon: usize,
    model: Arc<LinearModel>,
    scheduled: Vec<(SlotTime, Arc<LinearModel>)>,
}

impl Estimator {
    /// `initial` seeds the history before the first slot; `horizon` bounds
    /// how far back anchors and model switches can be replayed.
    pub fn new(model: Arc<LinearModel>, initial: StatusVector, horizon: usize) -> Self {
        let n = model.n_input();
        let prefix = std::iter::repeat_n(initial, n).collect();
        Self {
            prefix,
            log: VecDeque::new(),
            horizon: horizon.max(n + 1),
            model,
            scheduled: Vec::new(),
        }
    }

    pub fn current_slot(&self) -> Option<SlotTime> {
        self.log.back().map(|e| e.slot)
    }

    /// `ŝ` at the latest slot, or the seed status before the first slot.
    pub fn estimate(&self) -> &StatusVector {
        match self.log.back() {
            Some(e) => &e.estimate,
            None => self.prefix.back().expect("prefix is never empty"),
        }
    }

    /// `s̄` at the latest slot.
    pub fn prediction(&self) -> Option<&StatusVector> {
        self.log.back().map(|e| &e.predicted)
    }

    pub fn estimate_at(&self, slot: SlotTime) -> Option<&StatusVector> {
        self.index_of(slot).map(|i| &self.log[i].estimate)
    }

    /// Model that will be used for the next slot.
    pub fn model(&self) -> &Arc<LinearModel> {
        &self.model
    }

    pub fn model_at(&self, slot: SlotTime) -> Option<&Arc<LinearModel>> {
        self.index_of(slot).map(|i| &self.log[i].model)
    }

    /// Version of the newest model adopted or scheduled.
    pub fn latest_version(&self) -> SlotTime {
        self.scheduled
            .iter()
            .map(|(_, m)| m.version())
            .chain(std::iter::once(self.model.version()))
            .max()
            .unwrap_or_default()
    }

    fn index_of(&self, slot: SlotTime) -> Option<usize> {
        let first = self.log.front()?.slot;
        if slot < first {
            return None;
        }
        let i = (slot - first) as usize;
        (i < self.log.len()).then_some(i)
    }

    fn history_before(&self, idx: usize) -> impl Iterator<Item = &StatusVector> {
        let n = self.model.n_input();
        let from_prefix = n.saturating_sub(idx);
        let prefix_skip = self.prefix.len() - from_prefix;
        self.prefix
            .iter()
            .skip(prefix_skip)
            .chain(self.log.iter().skip(idx + from_prefix - n).take(n - from_prefix).map(|e| &e.estimate))
    }

    fn compute(&self, idx: usize, model: &LinearModel, exogenous: &[f64], slot: SlotTime) -> StatusVector {
        predict_unchecked(model, self.history_before(idx), exogenous, slot)
    }

    /// Appends slot `slot` using the model in force and returns `ŝ(slot)`.
    pub fn advance(&mut self, slot: SlotTime, exogenous: &[f64]) -> &StatusVector {
        if let Some(cur) = self.current_slot() {
            assert_eq!(slot, cur + 1, "estimator slots must be contiguous");
        }
        let mut k = 0;
        while k < self.scheduled.len() {
            if self.scheduled[k].0 <= slot {
                let (_, m) = self.scheduled.remove(k);
                self.model = m;
            } else {
                k += 1;
            }
        }
        let idx = self.log.len();
        let predicted = self.compute(idx, &self.model, exogenous, slot);
        self.log.push_back(Entry {
            slot,
            estimate: predicted.clone(),
            predicted,
            exogenous: exogenous.to_vec(),
            model: self.model.clone(),
            anchor: None,
        });
        if self.log.len() > self.horizon {
            let old = self.log.pop_front().expect("non-empty");
            self.prefix.pop_front();
            self.prefix.push_back(old.estimate);
        }
        &self.log.back().expect("just pushed").estimate
    }

    fn reroll_from(&mut self, start: usize) {
        for i in start..self.log.len() {
            let model = self.log[i].model.clone();
            let predicted = self.compute(i, &model, &self.log[i].exogenous, self.log[i].slot);
            let e = &mut self.log[i];
            e.estimate = match &e.anchor {
                Some(v) => StatusVector::new(v.clone(), e.slot),
                None => predicted.clone(),
            };
            e.predicted = predicted;
        }
    }

    /// Fixes `ŝ(slot) = values` and re-rolls later predictions. Returns false
    /// when the slot is outside the replay log (too old or in the future).
    pub fn anchor(&mut self, slot: SlotTime, values: &[f64]) -> bool {
        let Some(idx) = self.index_of(slot) else {
            return false;
        };
        self.log[idx].anchor = Some(values.to_vec());
        self.reroll_from(idx);
        true
    }

    /// Switches to `model` starting at `from`. A future slot is scheduled; a
    /// past slot is applied retroactively and replayed.
    pub fn adopt_from(&mut self, from: SlotTime, model: Arc<LinearModel>) {
        let next = self.current_slot().map(|s| s + 1).unwrap_or(SlotTime::ZERO);
        if from >= next {
            self.scheduled.retain(|(s, _)| *s < from);
            self.scheduled.push((from, model));
            self.scheduled.sort_by_key(|(s, _)| *s);
            return;
        }
        self.scheduled.clear();
        let start = self.index_of(from).unwrap_or(0);
        for e in self.log.iter_mut().skip(start) {
            e.model = model.clone();
        }
        self.model = model;
        self.reroll_from(start);
    }

    /// Replaces the model from `from` onwards wherever the logged model is
    /// not newer than `model`, then replays. Used by correction packets.
    pub fn overwrite_model_from(&mut self, from: SlotTime, model: Arc<LinearModel>) {
        let v = model.version();
        let start = self.index_of(from).unwrap_or(0);
        for e in self.log.iter_mut().skip(start) {
            if e.model.version() <= v {
                e.model = model.clone();
            }
        }
        if self.model.version() <= v {
            self.model = model;
        }
        self.scheduled.retain(|(_, m)| m.version() > v);
        self.reroll_from(start);
    }
}
