//! Keep-rate schedule and small-loss selection.

use crate::error::{domain, structural, Result};
use crate::scalar::Scalar;

/// Slack subtracted before taking the ceiling of `rate · B`, so products like
/// `0.8 · 5 = 4.000000000000001` keep 4 samples rather than 5.
const CEIL_SLACK: f64 = 1e-9;

/// `R(t) = 1 − min(t·τ/T_k, τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeepSchedule<S> {
    tau: S,
    warmup_epochs: usize,
}

impl<S: Scalar> KeepSchedule<S> {
    pub const DEFAULT_WARMUP: usize = 10;

    pub fn new(tau: S, warmup_epochs: usize) -> Result<Self> {
        if !(tau >= S::zero() && tau < S::one()) {
            return Err(domain!("noise rate {tau} outside [0, 1)"));
        }
        if warmup_epochs == 0 {
            return Err(domain!("warm-up must last at least one epoch"));
        }
        Ok(Self { tau, warmup_epochs })
    }

    pub fn tau(&self) -> S {
        self.tau
    }

    pub fn warmup_epochs(&self) -> usize {
        self.warmup_epochs
    }

    /// Keep rate for the 1-indexed epoch `t`.
    pub fn keep_rate(&self, t: usize) -> S {
        let ramp = S::lit(t as f64) / S::lit(self.warmup_epochs as f64) * self.tau;
        S::one() - ramp.min(self.tau)
    }
}

/// Indices kept from a mini-batch, ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionSet {
    indices: Vec<usize>,
}

impl SelectionSet {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn keep_count(&self) -> usize {
        self.indices.len()
    }

    /// Membership mask over a batch of `len` samples.
    pub fn mask(&self, len: usize) -> Vec<bool> {
        let mut mask = vec![false; len];
        for &i in &self.indices {
            mask[i] = true;
        }
        mask
    }
}

/// Number of samples kept from a batch of `batch` at `rate`: `⌈rate · batch⌉`.
pub fn keep_count<S: Scalar>(rate: S, batch: usize) -> usize {
    let target = rate.to_f64_lossy() * batch as f64;
    ((target - CEIL_SLACK).ceil().max(1.0) as usize).min(batch)
}

/// The `⌈rate · B⌉` smallest losses; ties go to the lower index.
pub fn select_small_loss<S: Scalar>(losses: &[S], rate: S) -> Result<SelectionSet> {
    if losses.is_empty() {
        return Err(structural!("cannot select from an empty batch"));
    }
    if !(rate > S::zero() && rate <= S::one()) {
        return Err(domain!("keep rate {rate} outside (0, 1]"));
    }
    let keep = keep_count(rate, losses.len());
    let mut order: Vec<usize> = (0..losses.len()).collect();
    // Stable sort: equal losses keep ascending index order.
    order.sort_by(|&a, &b| losses[a].partial_cmp(&losses[b]).unwrap_or(std::cmp::Ordering::Equal));
    order.truncate(keep);
    order.sort_unstable();
    Ok(SelectionSet { indices: order })
}

/// Fraction of selected samples whose noisy label equals the clean one.
pub fn label_precision(selected: &SelectionSet, clean_mask: &[bool]) -> Result<f64> {
    if selected.indices.is_empty() {
        return Err(structural!("label precision of an empty selection"));
    }
    let mut clean = 0usize;
    for &i in &selected.indices {
        let is_clean = clean_mask
            .get(i)
            .ok_or_else(|| structural!("selected index {i} outside a mask of {}", clean_mask.len()))?;
        clean += usize::from(*is_clean);
    }
    Ok(clean as f64 / selected.indices.len() as f64)
}
