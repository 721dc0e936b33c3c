use crate::error::{numeric, structural, Result};
use crate::scalar::Scalar;

use super::network::Network;

/// Per-class negative log-softmax of one prediction.
///
/// Entry `j` is the cross-entropy the prediction would incur if the label were `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector<S>(Vec<S>);

impl<S: Scalar> LossVector<S> {
    /// Wraps precomputed entries without validation. Used by tests and oracles.
    pub fn from_entries(entries: Vec<S>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[S] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, class: usize) -> Result<S> {
        self.0
            .get(class)
            .copied()
            .ok_or_else(|| structural!("class {class} out of range for {} classes", self.0.len()))
    }

    /// Softmax probabilities, `exp(-entry)`.
    pub fn probabilities(&self) -> Vec<S> {
        self.0.iter().map(|l| (-*l).exp()).collect()
    }
}

/// `-log softmax(logits)` with the max-shifted log-sum-exp.
pub fn loss_vector<S: Scalar>(logits: &[S]) -> Result<LossVector<S>> {
    if logits.is_empty() {
        return Err(structural!("empty logit vector"));
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(numeric!("non-finite logits"));
    }
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let sum: S = logits.iter().map(|z| (*z - max).exp()).sum();
    let lse = max + sum.ln();
    // lse >= every logit mathematically; clamp the rounding residue.
    Ok(LossVector(logits.iter().map(|z| (lse - *z).max(S::zero())).collect()))
}

/// Cross-entropy of `x` against the observed label `y`.
pub fn sample_loss<S: Scalar>(net: &Network<S>, x: &[S], y: usize) -> Result<S> {
    if y >= net.class_count() {
        return Err(structural!("label {y} out of range for {} classes", net.class_count()));
    }
    loss_vector(&net.forward(x)?)?.get(y)
}
