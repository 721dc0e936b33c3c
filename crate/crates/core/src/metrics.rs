use crate::error::{structural, Result};
use crate::nn::Network;
use crate::scalar::Scalar;

/// Share of samples whose arg-max prediction equals the label.
pub fn accuracy<S: Scalar>(net: &Network<S>, features: &[Vec<S>], labels: &[usize]) -> Result<f64> {
    if features.is_empty() {
        return Err(structural!("accuracy of an empty split"));
    }
    if features.len() != labels.len() {
        return Err(structural!("{} feature rows but {} labels", features.len(), labels.len()));
    }
    let mut correct = 0usize;
    for (x, y) in features.iter().zip(labels) {
        correct += usize::from(net.predict(x)? == *y);
    }
    Ok(correct as f64 / features.len() as f64)
}

/// Quantities recorded after each training epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    /// 1-indexed.
    pub epoch: usize,
    pub test_accuracy: Option<f64>,
    /// Mean over mini-batches; `None` for the backward-correction family.
    pub label_precision: Option<f64>,
    pub mean_train_loss: f64,
    /// Smallest per-sample loss reported during the epoch.
    pub min_sample_loss: f64,
    /// Share of samples that met the fitting condition.
    pub fitting_fraction: f64,
}
