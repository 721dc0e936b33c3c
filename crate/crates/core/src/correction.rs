//! Backward loss correction and its non-negative variant.
//!
//! With `ℓ` the per-class loss vector and `T` the transition matrix, the
//! corrected loss for observed label `y` is `(T⁻¹ ℓ)[y]`. Its expectation over
//! noisy labels equals the clean-label loss, but single values can be negative.

use crate::error::{structural, Result};
use crate::matrix::Matrix;
use crate::nn::LossVector;
use crate::noise::TransitionMatrix;
use crate::scalar::Scalar;

/// Corrected loss of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectedLoss<S> {
    pub raw: S,
    pub clipped: S,
    /// `raw >= 0`: the fitting condition of Pumpout_BC.
    pub fitting: bool,
}

impl<S: Scalar> CorrectedLoss<S> {
    pub fn from_raw(raw: S) -> Self {
        Self { raw, clipped: raw.max(S::zero()), fitting: raw >= S::zero() }
    }

    pub fn evaluate(losses: &LossVector<S>, y: usize, t_inv: &Matrix<S>) -> Result<Self> {
        backward_loss(losses, y, t_inv).map(Self::from_raw)
    }
}

/// Row `y` of `T⁻¹` dotted with `ℓ`.
pub fn backward_loss<S: Scalar>(losses: &LossVector<S>, y: usize, t_inv: &Matrix<S>) -> Result<S> {
    let k = t_inv.dim();
    if losses.len() != k {
        return Err(structural!("loss vector has {} entries, matrix is {k}x{k}", losses.len()));
    }
    if y >= k {
        return Err(structural!("label {y} out of range for {k} classes"));
    }
    Ok(t_inv
        .row(y)
        .iter()
        .zip(losses.entries())
        .fold(S::zero(), |acc, (c, l)| acc + *c * *l))
}

/// `max(0, backward_loss)`.
pub fn nn_backward_loss<S: Scalar>(losses: &LossVector<S>, y: usize, t_inv: &Matrix<S>) -> Result<S> {
    Ok(backward_loss(losses, y, t_inv)?.max(S::zero()))
}

/// For each clean class `i`: `Σ_j T[i][j] · backward_loss(ℓ, j) − ℓ[i]`.
///
/// Identically zero when the correction is unbiased at a fixed prediction.
pub fn unbiasedness_residual<S: Scalar>(losses: &LossVector<S>, t: &TransitionMatrix<S>) -> Result<Vec<S>> {
    let k = t.classes();
    let corrected = (0..k)
        .map(|j| backward_loss(losses, j, t.inverse()))
        .collect::<Result<Vec<S>>>()?;
    Ok((0..k)
        .map(|i| {
            let expected = (0..k).fold(S::zero(), |acc, j| acc + t.get(i, j) * corrected[j]);
            expected - losses.entries()[i]
        })
        .collect())
}
