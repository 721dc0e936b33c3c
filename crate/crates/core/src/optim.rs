//! Parameter update rules applied once per mini-batch.

use crate::error::{structural, Result};
use crate::nn::{GradientSet, Network};
use crate::scalar::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// `w ← w − η·g`.
pub fn sgd_step<S: Scalar>(net: &mut Network<S>, grad: &GradientSet<S>, learning_rate: S) -> Result<()> {
    if !grad.matches(net) {
        return Err(structural!("gradient shape does not match the network"));
    }
    for (w, g) in net.params_mut().zip(grad.iter()) {
        *w = *w - learning_rate * *g;
    }
    Ok(())
}

/// Adam moments and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    pub learning_rate: S,
    pub beta1: S,
    pub beta2: S,
    pub epsilon: S,
    first: GradientSet<S>,
    second: GradientSet<S>,
    step: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(net: &Network<S>, learning_rate: S) -> Self {
        Self {
            learning_rate,
            beta1: S::lit(ADAM_BETA1),
            beta2: S::lit(ADAM_BETA2),
            epsilon: S::lit(ADAM_EPSILON),
            first: GradientSet::zeros_like(net),
            second: GradientSet::zeros_like(net),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &GradientSet<S> {
        &self.first
    }

    pub fn second_moment(&self) -> &GradientSet<S> {
        &self.second
    }
}

/// Adam with bias-corrected moments.
pub fn adam_step<S: Scalar>(net: &mut Network<S>, grad: &GradientSet<S>, state: &mut AdamState<S>) -> Result<()> {
    if !grad.matches(net) || !state.first.matches(net) {
        return Err(structural!("gradient or moment shape does not match the network"));
    }
    state.step += 1;
    let t = i32::try_from(state.step).unwrap_or(i32::MAX);
    let (b1, b2) = (state.beta1, state.beta2);
    let correction1 = S::one() - b1.powi(t);
    let correction2 = S::one() - b2.powi(t);
    let params = net.params_mut();
    let moments = state.first.iter_mut().zip(state.second.iter_mut());
    for ((w, g), (m, v)) in params.zip(grad.iter()).zip(moments) {
        *m = b1 * *m + (S::one() - b1) * *g;
        *v = b2 * *v + (S::one() - b2) * *g * *g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *w = *w - state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}

/// Optimizer owned by one training run.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState<S> {
    Sgd { learning_rate: S },
    Adam(AdamState<S>),
}

impl<S: Scalar> OptimizerState<S> {
    pub fn new(kind: OptimizerKind, net: &Network<S>, learning_rate: S) -> Self {
        match kind {
            OptimizerKind::Sgd => OptimizerState::Sgd { learning_rate },
            OptimizerKind::Adam => OptimizerState::Adam(AdamState::new(net, learning_rate)),
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        match self {
            OptimizerState::Sgd { .. } => OptimizerKind::Sgd,
            OptimizerState::Adam(_) => OptimizerKind::Adam,
        }
    }

    pub fn step(&mut self, net: &mut Network<S>, grad: &GradientSet<S>) -> Result<()> {
        match self {
            OptimizerState::Sgd { learning_rate } => sgd_step(net, grad, *learning_rate),
            OptimizerState::Adam(state) => adam_step(net, grad, state),
        }
    }
}
