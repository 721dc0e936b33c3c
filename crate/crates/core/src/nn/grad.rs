use crate::error::{structural, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::loss::{loss_vector, LossVector};
use super::network::{ForwardCache, Network};

/// Gradient buffers of one layer, same layout as the layer parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient<S> {
    pub weights: Vec<S>,
    pub bias: Vec<S>,
}

/// Per-parameter gradients, shape-isomorphic to a [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<S> {
    layers: Vec<LayerGradient<S>>,
}

impl<S: Scalar> GradientSet<S> {
    pub fn zeros_like(net: &Network<S>) -> Self {
        Self {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![S::zero(); l.weights().len()],
                    bias: vec![S::zero(); l.bias().len()],
                })
                .collect(),
        }
    }

    pub fn layers(&self) -> &[LayerGradient<S>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerGradient<S>] {
        &mut self.layers
    }

    /// Entries in the same order as [`Network::params`].
    pub fn iter(&self) -> impl Iterator<Item = &S> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut S> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn matches(&self, net: &Network<S>) -> bool {
        self.layers.len() == net.layers().len()
            && self
                .layers
                .iter()
                .zip(net.layers())
                .all(|(g, l)| g.weights.len() == l.weights().len() && g.bias.len() == l.bias().len())
    }

    pub fn scale(&mut self, factor: S) {
        for g in self.iter_mut() {
            *g = *g * factor;
        }
    }

    /// `self += factor · other`.
    pub fn add_scaled(&mut self, other: &Self, factor: S) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a = *a + factor * *b;
        }
    }

    pub fn max_abs(&self) -> S {
        self.iter().fold(S::zero(), |m, g| m.max(g.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> S {
        self.iter().zip(other.iter()).fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|g| g.is_finite())
    }
}

/// Which scalar of the per-class loss vector is being differentiated.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a, S> {
    /// Cross-entropy on the observed label, `ℓ[y]`.
    Observed,
    /// Backward-corrected loss, row `y` of `T⁻¹` dotted with `ℓ`.
    Corrected(&'a Matrix<S>),
}

impl<'a, S: Scalar> Objective<'a, S> {
    pub fn value(&self, losses: &LossVector<S>, y: usize) -> Result<S> {
        match self {
            Objective::Observed => losses.get(y),
            Objective::Corrected(t_inv) => crate::correction::backward_loss(losses, y, t_inv),
        }
    }

    fn check(&self, classes: usize, y: usize) -> Result<()> {
        if y >= classes {
            return Err(structural!("label {y} out of range for {classes} classes"));
        }
        if let Objective::Corrected(t_inv) = self {
            if t_inv.dim() != classes {
                return Err(structural!(
                    "inverse transition matrix is {0}x{0} but the network has {classes} classes",
                    t_inv.dim()
                ));
            }
        }
        Ok(())
    }
}

/// One batch entry for weighted backpropagation.
#[derive(Debug, Clone, Copy)]
pub struct WeightedSample<'a, S> {
    pub x: &'a [S],
    pub y: usize,
    pub weight: S,
}

/// Sums `weight · ∇objective` over samples, reusing scratch buffers.
#[derive(Debug)]
pub struct GradientAccumulator<S> {
    grad: GradientSet<S>,
    delta: Vec<S>,
    next_delta: Vec<S>,
}

impl<S: Scalar> GradientAccumulator<S> {
    pub fn new(net: &Network<S>) -> Self {
        Self { grad: GradientSet::zeros_like(net), delta: Vec::new(), next_delta: Vec::new() }
    }

    pub fn reset(&mut self) {
        for g in self.grad.iter_mut() {
            *g = S::zero();
        }
    }

    /// Adds `weight · ∇objective(x, y)` given a forward cache of `x` and its loss vector.
    pub fn add_cached(
        &mut self,
        net: &Network<S>,
        cache: &ForwardCache<S>,
        losses: &LossVector<S>,
        y: usize,
        objective: Objective<'_, S>,
        weight: S,
    ) -> Result<()> {
        let k = net.class_count();
        objective.check(k, y)?;
        // d(Σ_j c_j ℓ_j)/dz_i = (Σ_j c_j) p_i - c_i, with p = exp(-ℓ).
        self.delta.clear();
        match objective {
            Objective::Observed => {
                for (i, l) in losses.entries().iter().enumerate() {
                    let p = (-*l).exp();
                    let g = if i == y { p - S::one() } else { p };
                    self.delta.push(weight * g);
                }
            }
            Objective::Corrected(t_inv) => {
                let coeffs = t_inv.row(y);
                let total = coeffs.iter().fold(S::zero(), |acc, c| acc + *c);
                for (l, c) in losses.entries().iter().zip(coeffs) {
                    let p = (-*l).exp();
                    self.delta.push(weight * (total * p - *c));
                }
            }
        }
        self.backward(net, cache);
        Ok(())
    }

    /// Forward, loss vector and accumulation for one sample; returns the loss vector.
    pub fn add_sample(
        &mut self,
        net: &Network<S>,
        x: &[S],
        y: usize,
        objective: Objective<'_, S>,
        weight: S,
    ) -> Result<LossVector<S>> {
        let cache = net.forward_cached(x)?;
        let losses = loss_vector(cache.logits())?;
        self.add_cached(net, &cache, &losses, y, objective, weight)?;
        Ok(losses)
    }

    fn backward(&mut self, net: &Network<S>, cache: &ForwardCache<S>) {
        let layers = net.layers();
        for l in (0..layers.len()).rev() {
            let layer = &layers[l];
            let input = &cache.inputs[l];
            let g = &mut self.grad.layers[l];
            let n_in = layer.inputs();
            for (o, d) in self.delta.iter().enumerate() {
                g.bias[o] = g.bias[o] + *d;
                for (gw, a) in g.weights[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                    *gw = *gw + *d * *a;
                }
            }
            if l == 0 {
                break;
            }
            self.next_delta.clear();
            self.next_delta.resize(n_in, S::zero());
            for (row, d) in layer.weights().chunks_exact(n_in).zip(&self.delta) {
                for (nd, w) in self.next_delta.iter_mut().zip(row) {
                    *nd = *nd + *w * *d;
                }
            }
            let below = &layers[l - 1];
            for (nd, z) in self.next_delta.iter_mut().zip(&cache.pre[l - 1]) {
                *nd = *nd * below.activation().derivative(*z);
            }
            std::mem::swap(&mut self.delta, &mut self.next_delta);
        }
    }

    /// Accumulated sum, untouched.
    pub fn sum(&self) -> &GradientSet<S> {
        &self.grad
    }

    /// Accumulated sum divided by `divisor`.
    pub fn mean(&self, divisor: usize) -> GradientSet<S> {
        let mut g = self.grad.clone();
        g.scale(S::one() / S::lit(divisor as f64));
        g
    }
}

/// `(1/B) Σ_i weight_i · ∇ objective(x_i, y_i)` for a batch of size `B`.
pub fn backprop_objective<S: Scalar>(
    net: &Network<S>,
    batch: &[WeightedSample<'_, S>],
    objective: Objective<'_, S>,
) -> Result<GradientSet<S>> {
    if batch.is_empty() {
        return Err(structural!("cannot backpropagate an empty batch"));
    }
    let mut acc = GradientAccumulator::new(net);
    for s in batch {
        if !s.weight.is_finite() {
            return Err(crate::error::numeric!("sample weight must be finite"));
        }
        acc.add_sample(net, s.x, s.y, objective, s.weight)?;
    }
    Ok(acc.mean(batch.len()))
}

/// Weighted mean gradient of the observed-label cross-entropy.
pub fn backprop_weighted<S: Scalar>(net: &Network<S>, batch: &[WeightedSample<'_, S>]) -> Result<GradientSet<S>> {
    backprop_objective(net, batch, Objective::Observed)
}

/// Weighted mean gradient of the backward-corrected loss.
pub fn backprop_weighted_corrected<S: Scalar>(
    net: &Network<S>,
    batch: &[WeightedSample<'_, S>],
    t_inv: &Matrix<S>,
) -> Result<GradientSet<S>> {
    backprop_objective(net, batch, Objective::Corrected(t_inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fixture(seed: u64) -> (Network<f64>, Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::mlp(4, &[6, 5], 3, Activation::Softsign, &mut rng).unwrap();
        let xs = (0..7).map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let ys = (0..7).map(|_| rng.gen_range(0..3)).collect();
        (net, xs, ys)
    }

    fn batch<'a>(xs: &'a [Vec<f64>], ys: &[usize], w: &[f64]) -> Vec<WeightedSample<'a, f64>> {
        xs.iter().zip(ys).zip(w).map(|((x, y), w)| WeightedSample { x, y: *y, weight: *w }).collect()
    }

    #[test]
    fn zero_weights_give_zero_gradient() {
        let (net, xs, ys) = fixture(3);
        let g = backprop_weighted(&net, &batch(&xs, &ys, &[0.0; 7])).unwrap();
        assert_eq!(g.max_abs(), 0.0);
        assert!(g.matches(&net));
        let t_inv = Matrix::identity(3);
        let gc = backprop_weighted_corrected(&net, &batch(&xs, &ys, &[0.0; 7]), &t_inv).unwrap();
        assert_eq!(gc.max_abs(), 0.0);
    }

    #[test]
    fn negative_gamma_weight_scales_gradient() {
        let (net, xs, ys) = fixture(4);
        let gamma = 0.3;
        let up = backprop_weighted(&net, &batch(&xs[..1], &ys[..1], &[1.0])).unwrap();
        let down = backprop_weighted(&net, &batch(&xs[..1], &ys[..1], &[-gamma])).unwrap();
        for (u, d) in up.iter().zip(down.iter()) {
            assert!((d + gamma * u).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_correction_is_bitwise_plain() {
        let (net, xs, ys) = fixture(5);
        let w = [1.0, -0.5, 1.0, 1.0, -0.05, 1.0, 0.0];
        let plain = backprop_weighted(&net, &batch(&xs, &ys, &w)).unwrap();
        let corrected = backprop_weighted_corrected(&net, &batch(&xs, &ys, &w), &Matrix::identity(3)).unwrap();
        assert_eq!(plain, corrected);
    }

    #[test]
    fn empty_batch_and_bad_label_are_errors() {
        let (net, xs, _) = fixture(6);
        assert!(backprop_weighted(&net, &[]).is_err());
        let bad = [WeightedSample { x: &xs[0][..], y: 3, weight: 1.0 }];
        assert!(matches!(backprop_weighted(&net, &bad), Err(crate::Error::Structural(_))));
        let wrong_dim = Matrix::identity(4);
        let ok = [WeightedSample { x: &xs[0][..], y: 0, weight: 1.0 }];
        assert!(backprop_weighted_corrected(&net, &ok, &wrong_dim).is_err());
    }
}
