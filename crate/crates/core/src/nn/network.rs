use rand::Rng;

use crate::error::{numeric, structural, Result};
use crate::scalar::{dot, Scalar};

/// Negative-side slope of [`Activation::LeakyRelu`].
pub const LEAKY_RELU_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    /// `z / (1 + |z|)`
    Softsign,
    LeakyRelu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<S: Scalar>(self, z: S) -> S {
        match self {
            Activation::Softsign => z / (S::one() + z.abs()),
            Activation::LeakyRelu => {
                if z > S::zero() {
                    z
                } else {
                    z * S::lit(LEAKY_RELU_SLOPE)
                }
            }
            Activation::Identity => z,
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    #[inline]
    pub fn derivative<S: Scalar>(self, z: S) -> S {
        match self {
            Activation::Softsign => {
                let d = S::one() + z.abs();
                S::one() / (d * d)
            }
            Activation::LeakyRelu => {
                if z > S::zero() {
                    S::one()
                } else {
                    S::lit(LEAKY_RELU_SLOPE)
                }
            }
            Activation::Identity => S::one(),
        }
    }
}

/// One affine map followed by an elementwise activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<S> {
    pub(crate) inputs: usize,
    pub(crate) outputs: usize,
    /// Row-major `outputs × inputs`.
    pub(crate) weights: Vec<S>,
    pub(crate) bias: Vec<S>,
    pub(crate) activation: Activation,
}

impl<S: Scalar> Layer<S> {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<S>, bias: Vec<S>, activation: Activation) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(structural!("layer dimensions must be positive, got {outputs}x{inputs}"));
        }
        if weights.len() != inputs * outputs {
            return Err(structural!(
                "weight buffer has {} entries, expected {outputs}x{inputs}",
                weights.len()
            ));
        }
        if bias.len() != outputs {
            return Err(structural!("bias has {} entries, expected {outputs}", bias.len()));
        }
        Ok(Self { inputs, outputs, weights, bias, activation })
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Result<Self> {
        Self::new(inputs, outputs, vec![S::zero(); inputs * outputs], vec![S::zero(); outputs], activation)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [S] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[S] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [S] {
        &mut self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    #[inline]
    fn affine_into(&self, x: &[S], out: &mut Vec<S>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| dot(row, x) + *b),
        );
    }
}

/// Dense feedforward classifier whose last layer emits raw logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<S> {
    layers: Vec<Layer<S>>,
    class_count: usize,
}

/// Intermediate values of one forward pass, kept for reverse-mode differentiation.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache<S> {
    /// `inputs[l]` is the input fed to layer `l`.
    pub(crate) inputs: Vec<Vec<S>>,
    /// `pre[l]` is the pre-activation of layer `l`.
    pub(crate) pre: Vec<Vec<S>>,
    pub(crate) logits: Vec<S>,
}

impl<S: Scalar> ForwardCache<S> {
    pub fn logits(&self) -> &[S] {
        &self.logits
    }
}

impl<S: Scalar> Network<S> {
    pub fn new(layers: Vec<Layer<S>>) -> Result<Self> {
        let last = layers.last().ok_or_else(|| structural!("network needs at least one layer"))?;
        if last.activation != Activation::Identity {
            return Err(structural!("final layer must be Identity to emit logits"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(structural!(
                    "layer {i} emits {} values but layer {} expects {}",
                    pair[0].outputs,
                    i + 1,
                    pair[1].inputs
                ));
            }
        }
        let net = Self { class_count: last.outputs, layers };
        if net.params().any(|p| !p.is_finite()) {
            return Err(numeric!("network parameters must be finite"));
        }
        Ok(net)
    }

    /// Multilayer perceptron `input → hidden… → classes` with parameters drawn
    /// uniformly from `[-1/√fan_in, 1/√fan_in]`.
    pub fn mlp<R: Rng + ?Sized>(
        input: usize,
        hidden: &[usize],
        classes: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let sizes: Vec<usize> = std::iter::once(input).chain(hidden.iter().copied()).chain([classes]).collect();
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for (i, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let act = if i + 2 == sizes.len() { Activation::Identity } else { activation };
            let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
            let mut draw = || S::lit(rng.gen_range(-bound..=bound));
            let weights = (0..fan_in * fan_out).map(|_| draw()).collect();
            let bias = (0..fan_out).map(|_| draw()).collect();
            layers.push(Layer::new(fan_in, fan_out, weights, bias, act)?);
        }
        Self::new(layers)
    }

    /// Same shape as [`Network::mlp`] with every parameter zero.
    pub fn zeros(input: usize, hidden: &[usize], classes: usize, activation: Activation) -> Result<Self> {
        let sizes: Vec<usize> = std::iter::once(input).chain(hidden.iter().copied()).chain([classes]).collect();
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 2 == sizes.len() { Activation::Identity } else { activation };
                Layer::zeros(w[0], w[1], act)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<S>] {
        &mut self.layers
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters in a fixed order: per layer, weights then bias.
    pub fn params(&self) -> impl Iterator<Item = &S> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut S> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    fn check_input(&self, x: &[S]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(structural!(
                "feature vector has {} entries, network expects {}",
                x.len(),
                self.input_dim()
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[S]) -> Result<Vec<S>> {
        self.check_input(x)?;
        let mut current = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.affine_into(&current, &mut next);
            if layer.activation != Activation::Identity {
                for v in next.iter_mut() {
                    *v = layer.activation.apply(*v);
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        Ok(current)
    }

    /// Forward pass that records every layer input and pre-activation.
    pub fn forward_cached(&self, x: &[S]) -> Result<ForwardCache<S>> {
        let mut cache = ForwardCache::default();
        self.forward_into(x, &mut cache)?;
        Ok(cache)
    }

    pub(crate) fn forward_into(&self, x: &[S], cache: &mut ForwardCache<S>) -> Result<()> {
        self.check_input(x)?;
        let depth = self.layers.len();
        cache.inputs.resize_with(depth, Vec::new);
        cache.pre.resize_with(depth, Vec::new);
        cache.inputs[0].clear();
        cache.inputs[0].extend_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = cache.inputs.split_at_mut(l + 1);
            let pre = &mut cache.pre[l];
            layer.affine_into(&head[l], pre);
            if l + 1 < depth {
                let out = &mut tail[0];
                out.clear();
                out.extend(pre.iter().map(|z| layer.activation.apply(*z)));
            } else {
                cache.logits.clear();
                cache.logits.extend(pre.iter().map(|z| layer.activation.apply(*z)));
            }
        }
        Ok(())
    }

    /// Index of the largest logit; ties go to the smallest class index.
    pub fn predict(&self, x: &[S]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }
}

/// First index of the maximum entry.
pub fn argmax<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
