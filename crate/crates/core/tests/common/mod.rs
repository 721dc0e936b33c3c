#![allow(dead_code)]

use pumpout_core::nn::{Activation, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Points near scaled one-hot class means with uniform jitter.
pub fn clusters(k: usize, n: usize, dim: usize, jitter: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % k;
        let x = (0..dim)
            .map(|d| if d % k == y { 1.0 } else { 0.0 } + rng.gen_range(-jitter..jitter))
            .collect();
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}

/// Each label replaced by a uniformly random other class with probability `rate`.
pub fn flip(labels: &[usize], k: usize, rate: f64, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels
        .iter()
        .map(|&y| if rng.gen_bool(rate) { (y + rng.gen_range(1..k)) % k } else { y })
        .collect()
}

pub fn random_net(seed: u64, input: usize, hidden: &[usize], classes: usize, act: Activation) -> Network<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Network::mlp(input, hidden, classes, act, &mut rng).unwrap()
}

pub fn max_param_diff(a: &Network<f64>, b: &Network<f64>) -> f64 {
    a.params().zip(b.params()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
