mod common;

use common::random_net;
use pumpout_core::correction::backward_loss;
use pumpout_core::nn::{
    backprop_objective, backprop_weighted, backprop_weighted_corrected, finite_diff_gradient, loss_vector,
    relative_error, sample_loss, Activation, GradientAccumulator, GradientSet, Network, Objective, WeightedSample,
};
use pumpout_core::noise::{pair_flip, symmetry_flip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-5;
const FD_FLOOR: f64 = 1e-5;
const FD_TOLERANCE: f64 = 1e-4;

struct Case {
    net: Network<f64>,
    xs: Vec<Vec<f64>>,
    ys: Vec<usize>,
    ws: Vec<f64>,
}

fn case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let act = if seed.is_multiple_of(2) { Activation::Softsign } else { Activation::LeakyRelu };
    let input = rng.gen_range(2..7);
    let hidden: Vec<usize> = (0..rng.gen_range(1..3)).map(|_| rng.gen_range(3..9)).collect();
    let net = random_net(seed, input, &hidden, 5, act);
    let b = rng.gen_range(3..9);
    let xs = (0..b).map(|_| (0..input).map(|_| rng.gen_range(-1.5..1.5)).collect()).collect();
    let ys = (0..b).map(|_| rng.gen_range(0..5)).collect();
    let ws = (0..b).map(|_| if rng.gen_bool(0.3) { -0.3 } else { 1.0 }).collect();
    Case { net, xs, ys, ws }
}

fn batch<'a>(c: &'a Case) -> Vec<WeightedSample<'a, f64>> {
    c.xs.iter()
        .zip(&c.ys)
        .zip(&c.ws)
        .map(|((x, &y), &weight)| WeightedSample { x, y, weight })
        .collect()
}

fn worst_relative(a: &GradientSet<f64>, b: &GradientSet<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| relative_error(*x, *y, FD_FLOOR)).fold(0.0, f64::max)
}

#[test]
fn plain_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let c = case(seed);
        let analytic = backprop_weighted(&c.net, &batch(&c)).unwrap();
        let numeric = finite_diff_gradient(
            &c.net,
            |n| {
                let total: f64 = c.xs.iter().zip(&c.ys).zip(&c.ws).map(|((x, &y), w)| w * sample_loss(n, x, y).unwrap()).sum();
                total / c.xs.len() as f64
            },
            FD_STEP,
        );
        let err = worst_relative(&analytic, &numeric);
        assert!(err < FD_TOLERANCE, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn corrected_gradient_matches_finite_differences() {
    let matrices = [pair_flip(5, 0.45).unwrap(), symmetry_flip(5, 0.5).unwrap(), symmetry_flip(5, 0.2).unwrap()];
    for seed in 0..20 {
        let c = case(seed);
        let t_inv = matrices[seed as usize % 3].inverse();
        let analytic = backprop_weighted_corrected(&c.net, &batch(&c), t_inv).unwrap();
        let numeric = finite_diff_gradient(
            &c.net,
            |n| {
                let total: f64 = c
                    .xs
                    .iter()
                    .zip(&c.ys)
                    .zip(&c.ws)
                    .map(|((x, &y), w)| w * backward_loss(&loss_vector(&n.forward(x).unwrap()).unwrap(), y, t_inv).unwrap())
                    .sum();
                total / c.xs.len() as f64
            },
            FD_STEP,
        );
        let err = worst_relative(&analytic, &numeric);
        assert!(err < FD_TOLERANCE, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn per_sample_loop_equals_weighted_batch() {
    let t = pair_flip(5, 0.45).unwrap();
    for seed in 0..50u64 {
        let mut c = case(seed);
        let gamma = [0.001, 0.05, 0.5, 1.0][seed as usize % 4];
        for w in &mut c.ws {
            if *w < 0.0 {
                *w = -gamma;
            }
        }
        for objective in [Objective::Observed, Objective::Corrected(t.inverse())] {
            let batched = backprop_objective(&c.net, &batch(&c), objective).unwrap();
            let mut looped = GradientSet::zeros_like(&c.net);
            for ((x, &y), &w) in c.xs.iter().zip(&c.ys).zip(&c.ws) {
                let mut acc = GradientAccumulator::new(&c.net);
                acc.add_sample(&c.net, x, y, objective, 1.0).unwrap();
                looped.add_scaled(acc.sum(), w);
            }
            looped.scale(1.0 / c.xs.len() as f64);
            let diff = batched.max_abs_diff(&looped);
            assert!(diff <= 1e-12, "seed {seed}: {diff:e}");
        }
    }
}

#[test]
fn ascent_is_negated_scaled_descent() {
    for seed in 0..10 {
        let c = case(seed);
        for gamma in [0.0, 0.001, 0.05, 1.0] {
            let mut fit = GradientAccumulator::new(&c.net);
            fit.add_sample(&c.net, &c.xs[0], c.ys[0], Objective::Observed, 1.0).unwrap();
            let mut asc = GradientAccumulator::new(&c.net);
            asc.add_sample(&c.net, &c.xs[0], c.ys[0], Objective::Observed, -gamma).unwrap();
            // The weight enters before backpropagation, so rounding may differ in the last place.
            for (a, f) in asc.sum().iter().zip(fit.sum().iter()) {
                assert!((*a + gamma * *f).abs() <= 1e-12, "{a} vs {}", -gamma * *f);
            }
        }
    }
}

#[test]
fn batch_mean_divides_by_batch_length_not_weight_mass() {
    let c = case(3);
    let mut weights = c.ws.clone();
    weights.iter_mut().skip(1).for_each(|w| *w = 0.0);
    let b: Vec<_> = c.xs.iter().zip(&c.ys).zip(&weights).map(|((x, &y), &weight)| WeightedSample { x, y, weight }).collect();
    let g = backprop_weighted(&c.net, &b).unwrap();
    let mut single = GradientAccumulator::new(&c.net);
    single.add_sample(&c.net, &c.xs[0], c.ys[0], Objective::Observed, weights[0]).unwrap();
    let expected = single.mean(c.xs.len());
    assert!(g.max_abs_diff(&expected) <= 1e-15);
}

#[test]
fn identity_correction_is_bitwise_plain() {
    let t = symmetry_flip(5, 0.0).unwrap();
    for seed in 0..10 {
        let c = case(seed);
        let plain = backprop_weighted(&c.net, &batch(&c)).unwrap();
        let corrected = backprop_weighted_corrected(&c.net, &batch(&c), t.inverse()).unwrap();
        assert_eq!(plain, corrected);
    }
}
