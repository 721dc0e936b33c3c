mod common;

use common::{clusters, flip, max_param_diff, random_net};
use pumpout_core::metrics::EpochMetrics;
use pumpout_core::nn::{backprop_weighted, Activation, Objective, WeightedSample};
use pumpout_core::noise::{pair_flip, symmetry_flip, TransitionMatrix};
use pumpout_core::optim::{OptimizerKind, OptimizerState};
use pumpout_core::schedule::KeepSchedule;
use pumpout_core::train::{
    pumpout_epoch, train, train_bc, train_mentornet_lite, train_nnbc, train_pumpout_bc, train_pumpout_sl,
    train_standard, AllFitting, Algorithm, BatchLosses, EpochSpec, EvalSet, NonFitting, SmallLoss, TrainConfig,
    TrainingSet,
};
use pumpout_core::train::TrainOutcome;

struct Data {
    xs: Vec<Vec<f64>>,
    clean: Vec<usize>,
    noisy: Vec<usize>,
    test_xs: Vec<Vec<f64>>,
    test_ys: Vec<usize>,
}

impl Data {
    fn new(noise: f64) -> Self {
        let (xs, clean) = clusters(4, 400, 6, 0.6, 1);
        let noisy = flip(&clean, 4, noise, 2);
        let (test_xs, test_ys) = clusters(4, 200, 6, 0.6, 3);
        Self { xs, clean, noisy, test_xs, test_ys }
    }

    fn train(&self) -> TrainingSet<'_, f64> {
        TrainingSet { features: &self.xs, labels: &self.noisy, clean_labels: &self.clean, classes: 4 }
    }

    fn test(&self) -> EvalSet<'_, f64> {
        EvalSet { features: &self.test_xs, labels: &self.test_ys }
    }
}

fn config(epochs: usize) -> TrainConfig<f64> {
    TrainConfig { max_epochs: epochs, batch_size: 32, tau: 0.4, hidden: vec![16, 16], seed: 5, ..Default::default() }
}

fn assert_same(a: &TrainOutcome<f64>, b: &TrainOutcome<f64>) {
    assert!(max_param_diff(&a.network, &b.network) <= 1e-12);
    let acc = |m: &[EpochMetrics]| m.iter().map(|r| r.test_accuracy).collect::<Vec<_>>();
    assert_eq!(acc(&a.metrics), acc(&b.metrics));
}

#[test]
fn gamma_zero_pumpout_sl_is_mentornet_lite() {
    let d = Data::new(0.4);
    let c = TrainConfig { gamma: 0.0, ..config(5) };
    let a = train_pumpout_sl(&c, &d.train(), &d.test()).unwrap();
    let b = train_mentornet_lite(&c, &d.train(), &d.test()).unwrap();
    assert_eq!(a.network, b.network);
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn gamma_zero_pumpout_bc_is_nnbc() {
    let d = Data::new(0.4);
    let t = pair_flip(4, 0.4).unwrap();
    let c = TrainConfig { gamma: 0.0, ..config(5) };
    let a = train_pumpout_bc(&c, &d.train(), &d.test(), &t).unwrap();
    let b = train_nnbc(&c, &d.train(), &d.test(), &t).unwrap();
    assert_eq!(a.network, b.network);
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn identity_transition_reduces_correction_family_to_standard() {
    let d = Data::new(0.3);
    let t = TransitionMatrix::identity(4).unwrap();
    let c = config(5);
    let standard = train_standard(&c, &d.train(), &d.test()).unwrap();
    for out in [
        train_bc(&c, &d.train(), &d.test(), &t).unwrap(),
        train_nnbc(&c, &d.train(), &d.test(), &t).unwrap(),
        train_pumpout_bc(&c, &d.train(), &d.test(), &t).unwrap(),
    ] {
        assert_same(&out, &standard);
    }
}

#[test]
fn all_fitting_rule_with_ascent_is_standard() {
    let d = Data::new(0.3);
    let c = config(3);
    let standard = train_standard(&c, &d.train(), &d.test()).unwrap();
    // Re-run the epochs by hand with the same initial state and order.
    let mut init = pumpout_core::rng::stream_rng(c.seed, pumpout_core::rng::Stream::Init);
    let mut net = pumpout_core::nn::Network::mlp(6, &c.hidden, 4, c.activation, &mut init).unwrap();
    let mut opt = OptimizerState::new(c.optimizer, &net, c.learning_rate);
    let mut shuffle = pumpout_core::rng::stream_rng(c.seed, pumpout_core::rng::Stream::Shuffle);
    let mut order: Vec<usize> = (0..d.xs.len()).collect();
    for epoch in 1..=c.max_epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut shuffle);
        let spec = EpochSpec {
            epoch,
            batch_size: c.batch_size,
            objective: Objective::Observed,
            non_fitting: NonFitting::Ascend(0.7),
        };
        pumpout_epoch(&mut net, &mut opt, &d.train(), &order, &mut AllFitting, &spec).unwrap();
    }
    assert_eq!(net, standard.network);
}

#[test]
fn full_ascent_under_sgd_negates_descent() {
    let d = Data::new(0.3);
    let start = random_net(9, 6, &[16, 16], 4, Activation::Softsign);
    let order: Vec<usize> = (0..64).collect();
    let run = |rule_fits: bool| {
        let mut net = start.clone();
        let mut opt = OptimizerState::new(OptimizerKind::Sgd, &net, 0.1);
        let spec = EpochSpec { epoch: 1, batch_size: 64, objective: Objective::Observed, non_fitting: NonFitting::Ascend(1.0) };
        let mut rule = |b: &BatchLosses<'_, f64>| Ok(vec![rule_fits; b.observed.len()]);
        pumpout_epoch(&mut net, &mut opt, &d.train(), &order, &mut rule, &spec).unwrap();
        net
    };
    let descended = run(true);
    let ascended = run(false);
    for ((s, dn), up) in start.params().zip(descended.params()).zip(ascended.params()) {
        assert!(((up - s) + (dn - s)).abs() <= 1e-12);
    }
}

#[test]
fn first_epoch_keeps_122_of_128() {
    let (xs, clean) = clusters(4, 128 * 3, 6, 0.6, 7);
    let noisy = flip(&clean, 4, 0.5, 8);
    let data = TrainingSet { features: &xs, labels: &noisy, clean_labels: &clean, classes: 4 };
    let mut net = random_net(1, 6, &[8], 4, Activation::Softsign);
    let mut opt = OptimizerState::new(OptimizerKind::Adam, &net, 0.001);
    let mut rule = SmallLoss { schedule: KeepSchedule::new(0.5, 10).unwrap() };
    let order: Vec<usize> = (0..xs.len()).collect();
    let spec = EpochSpec { epoch: 1, batch_size: 128, objective: Objective::Observed, non_fitting: NonFitting::Ascend(0.05) };
    let report = pumpout_epoch(&mut net, &mut opt, &data, &order, &mut rule, &spec).unwrap();
    assert_eq!(report.decisions.len(), 3);
    for batch in &report.decisions {
        assert_eq!(batch.iter().filter(|d| d.fitting).count(), 122);
        assert!(batch.iter().all(|d| d.weight == if d.fitting { 1.0 } else { -0.05 }));
    }
}

#[test]
fn dropped_samples_still_count_in_the_divisor() {
    let d = Data::new(0.3);
    let start = random_net(4, 6, &[16, 16], 4, Activation::Softsign);
    let order: Vec<usize> = (0..40).collect();
    let keep = |i: usize| i % 3 == 0;
    let mut net = start.clone();
    let mut opt = OptimizerState::new(OptimizerKind::Sgd, &net, 1.0);
    let spec = EpochSpec { epoch: 1, batch_size: 40, objective: Objective::Observed, non_fitting: NonFitting::Drop };
    let mut rule = |b: &BatchLosses<'_, f64>| Ok((0..b.observed.len()).map(keep).collect());
    pumpout_epoch(&mut net, &mut opt, &d.train(), &order, &mut rule, &spec).unwrap();

    let batch: Vec<_> = order
        .iter()
        .map(|&i| WeightedSample { x: &d.xs[i], y: d.noisy[i], weight: if keep(i) { 1.0 } else { 0.0 } })
        .collect();
    let g = backprop_weighted(&start, &batch).unwrap();
    for ((s, n), g) in start.params().zip(net.params()).zip(g.iter()) {
        assert!(((s - n) - g).abs() <= 1e-12);
    }
}

#[test]
fn runs_are_reproducible_and_seed_sensitive() {
    let d = Data::new(0.4);
    let t = symmetry_flip(4, 0.4).unwrap();
    for algorithm in Algorithm::ALL {
        let c = TrainConfig { algorithm, ..config(3) };
        let a = train(&c, &d.train(), &d.test(), Some(&t)).unwrap();
        let b = train(&c, &d.train(), &d.test(), Some(&t)).unwrap();
        assert_eq!(a.network, b.network, "{algorithm}");
        assert_eq!(a.metrics, b.metrics, "{algorithm}");
        let other = train(&TrainConfig { seed: 6, ..c }, &d.train(), &d.test(), Some(&t)).unwrap();
        assert_ne!(a.network, other.network, "{algorithm}");
    }
}

#[test]
fn standard_fits_clean_separable_data() {
    let d = Data::new(0.0);
    let c = TrainConfig { max_epochs: 50, ..config(50) };
    let out = train_standard(&c, &d.train(), &d.test()).unwrap();
    let train_acc = pumpout_core::metrics::accuracy(&out.network, &d.xs, &d.clean).unwrap();
    assert!(train_acc > 0.95, "{train_acc}");
    assert_eq!(out.metrics.len(), 50);
}

#[test]
fn nnbc_reports_non_negative_losses_and_bc_may_not() {
    let d = Data::new(0.4);
    let t = pair_flip(4, 0.4).unwrap();
    let d = Data { noisy: pumpout_core::noise::corrupt(&d.clean, &t, 11).unwrap(), ..d };
    let c = config(30);
    let nn = train_nnbc(&c, &d.train(), &d.test(), &t).unwrap();
    assert!(nn.metrics.iter().all(|m| m.min_sample_loss >= 0.0 && m.mean_train_loss >= 0.0));
    let bc = train_bc(&c, &d.train(), &d.test(), &t).unwrap();
    assert!(bc.metrics.iter().any(|m| m.min_sample_loss < 0.0));
    assert!(bc.metrics.iter().all(|m| m.label_precision.is_none()));
}

#[test]
fn correction_without_matrix_is_rejected() {
    let d = Data::new(0.4);
    let c = TrainConfig { algorithm: Algorithm::PumpoutBc, ..config(1) };
    assert!(train(&c, &d.train(), &d.test(), None).is_err());
    let wrong = symmetry_flip(3, 0.2).unwrap();
    assert!(train(&c, &d.train(), &d.test(), Some(&wrong)).is_err());
}
