//! Building datasets from a config and running one training job.

use std::path::Path;
use std::time::Instant;

use pumpout_core::metrics::{accuracy, EpochMetrics};
use pumpout_core::noise::{pair_flip_with, symmetry_flip};
use pumpout_core::train::train_with;
use pumpout_core::TransitionMatrix;

use crate::config::{DataSource, ExperimentConfig, NoiseSpec};
use crate::dataset::{load_idx_mnist, synth_blobs, synth_blobs_sized, BlobSpec, DatasetBundle, NoisyDataset, SplitKind};
use crate::error::{LabError, Result};
use crate::metrics_csv::MetricsWriter;

/// Dataset with noise applied, plus the matrix that produced it.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub data: DatasetBundle,
    pub transition: Option<TransitionMatrix>,
}

pub fn build_transition(noise: &NoiseSpec, classes: usize) -> Result<Option<TransitionMatrix>> {
    let built = match noise {
        NoiseSpec::None => return Ok(None),
        NoiseSpec::Pair { rate, allow_majority_flip } => pair_flip_with(classes, *rate, *allow_majority_flip),
        NoiseSpec::Symmetry { rate } => symmetry_flip(classes, *rate),
        NoiseSpec::Custom { matrix } => {
            let text = std::fs::read_to_string(matrix).map_err(|e| LabError::io(matrix, e))?;
            let t = TransitionMatrix::parse(&text).map_err(|e| LabError::format(matrix, e.to_string()))?;
            return check_classes(t, classes);
        }
    };
    check_classes(built.map_err(|e| LabError::config("noise", e.to_string()))?, classes)
}

fn check_classes(t: TransitionMatrix, classes: usize) -> Result<Option<TransitionMatrix>> {
    if t.classes() != classes {
        return Err(LabError::config(
            "noise.matrix",
            format!("matrix has {} classes, data has {classes}", t.classes()),
        ));
    }
    Ok(Some(t))
}

fn split_off_validation(mut train: NoisyDataset, validation: usize) -> (NoisyDataset, NoisyDataset) {
    let keep = train.len().saturating_sub(validation);
    let held = NoisyDataset::new(
        SplitKind::Validation,
        train.features.split_off(keep),
        train.clean_labels.split_off(keep),
        train.classes,
        &train.provenance.source,
    );
    train.noisy_labels.truncate(keep);
    (train, held)
}

fn load_data(config: &ExperimentConfig) -> Result<DatasetBundle> {
    match &config.source {
        DataSource::Blobs { classes, per_class, dim, spread, sizes } => {
            let spec = BlobSpec {
                classes: *classes,
                per_class: *per_class,
                dim: *dim,
                spread: *spread,
                seed: config.data_seed,
            };
            let mut bundle = match sizes {
                Some(s) => synth_blobs_sized(&spec, *s)?,
                None => synth_blobs(&spec)?,
            };
            if let Some(limit) = config.train_limit {
                bundle.train.truncate(limit);
            }
            Ok(bundle)
        }
        DataSource::Mnist { train_images, train_labels, test_images, test_labels, test_limit, validation } => {
            let limit = config.train_limit.unwrap_or(usize::MAX);
            let full = load_idx_mnist(train_images, train_labels, limit.saturating_add(*validation))?;
            let (train, validation) = split_off_validation(full, *validation);
            let mut test = load_idx_mnist(test_images, test_labels, *test_limit)?;
            test.split = SplitKind::Test;
            Ok(DatasetBundle { train, validation, test })
        }
    }
}

/// Loads or generates the data and corrupts train and validation labels.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let mut data = load_data(config)?;
    if data.train.is_empty() {
        return Err(LabError::config("data", "training split is empty"));
    }
    if data.test.is_empty() {
        return Err(LabError::config("data", "test split is empty"));
    }
    let transition = build_transition(&config.noise, data.classes())?;
    if let Some(t) = &transition {
        data.apply_noise(t, config.noise_seed)?;
    }
    Ok(Prepared { data, transition })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub final_test_accuracy: Option<f64>,
    pub best_test_accuracy: Option<f64>,
    pub final_label_precision: Option<f64>,
    /// Final-network accuracy against the noisy validation labels.
    pub validation_accuracy: Option<f64>,
    pub train_noise_rate: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub metrics: Vec<EpochMetrics>,
    pub wall_clock_s: f64,
    pub summary: Summary,
}

/// Trains on prepared data, streaming rows to `csv` when given.
pub fn run_prepared(config: &ExperimentConfig, prepared: &Prepared, csv: Option<&Path>) -> Result<ExperimentResult> {
    let mut train_config = config.train.clone();
    if !config.explicit_tau {
        if let Some(t) = &prepared.transition {
            train_config.tau = t.tau();
        }
    }
    let mut writer = csv.map(MetricsWriter::create).transpose()?;
    let start = Instant::now();
    let mut csv_error = None;
    let data = &prepared.data;
    let outcome = train_with(
        &train_config,
        &data.train.training_set(),
        &data.test.clean_eval(),
        prepared.transition.as_ref(),
        |row, _| {
            if let Some(w) = writer.as_mut() {
                if let Err(e) = w.write(row, start.elapsed().as_secs_f64()) {
                    csv_error = Some(e);
                    return Err(pumpout_core::Error::Structural("metrics CSV write failed".into()));
                }
            }
            Ok(())
        },
    );
    if let Some(e) = csv_error {
        return Err(e);
    }
    let outcome = outcome?;
    let wall_clock_s = start.elapsed().as_secs_f64();
    let validation_accuracy = if data.validation.is_empty() {
        None
    } else {
        Some(accuracy(&outcome.network, &data.validation.features, &data.validation.noisy_labels)?)
    };
    let last = outcome.metrics.last();
    let summary = Summary {
        final_test_accuracy: last.and_then(|m| m.test_accuracy),
        best_test_accuracy: outcome.metrics.iter().filter_map(|m| m.test_accuracy).reduce(f64::max),
        final_label_precision: last.and_then(|m| m.label_precision),
        validation_accuracy,
        train_noise_rate: data.train.actual_noise_rate(),
    };
    Ok(ExperimentResult { config: ExperimentConfig { train: train_config, ..config.clone() }, metrics: outcome.metrics, wall_clock_s, summary })
}

pub fn run_experiment(config: &ExperimentConfig, csv: Option<&Path>) -> Result<ExperimentResult> {
    let prepared = prepare(config)?;
    run_prepared(config, &prepared, csv)
}

/// Parses the config file and runs it, writing the CSV named in the config.
pub fn run_experiment_file(path: &Path) -> Result<ExperimentResult> {
    let config = ExperimentConfig::from_file(path)?;
    let csv = config.output_csv.clone();
    run_experiment(&config, csv.as_deref())
}
