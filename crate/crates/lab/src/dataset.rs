//! Labelled splits with clean and noisy labels side by side.

use std::fmt;
use std::path::Path;

use pumpout_core::noise::{corrupt, NoiseKind};
use pumpout_core::rng::{stream_rng, Stream};
use pumpout_core::train::{EvalSet, TrainingSet};
use pumpout_core::TransitionMatrix;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{LabError, Result};
use crate::idx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitKind {
    Train,
    Validation,
    Test,
}

impl fmt::Display for SplitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitKind::Train => "train",
            SplitKind::Validation => "validation",
            SplitKind::Test => "test",
        })
    }
}

/// Where a split came from and how it was corrupted.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub source: String,
    pub noise: Option<(NoiseKind, f64)>,
    pub noise_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDataset {
    pub split: SplitKind,
    pub features: Vec<Vec<f64>>,
    pub clean_labels: Vec<usize>,
    pub noisy_labels: Vec<usize>,
    pub classes: usize,
    pub provenance: Provenance,
}

impl NoisyDataset {
    pub fn new(split: SplitKind, features: Vec<Vec<f64>>, labels: Vec<usize>, classes: usize, source: &str) -> Self {
        Self {
            split,
            features,
            noisy_labels: labels.clone(),
            clean_labels: labels,
            classes,
            provenance: Provenance { source: source.to_string(), noise: None, noise_seed: None },
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Resamples the noisy labels from the clean ones. Test splits refuse.
    pub fn apply_noise(&mut self, t: &TransitionMatrix, seed: u64) -> Result<()> {
        if self.split == SplitKind::Test {
            return Err(LabError::config("noise", "the test split is never corrupted"));
        }
        self.noisy_labels = corrupt(&self.clean_labels, t, seed)?;
        self.provenance.noise = Some((t.kind(), t.tau()));
        self.provenance.noise_seed = Some(seed);
        Ok(())
    }

    /// Share of samples whose noisy label differs from the clean one.
    pub fn actual_noise_rate(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let flipped = self.clean_labels.iter().zip(&self.noisy_labels).filter(|(c, n)| c != n).count();
        flipped as f64 / self.len() as f64
    }

    pub fn truncate(&mut self, len: usize) {
        self.features.truncate(len);
        self.clean_labels.truncate(len);
        self.noisy_labels.truncate(len);
    }

    pub fn training_set(&self) -> TrainingSet<'_, f64> {
        TrainingSet {
            features: &self.features,
            labels: &self.noisy_labels,
            clean_labels: &self.clean_labels,
            classes: self.classes,
        }
    }

    pub fn clean_eval(&self) -> EvalSet<'_, f64> {
        EvalSet { features: &self.features, labels: &self.clean_labels }
    }

    pub fn noisy_eval(&self) -> EvalSet<'_, f64> {
        EvalSet { features: &self.features, labels: &self.noisy_labels }
    }
}

/// Train, validation and test splits of one source.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub train: NoisyDataset,
    pub validation: NoisyDataset,
    pub test: NoisyDataset,
}

impl DatasetBundle {
    pub fn classes(&self) -> usize {
        self.train.classes
    }

    /// Corrupts train and validation; the test split keeps its clean labels.
    pub fn apply_noise(&mut self, t: &TransitionMatrix, seed: u64) -> Result<()> {
        self.train.apply_noise(t, seed)?;
        // A distinct seed keeps validation flips independent of the train flips.
        self.validation.apply_noise(t, seed.wrapping_add(0x9E37_79B9_7F4A_7C15))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitSizes {
    /// 70/10/20, with rounding slack going to the test split.
    pub fn proportional(total: usize) -> Self {
        let train = total * 7 / 10;
        let validation = total / 10;
        Self { train, validation, test: total - train - validation }
    }

    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Standard deviation of every coordinate around its class mean.
    pub spread: f64,
    pub seed: u64,
}

/// Unit-norm class means: an orthonormal set (a regular simplex up to
/// translation) when `dim >= classes`, a regular polygon in a random plane
/// otherwise.
fn blob_means(spec: &BlobSpec, rng: &mut impl rand::Rng) -> Vec<Vec<f64>> {
    let (k, d) = (spec.classes, spec.dim);
    let gaussian = |rng: &mut dyn rand::RngCore| -> Vec<f64> { (0..d).map(|_| StandardNormal.sample(rng)).collect() };
    let orthonormal = |count: usize, rng: &mut dyn rand::RngCore| -> Vec<Vec<f64>> {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
        while basis.len() < count {
            let mut v = gaussian(rng);
            for b in &basis {
                let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                basis.push(v.into_iter().map(|x| x / norm).collect());
            }
        }
        basis
    };
    if d >= k {
        return orthonormal(k, rng);
    }
    if d == 1 {
        return (0..k).map(|c| vec![2.0 * c as f64 / (k - 1).max(1) as f64 - 1.0]).collect();
    }
    let plane = orthonormal(2, rng);
    (0..k)
        .map(|c| {
            let angle = 2.0 * std::f64::consts::PI * c as f64 / k as f64;
            (0..d).map(|i| angle.cos() * plane[0][i] + angle.sin() * plane[1][i]).collect()
        })
        .collect()
}

/// Gaussian clusters split 70/10/20 into train/validation/test.
pub fn synth_blobs(spec: &BlobSpec) -> Result<DatasetBundle> {
    synth_blobs_sized(spec, SplitSizes::proportional(spec.classes * spec.per_class))
}

/// Gaussian clusters with explicit split sizes summing to `classes · per_class`.
pub fn synth_blobs_sized(spec: &BlobSpec, sizes: SplitSizes) -> Result<DatasetBundle> {
    if spec.classes < 2 {
        return Err(LabError::config("data.classes", "at least two classes are required"));
    }
    if spec.dim == 0 {
        return Err(LabError::config("data.dim", "dimension must be positive"));
    }
    if !(spec.spread.is_finite() && spec.spread >= 0.0) {
        return Err(LabError::config("data.spread", "spread must be finite and non-negative"));
    }
    let total = spec.classes * spec.per_class;
    if sizes.total() != total {
        return Err(LabError::config(
            "data.train",
            format!("split sizes sum to {} but {} points are generated", sizes.total(), total),
        ));
    }
    let mut rng = stream_rng(spec.seed, Stream::Data);
    let means = blob_means(spec, &mut rng);
    let mut points: Vec<(Vec<f64>, usize)> = Vec::with_capacity(total);
    for (class, mean) in means.iter().enumerate() {
        for _ in 0..spec.per_class {
            let x = mean
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + spec.spread * z
                })
                .collect();
            points.push((x, class));
        }
    }
    points.shuffle(&mut rng);
    let mut rest = points.into_iter();
    let mut take = |split: SplitKind, n: usize| {
        let (features, labels): (Vec<_>, Vec<_>) = rest.by_ref().take(n).unzip();
        NoisyDataset::new(split, features, labels, spec.classes, "blobs")
    };
    Ok(DatasetBundle {
        train: take(SplitKind::Train, sizes.train),
        validation: take(SplitKind::Validation, sizes.validation),
        test: take(SplitKind::Test, sizes.test),
    })
}

/// First `limit` records of an IDX image/label pair, pixels scaled to `[0, 1]`.
pub fn load_idx_mnist(images: &Path, labels: &Path, limit: usize) -> Result<NoisyDataset> {
    let img = idx::read_images(images, limit)?;
    let lab = idx::read_labels(labels, limit)?;
    if img.pixels.len() != lab.len() {
        return Err(LabError::format(
            labels,
            format!("{} labels for {} images in {}", lab.len(), img.pixels.len(), images.display()),
        ));
    }
    if let Some((i, bad)) = lab.iter().enumerate().find(|(_, l)| **l > 9) {
        return Err(LabError::format(labels, format!("label {bad} at offset {} is not a digit", 8 + i)));
    }
    let features = img
        .pixels
        .iter()
        .map(|row| row.iter().map(|p| f64::from(*p) / 255.0).collect())
        .collect();
    let labels = lab.iter().map(|l| usize::from(*l)).collect();
    Ok(NoisyDataset::new(SplitKind::Train, features, labels, 10, "mnist"))
}
