//! Validation-driven choice of the ascent scale `γ`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::experiment::{prepare, run_prepared, ExperimentResult};

/// `{0, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1}`.
pub const DEFAULT_GAMMA_GRID: [f64; 8] = [0.0, 0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0];

#[derive(Debug, Clone)]
pub struct GammaRun {
    pub gamma: f64,
    pub result: ExperimentResult,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub chosen_gamma: f64,
    pub runs: Vec<GammaRun>,
}

impl SweepResult {
    pub fn chosen(&self) -> &GammaRun {
        self.runs
            .iter()
            .find(|r| r.gamma == self.chosen_gamma)
            .expect("chosen gamma comes from the runs")
    }
}

/// Argmax of validation accuracy; ties go to the smaller `γ`.
pub fn select_gamma(scores: &[(f64, f64)]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &(gamma, acc) in scores {
        best = match best {
            Some((g, a)) if a > acc || (a == acc && g <= gamma) => Some((g, a)),
            _ => Some((gamma, acc)),
        };
    }
    best.map(|(g, _)| g)
}

pub fn gamma_csv_path(dir: &Path, name: &str, gamma: f64) -> PathBuf {
    dir.join(format!("{name}_gamma{gamma}.csv"))
}

/// Runs `base` once per grid value (in parallel) on one shared dataset.
pub fn sweep_gamma(base: &ExperimentConfig, grid: &[f64], out_dir: Option<&Path>) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(LabError::config("grid", "empty gamma grid"));
    }
    if let Some(bad) = grid.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(LabError::config("grid", format!("gamma {bad} outside [0, 1]")));
    }
    let prepared = prepare(base)?;
    if prepared.data.validation.is_empty() {
        return Err(LabError::config("data.validation", "a gamma sweep needs a non-empty validation split"));
    }
    let runs = grid
        .par_iter()
        .map(|&gamma| {
            let mut config = base.clone();
            config.train.gamma = gamma;
            config.name = format!("{}_gamma{gamma}", base.name);
            let csv = out_dir.map(|d| gamma_csv_path(d, &base.name, gamma));
            run_prepared(&config, &prepared, csv.as_deref()).map(|result| GammaRun { gamma, result })
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<(f64, f64)> = runs
        .iter()
        .map(|r| (r.gamma, r.result.summary.validation_accuracy.unwrap_or(f64::NEG_INFINITY)))
        .collect();
    let chosen_gamma = select_gamma(&scores).expect("grid is non-empty");
    Ok(SweepResult { chosen_gamma, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_breaks_ties_toward_small_gamma() {
        assert_eq!(select_gamma(&[(0.5, 0.9), (0.1, 0.9), (1.0, 0.8)]), Some(0.1));
        assert_eq!(select_gamma(&[(0.0, 0.7), (0.05, 0.71)]), Some(0.05));
        assert_eq!(select_gamma(&[(0.0, 0.3)]), Some(0.0));
        assert_eq!(select_gamma(&[]), None);
    }

    #[test]
    fn default_grid_has_eight_points() {
        assert_eq!(DEFAULT_GAMMA_GRID.len(), 8);
        assert!(DEFAULT_GAMMA_GRID.windows(2).all(|w| w[0] < w[1]));
    }
}
