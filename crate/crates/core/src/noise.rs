//! Label transition matrices `T[i][j] = Pr(noisy = j | clean = i)`, their
//! inverses, and seeded label corruption.

use rand::Rng;

use crate::error::{domain, structural, Result};
use crate::matrix::Matrix;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;

/// Row-sum tolerance for a stochastic matrix (double precision).
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;
/// Smallest admissible `|det T|`.
pub const MIN_ABS_DET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    Pair,
    Symmetry,
    Custom,
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseKind::Pair => "pair",
            NoiseKind::Symmetry => "symmetry",
            NoiseKind::Custom => "custom",
        })
    }
}

/// Row-stochastic, non-singular `k × k` matrix with its inverse cached.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<S> {
    entries: Matrix<S>,
    inverse: Matrix<S>,
    kind: NoiseKind,
    tau: S,
}

impl<S: Scalar> TransitionMatrix<S> {
    /// Validates and inverts an arbitrary matrix.
    pub fn new(entries: Matrix<S>, kind: NoiseKind, tau: S) -> Result<Self> {
        let k = entries.dim();
        if k < 2 {
            return Err(domain!("transition matrix needs at least 2 classes, got {k}"));
        }
        let tol = S::tolerance(ROW_SUM_TOLERANCE);
        for (i, row) in entries.rows().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < S::zero()) {
                return Err(domain!("row {i} has a negative or non-finite entry"));
            }
            let sum = row.iter().fold(S::zero(), |a, b| a + *b);
            if (sum - S::one()).abs() > tol {
                return Err(domain!("row {i} sums to {sum}, expected 1"));
            }
        }
        let inverse = invert(&entries)?;
        Ok(Self { entries, inverse, kind, tau })
    }

    /// Custom matrix; `tau` is reported as the mean off-diagonal mass per row.
    pub fn custom(entries: Matrix<S>) -> Result<Self> {
        let k = entries.dim();
        let diag = (0..k).fold(S::zero(), |a, i| a + entries.get(i, i));
        let tau = S::one() - diag / S::lit(k.max(1) as f64);
        Self::new(entries, NoiseKind::Custom, tau)
    }

    pub fn identity(k: usize) -> Result<Self> {
        Self::new(Matrix::identity(k), NoiseKind::Custom, S::zero())
    }

    /// Parses `k` on the first line followed by `k` rows of `k` decimals.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| structural!("empty transition matrix file"))?;
        let k: usize = header
            .parse()
            .map_err(|_| structural!("first line must be the class count, got {header:?}"))?;
        let mut rows = Vec::with_capacity(k);
        for (i, line) in lines.enumerate() {
            let row = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map(S::lit)
                        .map_err(|_| structural!("row {}: cannot parse {t:?} as a decimal", i + 1))
                })
                .collect::<Result<Vec<S>>>()?;
            if row.len() != k {
                return Err(structural!("row {} has {} entries, expected {k}", i + 1, row.len()));
            }
            rows.push(row);
        }
        if rows.len() != k {
            return Err(structural!("expected {k} rows, found {}", rows.len()));
        }
        Self::custom(Matrix::from_rows(&rows)?)
    }

    pub fn classes(&self) -> usize {
        self.entries.dim()
    }

    pub fn entries(&self) -> &Matrix<S> {
        &self.entries
    }

    pub fn inverse(&self) -> &Matrix<S> {
        &self.inverse
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn tau(&self) -> S {
        self.tau
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.entries.get(i, j)
    }

    pub fn is_identity(&self) -> bool {
        self.entries == Matrix::identity(self.classes())
    }
}

/// Pair flipping: `1 - tau` on the diagonal, `tau` on `(i, i+1 mod k)`.
pub fn pair_flip<S: Scalar>(k: usize, tau: S) -> Result<TransitionMatrix<S>> {
    pair_flip_with(k, tau, false)
}

/// [`pair_flip`] that optionally admits `tau >= 0.5`, where the flipped class
/// becomes the majority.
pub fn pair_flip_with<S: Scalar>(k: usize, tau: S, allow_majority_flip: bool) -> Result<TransitionMatrix<S>> {
    if k < 2 {
        return Err(domain!("pair flipping needs k >= 2, got {k}"));
    }
    let half = S::lit(0.5);
    if !(tau >= S::zero() && tau < S::one()) {
        return Err(domain!("noise rate {tau} outside [0, 1)"));
    }
    if tau >= half && !allow_majority_flip {
        return Err(domain!("pair noise rate {tau} >= 0.5 makes the wrong label the majority"));
    }
    let entries = Matrix::from_fn(k, |i, j| {
        if i == j {
            S::one() - tau
        } else if j == (i + 1) % k {
            tau
        } else {
            S::zero()
        }
    });
    TransitionMatrix::new(entries, NoiseKind::Pair, tau)
}

/// Symmetry flipping: `1 - tau` on the diagonal, `tau / (k - 1)` elsewhere.
pub fn symmetry_flip<S: Scalar>(k: usize, tau: S) -> Result<TransitionMatrix<S>> {
    if k < 2 {
        return Err(domain!("symmetry flipping needs k >= 2, got {k}"));
    }
    let singular_at = S::lit((k - 1) as f64 / k as f64);
    if !(tau >= S::zero() && tau < singular_at) {
        return Err(domain!("symmetric noise rate {tau} must lie in [0, {singular_at}) for k = {k}"));
    }
    let off = tau / S::lit((k - 1) as f64);
    let entries = Matrix::from_fn(k, |i, j| if i == j { S::one() - tau } else { off });
    TransitionMatrix::new(entries, NoiseKind::Symmetry, tau)
}

/// Inverse by partial-pivot elimination; rejects `|det| <= 1e-9`.
pub fn invert<S: Scalar>(t: &Matrix<S>) -> Result<Matrix<S>> {
    t.inverse_with_det(S::lit(MIN_ABS_DET)).map(|(inv, _)| inv)
}

/// Resamples each clean label from its row of `T` (inverse CDF, seeded).
pub fn corrupt<S: Scalar>(labels: &[usize], t: &TransitionMatrix<S>, seed: u64) -> Result<Vec<usize>> {
    let k = t.classes();
    if let Some(bad) = labels.iter().find(|&&y| y >= k) {
        return Err(structural!("label {bad} out of range for {k} classes"));
    }
    let cdf: Vec<Vec<f64>> = t
        .entries()
        .rows()
        .map(|row| {
            row.iter()
                .scan(0.0, |acc, p| {
                    *acc += p.to_f64_lossy();
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let mut rng = stream_rng(seed, Stream::Corruption);
    Ok(labels
        .iter()
        .map(|&y| {
            let u: f64 = rng.gen();
            let row = &cdf[y];
            let hit = row.iter().position(|c| u < *c);
            // u may exceed a row total that rounds below 1; fall back to the
            // last class with positive mass.
            hit.unwrap_or_else(|| {
                let entries = t.entries().row(y);
                entries.iter().rposition(|p| *p > S::zero()).unwrap_or(y)
            })
        })
        .collect())
}
