//! Dense measurement operators, seeded random ensembles and planted sparse
//! signals.
//!
//! All random generation uses ChaCha20 (`rand_chacha` 0.9) seeded through
//! `SeedableRng::seed_from_u64`, with Gaussian draws from `rand_distr` 0.5's
//! `StandardNormal`. Every generator is a pure function of its dimensions and
//! seed, so a trial can be regenerated anywhere from its recorded seed.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{check_finite, check_len, Error, Result};
use crate::vecops::{dot, norm2};

/// A dense `n × N` real matrix `A` with `n ≤ N`, stored row-major, that
/// counts how many forward (`Au`) and adjoint (`Aᵀv`) products it performs.
#[derive(Debug)]
pub struct MeasurementOperator {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    forward_count: AtomicU64,
    adjoint_count: AtomicU64,
}

impl Clone for MeasurementOperator {
    fn clone(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.clone(),
            forward_count: AtomicU64::new(self.forward_count()),
            adjoint_count: AtomicU64::new(self.adjoint_count()),
        }
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!(
            "operator must be non-empty, got {rows}x{cols}"
        )));
    }
    if rows > cols {
        return Err(Error::Dimension(format!(
            "operator must be underdetermined (n <= N), got {rows}x{cols}"
        )));
    }
    Ok(())
}

impl MeasurementOperator {
    /// Wraps a row-major `rows × cols` matrix.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        check_len("matrix data", data.len(), rows * cols)?;
        check_finite("matrix data", &data)?;
        Ok(Self {
            rows,
            cols,
            data,
            forward_count: AtomicU64::new(0),
            adjoint_count: AtomicU64::new(0),
        })
    }

    /// `n × N` matrix with i.i.d. `N(0, 1/n)` entries, so each column has unit
    /// expected squared norm. Entries are drawn in row-major order.
    pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Result<Self> {
        check_dims(rows, cols)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let scale = 1.0 / (rows as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self::from_row_major(rows, cols, data)
    }

    /// Number of measurements `n`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Ambient dimension `N`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols) {
            for (s, a) in sq.iter_mut().zip(row) {
                *s += a * a;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Computes `Au`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.rows];
        self.apply_into(u, &mut out)?;
        Ok(out)
    }

    /// Computes `Aᵀv`.
    pub fn apply_adjoint(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.cols];
        self.apply_adjoint_into(v, &mut out)?;
        Ok(out)
    }

    /// Writes `Au` into `out`.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("forward input", u.len(), self.cols)?;
        check_len("forward output", out.len(), self.rows)?;
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, u);
        }
        self.forward_count.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Writes `Aᵀv` into `out`.
    pub fn apply_adjoint_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        check_len("adjoint input", v.len(), self.rows)?;
        check_len("adjoint output", out.len(), self.cols)?;
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&vi, row) in v.iter().zip(self.data.chunks_exact(self.cols)) {
            if vi != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += vi * a;
                }
            }
        }
        self.adjoint_count.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    pub fn forward_count(&self) -> u64 {
        self.forward_count.load(Ordering::Relaxed)
    }

    pub fn adjoint_count(&self) -> u64 {
        self.adjoint_count.load(Ordering::Relaxed)
    }

    /// Total matrix-vector products performed so far.
    pub fn products(&self) -> u64 {
        self.forward_count() + self.adjoint_count()
    }

    pub fn reset_counters(&self) {
        self.forward_count.store(0, Ordering::Relaxed);
        self.adjoint_count.store(0, Ordering::Relaxed);
    }
}

/// A planted `k`-sparse vector. `support` is sorted ascending and 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    pub values: Vec<f64>,
    pub support: Vec<usize>,
    pub seed: u64,
}

impl SparseSignal {
    /// Support of size exactly `k`, drawn uniformly without replacement, with
    /// i.i.d. standard Gaussian amplitudes. `k = 0` is rejected.
    pub fn random(len: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Dimension("sparsity k must be positive".into()));
        }
        if k > len {
            return Err(Error::Dimension(format!(
                "sparsity k = {k} exceeds signal length {len}"
            )));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut support = index::sample(&mut rng, len, k).into_vec();
        support.sort_unstable();
        let mut values = vec![0.0; len];
        for &i in &support {
            // Redraw the (measure-zero) exact zero so the support stays exact.
            let mut a: f64 = rng.sample(StandardNormal);
            while a == 0.0 {
                a = rng.sample(StandardNormal);
            }
            values[i] = a;
        }
        Ok(Self {
            values,
            support,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }
}

/// Observed data `y = Ax + e` together with the noise bound `‖e‖₂ ≤ ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub y: Vec<f64>,
    pub epsilon: f64,
}

impl Measurement {
    pub fn new(y: Vec<f64>, epsilon: f64) -> Result<Self> {
        check_finite("measurements", &y)?;
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        Ok(Self { y, epsilon })
    }

    /// Noiseless measurement `y = Ax` with target `ε = epsilon_rel · ‖y‖₂`.
    pub fn noiseless(
        op: &MeasurementOperator,
        signal: &SparseSignal,
        epsilon_rel: f64,
    ) -> Result<Self> {
        let y = op.apply(&signal.values)?;
        let eps = epsilon_rel * norm2(&y);
        Self::new(y, eps)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}
