//! Query-counted access to symmetric matrices.
//!
//! A [`SymmetricMatrixOracle`] wraps either dense storage or an implicit entry
//! function and charges every logical entry or row-norm read to a
//! [`QueryLedger`]. Estimators only ever touch a matrix through the charged
//! accessors; reference computations (exact spectra, analysis checks) use the
//! uncharged `peek`/`materialize` path.

mod generate;
pub mod io;
mod spectrum;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par;

pub use generate::{generate, generate_dense, ImplicitMatrix, MatrixKind};
pub use spectrum::{
    exact_spectrum, exact_spectrum_capped, operator_norm, spectrum_error, symmetric_eigen,
    symmetric_eigenvalues, SpectrumEstimate,
};

/// Default cap on `n` for anything that materializes the full matrix.
pub const MATERIALIZATION_CAP: usize = 8192;

/// Relative tolerance used when validating symmetry of loaded matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// An implicitly defined symmetric matrix.
///
/// Implementations must return `entry(i, j) == entry(j, i)` exactly.
pub trait EntrySource: Send + Sync {
    fn dim(&self) -> usize;

    fn entry(&self, i: usize, j: usize) -> f64;

    fn row_norm_sq(&self, i: usize) -> f64 {
        (0..self.dim()).map(|j| self.entry(i, j).powi(2)).sum()
    }

    fn frobenius_sq(&self) -> f64 {
        par::map_range(self.dim(), |i| self.row_norm_sq(i))
            .into_iter()
            .sum()
    }

    /// Full spectrum (descending) when it is known in closed form.
    fn known_spectrum(&self) -> Option<Vec<f64>> {
        None
    }
}

pub enum Backend {
    Dense(DMatrix<f64>),
    Implicit(Box<dyn EntrySource>),
}

struct Shared {
    n: usize,
    backend: Backend,
    row_norms_sq: OnceLock<Vec<f64>>,
    frobenius_sq: OnceLock<f64>,
}

impl Shared {
    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.backend {
            Backend::Dense(m) => m[(i, j)],
            Backend::Implicit(src) => src.entry(i, j),
        }
    }

    fn row_norm_sq(&self, i: usize) -> f64 {
        if let Some(all) = self.row_norms_sq.get() {
            return all[i];
        }
        match &self.backend {
            Backend::Dense(m) => m.column(i).norm_squared(),
            Backend::Implicit(src) => src.row_norm_sq(i),
        }
    }

    fn all_row_norms_sq(&self) -> &[f64] {
        self.row_norms_sq
            .get_or_init(|| par::map_range(self.n, |i| self.row_norm_sq(i)))
    }

    fn frobenius_sq(&self) -> f64 {
        *self.frobenius_sq.get_or_init(|| match &self.backend {
            Backend::Dense(_) => self.all_row_norms_sq().iter().sum(),
            Backend::Implicit(src) => src.frobenius_sq(),
        })
    }
}

/// Counters of logical queries made against an oracle.
#[derive(Debug, Default)]
pub struct QueryLedger {
    entry_queries: AtomicU64,
    row_norm_queries: AtomicU64,
}

/// A point-in-time copy of a [`QueryLedger`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LedgerSnapshot {
    pub entry_queries: u64,
    pub row_norm_queries: u64,
}

impl QueryLedger {
    pub fn charge_entries(&self, count: u64) {
        self.entry_queries.fetch_add(count, Ordering::Relaxed);
    }

    pub fn charge_row_norms(&self, count: u64) {
        self.row_norm_queries.fetch_add(count, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            entry_queries: self.entry_queries.load(Ordering::Relaxed),
            row_norm_queries: self.row_norm_queries.load(Ordering::Relaxed),
        }
    }
}

/// Query interface to a symmetric `n x n` matrix.
///
/// Cloning shares both the matrix and the ledger; [`fork`](Self::fork) shares
/// the matrix with a fresh ledger, which is how concurrent trials keep their
/// accounting separate.
#[derive(Clone)]
pub struct SymmetricMatrixOracle {
    shared: Arc<Shared>,
    ledger: Arc<QueryLedger>,
}

impl std::fmt::Debug for SymmetricMatrixOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymmetricMatrixOracle")
            .field("n", &self.shared.n)
            .field("dense", &self.is_dense())
            .field("ledger", &self.ledger.snapshot())
            .finish()
    }
}

impl SymmetricMatrixOracle {
    fn from_backend(n: usize, backend: Backend) -> Self {
        SymmetricMatrixOracle {
            shared: Arc::new(Shared {
                n,
                backend,
                row_norms_sq: OnceLock::new(),
                frobenius_sq: OnceLock::new(),
            }),
            ledger: Arc::new(QueryLedger::default()),
        }
    }

    /// Wraps dense storage after checking symmetry to [`SYMMETRY_TOL`] and
    /// replacing the matrix by `(A + A^T) / 2`.
    pub fn from_dense(mut m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(Error::Shape(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                let gap = (a - b).abs();
                if !(gap <= SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0)) {
                    return Err(Error::NotSymmetric { i, j, gap });
                }
                let avg = 0.5 * (a + b);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        Ok(Self::from_backend(n, Backend::Dense(m)))
    }

    /// Dense oracle from row-major data.
    pub fn from_row_major(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Shape(format!(
                "expected {} values for n = {n}, got {}",
                n * n,
                data.len()
            )));
        }
        Self::from_dense(DMatrix::from_row_slice(n, n, data))
    }

    pub fn from_source(source: Box<dyn EntrySource>) -> Self {
        let n = source.dim();
        Self::from_backend(n, Backend::Implicit(source))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_backend(n, Backend::Dense(DMatrix::identity(n, n)))
    }

    pub fn n(&self) -> usize {
        self.shared.n
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.shared.backend, Backend::Dense(_))
    }

    pub fn as_dense(&self) -> Option<&DMatrix<f64>> {
        match &self.shared.backend {
            Backend::Dense(m) => Some(m),
            Backend::Implicit(_) => None,
        }
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    /// Same matrix, fresh ledger.
    pub fn fork(&self) -> Self {
        SymmetricMatrixOracle {
            shared: Arc::clone(&self.shared),
            ledger: Arc::new(QueryLedger::default()),
        }
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        let n = self.n();
        if i >= n || j >= n {
            return Err(Error::Range { i, j, n });
        }
        Ok(())
    }

    /// Reads `A[i][j]` and charges one entry query.
    pub fn query_entry(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i, j)?;
        Ok(self.fetch(i, j))
    }

    /// Charged read without the range check, for estimator inner loops whose
    /// indices come from a validated draw.
    #[inline]
    pub(crate) fn fetch(&self, i: usize, j: usize) -> f64 {
        self.ledger.charge_entries(1);
        self.shared.entry(i, j)
    }

    /// Uncharged read. Reference computations only.
    #[inline]
    pub fn peek(&self, i: usize, j: usize) -> f64 {
        self.shared.entry(i, j)
    }

    /// `||A_i||_2`, charging one row-norm query.
    pub fn row_norm(&self, i: usize) -> Result<f64> {
        Ok(self.row_norm_sq(i)?.sqrt())
    }

    pub fn row_norm_sq(&self, i: usize) -> Result<f64> {
        self.check_index(i, i)?;
        self.ledger.charge_row_norms(1);
        Ok(self.shared.row_norm_sq(i))
    }

    /// All squared row norms, charging `n` row-norm queries.
    pub fn row_norms_sq(&self) -> Vec<f64> {
        self.ledger.charge_row_norms(self.n() as u64);
        self.shared.all_row_norms_sq().to_vec()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.shared.frobenius_sq().sqrt()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.shared.frobenius_sq()
    }

    /// Closed-form spectrum of an implicit generator, padded to length `n`.
    pub fn known_spectrum(&self) -> Option<SpectrumEstimate> {
        match &self.shared.backend {
            Backend::Implicit(src) => src
                .known_spectrum()
                .map(|v| SpectrumEstimate::padded(v, self.n())),
            Backend::Dense(_) => None,
        }
    }

    /// Uncharged dense copy, refused above `cap`.
    pub fn materialize(&self, cap: usize) -> Result<DMatrix<f64>> {
        let n = self.n();
        if let Some(m) = self.as_dense() {
            return Ok(m.clone());
        }
        if n > cap {
            return Err(Error::Capacity {
                what: "materialization",
                n,
                cap,
            });
        }
        let rows = par::map_range(n, |i| (0..n).map(|j| self.peek(i, j)).collect::<Vec<_>>());
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Dense oracle with the same entries (fresh ledger).
    pub fn to_dense(&self, cap: usize) -> Result<Self> {
        let m = self.materialize(cap)?;
        let n = m.nrows();
        Ok(Self::from_backend(n, Backend::Dense(m)))
    }

    /// `max |A_ij|`, uncharged. Quadratic; tests and validation only.
    pub fn max_abs_entry(&self) -> f64 {
        let n = self.n();
        par::map_range(n, |i| {
            (i..n).map(|j| self.peek(i, j).abs()).fold(0.0, f64::max)
        })
        .into_iter()
        .fold(0.0, f64::max)
    }
}
