//! Non-adaptive top-eigenvector estimation for bounded-entry PSD matrices.
//!
//! Sample each column with probability `p`, fetch those columns `C = A S`, and
//! maximize the generalized Rayleigh quotient
//! `x^T (C^T C) x / x^T (S^T A S) x` over the sample space. The returned
//! vector is `C x / ||C x||`, half a power-method step past `A^{1/2} S x`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{symmetric_eigen, SymmetricMatrixOracle};
use crate::par;
use crate::uniform::bernoulli_indices;

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Empty samples are redrawn this many times before giving up.
pub const MAX_RETRIES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSample {
    pub columns: Vec<usize>,
    pub p: f64,
}

/// `S^T A S` and `S^T A^2 S`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramPair {
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
}

pub fn draw_columns<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<ColumnSample> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::config("p", format!("must lie in (0, 1], got {p}")));
    }
    Ok(ColumnSample {
        columns: bernoulli_indices(n, p, rng),
        p,
    })
}

/// Fetches the sampled columns `C = A S` (`n x m`) and forms the Gram pair.
///
/// An entry `A[c_a][c_b]` with both indices sampled is read once, so the
/// charge is `n m - m (m - 1) / 2`.
pub fn fetch_columns(
    oracle: &SymmetricMatrixOracle,
    sample: &ColumnSample,
) -> Result<DMatrix<f64>> {
    let n = oracle.n();
    let cols = &sample.columns;
    if cols.is_empty() {
        return Err(Error::DegenerateSample("no columns sampled".into()));
    }
    if let Some(&bad) = cols.iter().find(|&&c| c >= n) {
        return Err(Error::Range { i: bad, j: bad, n });
    }
    // position of each sampled index, for symmetric reuse
    let mut pos = vec![usize::MAX; n];
    for (a, &c) in cols.iter().enumerate() {
        pos[c] = a;
    }
    let m = cols.len();
    let fetched = par::map_range(m, |b| {
        (0..n)
            .map(|i| {
                let a = pos[i];
                if a < b {
                    f64::NAN // filled from column a below
                } else {
                    oracle.fetch(i, cols[b])
                }
            })
            .collect::<Vec<_>>()
    });
    let mut c = DMatrix::from_fn(n, m, |i, b| fetched[b][i]);
    for b in 0..m {
        for a in 0..b {
            c[(cols[a], b)] = c[(cols[b], a)];
        }
    }
    Ok(c)
}

pub fn gram_pair_from_columns(columns: &DMatrix<f64>, sample: &ColumnSample) -> GramPair {
    let m = sample.columns.len();
    let g1 = DMatrix::from_fn(m, m, |a, b| {
        let v = columns[(sample.columns[a], b)];
        let w = columns[(sample.columns[b], a)];
        0.5 * (v + w)
    });
    let g2 = columns.transpose() * columns;
    let g2 = (&g2 + g2.transpose()) * 0.5;
    GramPair { g1, g2 }
}

pub fn build_gram_pair(oracle: &SymmetricMatrixOracle, sample: &ColumnSample) -> Result<GramPair> {
    let c = fetch_columns(oracle, sample)?;
    Ok(gram_pair_from_columns(&c, sample))
}

/// Maximizes `x^T G2 x / x^T G1 x` over the range of `G1`.
///
/// Eigenpairs of `G1` below `rank_tol * lambda_max(G1)` are discarded; `G2`
/// is whitened in the remaining basis and its top eigenvector mapped back.
/// The returned `x` satisfies `x^T G1 x = 1`.
pub fn max_generalized_rayleigh(pair: &GramPair, rank_tol: f64) -> Result<(DVector<f64>, f64)> {
    let m = pair.g1.nrows();
    if m == 0 || pair.g2.nrows() != m {
        return Err(Error::Shape(format!(
            "gram pair shapes {}x{} / {}x{}",
            pair.g1.nrows(),
            pair.g1.ncols(),
            pair.g2.nrows(),
            pair.g2.ncols()
        )));
    }
    let (vals, vecs) = symmetric_eigen(&pair.g1);
    let top = vals[0];
    if !(top > 0.0) {
        return Err(Error::DegenerateSample(
            "S^T A S is numerically zero".into(),
        ));
    }
    let keep: Vec<usize> = (0..m).filter(|&j| vals[j] > rank_tol * top).collect();
    let r = keep.len();
    // W = Q_r diag(lambda_r)^{-1/2}
    let w = DMatrix::from_fn(m, r, |i, c| vecs[(i, keep[c])] / vals[keep[c]].sqrt());
    let whitened = w.transpose() * &pair.g2 * &w;
    let whitened = (&whitened + whitened.transpose()) * 0.5;
    let (wvals, wvecs) = symmetric_eigen(&whitened);
    let y = wvecs.column(0).into_owned();
    let x = &w * y;
    Ok((x, wvals[0]))
}

#[derive(Debug, Clone)]
pub struct EigvecOutcome {
    /// Unit vector `A S x / ||A S x||`.
    pub u: DVector<f64>,
    /// `u^T A u`.
    pub rayleigh: f64,
    /// Attained generalized quotient.
    pub quotient: f64,
    pub sample: ColumnSample,
    pub attempts: usize,
}

/// Approximate top eigenvector with `u^T A u >= lambda_1 - eps n` (w.p. 3/4
/// for suitable `c_col`). `p = min(1, c_col / (eps n))`.
///
/// `u^T A u` costs one extra pass over the matrix, charged to the ledger.
pub fn top_eigenvector<R: Rng + ?Sized>(
    oracle: &SymmetricMatrixOracle,
    epsilon: f64,
    c_col: f64,
    rng: &mut R,
) -> Result<EigvecOutcome> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config(
            "epsilon",
            format!("must lie in (0, 1), got {epsilon}"),
        ));
    }
    if !(c_col > 0.0) {
        return Err(Error::config("c_col", "must be positive"));
    }
    let n = oracle.n();
    let p = (c_col / (epsilon * n as f64)).min(1.0);
    let mut last_err = None;
    for attempt in 1..=MAX_RETRIES {
        let sample = draw_columns(n, p, rng)?;
        if sample.columns.is_empty() {
            last_err = Some(Error::DegenerateSample(format!(
                "empty column sample after {attempt} attempts"
            )));
            continue;
        }
        let c = fetch_columns(oracle, &sample)?;
        let pair = gram_pair_from_columns(&c, &sample);
        let (x, quotient) = match max_generalized_rayleigh(&pair, DEFAULT_RANK_TOL) {
            Ok(v) => v,
            Err(e @ Error::DegenerateSample(_)) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let v = &c * x;
        let norm = v.norm();
        if !(norm > 0.0) {
            last_err = Some(Error::DegenerateSample("A S x vanished".into()));
            continue;
        }
        let u = v / norm;
        let rayleigh = quadratic_form(oracle, &u);
        return Ok(EigvecOutcome {
            u,
            rayleigh,
            quotient,
            sample,
            attempts: attempt,
        });
    }
    Err(last_err.unwrap_or_else(|| Error::DegenerateSample("no attempts made".into())))
}

/// `u^T A u`, reading the upper triangle once (`n (n + 1) / 2` queries).
pub fn quadratic_form(oracle: &SymmetricMatrixOracle, u: &DVector<f64>) -> f64 {
    let n = oracle.n();
    par::map_range(n, |i| {
        let diag = oracle.fetch(i, i) * u[i] * u[i];
        let off: f64 = ((i + 1)..n).map(|j| oracle.fetch(i, j) * u[j]).sum();
        diag + 2.0 * u[i] * off
    })
    .into_iter()
    .sum()
}
