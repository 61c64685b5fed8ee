//! Squared row-norm sampling with entry zeroing.
//!
//! Rows are sampled with probability proportional to `||A_i||^2`, rescaled by
//! `1 / sqrt(p_i)`, and entries that would make the estimate high-variance are
//! zeroed first:
//!
//! * diagonal `(i, i)` when `||A_i||^2 <= (eps^2 / 4) ||A||_F^2`;
//! * off-diagonal `(i, j)` when
//!   `||A_i||^2 ||A_j||^2 <= eps^2 ||A||_F^2 A_ij^2 / (c_log ln^4 N)`.
//!
//! [`estimate_spectrum_restricted`] needs `s ||A_i||^2 / ||A||_F^2 <= 1` for
//! every row. [`estimate_spectrum_rownorm`] lifts that restriction by splitting
//! every row into `s` copies scaled by `1 / sqrt(s)` (the stack `U` of `s`
//! copies of `I_n / sqrt(s)`), which leaves the nonzero spectrum unchanged,
//! and sampling `Binomial(s, q_i)` copies of each index.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::config::clamped_ln;
use crate::error::{Error, Result};
use crate::matrix::{symmetric_eigenvalues, SpectrumEstimate, SymmetricMatrixOracle};
use crate::par;
use crate::uniform::SampleDraw;

/// Largest sampled matrix the split estimator will build.
pub const SPLIT_CAP: usize = 8192;

/// The entry-zeroing predicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroingRule {
    pub epsilon: f64,
    pub c_log: f64,
    /// Dimension `N` inside the `ln^4 N` factor.
    pub effective_dim: usize,
    /// `||A||_F^2` of the matrix the row norms refer to.
    pub frobenius_sq: f64,
}

impl ZeroingRule {
    pub fn new(epsilon: f64, c_log: f64, effective_dim: usize, frobenius_sq: f64) -> Self {
        ZeroingRule {
            epsilon,
            c_log,
            effective_dim,
            frobenius_sq,
        }
    }

    /// `c_log * ln^4(max(N, e))`.
    pub fn log_factor(&self) -> f64 {
        self.c_log * clamped_ln(self.effective_dim as f64).powi(4)
    }

    pub fn zeroes_diagonal(&self, row_norm_sq: f64) -> bool {
        row_norm_sq <= self.epsilon * self.epsilon / 4.0 * self.frobenius_sq
    }

    /// Zero entries are never reported as zeroed.
    pub fn zeroes_off_diagonal(&self, row_norm_sq_i: f64, row_norm_sq_j: f64, value: f64) -> bool {
        value != 0.0
            && row_norm_sq_i * row_norm_sq_j
                <= self.epsilon * self.epsilon * self.frobenius_sq * value * value
                    / self.log_factor()
    }

    /// `A'_ij` given the entry and the two squared row norms.
    pub fn apply(&self, diagonal: bool, row_norm_sq_i: f64, row_norm_sq_j: f64, value: f64) -> f64 {
        let zeroed = if diagonal {
            self.zeroes_diagonal(row_norm_sq_i)
        } else {
            self.zeroes_off_diagonal(row_norm_sq_i, row_norm_sq_j, value)
        };
        if zeroed {
            0.0
        } else {
            value
        }
    }
}

/// Whether `(i, j)` is zeroed in `A'`. Reads the entry only off the diagonal.
pub fn is_zeroed(
    oracle: &SymmetricMatrixOracle,
    rule: &ZeroingRule,
    i: usize,
    j: usize,
) -> Result<bool> {
    let ri = oracle.row_norm_sq(i)?;
    if i == j {
        return Ok(rule.zeroes_diagonal(ri));
    }
    let rj = oracle.row_norm_sq(j)?;
    let v = oracle.query_entry(i, j)?;
    Ok(rule.zeroes_off_diagonal(ri, rj, v))
}

/// Materializes `A'` for a dense matrix, using its own row norms.
pub fn zeroed_matrix(a: &DMatrix<f64>, epsilon: f64, c_log: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let rn: Vec<f64> = (0..n).map(|i| a.row(i).norm_squared()).collect();
    let rule = ZeroingRule::new(epsilon, c_log, n, a.norm_squared());
    DMatrix::from_fn(n, n, |i, j| rule.apply(i == j, rn[i], rn[j], a[(i, j)]))
}

/// `U A U^T` where `U` stacks `s` copies of `I_n / sqrt(s)`; row `c * n + i`
/// is copy `c` of row `i`.
pub fn split_matrix(a: &DMatrix<f64>, s: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let inv = 1.0 / s as f64;
    DMatrix::from_fn(n * s, n * s, |r, c| a[(r % n, c % n)] * inv)
}

/// Builds the rescaled, zeroed sampled matrix
/// `M_ab = w_a w_b A'(a, b)` over sample positions `0..k`.
///
/// `entry(a, b)` is only called for entries that survive the diagonal test.
pub(crate) fn zeroed_rescaled(
    k: usize,
    entry: impl Fn(usize, usize) -> f64 + Sync + Send,
    row_norm_sq: &[f64],
    weights: &[f64],
    rule: &ZeroingRule,
) -> DMatrix<f64> {
    let upper = par::map_range(k, |a| {
        (a..k)
            .map(|b| {
                let v = if a == b {
                    if rule.zeroes_diagonal(row_norm_sq[a]) {
                        0.0
                    } else {
                        entry(a, a)
                    }
                } else {
                    rule.apply(false, row_norm_sq[a], row_norm_sq[b], entry(a, b))
                };
                weights[a] * weights[b] * v
            })
            .collect::<Vec<_>>()
    });
    symmetric_from_upper(k, upper)
}

fn symmetric_from_upper(k: usize, upper: Vec<Vec<f64>>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(k, k);
    for (a, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            m[(a, a + off)] = v;
            m[(a + off, a)] = v;
        }
    }
    m
}

/// Details of one row-norm run.
#[derive(Debug, Clone)]
pub struct RowNormOutcome {
    pub estimate: SpectrumEstimate,
    pub s: usize,
    /// Dimension of the sampled matrix.
    pub sampled_dim: usize,
}

fn zero_outcome(n: usize, s: usize) -> RowNormOutcome {
    RowNormOutcome {
        estimate: SpectrumEstimate::zeros(n),
        s,
        sampled_dim: 0,
    }
}

fn check_params(s: usize, epsilon: f64, c_log: f64) -> Result<()> {
    if s == 0 {
        return Err(Error::config("s", "must be >= 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::config(
            "epsilon",
            format!("must lie in (0, 1), got {epsilon}"),
        ));
    }
    if !(c_log > 0.0) {
        return Err(Error::config("c_log", "must be positive"));
    }
    Ok(())
}

/// Restricted row-norm sampling: row `i` is kept with probability
/// `p_i = s ||A_i||^2 / ||A||_F^2`, which must not exceed 1.
pub fn run_restricted<R: Rng + ?Sized>(
    oracle: &SymmetricMatrixOracle,
    s: usize,
    epsilon: f64,
    c_log: f64,
    rng: &mut R,
) -> Result<RowNormOutcome> {
    check_params(s, epsilon, c_log)?;
    let n = oracle.n();
    let f2 = oracle.frobenius_sq();
    if f2 == 0.0 {
        return Ok(zero_outcome(n, s));
    }
    let rn = oracle.row_norms_sq();
    let mut p = Vec::with_capacity(n);
    for (row, &r) in rn.iter().enumerate() {
        let rate = s as f64 * r / f2;
        if rate > 1.0 + 1e-12 {
            return Err(Error::Restriction { row, rate });
        }
        p.push(rate.min(1.0));
    }
    let mut indices = Vec::new();
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 && rng.random::<f64>() < pi {
            indices.push(i);
        }
    }
    let weights: Vec<f64> = indices.iter().map(|&i| 1.0 / p[i].sqrt()).collect();
    let draw = SampleDraw::new(indices, weights)?;
    if draw.is_empty() {
        return Ok(zero_outcome(n, s));
    }
    let rule = ZeroingRule::new(epsilon, c_log, n, f2);
    let idx = draw.indices();
    let sample_rn: Vec<f64> = idx.iter().map(|&i| rn[i]).collect();
    let m = zeroed_rescaled(
        draw.len(),
        |a, b| oracle.fetch(idx[a], idx[b]),
        &sample_rn,
        draw.weights(),
        &rule,
    );
    Ok(RowNormOutcome {
        estimate: SpectrumEstimate::padded(symmetric_eigenvalues(&m), n),
        s,
        sampled_dim: draw.len(),
    })
}

pub fn estimate_spectrum_restricted<R: Rng + ?Sized>(
    oracle: &SymmetricMatrixOracle,
    s: usize,
    epsilon: f64,
    c_log: f64,
    rng: &mut R,
) -> Result<SpectrumEstimate> {
    run_restricted(oracle, s, epsilon, c_log, rng).map(|o| o.estimate)
}

/// Per-index copy counts for the split estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDraw {
    pub multiplicities: Vec<u64>,
    /// `q_i = ||A_i||^2 / ||A||_F^2`.
    pub q: Vec<f64>,
}

impl SplitDraw {
    pub fn total_copies(&self) -> u64 {
        self.multiplicities.iter().sum()
    }
}

fn multiplicities_from_rates<R: Rng + ?Sized>(
    q: &[f64],
    s: usize,
    rng: &mut R,
) -> Result<Vec<u64>> {
    q.iter()
        .map(|&qi| {
            if qi <= 0.0 {
                return Ok(0);
            }
            let b = Binomial::new(s as u64, qi.min(1.0))
                .map_err(|e| Error::config("s", format!("binomial: {e}")))?;
            Ok(b.sample(rng))
        })
        .collect()
}

/// `m_i ~ Binomial(s, ||A_i||^2 / ||A||_F^2)` independently.
pub fn draw_multiplicities<R: Rng + ?Sized>(
    oracle: &SymmetricMatrixOracle,
    s: usize,
    rng: &mut R,
) -> Result<SplitDraw> {
    let f2 = oracle.frobenius_sq();
    if f2 == 0.0 {
        return Err(Error::DegenerateSample(
            "||A||_F = 0; the estimate is all zeros".into(),
        ));
    }
    let q: Vec<f64> = oracle.row_norms_sq().into_iter().map(|r| r / f2).collect();
    let multiplicities = multiplicities_from_rates(&q, s, rng)?;
    Ok(SplitDraw { multiplicities, q })
}

/// Row-norm sampling for an arbitrary symmetric matrix via row splitting.
///
/// Copy `a` of index `i` and copy `b` of index `j` give
/// `B_ab = A'(a, b) / (s sqrt(q_i q_j))`, where the zeroing rule sees the split
/// matrix: row norms `||A_i||^2 / s`, entries `A_ij / s`, `N = n s`. Distinct
/// copies of the same index carry `A_ii`; they are zeroed when the
/// off-diagonal rule fires for them or when `A_ii` itself is zeroed by the
/// diagonal rule on the unsplit matrix.
pub fn run_rownorm<R: Rng + ?Sized>(
    oracle: &SymmetricMatrixOracle,
    s: usize,
    epsilon: f64,
    c_log: f64,
    rng: &mut R,
) -> Result<RowNormOutcome> {
    check_params(s, epsilon, c_log)?;
    let n = oracle.n();
    let f2 = oracle.frobenius_sq();
    if f2 == 0.0 {
        return Ok(zero_outcome(n, s));
    }
    let draw = draw_multiplicities(oracle, s, rng)?;
    let total = draw.total_copies() as usize;
    if total == 0 {
        return Ok(zero_outcome(n, s));
    }
    if total > SPLIT_CAP {
        return Err(Error::Capacity {
            what: "split sample",
            n: total,
            cap: SPLIT_CAP,
        });
    }
    let distinct: Vec<usize> = (0..n).filter(|&i| draw.multiplicities[i] > 0).collect();
    let d = distinct.len();
    let sf = s as f64;
    let f2_rn: Vec<f64> = distinct.iter().map(|&i| draw.q[i] * f2).collect();
    let split_rn: Vec<f64> = f2_rn.iter().map(|r| r / sf).collect();
    let q: Vec<f64> = distinct.iter().map(|&i| draw.q[i]).collect();

    let split_rule = ZeroingRule::new(epsilon, c_log, n.saturating_mul(s), f2);
    let unsplit_rule = ZeroingRule::new(epsilon, c_log, n, f2);

    // For each distinct pair (a <= b): value between copies of distinct[a]
    // and distinct[b]. For a == b also the value on a copy's own diagonal.
    struct Block {
        cross: f64,
        own_diag: f64,
    }
    let upper = par::map_range(d, |a| {
        (a..d)
            .map(|b| {
                let (i, j) = (distinct[a], distinct[b]);
                let scale = 1.0 / (sf * (q[a] * q[b]).sqrt());
                let x = oracle.fetch(i, j);
                if a == b {
                    let diag_zeroed = split_rule.zeroes_diagonal(split_rn[a]);
                    let cross_zeroed = unsplit_rule.zeroes_diagonal(f2_rn[a])
                        || split_rule.zeroes_off_diagonal(split_rn[a], split_rn[a], x / sf);
                    Block {
                        cross: if cross_zeroed { 0.0 } else { x * scale },
                        own_diag: if diag_zeroed { 0.0 } else { x * scale },
                    }
                } else {
                    let v = split_rule.apply(false, split_rn[a], split_rn[b], x / sf);
                    Block {
                        cross: v * sf * scale,
                        own_diag: 0.0,
                    }
                }
            })
            .collect::<Vec<_>>()
    });

    let mut offsets = Vec::with_capacity(d + 1);
    offsets.push(0usize);
    for &i in &distinct {
        offsets.push(offsets.last().unwrap() + draw.multiplicities[i] as usize);
    }
    let mut b = DMatrix::zeros(total, total);
    for (a, row) in upper.iter().enumerate() {
        for (off, blk) in row.iter().enumerate() {
            let c = a + off;
            for r in offsets[a]..offsets[a + 1] {
                for t in offsets[c]..offsets[c + 1] {
                    let v = if r == t { blk.own_diag } else { blk.cross };
                    b[(r, t)] = v;
                    b[(t, r)] = v;
                }
            }
        }
    }
    Ok(RowNormOutcome {
        estimate: SpectrumEstimate::padded(symmetric_eigenvalues(&b), n),
        s,
        sampled_dim: total,
    })
}

pub fn estimate_spectrum_rownorm<R: Rng + ?Sized>(
    oracle: &SymmetricMatrixOracle,
    s: usize,
    epsilon: f64,
    c_log: f64,
    rng: &mut R,
) -> Result<SpectrumEstimate> {
    run_rownorm(oracle, s, epsilon, c_log, rng).map(|o| o.estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{exact_spectrum, generate, generate_dense, spectrum_error, MatrixKind};
    use crate::rng::rng_from_seed;

    #[test]
    fn identity_diagonal_is_zeroed() {
        let id = SymmetricMatrixOracle::identity(100);
        let rule = ZeroingRule::new(0.5, 1.0, 100, id.frobenius_sq());
        // 1 <= 0.25 / 4 * 100 = 6.25
        assert!(is_zeroed(&id, &rule, 7, 7).unwrap());
        // off-diagonal zero entries are never zeroed (and cost one query)
        assert!(!is_zeroed(&id, &rule, 3, 7).unwrap());
        assert_eq!(id.ledger().snapshot().entry_queries, 1);
    }

    #[test]
    fn swap_matrix_entry_is_kept() {
        let o = SymmetricMatrixOracle::from_row_major(2, &[0., 1., 1., 0.]).unwrap();
        let rule = ZeroingRule::new(0.1, 1.0, 2, o.frobenius_sq());
        assert_eq!(rule.log_factor(), 1.0);
        // 1 * 1 <= 0.01 * 2 * 1 is false
        assert!(!is_zeroed(&o, &rule, 0, 1).unwrap());
    }

    #[test]
    fn threshold_is_inclusive() {
        let rule = ZeroingRule::new(0.5, 1.0, 2, 16.0);
        assert!(rule.zeroes_diagonal(1.0)); // 0.25 / 4 * 16 = 1
        assert!(!rule.zeroes_diagonal(1.0 + 1e-12));
    }

    #[test]
    fn zero_matrix_gives_zeros() {
        let z = generate(MatrixKind::Zero, 30, 0).unwrap();
        let mut rng = rng_from_seed(1);
        assert_eq!(
            estimate_spectrum_restricted(&z, 5, 0.2, 1.0, &mut rng).unwrap(),
            SpectrumEstimate::zeros(30)
        );
        assert_eq!(
            estimate_spectrum_rownorm(&z, 5, 0.2, 1.0, &mut rng).unwrap(),
            SpectrumEstimate::zeros(30)
        );
        assert!(draw_multiplicities(&z, 5, &mut rng).is_err());
    }

    #[test]
    fn restricted_identity_is_all_zeros() {
        // n = 100 >= 4 / eps^2 = 100
        let id = SymmetricMatrixOracle::identity(100);
        let est = estimate_spectrum_restricted(&id, 50, 0.2, 1.0, &mut rng_from_seed(2)).unwrap();
        assert_eq!(est, SpectrumEstimate::zeros(100));
        let err = spectrum_error(&est, &exact_spectrum(&id).unwrap()).unwrap();
        assert!(err <= 0.2 * 10.0);
    }

    #[test]
    fn restriction_violation_names_row() {
        let o = SymmetricMatrixOracle::from_row_major(3, &[10., 0., 0., 0., 1., 0., 0., 0., 1.])
            .unwrap();
        match estimate_spectrum_restricted(&o, 2, 0.2, 1.0, &mut rng_from_seed(0)) {
            Err(Error::Restriction { row, .. }) => assert_eq!(row, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_rate_takes_all_copies() {
        let mut q = vec![0.0; 5];
        q[0] = 1.0;
        let m = multiplicities_from_rates(&q, 5, &mut rng_from_seed(4)).unwrap();
        assert_eq!(m, vec![5, 0, 0, 0, 0]);
    }

    #[test]
    fn split_identity_is_all_zeros() {
        let id = SymmetricMatrixOracle::identity(400);
        for seed in 0..5 {
            let est =
                estimate_spectrum_rownorm(&id, 300, 0.2, 1.0, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(est, SpectrumEstimate::zeros(400));
        }
    }

    #[test]
    fn single_heavy_diagonal_survives_splitting() {
        // A = diag(10, 0, ...): all mass on one row; the copies of index 0
        // must still carry the eigenvalue 10.
        let mut data = vec![0.0; 16];
        data[0] = 10.0;
        let o = SymmetricMatrixOracle::from_row_major(4, &data).unwrap();
        let est = estimate_spectrum_rownorm(&o, 200, 0.2, 1.0, &mut rng_from_seed(9)).unwrap();
        assert!(
            (est.values()[0] - 10.0).abs() <= 0.2 * 10.0,
            "{:?}",
            est.values()
        );
    }

    #[test]
    fn split_matrix_has_expected_norms() {
        let a = generate_dense(MatrixKind::SignSymmetric, 6, 1).unwrap();
        let a = a.as_dense().unwrap();
        let u = split_matrix(a, 3);
        assert_eq!(u.nrows(), 18);
        assert!((u.norm_squared() - a.norm_squared()).abs() < 1e-10);
        assert!((u.row(7).norm_squared() - a.row(1).norm_squared() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn split_queries_bounded_by_distinct_pairs() {
        let o = generate(MatrixKind::PlantedRankK { k: 2 }, 200, 3).unwrap();
        let out = run_rownorm(&o, 60, 0.3, 1.0, &mut rng_from_seed(1)).unwrap();
        let k = out.sampled_dim as u64;
        let q = o.ledger().snapshot();
        assert!(q.entry_queries <= k * (k + 1) / 2);
        assert_eq!(q.row_norm_queries, 200);
    }
}
