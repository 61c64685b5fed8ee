//! Uniform principal-submatrix sampling for bounded-entry matrices.
//!
//! Each row is kept independently with probability `p = s / n` and rescaled by
//! `1 / sqrt(p)`; the eigenvalues of the rescaled principal submatrix, padded
//! with zeros, estimate the whole spectrum to additive `eps * n`.

use nalgebra::DMatrix;
use rand::Rng;

use crate::config::EstimatorConfig;
use crate::error::{Error, Result};
use crate::matrix::{symmetric_eigenvalues, SpectrumEstimate, SymmetricMatrixOracle};
use crate::par;

/// A sampled index multiset with per-copy rescaling weights (the matrix `S`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDraw {
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl SampleDraw {
    /// Builds a draw; `indices` must be sorted and every weight positive.
    pub fn new(indices: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if indices.len() != weights.len() {
            return Err(Error::Shape(format!(
                "{} indices but {} weights",
                indices.len(),
                weights.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Shape("draw indices must be sorted".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::Shape(format!("non-positive weight {w}")));
        }
        Ok(SampleDraw { indices, weights })
    }

    /// Every index `0..n` with weight 1, i.e. `S = I_n`.
    pub fn identity(n: usize) -> Self {
        SampleDraw {
            indices: (0..n).collect(),
            weights: vec![1.0; n],
        }
    }

    /// The uniform draw for expected size `s` that happened to select
    /// `indices`.
    pub fn uniform_from_indices(n: usize, s: usize, mut indices: Vec<usize>) -> Self {
        if s >= n {
            return Self::identity(n);
        }
        indices.sort_unstable();
        indices.dedup();
        let w = (n as f64 / s as f64).sqrt();
        let weights = vec![w; indices.len()];
        SampleDraw { indices, weights }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Indices of `0..n` kept by independent `Bernoulli(p)` coins, in order.
///
/// Gaps between kept indices are geometric, so the cost is proportional to the
/// number of kept indices rather than to `n`.
pub fn bernoulli_indices<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Vec<usize> {
    if p >= 1.0 {
        return (0..n).collect();
    }
    if !(p > 0.0) {
        return Vec::new();
    }
    let log_q = (-p).ln_1p();
    let mut out = Vec::new();
    let mut pos = 0usize;
    loop {
        let u = 1.0 - rng.random::<f64>(); // (0, 1]
        let skip = (u.ln() / log_q).floor();
        if skip >= (n - pos) as f64 {
            break;
        }
        pos += skip as usize;
        out.push(pos);
        pos += 1;
        if pos >= n {
            break;
        }
    }
    out
}

/// Draws the sampling matrix for expected sample size `s`.
pub fn draw_uniform<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> SampleDraw {
    if s >= n {
        return SampleDraw::identity(n);
    }
    let p = s as f64 / n as f64;
    SampleDraw::uniform_from_indices(n, s, bernoulli_indices(n, p, rng))
}

/// `(S^T A S)` for the drawn indices: entry `(a, b) = w_a w_b A[i_a][i_b]`.
///
/// Charges exactly `k (k + 1) / 2` entry queries.
pub fn build_sampled_matrix(
    oracle: &SymmetricMatrixOracle,
    draw: &SampleDraw,
) -> Result<DMatrix<f64>> {
    let n = oracle.n();
    if let Some(&bad) = draw.indices.iter().find(|&&i| i >= n) {
        return Err(Error::Range { i: bad, j: bad, n });
    }
    let k = draw.len();
    let (idx, w) = (&draw.indices, &draw.weights);
    let upper = par::map_range(k, |a| {
        (a..k)
            .map(|b| w[a] * w[b] * oracle.fetch(idx[a], idx[b]))
            .collect::<Vec<_>>()
    });
    let mut m = DMatrix::zeros(k, k);
    for (a, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            m[(a, a + off)] = v;
            m[(a + off, a)] = v;
        }
    }
    Ok(m)
}

/// Details of one uniform-sampling run.
#[derive(Debug, Clone)]
pub struct UniformOutcome {
    pub estimate: SpectrumEstimate,
    /// Expected sample size `s`.
    pub s: usize,
    /// Realized sample size `k`.
    pub draw_size: usize,
}

pub fn run_uniform<R: Rng + ?Sized>(
    oracle: &SymmetricMatrixOracle,
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<UniformOutcome> {
    cfg.validate()?;
    let n = oracle.n();
    let s = cfg.uniform_sample_size();
    let draw = draw_uniform(n, s, rng);
    if draw.is_empty() {
        return Ok(UniformOutcome {
            estimate: SpectrumEstimate::zeros(n),
            s,
            draw_size: 0,
        });
    }
    let sub = build_sampled_matrix(oracle, &draw)?;
    Ok(UniformOutcome {
        estimate: SpectrumEstimate::padded(symmetric_eigenvalues(&sub), n),
        s,
        draw_size: draw.len(),
    })
}

/// Spectrum estimate with additive error `eps * n` for `||A||_inf <= 1`.
///
/// The entry bound is the caller's responsibility; checking it would cost
/// `n^2` queries.
pub fn estimate_spectrum_uniform<R: Rng + ?Sized>(
    oracle: &SymmetricMatrixOracle,
    cfg: &EstimatorConfig,
    rng: &mut R,
) -> Result<SpectrumEstimate> {
    run_uniform(oracle, cfg, rng).map(|o| o.estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{generate, MatrixKind};
    use crate::rng::rng_from_seed;

    #[test]
    fn full_sampling_when_s_at_least_n() {
        let d = draw_uniform(4, 8, &mut rng_from_seed(1));
        assert_eq!(d.indices(), &[0, 1, 2, 3]);
        assert!(d.weights().iter().all(|&w| w == 1.0));
    }

    #[test]
    fn forced_coins_give_expected_weights() {
        let d = SampleDraw::uniform_from_indices(8, 2, vec![2, 1]);
        assert_eq!(d.indices(), &[1, 2]);
        assert_eq!(d.weights(), &[2.0, 2.0]);
    }

    #[test]
    fn sampled_matrix_examples() {
        let ones = generate(MatrixKind::AllOnes, 8, 0).unwrap();
        let d = SampleDraw::uniform_from_indices(8, 2, vec![1, 2]);
        let m = build_sampled_matrix(&ones, &d).unwrap();
        assert_eq!(m, DMatrix::from_element(2, 2, 4.0));
        assert_eq!(ones.ledger().snapshot().entry_queries, 3);

        let zero = generate(MatrixKind::Zero, 8, 0).unwrap();
        assert_eq!(
            build_sampled_matrix(&zero, &d).unwrap(),
            DMatrix::zeros(2, 2)
        );

        let id = SymmetricMatrixOracle::identity(8);
        let one = SampleDraw::uniform_from_indices(8, 2, vec![3]);
        assert_eq!(build_sampled_matrix(&id, &one).unwrap()[(0, 0)], 4.0);
    }

    #[test]
    fn ones_matrix_is_recovered_when_draw_hits_s() {
        let ones = generate(MatrixKind::AllOnes, 8, 0).unwrap();
        let d = SampleDraw::uniform_from_indices(8, 2, vec![1, 2]);
        let sub = build_sampled_matrix(&ones, &d).unwrap();
        let est = SpectrumEstimate::padded(symmetric_eigenvalues(&sub), 8);
        assert!((est.values()[0] - 8.0).abs() < 1e-12);
        assert!(est.values()[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_matrix_gives_zeros() {
        let zero = generate(MatrixKind::Zero, 50, 0).unwrap();
        let est = estimate_spectrum_uniform(
            &zero,
            &EstimatorConfig {
                s_override: Some(10),
                ..Default::default()
            },
            &mut rng_from_seed(3),
        )
        .unwrap();
        assert_eq!(est, SpectrumEstimate::zeros(50));
    }

    #[test]
    fn empty_draw_gives_zeros() {
        // p = 1 / 10^6: the draw over 10 rows is empty for essentially all seeds
        let o = generate(MatrixKind::AllOnes, 10, 0).unwrap();
        let d = draw_uniform(10, 1, &mut rng_from_seed(0));
        let cfg = EstimatorConfig {
            s_override: Some(1),
            ..Default::default()
        };
        let out = run_uniform(&o, &cfg, &mut rng_from_seed(0)).unwrap();
        assert_eq!(out.draw_size, d.len());
        assert_eq!(out.estimate.len(), 10);
        if d.is_empty() {
            assert_eq!(out.estimate, SpectrumEstimate::zeros(10));
        }
    }

    #[test]
    fn bernoulli_edge_cases() {
        let mut rng = rng_from_seed(5);
        assert!(bernoulli_indices(100, 0.0, &mut rng).is_empty());
        assert_eq!(bernoulli_indices(5, 1.0, &mut rng), vec![0, 1, 2, 3, 4]);
        let v = bernoulli_indices(1000, 0.5, &mut rng);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(v.iter().all(|&i| i < 1000));
    }
}
