//! Randomized Hadamard sketch.
//!
//! Conjugating by `P H D` (random permutation, orthonormal Hadamard, random
//! signs) is orthogonal, so it keeps the spectrum while flattening row norms
//! to about `||A||_F^2 / m`. Uniformly sampling the flattened matrix then
//! behaves like squared row-norm sampling, and thanks to the permutation a
//! leading principal minor is a uniform sample.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::EstimatorConfig;
use crate::error::{Error, Result};
use crate::matrix::{symmetric_eigenvalues, SpectrumEstimate, SymmetricMatrixOracle};
use crate::par;
use crate::rng::hashed_sign;
use crate::rownorm::{zeroed_rescaled, ZeroingRule};

/// Largest padded dimension [`conjugate`] will build.
pub const CONJUGATE_CAP: usize = 4096;

fn fwht_in_place(v: &mut [f64]) -> u64 {
    let len = v.len();
    let mut butterflies = 0u64;
    let mut h = 1;
    while h < len {
        for start in (0..len).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        butterflies += (len / 2) as u64;
        h *= 2;
    }
    let scale = 1.0 / (len as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= scale);
    butterflies
}

/// Orthonormal Walsh-Hadamard transform (self-inverse).
pub fn fwht(v: &mut [f64]) -> Result<()> {
    if !v.len().is_power_of_two() {
        return Err(Error::Shape(format!(
            "fwht needs a power-of-two length, got {}",
            v.len()
        )));
    }
    fwht_in_place(v);
    Ok(())
}

/// `P H D` with `D = diag(signs)` and `P` given by `perm`: `(P x)_a = x_perm[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HadamardRotation {
    pub m: usize,
    pub signs: Vec<f64>,
    pub perm: Vec<usize>,
}

impl HadamardRotation {
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let m = n.max(1).next_power_of_two();
        let signs = (0..m)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(rng);
        HadamardRotation { m, signs, perm }
    }

    /// No signs, no permutation: plain `H`.
    pub fn plain(n: usize) -> Self {
        let m = n.max(1).next_power_of_two();
        HadamardRotation {
            m,
            signs: vec![1.0; m],
            perm: (0..m).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Conjugated {
    /// `B = (PHD) A~ (PHD)^T`, `m x m`.
    pub matrix: DMatrix<f64>,
    /// Butterfly operations performed (each is one add and one subtract).
    pub butterflies: u64,
}

fn transform_rows(data: &mut [f64], m: usize) -> u64 {
    let count = AtomicU64::new(0);
    par::for_each_chunk_mut(data, m, |_, row| {
        count.fetch_add(fwht_in_place(row), Ordering::Relaxed);
    });
    count.into_inner()
}

/// Forms `(PHD) A~ (PHD)^T` with `A~` the zero-padded matrix, by a row-wise
/// transform, a transpose and a second row-wise transform.
pub fn conjugate(oracle: &SymmetricMatrixOracle, rot: &HadamardRotation) -> Result<Conjugated> {
    let n = oracle.n();
    let m = rot.m;
    if m < n || !m.is_power_of_two() || rot.signs.len() != m || rot.perm.len() != m {
        return Err(Error::Shape(format!(
            "rotation of size {m} does not fit n = {n}"
        )));
    }
    if m > CONJUGATE_CAP {
        return Err(Error::Capacity {
            what: "hadamard conjugation",
            n: m,
            cap: CONJUGATE_CAP,
        });
    }
    // Every entry of A is read once.
    oracle.ledger().charge_entries((n * n) as u64);
    let s = &rot.signs;
    // Y = D A~ D, row-major
    let mut y = vec![0.0; m * m];
    par::for_each_chunk_mut(&mut y, m, |i, row| {
        if i < n {
            for (j, r) in row.iter_mut().enumerate().take(n) {
                *r = s[i] * s[j] * oracle.peek(i, j);
            }
        }
    });
    let mut butterflies = transform_rows(&mut y, m); // Y H
    let mut t = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            t[j * m + i] = y[i * m + j];
        }
    }
    butterflies += transform_rows(&mut t, m); // H Y H
    let perm = &rot.perm;
    let matrix = DMatrix::from_fn(m, m, |a, b| {
        let v = t[perm[a] * m + perm[b]];
        let w = t[perm[b] * m + perm[a]];
        0.5 * (v + w)
    });
    Ok(Conjugated {
        matrix,
        butterflies,
    })
}

/// `max_i ||B_i||^2 * m / ||B||_F^2`: 1 for perfectly flat rows.
pub fn flattening_ratio(b: &DMatrix<f64>) -> f64 {
    let f2 = b.norm_squared();
    if f2 == 0.0 {
        return 0.0;
    }
    let max_row = (0..b.nrows())
        .map(|i| b.row(i).norm_squared())
        .fold(0.0, f64::max);
    max_row * b.nrows() as f64 / f2
}

/// Johnson-Lindenstrauss norm estimates `||G b_j|| / sqrt(d)` for the first
/// `k` columns, with `G` a `d x len` matrix of hashed signs.
pub fn jl_column_norms<R, F>(k: usize, len: usize, column: F, d: usize, rng: &mut R) -> Vec<f64>
where
    R: Rng + ?Sized,
    F: Fn(usize) -> Vec<f64> + Sync + Send,
{
    let seed: u64 = rng.random();
    let scale = 1.0 / (d as f64).sqrt();
    par::map_range(k, |j| {
        let col = column(j);
        debug_assert_eq!(col.len(), len);
        let sq: f64 = (0..d)
            .map(|r| {
                let dot: f64 = col
                    .iter()
                    .enumerate()
                    .map(|(l, x)| hashed_sign(seed, r as u64, l as u64) * x)
                    .sum();
                dot * dot
            })
            .sum();
        sq.sqrt() * scale
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// True row norms of the rotated matrix (validation only, not sublinear).
    Exact,
    /// Sketched row norms.
    Jl,
}

impl NormMode {
    pub fn name(&self) -> &'static str {
        match self {
            NormMode::Exact => "exact_norms",
            NormMode::Jl => "jl_norms",
        }
    }
}

impl std::str::FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact_norms" => Ok(NormMode::Exact),
            "jl" | "jl_norms" => Ok(NormMode::Jl),
            other => Err(Error::config(
                "norm_mode",
                format!("unknown mode `{other}`"),
            )),
        }
    }
}

/// What the sketch keeps: the leading minor, its row-norm estimates and
/// `||A||_F`.
#[derive(Debug, Clone)]
pub struct SketchPayload {
    pub minor: DMatrix<f64>,
    pub row_norm_estimates: Vec<f64>,
    pub frob_norm: f64,
    /// Padded dimension.
    pub m: usize,
}

/// Minor size `min(m, ceil(c_rownorm ln^4 m ln^2(1/eps) / eps^2))`.
pub fn minor_size(m: usize, cfg: &EstimatorConfig) -> usize {
    cfg.rownorm_sample_size(m).min(m)
}

pub fn sketch<R: Rng + ?Sized>(
    oracle: &SymmetricMatrixOracle,
    cfg: &EstimatorConfig,
    rng: &mut R,
    mode: NormMode,
) -> Result<SketchPayload> {
    cfg.validate()?;
    let rot = HadamardRotation::random(oracle.n(), rng);
    let b = conjugate(oracle, &rot)?.matrix;
    let m = rot.m;
    let k = minor_size(m, cfg);
    let row_norm_estimates = match mode {
        NormMode::Exact => (0..k).map(|i| b.row(i).norm()).collect(),
        NormMode::Jl => jl_column_norms(
            k,
            m,
            |j| b.column(j).iter().copied().collect(),
            cfg.jl_dim,
            rng,
        ),
    };
    Ok(SketchPayload {
        minor: b.view((0, 0), (k, k)).into_owned(),
        row_norm_estimates,
        frob_norm: oracle.frobenius_norm(),
        m,
    })
}

/// Zeroes and rescales the minor as a uniform row sample of rate `k / m`
/// and returns its eigenvalues padded (or trimmed) to length `n`.
pub fn decode_sketch(payload: &SketchPayload, n: usize, cfg: &EstimatorConfig) -> SpectrumEstimate {
    let k = payload.minor.nrows();
    if k == 0 || payload.frob_norm == 0.0 {
        return SpectrumEstimate::zeros(n);
    }
    let w = (payload.m as f64 / k as f64).sqrt();
    let weights = vec![w; k];
    let rn_sq: Vec<f64> = payload.row_norm_estimates.iter().map(|r| r * r).collect();
    let rule = ZeroingRule::new(cfg.epsilon, cfg.c_log, payload.m, payload.frob_norm.powi(2));
    let minor = &payload.minor;
    let z = zeroed_rescaled(k, |a, b| minor[(a, b)], &rn_sq, &weights, &rule);
    SpectrumEstimate::padded(symmetric_eigenvalues(&z), n)
}

#[derive(Debug, Clone)]
pub struct SketchOutcome {
    pub estimate: SpectrumEstimate,
    /// Minor dimension.
    pub k: usize,
    pub m: usize,
}

pub fn sketch_spectrum<R: Rng + ?Sized>(
    oracle: &SymmetricMatrixOracle,
    cfg: &EstimatorConfig,
    rng: &mut R,
    mode: NormMode,
) -> Result<SketchOutcome> {
    if oracle.frobenius_sq() == 0.0 {
        return Ok(SketchOutcome {
            estimate: SpectrumEstimate::zeros(oracle.n()),
            k: 0,
            m: oracle.n().next_power_of_two(),
        });
    }
    let payload = sketch(oracle, cfg, rng, mode)?;
    Ok(SketchOutcome {
        estimate: decode_sketch(&payload, oracle.n(), cfg),
        k: payload.minor.nrows(),
        m: payload.m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{exact_spectrum, generate, spectrum_error, MatrixKind};
    use crate::rng::rng_from_seed;

    #[test]
    fn fwht_two_point() {
        let mut v = [1.0, 0.0];
        fwht(&mut v).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0] - h).abs() < 1e-15 && (v[1] - h).abs() < 1e-15);
        assert!(fwht(&mut [1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn fwht_involution_and_isometry() {
        let mut rng = rng_from_seed(3);
        let v: Vec<f64> = (0..1024).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut w = v.clone();
        fwht(&mut w).unwrap();
        let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((norm(&w) - norm(&v)).abs() < 1e-12);
        fwht(&mut w).unwrap();
        assert!(v.iter().zip(&w).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn identity_and_zero_conjugates() {
        let id = SymmetricMatrixOracle::identity(16);
        let rot = HadamardRotation::random(16, &mut rng_from_seed(1));
        let b = conjugate(&id, &rot).unwrap().matrix;
        assert!((b - DMatrix::<f64>::identity(16, 16)).abs().max() < 1e-12);

        let z = generate(MatrixKind::Zero, 12, 0).unwrap();
        let rot = HadamardRotation::random(12, &mut rng_from_seed(1));
        assert_eq!(rot.m, 16);
        assert_eq!(conjugate(&z, &rot).unwrap().matrix, DMatrix::zeros(16, 16));
    }

    #[test]
    fn butterfly_count_is_m2_log_m() {
        let o = generate(MatrixKind::SignSymmetric, 100, 2).unwrap();
        let rot = HadamardRotation::random(100, &mut rng_from_seed(0));
        let c = conjugate(&o, &rot).unwrap();
        // 2m transforms of (m / 2) log2 m butterflies
        assert_eq!(c.butterflies, 128 * 128 * 7);
    }

    #[test]
    fn conjugation_capacity() {
        let o = generate(MatrixKind::Zero, CONJUGATE_CAP + 1, 0).unwrap();
        let rot = HadamardRotation::plain(CONJUGATE_CAP + 1);
        assert!(matches!(conjugate(&o, &rot), Err(Error::Capacity { .. })));
    }

    #[test]
    fn jl_examples() {
        let e1 = |_: usize| {
            let mut v = vec![0.0; 32];
            v[0] = 1.0;
            v
        };
        let est = jl_column_norms(1, 32, e1, 64, &mut rng_from_seed(0));
        assert!((est[0] - 1.0).abs() < 1e-12);
        let est = jl_column_norms(2, 32, |_| vec![0.0; 32], 64, &mut rng_from_seed(0));
        assert_eq!(est, vec![0.0, 0.0]);
    }

    #[test]
    fn sketch_of_zero_and_identity() {
        let cfg = EstimatorConfig::with_epsilon(0.2);
        let z = generate(MatrixKind::Zero, 64, 0).unwrap();
        let out = sketch_spectrum(&z, &cfg, &mut rng_from_seed(0), NormMode::Jl).unwrap();
        assert_eq!(out.estimate, SpectrumEstimate::zeros(64));

        // n = m = 128 >= 1 / eps^2: flat rows, every diagonal entry zeroed
        let id = SymmetricMatrixOracle::identity(128);
        for mode in [NormMode::Exact, NormMode::Jl] {
            let out = sketch_spectrum(&id, &cfg, &mut rng_from_seed(4), mode).unwrap();
            let err = spectrum_error(&out.estimate, &exact_spectrum(&id).unwrap()).unwrap();
            assert!(err <= 0.2 * (128f64).sqrt(), "{mode:?}: {err}");
        }
    }
}
