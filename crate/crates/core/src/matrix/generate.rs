//! Synthetic bounded-entry instances.
//!
//! Every generator is an [`EntrySource`] whose entries are hashed from
//! `(seed, i, j)`, so the implicit and materialized forms agree exactly and
//! arbitrarily large `n` costs nothing until entries are read.

use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::{symmetric_eigenvalues, EntrySource, SymmetricMatrixOracle, MATERIALIZATION_CAP};
use crate::error::{Error, Result};
use crate::rng::hashed_sign;

const SIGN_TAG: u64 = 0x5157_A11C_0000_0001;
const PLANTED_TAG: u64 = 0x5157_A11C_0000_0002;
const GRAM_TAG: u64 = 0x5157_A11C_0000_0003;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    AllOnes,
    Identity,
    /// i.i.d. +-1 entries on and above the diagonal, mirrored below.
    SignSymmetric,
    /// `(1/k) sum_t v_t v_t^T` with `v_t` in `{+-1}^n`.
    PlantedRankK {
        k: usize,
    },
    /// `(1/m) W W^T` with `W` in `{+-1}^{n x m}`.
    PsdGram {
        m: usize,
    },
    Zero,
}

impl MatrixKind {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixKind::AllOnes => "all_ones",
            MatrixKind::Identity => "identity",
            MatrixKind::SignSymmetric => "sign_symmetric",
            MatrixKind::PlantedRankK { .. } => "planted_rank_k",
            MatrixKind::PsdGram { .. } => "psd_gram",
            MatrixKind::Zero => "zero",
        }
    }

    /// Parses a kind name, attaching the kind-specific parameters.
    pub fn parse(name: &str, k: usize, m: usize) -> Result<Self> {
        let kind = match name {
            "all_ones" => MatrixKind::AllOnes,
            "identity" => MatrixKind::Identity,
            "sign_symmetric" => MatrixKind::SignSymmetric,
            "planted_rank_k" => MatrixKind::PlantedRankK { k },
            "psd_gram" => MatrixKind::PsdGram { m },
            "zero" => MatrixKind::Zero,
            other => {
                return Err(Error::config(
                    "kind",
                    format!("unknown matrix kind `{other}`"),
                ))
            }
        };
        kind.validate()?;
        Ok(kind)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MatrixKind::PlantedRankK { k: 0 } => Err(Error::config("k", "must be >= 1")),
            MatrixKind::PsdGram { m: 0 } => Err(Error::config("m", "must be >= 1")),
            _ => Ok(()),
        }
    }

    pub fn is_psd(&self) -> bool {
        matches!(
            self,
            MatrixKind::AllOnes
                | MatrixKind::Identity
                | MatrixKind::PlantedRankK { .. }
                | MatrixKind::PsdGram { .. }
                | MatrixKind::Zero
        )
    }
}

impl FromStr for MatrixKind {
    type Err = Error;

    /// Bare names use `k = 2`, `m = 16`.
    fn from_str(s: &str) -> Result<Self> {
        MatrixKind::parse(s, 2, 16)
    }
}

/// Implicit generator backend.
pub struct ImplicitMatrix {
    kind: MatrixKind,
    n: usize,
    seed: u64,
    /// `V^T V` for the planted kind.
    gram: Option<DMatrix<f64>>,
    spectrum: OnceLock<Option<Vec<f64>>>,
}

impl ImplicitMatrix {
    pub fn new(kind: MatrixKind, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("n", "must be >= 1"));
        }
        kind.validate()?;
        let gram = match kind {
            MatrixKind::PlantedRankK { k } => {
                let mut g = DMatrix::zeros(k, k);
                for i in 0..n {
                    let v: Vec<f64> = (0..k).map(|t| planted_sign(seed, t, i)).collect();
                    for s in 0..k {
                        for t in 0..k {
                            g[(s, t)] += v[s] * v[t];
                        }
                    }
                }
                Some(g)
            }
            _ => None,
        };
        Ok(ImplicitMatrix {
            kind,
            n,
            seed,
            gram,
            spectrum: OnceLock::new(),
        })
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }
}

#[inline]
fn planted_sign(seed: u64, t: usize, i: usize) -> f64 {
    hashed_sign(seed ^ PLANTED_TAG, t as u64, i as u64)
}

#[inline]
fn gram_sign(seed: u64, i: usize, l: usize) -> f64 {
    hashed_sign(seed ^ GRAM_TAG, i as u64, l as u64)
}

impl EntrySource for ImplicitMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            MatrixKind::AllOnes => 1.0,
            MatrixKind::Identity => f64::from(u8::from(i == j)),
            MatrixKind::Zero => 0.0,
            MatrixKind::SignSymmetric => {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                hashed_sign(self.seed ^ SIGN_TAG, a as u64, b as u64)
            }
            MatrixKind::PlantedRankK { k } => {
                let s: f64 = (0..k)
                    .map(|t| planted_sign(self.seed, t, i) * planted_sign(self.seed, t, j))
                    .sum();
                s / k as f64
            }
            MatrixKind::PsdGram { m } => {
                let s: f64 = (0..m)
                    .map(|l| gram_sign(self.seed, i, l) * gram_sign(self.seed, j, l))
                    .sum();
                s / m as f64
            }
        }
    }

    fn row_norm_sq(&self, i: usize) -> f64 {
        let n = self.n as f64;
        match self.kind {
            MatrixKind::AllOnes | MatrixKind::SignSymmetric => n,
            MatrixKind::Identity => 1.0,
            MatrixKind::Zero => 0.0,
            MatrixKind::PlantedRankK { k } => {
                // sum_j A_ij^2 = (1/k^2) sum_{s,t} v_s[i] v_t[i] (V^T V)_{st}
                let g = self.gram.as_ref().expect("planted gram");
                let v: Vec<f64> = (0..k).map(|t| planted_sign(self.seed, t, i)).collect();
                let mut acc = 0.0;
                for s in 0..k {
                    for t in 0..k {
                        acc += v[s] * v[t] * g[(s, t)];
                    }
                }
                acc / (k * k) as f64
            }
            MatrixKind::PsdGram { .. } => (0..self.n).map(|j| self.entry(i, j).powi(2)).sum(),
        }
    }

    fn frobenius_sq(&self) -> f64 {
        let n = self.n as f64;
        match self.kind {
            MatrixKind::AllOnes | MatrixKind::SignSymmetric => n * n,
            MatrixKind::Identity => n,
            MatrixKind::Zero => 0.0,
            MatrixKind::PlantedRankK { k } => {
                let g = self.gram.as_ref().expect("planted gram");
                g.norm_squared() / (k * k) as f64
            }
            MatrixKind::PsdGram { .. } => crate::par::map_range(self.n, |i| self.row_norm_sq(i))
                .into_iter()
                .sum(),
        }
    }

    fn known_spectrum(&self) -> Option<Vec<f64>> {
        self.spectrum
            .get_or_init(|| {
                let n = self.n as f64;
                match self.kind {
                    MatrixKind::AllOnes => Some(vec![n]),
                    MatrixKind::Identity => Some(vec![1.0; self.n]),
                    MatrixKind::Zero => Some(Vec::new()),
                    MatrixKind::SignSymmetric => None,
                    // Nonzero spectrum of (1/k) V V^T equals that of (1/k) V^T V.
                    MatrixKind::PlantedRankK { k } => {
                        let g = self.gram.as_ref().expect("planted gram") / k as f64;
                        Some(symmetric_eigenvalues(&g))
                    }
                    MatrixKind::PsdGram { m } => {
                        if self.n.saturating_mul(m).saturating_mul(m) > 1 << 32 {
                            return None;
                        }
                        let mut g = DMatrix::zeros(m, m);
                        for i in 0..self.n {
                            let w: Vec<f64> = (0..m).map(|l| gram_sign(self.seed, i, l)).collect();
                            for a in 0..m {
                                for b in 0..m {
                                    g[(a, b)] += w[a] * w[b];
                                }
                            }
                        }
                        Some(symmetric_eigenvalues(&(g / m as f64)))
                    }
                }
            })
            .clone()
    }
}

/// Implicit oracle for `kind` at dimension `n`.
pub fn generate(kind: MatrixKind, n: usize, seed: u64) -> Result<SymmetricMatrixOracle> {
    Ok(SymmetricMatrixOracle::from_source(Box::new(
        ImplicitMatrix::new(kind, n, seed)?,
    )))
}

/// Dense oracle with exactly the entries of [`generate`].
pub fn generate_dense(kind: MatrixKind, n: usize, seed: u64) -> Result<SymmetricMatrixOracle> {
    generate(kind, n, seed)?.to_dense(MATERIALIZATION_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::exact_spectrum;

    #[test]
    fn all_ones_and_planted_rank_one() {
        let ones = generate_dense(MatrixKind::AllOnes, 5, 0).unwrap();
        let spec = exact_spectrum(&ones).unwrap();
        assert!((spec.values()[0] - 5.0).abs() < 1e-10);

        let p = generate(MatrixKind::PlantedRankK { k: 1 }, 8, 3).unwrap();
        assert_eq!(p.max_abs_entry(), 1.0);
        let spec = exact_spectrum(&p).unwrap();
        assert!((spec.values()[0] - 8.0).abs() < 1e-10);
        assert!(spec.values()[1].abs() < 1e-10);
    }

    #[test]
    fn unknown_kind_is_config_error() {
        assert!(matches!(
            MatrixKind::parse("banded", 2, 2),
            Err(Error::Config { .. })
        ));
        assert!(MatrixKind::parse("planted_rank_k", 0, 2).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(MatrixKind::SignSymmetric, 64, 9).unwrap();
        let b = generate(MatrixKind::SignSymmetric, 64, 9).unwrap();
        let c = generate(MatrixKind::SignSymmetric, 64, 10).unwrap();
        let same = (0..64).all(|i| (0..64).all(|j| a.peek(i, j) == b.peek(i, j)));
        let diff = (0..64).any(|i| (0..64).any(|j| a.peek(i, j) != c.peek(i, j)));
        assert!(same && diff);
    }

    #[test]
    fn closed_form_norms_match_brute_force() {
        for kind in [
            MatrixKind::SignSymmetric,
            MatrixKind::PlantedRankK { k: 3 },
            MatrixKind::PsdGram { m: 5 },
            MatrixKind::Identity,
        ] {
            let o = generate(kind, 40, 21).unwrap();
            let d = o.materialize(64).unwrap();
            for i in 0..40 {
                let brute = d.row(i).norm_squared();
                let got = o.row_norm_sq(i).unwrap();
                assert!((brute - got).abs() <= 1e-10 * brute.max(1.0), "{kind:?}");
            }
            let f = d.norm_squared();
            assert!((o.frobenius_sq() - f).abs() <= 1e-10 * f.max(1.0));
        }
    }

    #[test]
    fn planted_known_spectrum_matches_exact() {
        let o = generate(MatrixKind::PlantedRankK { k: 3 }, 100, 4).unwrap();
        let known = o.known_spectrum().unwrap();
        let exact = exact_spectrum(&o).unwrap();
        assert!(crate::matrix::spectrum_error(&known, &exact).unwrap() < 1e-8);
    }
}
