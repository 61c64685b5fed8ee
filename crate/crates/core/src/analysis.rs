//! Dense checks of the structural conditions behind the estimators.
//!
//! Everything here materializes the matrix and eigendecomposes it, so it is
//! meant for moderate `n` (see [`ANALYSIS_CAP`]). The checks measure:
//!
//! * the outer/middle split `A = A_o + A_m` at a threshold `L`;
//! * subspace-embedding distortion of a sample on eigenvector blocks, over the
//!   grid `lambda = 2^r L` with target `min(L / lambda, 1/10)`;
//! * leverage scores and eigenvector incoherence;
//! * operator norms of the sampled middle part;
//! * the two-sided eigenvalue bound that holds whenever the distortion check
//!   passes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{operator_norm, symmetric_eigen, symmetric_eigenvalues, SpectrumEstimate};
use crate::uniform::SampleDraw;

pub const ANALYSIS_CAP: usize = 2048;

/// Constant of the lower side of the two-sided bound.
pub const LOWER_SIDE_CONSTANT: f64 = 51.0;

fn check_cap(a: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!(
            "expected square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n > ANALYSIS_CAP {
        return Err(Error::Capacity {
            what: "analysis",
            n,
            cap: ANALYSIS_CAP,
        });
    }
    Ok(())
}

/// `A_o` keeps the eigenvalues with `|lambda| >= L`, `A_m` the rest.
#[derive(Debug, Clone)]
pub struct OuterMiddleSplit {
    pub outer: DMatrix<f64>,
    pub middle: DMatrix<f64>,
    pub threshold: f64,
}

pub fn split_outer_middle(a: &DMatrix<f64>, threshold: f64) -> Result<OuterMiddleSplit> {
    check_cap(a)?;
    let n = a.nrows();
    let (vals, vecs) = symmetric_eigen(a);
    let mut outer = DMatrix::zeros(n, n);
    let mut middle = DMatrix::zeros(n, n);
    for (j, &lam) in vals.iter().enumerate() {
        let v = vecs.column(j);
        let term = v * v.transpose() * lam;
        if lam.abs() >= threshold {
            outer += term;
        } else {
            middle += term;
        }
    }
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    Ok(OuterMiddleSplit {
        outer: sym(outer),
        middle: sym(middle),
        threshold,
    })
}

/// Orthonormal basis (`n x d`) of the eigenvectors with `|lambda| >= lam`.
pub fn eigenbasis_at_least(a: &DMatrix<f64>, lam: f64) -> Result<DMatrix<f64>> {
    check_cap(a)?;
    let (vals, vecs) = symmetric_eigen(a);
    let keep: Vec<usize> = (0..vals.len()).filter(|&j| vals[j].abs() >= lam).collect();
    Ok(DMatrix::from_fn(a.nrows(), keep.len(), |i, c| {
        vecs[(i, keep[c])]
    }))
}

/// Rows of `v` at the drawn indices, each times its weight (`S V`).
pub fn sample_rows(draw: &SampleDraw, v: &DMatrix<f64>) -> DMatrix<f64> {
    let (idx, w) = (draw.indices(), draw.weights());
    DMatrix::from_fn(draw.len(), v.ncols(), |r, c| w[r] * v[(idx[r], c)])
}

/// `S A S^T` materialized from a dense matrix.
pub fn sampled_matrix(a: &DMatrix<f64>, draw: &SampleDraw) -> DMatrix<f64> {
    let (idx, w) = (draw.indices(), draw.weights());
    DMatrix::from_fn(draw.len(), draw.len(), |r, c| {
        w[r] * w[c] * a[(idx[r], idx[c])]
    })
}

/// `max(|sigma_max^2 - 1|, |sigma_min^2 - 1|)` over the singular values of
/// `S V`; 0 when `V` has no columns.
pub fn subspace_distortion(draw: &SampleDraw, v: &DMatrix<f64>) -> Result<f64> {
    if v.ncols() == 0 {
        return Ok(0.0);
    }
    if let Some(&bad) = draw.indices().iter().find(|&&i| i >= v.nrows()) {
        return Err(Error::Range {
            i: bad,
            j: bad,
            n: v.nrows(),
        });
    }
    let sv = sample_rows(draw, v);
    let gram = sv.transpose() * &sv;
    let sq = symmetric_eigenvalues(&((&gram + gram.transpose()) * 0.5));
    let hi = sq[0];
    let lo = *sq.last().unwrap();
    Ok((hi - 1.0).abs().max((lo - 1.0).abs()))
}

/// Outcome of a distortion check over a grid of eigenvalue levels.
#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub lambda_grid: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub distortions: Vec<f64>,
    pub passed: bool,
    pub measured_constants: BTreeMap<String, f64>,
}

impl CheckReport {
    /// `lambda,distortion,threshold,pass` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,distortion,threshold,pass\n");
        for ((l, d), t) in self
            .lambda_grid
            .iter()
            .zip(&self.distortions)
            .zip(&self.thresholds)
        {
            let _ = writeln!(out, "{l},{d},{t},{}", u8::from(d <= t));
        }
        out
    }

    /// Largest `distortion / threshold` over the grid.
    pub fn worst_ratio(&self) -> f64 {
        self.distortions
            .iter()
            .zip(&self.thresholds)
            .map(|(d, t)| d / t)
            .fold(0.0, f64::max)
    }
}

/// Checks that `S` is a `min(L / lambda, 1/10)`-distortion embedding on
/// `V_{>= lambda}` for every `lambda >= L`.
///
/// The levels are `2^r L` for `r = 0..=floor(log2(||A|| / L))` together with
/// every distinct eigenvalue magnitude `>= L`; `V_{>= lambda}` only changes at
/// eigenvalue magnitudes, so the latter make the check exact.
pub fn check_assumption(
    draw: &SampleDraw,
    a: &DMatrix<f64>,
    threshold: f64,
) -> Result<CheckReport> {
    check_cap(a)?;
    if !(threshold > 0.0) {
        return Err(Error::config("level", "must be positive"));
    }
    let (vals, vecs) = symmetric_eigen(a);
    let norm = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut grid = Vec::new();
    if norm >= threshold {
        let top = (norm / threshold).log2().floor() as i32;
        grid.extend((0..=top).map(|r| threshold * 2f64.powi(r)));
        let mut mags: Vec<f64> = vals
            .iter()
            .map(|v| v.abs())
            .filter(|&v| v >= threshold)
            .collect();
        mags.sort_by(f64::total_cmp);
        mags.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.max(1.0));
        grid.extend(mags);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }
    let mut report = CheckReport {
        passed: true,
        ..Default::default()
    };
    for &lam in &grid {
        let keep: Vec<usize> = (0..vals.len()).filter(|&j| vals[j].abs() >= lam).collect();
        let v = DMatrix::from_fn(a.nrows(), keep.len(), |i, c| vecs[(i, keep[c])]);
        let d = subspace_distortion(draw, &v)?;
        let t = (threshold / lam).min(0.1);
        report.passed &= d <= t;
        report.lambda_grid.push(lam);
        report.thresholds.push(t);
        report.distortions.push(d);
    }
    report
        .measured_constants
        .insert("levels".into(), report.lambda_grid.len() as f64);
    report
        .measured_constants
        .insert("worst_ratio".into(), report.worst_ratio());
    Ok(report)
}

/// `tau_i = e_i^T X (X^T X)^+ X^T e_i`, from the left singular vectors of `X`.
pub fn leverage_scores(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    if x.ncols() == 0 {
        return Err(Error::Shape(
            "leverage scores need at least one column".into(),
        ));
    }
    let svd = x.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = smax * 1e-12 * (x.nrows().max(x.ncols()) as f64);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&j| svd.singular_values[j] > tol)
        .collect();
    Ok((0..x.nrows())
        .map(|i| {
            keep.iter()
                .map(|&j| u[(i, j)].powi(2))
                .sum::<f64>()
                .min(1.0)
        })
        .collect())
}

/// `max_i ||(V_{>= alpha})_i||^2 alpha^2 / ||A_i||^2` over rows with
/// `||A_i|| > 0`, and whether it is at most `1 + 1e-9`.
pub fn incoherence_report(a: &DMatrix<f64>, alpha: f64) -> Result<(f64, bool)> {
    if !(alpha > 0.0) {
        return Err(Error::config("alpha", "must be positive"));
    }
    let v = eigenbasis_at_least(a, alpha)?;
    if v.ncols() == 0 {
        return Ok((0.0, true));
    }
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        let rn = a.row(i).norm_squared();
        if rn == 0.0 {
            continue;
        }
        worst = worst.max(v.row(i).norm_squared() * alpha * alpha / rn);
    }
    Ok((worst, worst <= 1.0 + 1e-9))
}

/// `||S A_m S^T||_2` and whether it is at most `bound`.
pub fn middle_norm_check(
    draw: &SampleDraw,
    split: &OuterMiddleSplit,
    bound: f64,
) -> Result<(f64, bool)> {
    let middle = &split.middle;
    check_cap(middle)?;
    if draw.is_empty() {
        return Ok((0.0, 0.0 <= bound));
    }
    let op = operator_norm(&sampled_matrix(middle, draw));
    Ok((op, op <= bound))
}

/// Number of eigenvalues with `|lambda| >= level`.
pub fn eigenvalue_count_at_least(a: &DMatrix<f64>, level: f64) -> Result<usize> {
    check_cap(a)?;
    Ok(symmetric_eigenvalues(a)
        .into_iter()
        .filter(|v| v.abs() >= level)
        .count())
}

/// Gap between the sampled outer part and the outer part itself.
#[derive(Debug, Clone)]
pub struct TwoSidedReport {
    /// `max |lambda_i(S A_o S^T) - lambda_i(A_o)|` over `i` with `lambda_i(A_o) != 0`.
    pub max_gap: f64,
    /// `51 L max(1, ln(||A_o|| / L))`.
    pub bound: f64,
    /// `(lambda_max(S A_o S^T) - lambda_1(A_o)) / (L ln(lambda_1 / L))`, the
    /// realized constant of the upper side (when `lambda_1 > L`).
    pub upper_constant: Option<f64>,
}

impl TwoSidedReport {
    pub fn holds(&self) -> bool {
        self.max_gap <= self.bound
    }
}

/// Compares the sampled spectrum of `outer` with its own, position by
/// position after padding to `n`.
pub fn two_sided_gap(
    draw: &SampleDraw,
    outer: &DMatrix<f64>,
    threshold: f64,
) -> Result<TwoSidedReport> {
    check_cap(outer)?;
    let n = outer.nrows();
    let exact = symmetric_eigenvalues(outer);
    let sampled = if draw.is_empty() {
        SpectrumEstimate::zeros(n)
    } else {
        SpectrumEstimate::padded(symmetric_eigenvalues(&sampled_matrix(outer, draw)), n)
    };
    let norm = exact.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let zero_tol = 1e-9 * norm.max(1.0);
    let max_gap = exact
        .iter()
        .zip(sampled.values())
        .filter(|(e, _)| e.abs() > zero_tol)
        .map(|(e, s)| (e - s).abs())
        .fold(0.0, f64::max);
    let bound = LOWER_SIDE_CONSTANT * threshold * (norm / threshold).ln().max(1.0);
    let lambda1 = exact.first().copied().unwrap_or(0.0);
    let upper_constant = (lambda1 > threshold)
        .then(|| (sampled.values()[0] - lambda1) / (threshold * (lambda1 / threshold).ln()));
    Ok(TwoSidedReport {
        max_gap,
        bound,
        upper_constant,
    })
}
