use nalgebra::{DMatrix, SymmetricEigen};

use super::{SymmetricMatrixOracle, MATERIALIZATION_CAP};
use crate::error::{Error, Result};

/// Eigenvalue estimates sorted in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate(Vec<f64>);

fn sort_descending(v: &mut [f64]) {
    // stable, so equal values keep their original order
    v.sort_by(|a, b| b.total_cmp(a));
}

impl SpectrumEstimate {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        sort_descending(&mut values);
        SpectrumEstimate(values)
    }

    pub fn zeros(n: usize) -> Self {
        SpectrumEstimate(vec![0.0; n])
    }

    /// Pads `values` with zeros to length `n` and sorts.
    ///
    /// If there are more than `n` values, the surplus entries of smallest
    /// magnitude are dropped (they stand in for padding zeros of a larger
    /// ambient dimension).
    pub fn padded(mut values: Vec<f64>, n: usize) -> Self {
        if values.len() > n {
            let surplus = values.len() - n;
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()));
            let mut keep = vec![true; values.len()];
            for &idx in &order[..surplus] {
                keep[idx] = false;
            }
            values = values
                .into_iter()
                .zip(keep)
                .filter_map(|(v, k)| k.then_some(v))
                .collect();
        }
        values.resize(n, 0.0);
        Self::from_values(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn top(&self) -> Option<f64> {
        self.0.first().copied()
    }
}

/// `max_i |est_i - reference_i|` over sorted positions.
pub fn spectrum_error(est: &SpectrumEstimate, reference: &SpectrumEstimate) -> Result<f64> {
    if est.len() != reference.len() {
        return Err(Error::Shape(format!(
            "spectrum lengths differ: {} vs {}",
            est.len(),
            reference.len()
        )));
    }
    Ok(est
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    sort_descending(&mut v);
    v
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending with the
/// eigenvector columns permuted to match.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Spectral norm `max |lambda|` of a symmetric matrix.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
}

/// Full spectrum by dense eigendecomposition. Uncharged.
pub fn exact_spectrum(oracle: &SymmetricMatrixOracle) -> Result<SpectrumEstimate> {
    exact_spectrum_capped(oracle, MATERIALIZATION_CAP)
}

pub fn exact_spectrum_capped(
    oracle: &SymmetricMatrixOracle,
    cap: usize,
) -> Result<SpectrumEstimate> {
    if oracle.n() > cap {
        return Err(Error::Capacity {
            what: "exact spectrum",
            n: oracle.n(),
            cap,
        });
    }
    let values = match oracle.as_dense() {
        Some(m) => symmetric_eigenvalues(m),
        None => symmetric_eigenvalues(&oracle.materialize(cap)?),
    };
    Ok(SpectrumEstimate(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{generate_dense, MatrixKind};

    fn est(v: &[f64]) -> SpectrumEstimate {
        SpectrumEstimate::from_values(v.to_vec())
    }

    #[test]
    fn exact_spectrum_examples() {
        let ones = generate_dense(MatrixKind::AllOnes, 4, 0).unwrap();
        let s = exact_spectrum(&ones).unwrap();
        assert!(spectrum_error(&s, &est(&[4.0, 0.0, 0.0, 0.0])).unwrap() < 1e-12);

        let id = SymmetricMatrixOracle::identity(3);
        let s = exact_spectrum(&id).unwrap();
        assert!(spectrum_error(&s, &est(&[1.0, 1.0, 1.0])).unwrap() < 1e-12);

        let swap = SymmetricMatrixOracle::from_row_major(2, &[0., 1., 1., 0.]).unwrap();
        let s = exact_spectrum(&swap).unwrap();
        assert!(spectrum_error(&s, &est(&[1.0, -1.0])).unwrap() < 1e-12);
    }

    #[test]
    fn capacity_error_above_cap() {
        let o = crate::matrix::generate(MatrixKind::Zero, 100, 0).unwrap();
        assert!(matches!(
            exact_spectrum_capped(&o, 50),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn spectrum_error_examples() {
        assert_eq!(
            spectrum_error(&est(&[1., 0.]), &est(&[1., 0.])).unwrap(),
            0.0
        );
        assert_eq!(
            spectrum_error(&est(&[2., 0.]), &est(&[1., 0.])).unwrap(),
            1.0
        );
        assert_eq!(
            spectrum_error(&est(&[3., 1., -1.]), &est(&[3., 0., -2.])).unwrap(),
            1.0
        );
        assert!(matches!(
            spectrum_error(&est(&[1.]), &est(&[1., 0.])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn padding_sorts_and_truncates_smallest() {
        let p = SpectrumEstimate::padded(vec![-2.0, 3.0], 4);
        assert_eq!(p.values(), &[3.0, 0.0, 0.0, -2.0]);
        let t = SpectrumEstimate::padded(vec![5.0, 1e-9, -4.0, 0.0], 2);
        assert_eq!(t.values(), &[5.0, -4.0]);
    }

    #[test]
    fn eigen_pairs_are_sorted_with_vectors() {
        let m = DMatrix::from_row_slice(3, 3, &[2., 0., 0., 0., 5., 0., 0., 0., -1.]);
        let (vals, vecs) = symmetric_eigen(&m);
        assert_eq!(vals, vec![5.0, 2.0, -1.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((operator_norm(&m) - 5.0).abs() < 1e-12);
    }
}
