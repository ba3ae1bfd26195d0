//! Dense symmetric-matrix primitives: eigendecomposition, whitening,
//! generalized eigenvalues, and random orthonormal bases.
//!
//! Everything here is a pure function on immutable inputs and is safe to call
//! from concurrent tasks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{EquimixError, Result};

/// Relative tolerance below which an eigenvalue is treated as non-positive.
///
/// Scale-relative so that well-conditioned matrices of any magnitude pass.
pub fn pd_tolerance(largest_eigenvalue: f64) -> f64 {
    1e-12 * largest_eigenvalue.abs().max(f64::MIN_POSITIVE)
}

/// Square symmetric matrix. Symmetry is enforced on construction by averaging
/// the input with its transpose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    entries: DMatrix<f64>,
}

impl SymMatrix {
    /// Builds a symmetric matrix from a square matrix, averaging `m` with its
    /// transpose. Rejects non-square or non-finite input.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(EquimixError::InvalidInput(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(EquimixError::InvalidInput(
                "matrix contains non-finite entries".into(),
            ));
        }
        let dim = m.nrows();
        let entries = (&m + m.transpose()) * 0.5;
        Ok(Self { dim, entries })
    }

    /// Identity matrix of the given dimension.
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: DMatrix::identity(dim, dim),
        }
    }

    /// Diagonal matrix from the given diagonal entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            dim: diag.len(),
            entries: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    /// Largest absolute entry; used for scale-relative comparisons.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Spectral decomposition of a symmetric matrix: `m = Q diag(L) Qᵀ` with the
/// columns of `Q` orthonormal and `L` sorted in non-increasing order.
///
/// Eigenvector signs are fixed so that each column's largest-magnitude entry
/// is positive, which makes downstream transforms deterministic.
#[derive(Debug, Clone)]
pub struct SpectralDecomp {
    /// Orthonormal eigenvector basis, one eigenvector per column.
    pub basis: DMatrix<f64>,
    /// Eigenvalues sorted in non-increasing order.
    pub eigenvalues: DVector<f64>,
}

impl SpectralDecomp {
    /// Multiplies the factors back together.
    pub fn reconstruct(&self) -> SymMatrix {
        let d = DMatrix::from_diagonal(&self.eigenvalues);
        let m = &self.basis * d * self.basis.transpose();
        SymMatrix::from_matrix(m).expect("reconstruction of a finite decomposition is finite")
    }
}

/// Symmetric eigendecomposition with a fixed ordering and sign convention.
pub fn sym_eig(m: &SymMatrix) -> Result<SpectralDecomp> {
    let se = m.entries.clone().symmetric_eigen();
    let dim = m.dim;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        se.eigenvalues[j]
            .partial_cmp(&se.eigenvalues[i])
            .expect("finite eigenvalues")
    });
    let mut basis = DMatrix::zeros(dim, dim);
    let mut eigenvalues = DVector::zeros(dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = se.eigenvalues[src];
        let col = se.eigenvectors.column(src);
        // Sign convention: largest-magnitude entry positive.
        let lead = col
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.abs().partial_cmp(&y.abs()).expect("finite"))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let sign = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        basis.set_column(dst, &(col * sign));
    }
    Ok(SpectralDecomp { basis, eigenvalues })
}

/// Whitening transform `W = diag(L)^{-1/2} Qᵀ` of a positive-definite matrix,
/// so that `W psi Wᵀ = I`.
pub fn whitening(psi: &SymMatrix) -> Result<DMatrix<f64>> {
    let decomp = whitening_decomp(psi)?;
    Ok(decomp.forward)
}

/// Whitening map together with its inverse `W⁻¹ = Q diag(L)^{1/2}` and the
/// log-determinant of `W`.
pub struct WhiteningMaps {
    pub forward: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub log_det_forward: f64,
}

/// Computes the whitening map of `psi` along with its inverse.
pub fn whitening_decomp(psi: &SymMatrix) -> Result<WhiteningMaps> {
    let decomp = sym_eig(psi)?;
    let lmax = decomp.eigenvalues[0];
    let tol = pd_tolerance(lmax);
    if decomp.eigenvalues.iter().any(|&l| l <= tol) {
        return Err(EquimixError::NotPositiveDefinite(format!(
            "smallest eigenvalue {:.3e} below tolerance {:.3e}",
            decomp.eigenvalues[psi.dim - 1],
            tol
        )));
    }
    let inv_sqrt = DVector::from_iterator(psi.dim, decomp.eigenvalues.iter().map(|l| l.sqrt().recip()));
    let sqrt = DVector::from_iterator(psi.dim, decomp.eigenvalues.iter().map(|l| l.sqrt()));
    let forward = DMatrix::from_diagonal(&inv_sqrt) * decomp.basis.transpose();
    let inverse = &decomp.basis * DMatrix::from_diagonal(&sqrt);
    let log_det_forward = -0.5 * decomp.eigenvalues.iter().map(|l| l.ln()).sum::<f64>();
    Ok(WhiteningMaps {
        forward,
        inverse,
        log_det_forward,
    })
}

/// Generalized eigenvalues of the pencil `(a, b)`, i.e. the eigenvalues of
/// `a b⁻¹`, sorted in non-increasing order.
///
/// Computed through the Cholesky factor of `b` as the ordinary eigenvalues of
/// `C⁻¹ a C⁻ᵀ`, which keeps the problem symmetric.
pub fn generalized_eigvals(a: &SymMatrix, b: &SymMatrix) -> Result<DVector<f64>> {
    if a.dim != b.dim {
        return Err(EquimixError::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            a.dim, b.dim
        )));
    }
    let chol = b
        .entries
        .clone()
        .cholesky()
        .ok_or_else(|| EquimixError::NotPositiveDefinite("pencil denominator".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&a.entries)
        .ok_or_else(|| EquimixError::SingularMatrix("triangular solve failed".into()))?;
    let m = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| EquimixError::SingularMatrix("triangular solve failed".into()))?;
    let sym = SymMatrix::from_matrix(m)?;
    let decomp = sym_eig(&sym)?;
    let scale = decomp.eigenvalues[0].abs().max(1.0);
    let vals = DVector::from_iterator(
        a.dim,
        decomp.eigenvalues.iter().map(|&l| {
            if l < 0.0 && l > -1e-10 * scale {
                0.0
            } else {
                l
            }
        }),
    );
    Ok(vals)
}

/// Haar-distributed random orthonormal matrix, obtained by orthonormalizing a
/// matrix of independent standard normal draws (QR with positive diagonal).
pub fn random_orthonormal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if dim == 0 {
        return Err(EquimixError::InvalidInput("dimension must be >= 1".into()));
    }
    let raw = DMatrix::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let qr = raw.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    Ok(q)
}

/// Seeded convenience wrapper around [`random_orthonormal`].
pub fn random_orthonormal_seeded(dim: usize, seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_orthonormal(dim, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_spd(dim: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_orthonormal(dim, &mut rng).unwrap();
        let eigs: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.2..3.0)).collect();
        let m = &q * DMatrix::from_diagonal(&DVector::from_vec(eigs)) * q.transpose();
        SymMatrix::from_matrix(m).unwrap()
    }

    #[test]
    fn eig_identity() {
        let d = sym_eig(&SymMatrix::identity(3)).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(d.eigenvalues[i], 1.0, epsilon = 1e-12);
        }
        let qtq = d.basis.transpose() * &d.basis;
        assert!((qtq - DMatrix::identity(3, 3)).amax() < 1e-10);
    }

    #[test]
    fn eig_diagonal_sorted() {
        let d = sym_eig(&SymMatrix::from_diagonal(&[1.0, 4.0])).unwrap();
        assert_abs_diff_eq!(d.eigenvalues[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.eigenvalues[1], 1.0, epsilon = 1e-12);
        // Basis is a signed permutation of the identity.
        for j in 0..2 {
            let col = d.basis.column(j);
            let big: Vec<f64> = col.iter().map(|v| v.abs()).collect();
            assert!(big.iter().filter(|&&v| v > 0.5).count() == 1);
        }
    }

    #[test]
    fn eig_reconstructs_random_spd() {
        let m = random_spd(5, 7);
        let d = sym_eig(&m).unwrap();
        let rec = d.reconstruct();
        let err = (rec.as_matrix() - m.as_matrix()).norm() / m.as_matrix().norm();
        assert!(err < 1e-8, "relative reconstruction error {err}");
    }

    #[test]
    fn eig_rejects_nonfinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(SymMatrix::from_matrix(m).is_err());
    }

    #[test]
    fn whitening_identity() {
        let w = whitening(&SymMatrix::identity(3)).unwrap();
        assert!((&w * w.transpose() - DMatrix::identity(3, 3)).amax() < 1e-10);
    }

    #[test]
    fn whitening_diagonal() {
        let w = whitening(&SymMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        // Rows are +-(1/2, 0) and +-(0, 1/3) in some order.
        let mut scales: Vec<f64> = (0..2).map(|i| w.row(i).amax()).collect();
        scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(scales[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(scales[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn whitening_makes_target_identity() {
        let psi = random_spd(6, 13);
        let w = whitening(&psi).unwrap();
        let prod = &w * psi.as_matrix() * w.transpose();
        assert!((prod - DMatrix::identity(6, 6)).amax() < 1e-8);
    }

    #[test]
    fn whitening_rejects_singular() {
        let psi = SymMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(
            whitening(&psi),
            Err(EquimixError::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn geneig_equal_matrices() {
        let m = random_spd(4, 3);
        let vals = generalized_eigvals(&m, &m).unwrap();
        for v in vals.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn geneig_diagonal_case() {
        let a = SymMatrix::from_diagonal(&[2.0, 1.0]);
        let b = SymMatrix::from_diagonal(&[1.0, 2.0]);
        let vals = generalized_eigvals(&a, &b).unwrap();
        assert_abs_diff_eq!(vals[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn geneig_reciprocal_symmetry() {
        let a = random_spd(5, 21);
        let b = random_spd(5, 22);
        let ab = generalized_eigvals(&a, &b).unwrap();
        let ba = generalized_eigvals(&b, &a).unwrap();
        for j in 0..5 {
            assert_abs_diff_eq!(ab[j], 1.0 / ba[4 - j], epsilon = 1e-8);
        }
    }

    #[test]
    fn geneig_rejects_non_pd_denominator() {
        let a = SymMatrix::identity(2);
        let b = SymMatrix::from_diagonal(&[1.0, -1.0]);
        assert!(generalized_eigvals(&a, &b).is_err());
    }

    #[test]
    fn orthonormal_scalar_case() {
        for seed in 0..8 {
            let q = random_orthonormal_seeded(1, seed).unwrap();
            assert_abs_diff_eq!(q[(0, 0)].abs(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn orthonormal_deterministic() {
        let a = random_orthonormal_seeded(5, 99).unwrap();
        let b = random_orthonormal_seeded(5, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn orthonormal_is_orthonormal() {
        let q = random_orthonormal_seeded(8, 4).unwrap();
        let qtq = q.transpose() * &q;
        assert!((qtq - DMatrix::identity(8, 8)).amax() < 1e-10);
    }
}
