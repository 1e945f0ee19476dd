//! Dense complex linear algebra: Hermitian eigendecomposition with eigenvalue
//! clustering, Hilbert-Schmidt geometry and nullspaces.
//!
//! Operators are plain [`nalgebra::DMatrix`] values over [`C64`]. Vectorization
//! of operators always stacks columns: `vec(X)[i + d*j] = X[(i, j)]`, so that
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Tolerance used when callers do not supply one.
pub const DEFAULT_TOL: f64 = 1e-9;

const MAX_EIG_ITERATIONS: usize = 10_000;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> Matrix {
    Matrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> Matrix {
    Matrix::zeros(dim, dim)
}

/// Builds a matrix from real entries given row by row.
pub fn real_matrix(rows: &[&[f64]]) -> Matrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    Matrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

pub fn frobenius(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &Matrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Returns the dimension of a square matrix with finite entries.
pub fn check_operator(m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(m.nrows())
}

pub fn check_same_dim(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    Ok(())
}

/// `‖A − A†‖_F`.
pub fn hermitian_residual(m: &Matrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

/// `(A + A†) / 2`.
pub fn hermitian_part(m: &Matrix) -> Matrix {
    (m + m.adjoint()).scale(0.5)
}

/// Tolerance scale used for absolute-residual checks on an operator of the
/// given Frobenius norm.
pub(crate) fn scaled(tol: f64, norm: f64) -> f64 {
    tol * (1.0 + norm)
}

pub fn check_hermitian(m: &Matrix, tol: f64) -> Result<()> {
    check_operator(m)?;
    let residual = hermitian_residual(m);
    if residual > scaled(tol, frobenius(m)) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(())
}

pub fn unitary_residual(u: &Matrix) -> f64 {
    frobenius(&(u.adjoint() * u - identity(u.nrows())))
}

pub fn check_unitary(u: &Matrix, tol: f64) -> Result<()> {
    check_operator(u)?;
    let residual = unitary_residual(u);
    if residual > scaled(tol, (u.nrows() as f64).sqrt()) {
        return Err(Error::NotUnitary { residual });
    }
    Ok(())
}

/// Spectral resolution of a Hermitian matrix: clustered eigenvalues in
/// increasing order and the orthogonal projector onto each eigenspace.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<Matrix>,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.projectors.first().map_or(0, |p| p.nrows())
    }

    /// `Σ x_i P_i`.
    pub fn reconstruct(&self) -> Matrix {
        let mut out = zeros(self.dim());
        for (x, p) in self.eigenvalues.iter().zip(&self.projectors) {
            out += p.scale(*x);
        }
        out
    }

    /// Applies a real function through the spectral measure: `Σ f(x_i) P_i`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> Matrix {
        let mut out = zeros(self.dim());
        for (x, p) in self.eigenvalues.iter().zip(&self.projectors) {
            out += p * f(*x);
        }
        out
    }
}

/// Unclustered eigendecomposition of the Hermitian part of `a`: eigenvalues
/// in increasing order and the matching orthonormal eigenvectors as columns.
pub fn eigh(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    check_operator(a)?;
    let eig =
        SymmetricEigen::try_new(hermitian_part(a), f64::EPSILON, MAX_EIG_ITERATIONS).ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(a.nrows(), a.nrows(), |r, k| eig.eigenvectors[(r, order[k])]);
    Ok((values, vectors))
}

/// Eigenvalues closer than this are treated as one degenerate eigenvalue.
pub fn cluster_threshold(tol: f64, spectral_norm: f64) -> f64 {
    (1e3 * tol).max(1e-8) * (1.0 + spectral_norm)
}

/// Hermitian eigendecomposition with degeneracy clustering.
pub fn eig_hermitian(a: &Matrix, tol: f64) -> Result<SpectralData> {
    check_hermitian(a, tol)?;
    let (values, vectors) = eigh(a)?;
    let norm = values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let threshold = cluster_threshold(tol, norm);

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (k, x) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(last) if x - values[*last.last().unwrap()] <= threshold => last.push(k),
            _ => clusters.push(vec![k]),
        }
    }

    let dim = a.nrows();
    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut projectors = Vec::with_capacity(clusters.len());
    for members in clusters {
        let mean = members.iter().map(|&k| values[k]).sum::<f64>() / members.len() as f64;
        let basis = Matrix::from_fn(dim, members.len(), |r, j| vectors[(r, members[j])]);
        eigenvalues.push(mean);
        projectors.push(hermitian_part(&(&basis * basis.adjoint())));
    }
    Ok(SpectralData { eigenvalues, projectors })
}

/// Hilbert-Schmidt inner product `tr{A†B}`.
pub fn hs_inner(a: &Matrix, b: &Matrix) -> Result<C64> {
    check_same_dim(a, b)?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Orthonormal basis of `{v : ‖Lv‖ ≤ tol·‖L‖}` for a rectangular `L`.
pub fn nullspace(l: &Matrix, tol: f64) -> Result<Vec<Vector>> {
    if !l.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (rows, cols) = l.shape();
    if cols == 0 {
        return Ok(Vec::new());
    }
    // Pad to at least square so the SVD yields a full right basis.
    let padded = if rows < cols {
        let mut p = Matrix::zeros(cols, cols);
        p.rows_mut(0, rows).copy_from(l);
        p
    } else {
        l.clone()
    };
    let svd = SVD::try_new(padded, false, true, f64::EPSILON, MAX_EIG_ITERATIONS).ok_or(Error::NoConvergence)?;
    let v_t = svd.v_t.as_ref().ok_or(Error::NoConvergence)?;
    let largest = svd.singular_values.iter().fold(0.0_f64, |m, s| m.max(*s));
    let cutoff = tol * largest;
    Ok(svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= cutoff)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect())
}

/// Hilbert-Schmidt Gram-Schmidt. Inputs whose residual after projecting out
/// the current span is at most `tol·max(1, ‖op‖_F)` are dropped.
pub fn gram_schmidt_hs(ops: &[Matrix], tol: f64) -> Result<Vec<Matrix>> {
    let mut basis: Vec<Matrix> = Vec::new();
    for op in ops {
        if let Some(first) = ops.first() {
            check_same_dim(first, op)?;
        }
        let r = orthogonal_residual(&basis, op);
        let norm = frobenius(&r);
        if norm > tol * frobenius(op).max(1.0) {
            basis.push(r.unscale(norm));
        }
    }
    Ok(basis)
}

/// Residual of `op` after projecting out an orthonormal `basis`, with one
/// reorthogonalization pass.
pub(crate) fn orthogonal_residual(basis: &[Matrix], op: &Matrix) -> Matrix {
    let mut r = op.clone();
    for _ in 0..2 {
        for b in basis {
            let overlap: C64 = b.iter().zip(r.iter()).map(|(x, y)| x.conj() * y).sum();
            r -= b * overlap;
        }
    }
    r
}

/// Kronecker product `A ⊗ B` (row index `i_A·d_B + i_B`).
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vectorize(m: &Matrix) -> Vector {
    Vector::from_iterator(m.len(), m.iter().copied())
}

/// Inverse of [`vectorize`] for a `dim × dim` operator.
pub fn unvectorize(v: &Vector, dim: usize) -> Matrix {
    Matrix::from_column_slice(dim, dim, v.as_slice())
}

/// Outer product `|u⟩⟨v|`.
pub fn outer(u: &Vector, v: &Vector) -> Matrix {
    u * v.adjoint()
}

/// Random operators used by the generic-element construction and by tests.
pub mod sample {
    use rand::Rng;
    use rand_distr::StandardNormal;

    use super::{c, Matrix, Vector};

    pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| {
            c(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        })
    }

    pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Matrix {
        super::hermitian_part(&ginibre(rng, dim, dim))
    }

    /// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
    pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Matrix {
        let qr = ginibre(rng, dim, dim).qr();
        let (q, r) = (qr.q(), qr.r());
        let mut u = q;
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
            let mut col = u.column_mut(j);
            col *= phase;
        }
        u
    }

    pub fn ket<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
        let v = ginibre(rng, dim, 1).column(0).into_owned();
        let n = v.norm();
        v.unscale(n)
    }

    /// Random density matrix of full rank `W W† / tr`.
    pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Matrix {
        let w = ginibre(rng, dim, dim);
        let m = &w * w.adjoint();
        let t = super::trace(&m).re;
        m.unscale(t)
    }

    /// Rank-`rank` orthogonal projector onto a Haar-random subspace.
    pub fn projector<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> Matrix {
        let u = unitary(rng, dim);
        let v = u.columns(0, rank).into_owned();
        &v * v.adjoint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma_x() -> Matrix {
        real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]])
    }
    fn sigma_y() -> Matrix {
        Matrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
    }
    fn sigma_z() -> Matrix {
        real_matrix(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    #[test]
    fn identity_has_single_cluster() {
        let s = eig_hermitian(&identity(2), DEFAULT_TOL).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!(frobenius(&(&s.projectors[0] - identity(2))) < 1e-12);
    }

    #[test]
    fn sigma_x_resolves_into_plus_minus() {
        let s = eig_hermitian(&sigma_x(), DEFAULT_TOL).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-12);
        let minus = real_matrix(&[&[0.5, -0.5], &[-0.5, 0.5]]);
        let plus = real_matrix(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(frobenius(&(&s.projectors[0] - minus)) < 1e-12);
        assert!(frobenius(&(&s.projectors[1] - plus)) < 1e-12);
        assert!(frobenius(&(s.reconstruct() - sigma_x())) < 1e-12);
    }

    #[test]
    fn near_degenerate_eigenvalues_merge() {
        let tol = DEFAULT_TOL;
        let a = real_matrix(&[&[2.0, 0.0], &[0.0, 2.0 + tol / 10.0]]);
        let s = eig_hermitian(&a, tol).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        assert!(frobenius(&(&s.projectors[0] - identity(2))) < 1e-12);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let a = real_matrix(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eig_hermitian(&a, DEFAULT_TOL), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn non_square_and_non_finite_are_rejected() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(eig_hermitian(&a, DEFAULT_TOL), Err(Error::NotSquare { .. })));
        let mut b = identity(2);
        b[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(eig_hermitian(&b, DEFAULT_TOL), Err(Error::NonFinite)));
    }

    #[test]
    fn hs_inner_examples() {
        assert_eq!(hs_inner(&identity(2), &identity(2)).unwrap(), c(2.0, 0.0));
        assert!(hs_inner(&sigma_x(), &sigma_y()).unwrap().norm() < 1e-15);
        assert_eq!(hs_inner(&sigma_z(), &sigma_z()).unwrap(), c(2.0, 0.0));
        assert!(matches!(hs_inner(&identity(2), &identity(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn nullspace_examples() {
        assert_eq!(nullspace(&zeros(2), DEFAULT_TOL).unwrap().len(), 2);
        assert!(nullspace(&identity(2), DEFAULT_TOL).unwrap().is_empty());
        // Rank one: L = u vᵀ with u = (1, 2), v = (1, -1); kernel spanned by (1, 1).
        let l = real_matrix(&[&[1.0, -1.0], &[2.0, -2.0]]);
        let ns = nullspace(&l, DEFAULT_TOL).unwrap();
        assert_eq!(ns.len(), 1);
        assert!((&l * &ns[0]).norm() < 1e-12);
        assert!((ns[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        let l = real_matrix(&[&[1.0, 0.0, 0.0]]);
        let ns = nullspace(&l, DEFAULT_TOL).unwrap();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!((&l * v).norm() < 1e-12);
        }
    }

    #[test]
    fn gram_schmidt_examples() {
        let i2 = identity(2);
        let g = gram_schmidt_hs(&[i2.clone(), i2.scale(2.0)], DEFAULT_TOL).unwrap();
        assert_eq!(g.len(), 1);
        assert!(frobenius(&(&g[0] - i2.unscale(2f64.sqrt()))) < 1e-12);

        let g = gram_schmidt_hs(&[identity(2), sigma_z()], DEFAULT_TOL).unwrap();
        assert_eq!(g.len(), 2);
        for i in 0..2 {
            for j in 0..2 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((hs_inner(&g[i], &g[j]).unwrap() - c(expected, 0.0)).norm() < 1e-12);
            }
        }
        assert!(gram_schmidt_hs(&[], DEFAULT_TOL).unwrap().is_empty());
    }

    #[test]
    fn vectorization_is_column_stacking() {
        let m = Matrix::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, 0.0));
        let v = vectorize(&m);
        for k in 0..4 {
            assert_eq!(v[k].re, k as f64);
        }
        assert_eq!(unvectorize(&v, 2), m);
        // vec(AXB) = (Bᵀ ⊗ A) vec(X)
        let a = sigma_x();
        let b = sigma_y();
        let lhs = vectorize(&(&a * &m * &b));
        let rhs = kron(&b.transpose(), &a) * vectorize(&m);
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
