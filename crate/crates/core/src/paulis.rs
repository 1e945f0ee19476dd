//! Standard qubit operators and small constructors used throughout.

use crate::numerics::{c, identity, real_matrix, Matrix, Vector};

pub fn sigma_x() -> Matrix {
    real_matrix(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn sigma_y() -> Matrix {
    Matrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn sigma_z() -> Matrix {
    real_matrix(&[&[1.0, 0.0], &[0.0, -1.0]])
}

pub fn hadamard() -> Matrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    real_matrix(&[&[h, h], &[h, -h]])
}

/// Controlled-NOT with the first factor as control: `|s, p⟩ ↦ |s, p ⊕ s⟩`.
pub fn cnot() -> Matrix {
    real_matrix(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 1.0, 0.0]])
}

/// Spin projector along the direction at angle `theta` from the z axis in
/// the x-z plane: `½(I + sinθ σ_x + cosθ σ_z)`.
pub fn spin_projector(theta: f64) -> Matrix {
    (identity(2) + sigma_x().scale(theta.sin()) + sigma_z().scale(theta.cos())).scale(0.5)
}

/// Ket with real amplitudes (not normalized).
pub fn ket(amplitudes: &[f64]) -> Vector {
    Vector::from_iterator(amplitudes.len(), amplitudes.iter().map(|a| c(*a, 0.0)))
}

/// Computational basis vector `|k⟩` in dimension `dim`.
pub fn basis_ket(dim: usize, k: usize) -> Vector {
    let mut v = Vector::zeros(dim);
    v[k] = c(1.0, 0.0);
    v
}
