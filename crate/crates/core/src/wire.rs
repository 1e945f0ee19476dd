//! JSON-facing encodings. A complex scalar is a two-element array `[re, im]`;
//! a matrix is a row-major nested array of such scalars.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{c, Matrix, Vector};

pub type ComplexWire = [f64; 2];
pub type MatrixWire = Vec<Vec<ComplexWire>>;
pub type VectorWire = Vec<ComplexWire>;

pub fn matrix_to_wire(m: &Matrix) -> MatrixWire {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Decodes a rectangular matrix. Ragged rows and non-finite entries are
/// rejected; an empty array is rejected as well.
pub fn matrix_from_wire(w: &MatrixWire) -> Result<Matrix> {
    let rows = w.len();
    let cols = w.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::NotSquare { rows, cols });
    }
    if let Some(bad) = w.iter().find(|r| r.len() != cols) {
        return Err(Error::NotSquare { rows, cols: bad.len() });
    }
    if !w.iter().flatten().flatten().all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| c(w[i][j][0], w[i][j][1])))
}

pub fn vector_to_wire(v: &Vector) -> VectorWire {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_wire(w: &VectorWire) -> Result<Vector> {
    if w.is_empty() {
        return Err(Error::ZeroVector);
    }
    if !w.iter().flatten().all(|x| x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Vector::from_iterator(w.len(), w.iter().map(|z| c(z[0], z[1]))))
}

/// `#[serde(with = "wire::matrix")]` adapter.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_wire(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Matrix, D::Error> {
        let w = MatrixWire::deserialize(d)?;
        matrix_from_wire(&w).map_err(serde::de::Error::custom)
    }
}
