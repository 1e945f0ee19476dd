//! Unitary propagators for piecewise-constant Hamiltonians and the
//! Heisenberg-picture maps `J_(s,t)(X) = U(t,s)† X U(t,s)`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{c, check_same_dim, check_unitary, eigh, hermitian_part, identity, Matrix, DEFAULT_TOL};
use crate::qpspace::Observable;
use crate::wire::{self, MatrixWire};

/// `e^{−iτH}` from a precomputed eigendecomposition `H = V diag(λ) V†`.
fn exp_from_eigen(values: &[f64], vectors: &Matrix, tau: f64) -> Matrix {
    let mut scaled = vectors.clone();
    for (k, lambda) in values.iter().enumerate() {
        let phase = c(0.0, -tau * lambda).exp();
        let mut col = scaled.column_mut(k);
        col *= phase;
    }
    scaled * vectors.adjoint()
}

/// `e^{−iτH}` for Hermitian `H`.
pub fn expm_hermitian(h: &Observable, tau: f64) -> Result<Matrix> {
    let (values, vectors) = eigh(h.matrix())?;
    Ok(exp_from_eigen(&values, &vectors, tau))
}

#[derive(Debug, Clone)]
pub struct SchedulePiece {
    t_start: f64,
    t_end: f64,
    hamiltonian: Observable,
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
}

impl SchedulePiece {
    pub fn new(t_start: f64, t_end: f64, hamiltonian: Observable) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(Error::InvalidSchedule {
                reason: format!("piece [{t_start}, {t_end}] is empty or not finite"),
            });
        }
        let (eigenvalues, eigenvectors) = eigh(hamiltonian.matrix())?;
        Ok(Self { t_start, t_end, hamiltonian, eigenvalues, eigenvectors })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn hamiltonian(&self) -> &Observable {
        &self.hamiltonian
    }

    fn exp(&self, tau: f64) -> Matrix {
        exp_from_eigen(&self.eigenvalues, &self.eigenvectors, tau)
    }
}

/// Contiguous sequence of constant Hamiltonians.
#[derive(Debug, Clone)]
pub struct HamiltonianSchedule {
    pieces: Vec<SchedulePiece>,
}

fn time_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

impl HamiltonianSchedule {
    pub fn new(pieces: Vec<SchedulePiece>) -> Result<Self> {
        let first = pieces.first().ok_or(Error::InvalidSchedule { reason: "schedule has no pieces".into() })?;
        let dim = first.hamiltonian.dim();
        for w in pieces.windows(2) {
            if !time_eq(w[0].t_end, w[1].t_start) {
                return Err(Error::InvalidSchedule {
                    reason: format!("gap or overlap between {} and {}", w[0].t_end, w[1].t_start),
                });
            }
        }
        if let Some(p) = pieces.iter().find(|p| p.hamiltonian.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: p.hamiltonian.dim() });
        }
        Ok(Self { pieces })
    }

    /// A single constant Hamiltonian on `[t_start, t_end]`.
    pub fn constant(h: Observable, t_start: f64, t_end: f64) -> Result<Self> {
        Self::new(vec![SchedulePiece::new(t_start, t_end, h)?])
    }

    pub fn pieces(&self) -> &[SchedulePiece] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].hamiltonian.dim()
    }

    pub fn start(&self) -> f64 {
        self.pieces[0].t_start
    }

    pub fn end(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].t_end
    }

    pub fn covers(&self, s: f64, t: f64) -> bool {
        (s >= self.start() || time_eq(s, self.start())) && (t <= self.end() || time_eq(t, self.end()))
    }

    /// `U(t, s)`: ordered product of exact per-piece exponentials, later
    /// pieces on the left.
    pub fn propagator(&self, s: f64, t: f64) -> Result<Matrix> {
        if t.partial_cmp(&s).is_none_or(|o| o.is_lt()) || !self.covers(s, t) {
            return Err(Error::OutOfSchedule { s, t });
        }
        let mut u = identity(self.dim());
        for piece in &self.pieces {
            let lo = s.max(piece.t_start);
            let hi = t.min(piece.t_end);
            if hi > lo {
                u = piece.exp(hi - lo) * u;
            }
        }
        Ok(u)
    }
}

/// Free-function form of [`HamiltonianSchedule::propagator`].
pub fn propagator(schedule: &HamiltonianSchedule, s: f64, t: f64) -> Result<Matrix> {
    schedule.propagator(s, t)
}

/// `U† X U`, for any operator.
pub fn conjugate_by(u: &Matrix, x: &Matrix) -> Matrix {
    u.adjoint() * x * u
}

/// Heisenberg map `X ↦ U† X U`.
pub fn heisenberg(u: &Matrix, x: &Observable, tol: f64) -> Result<Observable> {
    check_unitary(u, tol)?;
    check_same_dim(u, x.matrix())?;
    Ok(Observable::new(hermitian_part(&conjugate_by(u, x.matrix())), tol)?.with_label(x.label()))
}

/// `J_(t1,t2)(X)`.
pub fn evolve_observable(
    schedule: &HamiltonianSchedule,
    t1: f64,
    t2: f64,
    x: &Observable,
    tol: f64,
) -> Result<Observable> {
    heisenberg(&schedule.propagator(t1, t2)?, x, tol)
}

#[derive(Serialize, Deserialize)]
struct PieceWire {
    t_start: f64,
    t_end: f64,
    #[serde(rename = "H")]
    h: MatrixWire,
}

impl Serialize for HamiltonianSchedule {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pieces: Vec<PieceWire> = self
            .pieces
            .iter()
            .map(|p| PieceWire { t_start: p.t_start, t_end: p.t_end, h: wire::matrix_to_wire(p.hamiltonian.matrix()) })
            .collect();
        pieces.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HamiltonianSchedule {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = Vec::<PieceWire>::deserialize(d)?;
        let pieces = raw
            .iter()
            .map(|p| {
                let h = Observable::new(wire::matrix_from_wire(&p.h)?, DEFAULT_TOL)?;
                SchedulePiece::new(p.t_start, p.t_end, h)
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        HamiltonianSchedule::new(pieces).map_err(D::Error::custom)
    }
}
