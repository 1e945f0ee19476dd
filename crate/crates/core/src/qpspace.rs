//! States, observables, quantum events and projection-valued measures.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{
    self, check_hermitian, check_operator, check_same_dim, eig_hermitian, eigh, frobenius, hermitian_part, identity,
    outer, scaled, trace, zeros, Matrix, Vector, DEFAULT_TOL,
};
use crate::wire;

/// Density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    rho: Matrix,
}

impl State {
    /// Validates `rho` and projects small violations (within `tol`) back onto
    /// the set of density matrices.
    pub fn new(rho: Matrix, tol: f64) -> Result<Self> {
        check_hermitian(&rho, tol)?;
        let h = hermitian_part(&rho);
        let tr = trace(&h).re;
        if (tr - 1.0).abs() > tol {
            return Err(Error::NotDensityMatrix { reason: format!("trace is {tr}") });
        }
        let (values, vectors) = eigh(&h)?;
        let min = values.first().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(Error::NotDensityMatrix { reason: format!("negative eigenvalue {min:.3e}") });
        }
        let rho = if min < 0.0 {
            let floored = Vector::from_iterator(values.len(), values.iter().map(|x| numerics::c(x.max(0.0), 0.0)));
            &vectors * Matrix::from_diagonal(&floored) * vectors.adjoint()
        } else {
            h
        };
        Ok(Self::normalized(rho))
    }

    /// Symmetrizes and trace-normalizes an operator that is positive by
    /// construction (e.g. `PρP`).
    pub(crate) fn normalized(m: Matrix) -> Self {
        let h = hermitian_part(&m);
        let tr = trace(&h).re;
        Self { rho: h.unscale(tr) }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { rho: identity(dim).unscale(dim as f64) }
    }

    pub fn rho(&self) -> &Matrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// `tr{ρM}` for an arbitrary operator.
    pub fn trace_with(&self, m: &Matrix) -> Result<numerics::C64> {
        check_same_dim(&self.rho, m)?;
        Ok((&self.rho * m).trace())
    }

    /// Quantum expectation `tr{ρX}`.
    pub fn expectation(&self, x: &Observable) -> Result<f64> {
        Ok(self.trace_with(x.matrix())?.re)
    }

    /// `Pr{A} = tr{ρ P_A}`, clamped to `[0, 1]`.
    pub fn probability(&self, event: &Event) -> Result<f64> {
        Ok(self.trace_with(event.projector())?.re.clamp(0.0, 1.0))
    }

    /// Distribution of the spectral outcomes of `x`.
    pub fn distribution(&self, x: &Observable, tol: f64) -> Result<Distribution> {
        check_same_dim(&self.rho, x.matrix())?;
        let pvm = Pvm::spectral(x, tol)?;
        let mut support = Vec::with_capacity(pvm.len());
        let mut probs = Vec::with_capacity(pvm.len());
        for outcome in pvm.outcomes() {
            support.push(outcome.value);
            probs.push(self.probability(&outcome.event)?);
        }
        Ok(Distribution { support, probs })
    }

    /// Minimum eigenvalue of the density matrix.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eigh(&self.rho)?.0[0])
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &State) -> Result<f64> {
        check_same_dim(&self.rho, &other.rho)?;
        let (values, _) = eigh(&(&self.rho - &other.rho))?;
        Ok(0.5 * values.iter().map(|x| x.abs()).sum::<f64>())
    }
}

/// `|ψ⟩⟨ψ| / ‖ψ‖²`.
pub fn make_pure_state(psi: &Vector, tol: f64) -> Result<State> {
    let norm = psi.norm();
    if norm.partial_cmp(&tol).is_none_or(|o| o.is_le()) {
        return Err(Error::ZeroVector);
    }
    let v = psi.unscale(norm);
    Ok(State::normalized(outer(&v, &v)))
}

impl Serialize for State {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        wire::matrix::serialize(&self.rho, s)
    }
}

impl<'de> Deserialize<'de> for State {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = wire::matrix::deserialize(d)?;
        State::new(m, DEFAULT_TOL).map_err(serde::de::Error::custom)
    }
}

/// Hermitian operator with a display label.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: Matrix,
    label: String,
}

impl Observable {
    pub fn new(matrix: Matrix, tol: f64) -> Result<Self> {
        check_hermitian(&matrix, tol)?;
        Ok(Self { matrix: hermitian_part(&matrix), label: String::new() })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

impl Serialize for Observable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        wire::matrix::serialize(&self.matrix, s)
    }
}

impl<'de> Deserialize<'de> for Observable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = wire::matrix::deserialize(d)?;
        Observable::new(m, DEFAULT_TOL).map_err(serde::de::Error::custom)
    }
}

/// Quantum event: an orthogonal projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    projector: Matrix,
    label: String,
}

/// Largest of `‖P² − P‖_F` and `‖P − P†‖_F`.
pub fn projection_residual(p: &Matrix) -> f64 {
    frobenius(&(p * p - p)).max(frobenius(&(p - p.adjoint())))
}

impl Event {
    pub fn new(projector: Matrix, tol: f64) -> Result<Self> {
        check_operator(&projector)?;
        let residual = projection_residual(&projector);
        if residual > scaled(tol, frobenius(&projector)) {
            return Err(Error::NotProjection { residual });
        }
        Ok(Self { projector: hermitian_part(&projector), label: String::new() })
    }

    /// Projection onto the ray through `psi`.
    pub fn from_ket(psi: &Vector) -> Result<Self> {
        let norm = psi.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::ZeroVector);
        }
        let v = psi.unscale(norm);
        Ok(Self { projector: hermitian_part(&outer(&v, &v)), label: String::new() })
    }

    pub fn identity(dim: usize) -> Self {
        Self { projector: identity(dim), label: String::new() }
    }

    pub fn zero(dim: usize) -> Self {
        Self { projector: zeros(dim), label: String::new() }
    }

    pub(crate) fn from_projector_unchecked(projector: Matrix) -> Self {
        Self { projector: hermitian_part(&projector), label: String::new() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn projector(&self) -> &Matrix {
        &self.projector
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.projector.nrows()
    }

    pub fn rank(&self) -> f64 {
        trace(&self.projector).re
    }

    /// `P_Ā = 1 − P_A`.
    pub fn complement(&self) -> Self {
        let label = if self.label.is_empty() { String::new() } else { format!("not {}", self.label) };
        Self { projector: identity(self.dim()) - &self.projector, label }
    }
}

/// Free-function form of [`Event::complement`].
pub fn event_complement(event: &Event) -> Event {
    event.complement()
}

impl Serialize for Event {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        wire::matrix::serialize(&self.projector, s)
    }
}

impl<'de> Deserialize<'de> for Event {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = wire::matrix::deserialize(d)?;
        Event::new(m, DEFAULT_TOL).map_err(serde::de::Error::custom)
    }
}

/// Two outcome labels denote the same outcome when they agree to this
/// relative precision.
pub fn same_value(a: f64, b: f64) -> bool {
    (a - b).abs() <= DEFAULT_TOL * (1.0 + a.abs().max(b.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvmOutcome {
    pub value: f64,
    #[serde(rename = "projector")]
    pub event: Event,
}

/// Projection-valued measure with finitely many real-labelled outcomes.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Pvm {
    outcomes: Vec<PvmOutcome>,
}

impl Pvm {
    pub fn new(outcomes: Vec<PvmOutcome>, tol: f64) -> Result<Self> {
        let dim = match outcomes.first() {
            Some(o) => o.event.dim(),
            None => return Err(Error::InvalidPvm { reason: "no outcomes".into() }),
        };
        let mut total = zeros(dim);
        for (i, a) in outcomes.iter().enumerate() {
            if a.event.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: a.event.dim() });
            }
            if !a.value.is_finite() {
                return Err(Error::InvalidPvm { reason: "non-finite outcome value".into() });
            }
            for b in &outcomes[i + 1..] {
                if a.value == b.value {
                    return Err(Error::InvalidPvm { reason: format!("duplicate outcome value {}", a.value) });
                }
                let overlap = frobenius(&(a.event.projector() * b.event.projector()));
                if overlap > scaled(tol, frobenius(a.event.projector()) * frobenius(b.event.projector())) {
                    return Err(Error::InvalidPvm {
                        reason: format!(
                            "outcomes {} and {} are not orthogonal (overlap {overlap:.3e})",
                            a.value, b.value
                        ),
                    });
                }
            }
            total += a.event.projector();
        }
        let completeness = frobenius(&(total - identity(dim)));
        if completeness > scaled(tol, (dim as f64).sqrt()) {
            return Err(Error::InvalidPvm {
                reason: format!("projectors do not sum to identity (residual {completeness:.3e})"),
            });
        }
        Ok(Self { outcomes })
    }

    /// Spectral measure of an observable: one outcome per clustered eigenvalue.
    pub fn spectral(x: &Observable, tol: f64) -> Result<Self> {
        let spectrum = eig_hermitian(x.matrix(), tol)?;
        let outcomes = spectrum
            .eigenvalues
            .into_iter()
            .zip(spectrum.projectors)
            .map(|(value, p)| PvmOutcome { value, event: Event::from_projector_unchecked(p) })
            .collect();
        Ok(Self { outcomes })
    }

    pub fn outcomes(&self) -> &[PvmOutcome] {
        &self.outcomes
    }

    pub fn values(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.value).collect()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.outcomes[0].event.dim()
    }

    /// The event for a single outcome value.
    pub fn event_for(&self, value: f64) -> Result<&Event> {
        self.outcomes
            .iter()
            .find(|o| same_value(o.value, value))
            .map(|o| &o.event)
            .ok_or(Error::UnknownOutcome { value })
    }

    /// `P_X[G]`: the event that the outcome lies in `values`.
    pub fn restrict(&self, values: &[f64]) -> Result<Event> {
        let mut p = zeros(self.dim());
        for &v in values {
            p += self.event_for(v)?.projector();
        }
        // Repeated labels would double-count a projector.
        for (i, a) in values.iter().enumerate() {
            if values[i + 1..].iter().any(|b| same_value(*a, *b)) {
                return Err(Error::InvalidPvm { reason: format!("outcome {a} listed twice") });
            }
        }
        Ok(Event::from_projector_unchecked(p))
    }

    /// `Σ x P_X[{x}]`.
    pub fn reconstruct(&self) -> Matrix {
        let mut m = zeros(self.dim());
        for o in &self.outcomes {
            m += o.event.projector().scale(o.value);
        }
        m
    }
}

/// Free-function form of [`Pvm::spectral`].
pub fn spectral_pvm(x: &Observable, tol: f64) -> Result<Pvm> {
    Pvm::spectral(x, tol)
}

/// Free-function form of [`Pvm::restrict`].
pub fn pvm_restrict(pvm: &Pvm, values: &[f64]) -> Result<Event> {
    pvm.restrict(values)
}

impl<'de> Deserialize<'de> for Pvm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let outcomes = Vec::<PvmOutcome>::deserialize(d)?;
        Pvm::new(outcomes, DEFAULT_TOL).map_err(serde::de::Error::custom)
    }
}

/// Finitely supported distribution of an observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn moment(&self, k: i32) -> f64 {
        self.support.iter().zip(&self.probs).map(|(x, p)| x.powi(k) * p).sum()
    }

    pub fn prob_of(&self, value: f64) -> Option<f64> {
        self.support.iter().position(|x| same_value(*x, value)).map(|i| self.probs[i])
    }
}

pub fn expectation(state: &State, x: &Observable) -> Result<f64> {
    state.expectation(x)
}

pub fn event_probability(state: &State, event: &Event) -> Result<f64> {
    state.probability(event)
}

pub fn distribution(state: &State, x: &Observable, tol: f64) -> Result<Distribution> {
    state.distribution(x, tol)
}
