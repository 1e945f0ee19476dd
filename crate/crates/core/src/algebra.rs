//! Operator algebra: commutators, compatibility, generated *-algebras,
//! commutants, conditional expectations onto commutative subalgebras, and
//! completely positive maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    c, check_operator, check_same_dim, cluster_threshold, eig_hermitian, eigh, frobenius, gram_schmidt_hs,
    hermitian_part, hermitian_residual, identity, kron, nullspace, orthogonal_residual, scaled, trace, unvectorize,
    vectorize, zeros, Matrix, C64,
};
use crate::qpspace::{Event, Observable, Pvm, State};

/// `AB − BA`.
pub fn commutator(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_same_dim(a, b)?;
    Ok(a * b - b * a)
}

fn commutator_norm(a: &Matrix, b: &Matrix) -> f64 {
    frobenius(&(a * b - b * a))
}

/// Compatible events: `‖[P, Q]‖_F ≤ tol·(1 + ‖P‖‖Q‖)` and `PQ` is itself an event.
pub fn events_compatible(p: &Event, q: &Event, tol: f64) -> bool {
    if p.dim() != q.dim() {
        return false;
    }
    let (a, b) = (p.projector(), q.projector());
    let threshold = scaled(tol, frobenius(a) * frobenius(b));
    commutator_norm(a, b) <= threshold && Event::new(a * b, tol).is_ok()
}

/// Residuals of the three equivalent characterizations of commuting
/// projections: `QPQ = PQP`, `PQP = QP` and `[P, Q] = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaWitness {
    pub qpq_minus_pqp: f64,
    pub pqp_minus_qp: f64,
    pub commutator: f64,
    pub threshold: f64,
    pub commute: bool,
}

impl LemmaWitness {
    fn flags(&self) -> [bool; 3] {
        [self.qpq_minus_pqp, self.pqp_minus_qp, self.commutator].map(|r| r <= self.threshold)
    }

    /// All three residuals fall on the same side of the threshold.
    pub fn consistent(&self) -> bool {
        let f = self.flags();
        f.iter().all(|x| *x) || f.iter().all(|x| !*x)
    }
}

pub fn projection_lemma_witness(p: &Event, q: &Event, tol: f64) -> Result<LemmaWitness> {
    let (a, b) = (p.projector(), q.projector());
    check_same_dim(a, b)?;
    let pqp = a * b * a;
    let qpq = b * a * b;
    let mut w = LemmaWitness {
        qpq_minus_pqp: frobenius(&(&qpq - &pqp)),
        pqp_minus_qp: frobenius(&(&pqp - b * a)),
        commutator: commutator_norm(a, b),
        threshold: scaled(tol, frobenius(a) * frobenius(b)),
        commute: false,
    };
    w.commute = w.flags().iter().all(|x| *x);
    Ok(w)
}

/// Outcome of comparing two observables both through their spectral
/// projections and through their commutator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub projector_residual: f64,
    pub commutator_residual: f64,
    pub projectors_commute: bool,
    pub operators_commute: bool,
}

impl CompatibilityReport {
    pub fn compatible(&self) -> bool {
        self.projectors_commute && self.operators_commute
    }

    pub fn checks_agree(&self) -> bool {
        self.projectors_commute == self.operators_commute
    }
}

pub fn compatibility_report(x: &Observable, y: &Observable, tol: f64) -> Result<CompatibilityReport> {
    check_same_dim(x.matrix(), y.matrix())?;
    let px = Pvm::spectral(x, tol)?;
    let py = Pvm::spectral(y, tol)?;
    let mut projectors_commute = true;
    let mut projector_residual = 0.0_f64;
    for a in px.outcomes() {
        for b in py.outcomes() {
            let (p, q) = (a.event.projector(), b.event.projector());
            let r = commutator_norm(p, q);
            projector_residual = projector_residual.max(r);
            projectors_commute &= r <= scaled(tol, frobenius(p) * frobenius(q));
        }
    }
    let commutator_residual = commutator_norm(x.matrix(), y.matrix());
    let operators_commute = commutator_residual <= scaled(tol, frobenius(x.matrix()) * frobenius(y.matrix()));
    Ok(CompatibilityReport { projector_residual, commutator_residual, projectors_commute, operators_commute })
}

/// Observables are compatible when all their spectral projections commute
/// (and, consistently, the operators themselves commute).
pub fn observables_compatible(x: &Observable, y: &Observable, tol: f64) -> Result<bool> {
    Ok(compatibility_report(x, y, tol)?.compatible())
}

/// Finite-dimensional von Neumann algebra, held as a Hilbert-Schmidt
/// orthonormal basis of a unital *-closed subspace of `M_d`.
#[derive(Debug, Clone)]
pub struct AlgebraBasis {
    dim: usize,
    basis: Vec<Matrix>,
    contains_identity: bool,
}

impl AlgebraBasis {
    fn from_basis(dim: usize, basis: Vec<Matrix>, tol: f64) -> Self {
        let mut a = Self { dim, basis, contains_identity: false };
        a.contains_identity = a.contains(&identity(dim), tol);
        a
    }

    /// The scalars `ℂ·I`.
    pub fn scalars(dim: usize) -> Self {
        Self { dim, basis: vec![identity(dim).unscale((dim as f64).sqrt())], contains_identity: true }
    }

    /// All of `M_d`, spanned by the matrix units.
    pub fn full(dim: usize) -> Self {
        let mut basis = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for i in 0..dim {
                let mut e = zeros(dim);
                e[(i, j)] = c(1.0, 0.0);
                basis.push(e);
            }
        }
        Self { dim, basis, contains_identity: true }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the algebra as a vector space.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    pub fn contains_identity(&self) -> bool {
        self.contains_identity
    }

    /// Hilbert-Schmidt distance from `m` to the span.
    pub fn residual(&self, m: &Matrix) -> f64 {
        frobenius(&orthogonal_residual(&self.basis, m))
    }

    pub fn contains(&self, m: &Matrix, tol: f64) -> bool {
        m.nrows() == self.dim && self.residual(m) <= tol * frobenius(m).max(1.0)
    }

    /// Largest residual of either basis projected onto the other span.
    pub fn span_distance(&self, other: &AlgebraBasis) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        let a = self.basis.iter().map(|b| other.residual(b));
        let b = other.basis.iter().map(|b| self.residual(b));
        a.chain(b).fold(0.0, f64::max)
    }

    /// Residuals of the algebra axioms: adjoint closure, multiplicative
    /// closure, and membership of the identity.
    pub fn closure_residual(&self) -> f64 {
        let mut worst = self.residual(&identity(self.dim));
        for a in &self.basis {
            worst = worst.max(self.residual(&a.adjoint()));
            for b in &self.basis {
                worst = worst.max(self.residual(&(a * b)));
            }
        }
        worst
    }

    /// Largest commutator between an element of `self` and of `other`.
    pub fn commutation_residual(&self, other: &AlgebraBasis) -> f64 {
        let mut worst = 0.0_f64;
        for a in &self.basis {
            for b in &other.basis {
                worst = worst.max(commutator_norm(a, b));
            }
        }
        worst
    }
}

/// Smallest *-algebra containing the identity and the generators.
pub fn generated_algebra(dim: usize, generators: &[Matrix], tol: f64) -> Result<AlgebraBasis> {
    let mut seeds = vec![identity(dim)];
    for g in generators {
        if check_operator(g)? != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: g.nrows() });
        }
        seeds.push(g.clone());
        seeds.push(g.adjoint());
    }
    let mut basis = gram_schmidt_hs(&seeds, tol)?;

    // Products of the newest elements with everything until the span stops growing.
    let mut frontier = 0;
    loop {
        let known = basis.len();
        for i in 0..known {
            for j in 0..known {
                if i < frontier && j < frontier {
                    continue;
                }
                let product = &basis[i] * &basis[j];
                let r = orthogonal_residual(&basis, &product);
                let norm = frobenius(&r);
                if norm > tol * frobenius(&product).max(1.0) {
                    basis.push(r.unscale(norm));
                }
            }
        }
        if basis.len() == known {
            break;
        }
        frontier = known;
    }
    Ok(AlgebraBasis::from_basis(dim, basis, tol))
}

/// Column-stacked matrix of `X ↦ AX − XA`.
fn commutation_map(a: &Matrix) -> Matrix {
    let id = identity(a.nrows());
    kron(&id, a) - kron(&a.transpose(), &id)
}

/// `{X ∈ M_d : [X, A] = 0 for every generator A}`.
pub fn commutant(dim: usize, generators: &[Matrix], tol: f64) -> Result<AlgebraBasis> {
    // Scalar parts commute with everything. Dropping them, and normalizing
    // what is left, keeps the stacked map well scaled for the relative
    // nullspace cutoff.
    let mut maps = Vec::with_capacity(generators.len());
    for g in generators {
        if check_operator(g)? != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: g.nrows() });
        }
        let traceless = g - identity(dim) * (trace(g) / dim as f64);
        let norm = frobenius(&traceless);
        if norm > tol * frobenius(g) {
            maps.push(commutation_map(&traceless.unscale(norm)));
        }
    }
    if maps.is_empty() {
        return Ok(AlgebraBasis::full(dim));
    }
    let d2 = dim * dim;
    let mut stacked = Matrix::zeros(d2 * maps.len(), d2);
    for (k, m) in maps.iter().enumerate() {
        stacked.rows_mut(k * d2, d2).copy_from(m);
    }
    let kernel: Vec<Matrix> = nullspace(&stacked, tol)?.iter().map(|v| unvectorize(v, dim)).collect();
    let basis = gram_schmidt_hs(&kernel, tol)?;
    Ok(AlgebraBasis::from_basis(dim, basis, tol))
}

/// Commutant of an algebra (its basis acts as the generating set).
pub fn algebra_commutant(a: &AlgebraBasis, tol: f64) -> Result<AlgebraBasis> {
    commutant(a.dim(), a.basis(), tol)
}

pub fn is_commutative(a: &AlgebraBasis, tol: f64) -> bool {
    let basis = a.basis();
    for (i, x) in basis.iter().enumerate() {
        for y in &basis[i + 1..] {
            if commutator_norm(x, y) > scaled(tol, frobenius(x) * frobenius(y)) {
                return false;
            }
        }
    }
    true
}

const MINIMAL_PROJECTION_ATTEMPTS: usize = 8;

/// Minimal projections of a commutative algebra, found by spectrally
/// resolving a random Hermitian element of it.
pub fn minimal_projections<R: Rng + ?Sized>(a: &AlgebraBasis, rng: &mut R, tol: f64) -> Result<Vec<Event>> {
    if !is_commutative(a, tol) {
        return Err(Error::NotCommutative);
    }
    let dim = a.dim();
    let accept = cluster_threshold(tol, 0.0);
    for _ in 0..MINIMAL_PROJECTION_ATTEMPTS {
        let mut generic = zeros(dim);
        for b in a.basis() {
            let u: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            generic += hermitian_part(b).scale(u) + hermitian_part(&(b * c(0.0, 1.0))).scale(v);
        }
        let spectrum = eig_hermitian(&generic, tol)?;
        if spectrum.projectors.len() != a.len() {
            continue;
        }
        let resolves = a.basis().iter().all(|b| {
            let mut approx = zeros(dim);
            for p in &spectrum.projectors {
                approx += p * (trace(&(p * b)) / trace(p));
            }
            frobenius(&(approx - b)) <= accept * (1.0 + frobenius(b))
        });
        if resolves {
            return Ok(spectrum.projectors.into_iter().map(Event::from_projector_unchecked).collect());
        }
    }
    Err(Error::MinimalProjections { attempts: MINIMAL_PROJECTION_ATTEMPTS })
}

/// Seed for the generic-element draw inside conditional expectations.
pub const CONDITIONING_SEED: u64 = 0x5eed_c0de;

/// One branch `y` of a conditional expectation.
#[derive(Debug, Clone)]
pub struct ConditioningBranch {
    pub projector: Event,
    /// `p(y) = tr{ρ P_y}`.
    pub probability: f64,
    /// `(x, p(x|y))` over the spectral values of the conditioned observable.
    pub conditional: Vec<(f64, f64)>,
    /// `Σ_x x p(x|y)`; zero on null branches.
    pub value: f64,
    pub retained: bool,
}

#[derive(Debug, Clone)]
pub struct Conditioning {
    pub branches: Vec<ConditioningBranch>,
    pub operator: Observable,
}

fn check_conditioning(z: &Matrix, y: &AlgebraBasis, tol: f64) -> Result<()> {
    if z.nrows() != y.dim() {
        return Err(Error::DimensionMismatch { expected: y.dim(), found: z.nrows() });
    }
    if !is_commutative(y, tol) {
        return Err(Error::NotCommutative);
    }
    let residual = y.basis().iter().map(|b| commutator_norm(z, b)).fold(0.0, f64::max);
    if residual > scaled(tol, frobenius(z)) {
        return Err(Error::IncompatibleConditioning { residual });
    }
    Ok(())
}

fn conditioning_projections(y: &AlgebraBasis, tol: f64) -> Result<Vec<Event>> {
    let mut rng = ChaCha8Rng::seed_from_u64(CONDITIONING_SEED);
    minimal_projections(y, &mut rng, tol)
}

/// `E[X | 𝔜] = Σ_{x,y} x p(x|y) P_y` with `p(x,y) = tr{ρ R_x P_y}`, for a
/// commutative `𝔜` and `X` in its commutant. Branches with `p(y) ≤ tol`
/// are dropped (their projectors carry value zero).
pub fn condition(state: &State, x: &Observable, y: &AlgebraBasis, tol: f64) -> Result<Conditioning> {
    check_conditioning(x.matrix(), y, tol)?;
    check_same_dim(state.rho(), x.matrix())?;
    let spectrum = Pvm::spectral(x, tol)?;
    let projections = conditioning_projections(y, tol)?;
    let mut operator = zeros(y.dim());
    let mut branches = Vec::with_capacity(projections.len());
    for p_y in projections {
        let mut joint = Vec::with_capacity(spectrum.len());
        for r in spectrum.outcomes() {
            let p_xy = state.trace_with(&(r.event.projector() * p_y.projector()))?.re.max(0.0);
            joint.push((r.value, p_xy));
        }
        let probability: f64 = joint.iter().map(|(_, p)| p).sum();
        let retained = probability > tol;
        let conditional: Vec<(f64, f64)> = if retained {
            joint.iter().map(|(x, p)| (*x, p / probability)).collect()
        } else {
            joint.iter().map(|(x, _)| (*x, 0.0)).collect()
        };
        let value = conditional.iter().map(|(x, p)| x * p).sum::<f64>();
        if retained {
            operator += p_y.projector().scale(value);
        }
        branches.push(ConditioningBranch { projector: p_y, probability, conditional, value, retained });
    }
    if branches.iter().all(|b| !b.retained) {
        return Err(Error::AllBranchesNull);
    }
    let operator = Observable::new(operator, tol)?.with_label(x.label());
    Ok(Conditioning { branches, operator })
}

pub fn conditional_expectation(state: &State, x: &Observable, y: &AlgebraBasis, tol: f64) -> Result<Observable> {
    Ok(condition(state, x, y, tol)?.operator)
}

/// Conditional expectation of an arbitrary (not necessarily Hermitian)
/// operator in the commutant: `Σ_y tr{ρ P_y Z} / tr{ρ P_y} · P_y`.
pub fn conditional_expectation_operator(state: &State, z: &Matrix, y: &AlgebraBasis, tol: f64) -> Result<Matrix> {
    check_conditioning(z, y, tol)?;
    check_same_dim(state.rho(), z)?;
    let mut out = zeros(y.dim());
    let mut any = false;
    for p_y in conditioning_projections(y, tol)? {
        let p = p_y.projector();
        let probability = state.trace_with(p)?.re;
        if probability > tol {
            any = true;
            out += p * (state.trace_with(&(p * z))? / probability);
        }
    }
    if !any {
        return Err(Error::AllBranchesNull);
    }
    Ok(out)
}

/// Linear map between operator spaces, stored as its matrix on column-stacked
/// operators: `vec(Φ(X)) = action · vec(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    in_dim: usize,
    out_dim: usize,
    action: Matrix,
}

impl Superoperator {
    pub fn new(in_dim: usize, out_dim: usize, action: Matrix) -> Result<Self> {
        if action.shape() != (out_dim * out_dim, in_dim * in_dim) {
            return Err(Error::DimensionMismatch { expected: out_dim * out_dim, found: action.nrows() });
        }
        if !action.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { in_dim, out_dim, action })
    }

    /// Builds the action matrix by evaluating `f` on the matrix units.
    pub fn from_fn(in_dim: usize, out_dim: usize, f: impl Fn(&Matrix) -> Matrix) -> Result<Self> {
        let mut action = Matrix::zeros(out_dim * out_dim, in_dim * in_dim);
        for j in 0..in_dim {
            for i in 0..in_dim {
                let mut e = zeros(in_dim);
                e[(i, j)] = c(1.0, 0.0);
                let image = f(&e);
                if image.shape() != (out_dim, out_dim) {
                    return Err(Error::DimensionMismatch { expected: out_dim, found: image.nrows() });
                }
                action.set_column(i + in_dim * j, &vectorize(&image));
            }
        }
        Self::new(in_dim, out_dim, action)
    }

    /// `X ↦ Σ_k K_k X K_k†`, each `K_k` of shape `out × in`.
    pub fn from_kraus(kraus: &[Matrix]) -> Result<Self> {
        let first = kraus.first().ok_or(Error::InvalidModel { reason: "no Kraus operators".into() })?;
        let (out_dim, in_dim) = first.shape();
        let mut action = Matrix::zeros(out_dim * out_dim, in_dim * in_dim);
        for k in kraus {
            if k.shape() != (out_dim, in_dim) {
                return Err(Error::DimensionMismatch { expected: out_dim, found: k.nrows() });
            }
            action += kron(&k.conjugate(), k);
        }
        Self::new(in_dim, out_dim, action)
    }

    pub fn identity(dim: usize) -> Self {
        Self { in_dim: dim, out_dim: dim, action: identity(dim * dim) }
    }

    pub fn transpose(dim: usize) -> Self {
        Self::from_fn(dim, dim, |x| x.transpose()).expect("transpose preserves dimension")
    }

    pub fn zero(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, action: Matrix::zeros(out_dim * out_dim, in_dim * in_dim) }
    }

    /// `X ↦ U X U†`.
    pub fn conjugation(u: &Matrix) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn action(&self) -> &Matrix {
        &self.action
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.shape() != (self.in_dim, self.in_dim) {
            return Err(Error::DimensionMismatch { expected: self.in_dim, found: x.nrows() });
        }
        Ok(unvectorize(&(&self.action * vectorize(x)), self.out_dim))
    }
}

/// Choi matrix `Σ_{ij} Φ(E_ij) ⊗ E_ij`; row index `a·in_dim + i` pairs output
/// index `a` with input index `i`.
pub fn choi_matrix(phi: &Superoperator) -> Matrix {
    let n = phi.in_dim;
    let mut choi = zeros(phi.out_dim * n);
    for j in 0..n {
        for i in 0..n {
            let mut e = zeros(n);
            e[(i, j)] = c(1.0, 0.0);
            let image = phi.apply(&e).expect("matrix unit has input dimension");
            choi += kron(&image, &e);
        }
    }
    choi
}

pub fn is_completely_positive(phi: &Superoperator, tol: f64) -> bool {
    let choi = choi_matrix(phi);
    let norm = frobenius(&choi);
    if hermitian_residual(&choi) > scaled(tol, norm) {
        return false;
    }
    match eigh(&choi) {
        Ok((values, _)) => values[0] >= -scaled(tol, norm),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorphismReport {
    pub completely_positive: bool,
    pub unital: bool,
    pub preserves_expectation: bool,
}

impl MorphismReport {
    pub fn is_morphism(&self) -> bool {
        self.completely_positive && self.unital && self.preserves_expectation
    }
}

/// Checks `Φ: (M_in, E₁) → (M_out, E₂)` for complete positivity, `Φ(1) = 1`
/// and `E₂ ∘ Φ = E₁` on the matrix units.
pub fn morphism_report(phi: &Superoperator, e1: &State, e2: &State, tol: f64) -> Result<MorphismReport> {
    if e1.dim() != phi.in_dim {
        return Err(Error::DimensionMismatch { expected: phi.in_dim, found: e1.dim() });
    }
    if e2.dim() != phi.out_dim {
        return Err(Error::DimensionMismatch { expected: phi.out_dim, found: e2.dim() });
    }
    let unit_image = phi.apply(&identity(phi.in_dim))?;
    let unital = frobenius(&(unit_image - identity(phi.out_dim))) <= scaled(tol, (phi.out_dim as f64).sqrt());
    let mut preserves_expectation = true;
    for j in 0..phi.in_dim {
        for i in 0..phi.in_dim {
            let mut e = zeros(phi.in_dim);
            e[(i, j)] = c(1.0, 0.0);
            let lhs: C64 = e2.trace_with(&phi.apply(&e)?)?;
            let rhs: C64 = e1.trace_with(&e)?;
            preserves_expectation &= (lhs - rhs).norm() <= scaled(tol, 1.0);
        }
    }
    Ok(MorphismReport { completely_positive: is_completely_positive(phi, tol), unital, preserves_expectation })
}

pub fn is_qp_morphism(phi: &Superoperator, e1: &State, e2: &State, tol: f64) -> Result<bool> {
    Ok(morphism_report(phi, e1, e2, tol)?.is_morphism())
}
