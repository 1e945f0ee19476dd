//! Discrete non-demolition filtering with repeated system–probe
//! interactions.
//!
//! Step `k` couples the system to a fresh probe in state `σ` through `U`,
//! then measures `Z = Σ y Q_y` on that probe. On the chain
//! `system ⊗ probe₁ ⊗ … ⊗ probeₙ` the observed process is
//! `Y_k = W_k† Z_k W_k` with `W_k = U_k ⋯ U₁`, and the filter is the
//! record-conditioned system state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{commutator, generated_algebra};
use crate::error::{Error, Result};
use crate::measurement::{JointDistribution, OutcomeLabel};
use crate::numerics::{
    check_operator, check_unitary, frobenius, hermitian_part, identity, kron, scaled, trace, Matrix,
};
use crate::qpspace::{same_value, Observable, Pvm, State};

/// Default bound on the chain dimension `sys · probeⁿ`.
pub const DEFAULT_CHAIN_CAP: usize = 256;

/// Chains up to this dimension also get the filtration span check.
pub const FILTRATION_CHECK_MAX_DIM: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace over one factor of a `dA·dB` operator, basis index
/// `a·dB + b`.
pub fn partial_trace(m: &Matrix, dims: (usize, usize), keep: Keep) -> Result<Matrix> {
    let n = check_operator(m)?;
    let (da, db) = dims;
    if da * db != n {
        return Err(Error::DimensionMismatch { expected: da * db, found: n });
    }
    Ok(match keep {
        Keep::First => Matrix::from_fn(da, da, |i, j| (0..db).map(|b| m[(i * db + b, j * db + b)]).sum()),
        Keep::Second => Matrix::from_fn(db, db, |i, j| (0..da).map(|a| m[(a * db + i, a * db + j)]).sum()),
    })
}

#[derive(Debug, Clone)]
pub struct RepeatedInteractionModel {
    sys_dim: usize,
    probe_dim: usize,
    unitary: Matrix,
    probe_state: State,
    probe_pvm: Pvm,
    observed: Observable,
}

impl RepeatedInteractionModel {
    pub fn new(
        sys_dim: usize,
        probe_dim: usize,
        unitary: Matrix,
        probe_state: State,
        probe_pvm: Pvm,
        observed: Observable,
        tol: f64,
    ) -> Result<Self> {
        if sys_dim == 0 || probe_dim == 0 {
            return Err(Error::InvalidModel { reason: "dimensions must be positive".into() });
        }
        let joint = check_operator(&unitary)?;
        if joint != sys_dim * probe_dim {
            return Err(Error::DimensionMismatch { expected: sys_dim * probe_dim, found: joint });
        }
        check_unitary(&unitary, tol)?;
        for found in [probe_state.dim(), probe_pvm.dim()] {
            if found != probe_dim {
                return Err(Error::DimensionMismatch { expected: probe_dim, found });
            }
        }
        if observed.dim() != sys_dim {
            return Err(Error::DimensionMismatch { expected: sys_dim, found: observed.dim() });
        }
        Ok(Self { sys_dim, probe_dim, unitary, probe_state, probe_pvm, observed })
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn probe_dim(&self) -> usize {
        self.probe_dim
    }

    pub fn unitary(&self) -> &Matrix {
        &self.unitary
    }

    pub fn probe_state(&self) -> &State {
        &self.probe_state
    }

    pub fn probe_pvm(&self) -> &Pvm {
        &self.probe_pvm
    }

    pub fn observed(&self) -> &Observable {
        &self.observed
    }

    /// Chain dimension `sys · probeⁿ`, or `ChainTooLarge` above `cap`.
    pub fn chain_dim(&self, n: usize, cap: usize) -> Result<usize> {
        let mut dim = self.sys_dim;
        for _ in 0..n {
            dim = dim.saturating_mul(self.probe_dim);
            if dim > cap {
                return Err(Error::ChainTooLarge { dim, cap });
            }
        }
        if dim > cap {
            return Err(Error::ChainTooLarge { dim, cap });
        }
        Ok(dim)
    }
}

/// Embeds an operator on `sys ⊗ probe` into the `n`-probe chain, acting on
/// the system and probe `slot` (1-based).
fn embed(op: &Matrix, sys: usize, probe: usize, n: usize, slot: usize) -> Matrix {
    let stride = probe.pow((n - slot) as u32);
    let tail = probe.pow(n as u32);
    let dim = sys * tail;
    let mut out = Matrix::zeros(dim, dim);
    for col in 0..dim {
        let (s, rest) = (col / tail, col % tail);
        let pk = (rest / stride) % probe;
        let base = rest - pk * stride;
        for s2 in 0..sys {
            for p2 in 0..probe {
                let v = op[(s2 * probe + p2, s * probe + pk)];
                if v.re != 0.0 || v.im != 0.0 {
                    out[(s2 * tail + base + p2 * stride, col)] = v;
                }
            }
        }
    }
    out
}

/// Operators on the `n`-probe chain, all in the Heisenberg picture.
#[derive(Debug, Clone)]
pub struct Chain {
    pub dim: usize,
    /// `W_k = U_k ⋯ U₁` for `k = 1..n`.
    pub propagators: Vec<Matrix>,
    /// Observed process `Y_k`.
    pub y: Vec<Observable>,
    /// Per step, the spectral projections of `Y_k` keyed by outcome value.
    pub y_events: Vec<Vec<(f64, Matrix)>>,
    /// `X_n = W_n† (X ⊗ I) W_n`.
    pub x_n: Observable,
}

impl Chain {
    /// `ρ ⊗ σ^{⊗n}`.
    pub fn initial_state(&self, model: &RepeatedInteractionModel, initial: &State) -> Matrix {
        let mut m = initial.rho().clone();
        for _ in 0..self.y.len() {
            m = kron(&m, model.probe_state.rho());
        }
        m
    }

    /// `X_m` for `m ≤ n`.
    pub fn x_at(&self, model: &RepeatedInteractionModel, m: usize, tol: f64) -> Result<Observable> {
        let n = self.y.len();
        let x = embed(
            &kron(model.observed.matrix(), &identity(model.probe_dim)),
            model.sys_dim,
            model.probe_dim,
            n,
            n.max(1),
        );
        let w = if m == 0 { identity(self.dim) } else { self.propagators[m - 1].clone() };
        Observable::new(hermitian_part(&(w.adjoint() * x * w)), tol)
    }
}

pub fn chain_observables(model: &RepeatedInteractionModel, n: usize, cap: usize, tol: f64) -> Result<Chain> {
    if n == 0 {
        return Err(Error::TooFewSteps);
    }
    let dim = model.chain_dim(n, cap)?;
    let (sys, probe) = (model.sys_dim, model.probe_dim);
    let eye_sys = identity(sys);
    let mut w = identity(dim);
    let mut propagators = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut y_events = Vec::with_capacity(n);
    for k in 1..=n {
        w = embed(&model.unitary, sys, probe, n, k) * w;
        let z = model.probe_pvm.reconstruct();
        let zk = embed(&kron(&eye_sys, &z), sys, probe, n, k);
        y.push(Observable::new(hermitian_part(&(w.adjoint() * zk * &w)), tol)?);
        y_events.push(
            model
                .probe_pvm
                .outcomes()
                .iter()
                .map(|o| {
                    let q = embed(&kron(&eye_sys, o.event.projector()), sys, probe, n, k);
                    (o.value, hermitian_part(&(w.adjoint() * q * &w)))
                })
                .collect(),
        );
        propagators.push(w.clone());
    }
    let x = embed(&kron(model.observed.matrix(), &identity(probe)), sys, probe, n, n);
    let x_n = Observable::new(hermitian_part(&(w.adjoint() * x * &w)), tol)?;
    Ok(Chain { dim, propagators, y, y_events, x_n })
}

/// Largest commutator norm over a set of pairs, with the threshold it was
/// judged against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutationReport {
    pub max_residual: f64,
    pub threshold: f64,
    pub passes: bool,
    /// Whether each generated algebra `𝔜_k` sits inside `𝔜_{k+1}`. Only
    /// evaluated on small chains.
    pub filtration_nested: Option<bool>,
}

fn pairwise_report<'a>(pairs: impl Iterator<Item = (&'a Matrix, &'a Matrix)>, tol: f64) -> Result<CommutationReport> {
    let mut max_residual = 0.0f64;
    let mut threshold = tol;
    for (a, b) in pairs {
        max_residual = max_residual.max(frobenius(&commutator(a, b)?));
        threshold = threshold.max(scaled(tol, frobenius(a) * frobenius(b)));
    }
    Ok(CommutationReport { max_residual, threshold, passes: max_residual <= threshold, filtration_nested: None })
}

/// Mutual commutation of an arbitrary list of observables.
pub fn self_commutation_report(ops: &[Observable], tol: f64) -> Result<CommutationReport> {
    let pairs = ops.iter().enumerate().flat_map(|(j, a)| ops[j + 1..].iter().map(move |b| (a.matrix(), b.matrix())));
    pairwise_report(pairs, tol)
}

/// `[Y_j, Y_k] = 0` for all `j, k ≤ n`, plus the filtration check on small
/// chains.
pub fn check_self_non_demolition(model: &RepeatedInteractionModel, n: usize, tol: f64) -> Result<CommutationReport> {
    let chain = chain_observables(model, n, DEFAULT_CHAIN_CAP, tol)?;
    let mut report = self_commutation_report(&chain.y, tol)?;
    if chain.dim <= FILTRATION_CHECK_MAX_DIM {
        let mut nested = true;
        let mut prev = generated_algebra(chain.dim, &[], tol)?;
        for k in 1..=n {
            let gens: Vec<Matrix> = chain.y[..k].iter().map(|y| y.matrix().clone()).collect();
            let next = generated_algebra(chain.dim, &gens, tol)?;
            let bound = scaled(tol, chain.dim as f64).sqrt();
            nested &= prev.basis().iter().all(|b| next.residual(b) <= bound);
            prev = next;
        }
        report.filtration_nested = Some(nested);
    }
    Ok(report)
}

/// `[X_m, Y_j] = 0` for all `j ≤ n`. With `m < n` this probes whether an
/// earlier observable survives later observations, which generally fails.
pub fn check_non_demolition_at(
    model: &RepeatedInteractionModel,
    n: usize,
    m: usize,
    tol: f64,
) -> Result<CommutationReport> {
    if m > n {
        return Err(Error::AxisOutOfRange { axis: m, len: n });
    }
    let chain = chain_observables(model, n, DEFAULT_CHAIN_CAP, tol)?;
    let x = chain.x_at(model, m, tol)?;
    pairwise_report(chain.y.iter().map(|y| (x.matrix(), y.matrix())), tol)
}

/// `[X_n, Y_j] = 0` for all `j ≤ n`.
pub fn check_non_demolition(model: &RepeatedInteractionModel, n: usize, tol: f64) -> Result<CommutationReport> {
    check_non_demolition_at(model, n, n, tol)
}

/// Observations that keep reusing one probe instead of taking a fresh one:
/// `Y_k = U^{-k} (I ⊗ Z) U^k` on `sys ⊗ probe`. Unlike the chain form, these
/// need not commute.
pub fn reused_probe_observables(model: &RepeatedInteractionModel, n: usize, tol: f64) -> Result<Vec<Observable>> {
    let z = kron(&identity(model.sys_dim), &model.probe_pvm.reconstruct());
    let mut w = identity(model.sys_dim * model.probe_dim);
    (0..n)
        .map(|_| {
            w = &model.unitary * &w;
            Observable::new(hermitian_part(&(w.adjoint() * &z * &w)), tol)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    pub conditioned: State,
    pub record: Vec<f64>,
    pub record_prob: f64,
}

impl FilterState {
    pub fn initial(state: State) -> Self {
        Self { conditioned: state, record: Vec::new(), record_prob: 1.0 }
    }
}

fn probe_event(model: &RepeatedInteractionModel, y: f64) -> Result<Matrix> {
    Ok(kron(&identity(model.sys_dim), model.probe_pvm.event_for(y)?.projector()))
}

/// `U(ρ ⊗ σ)U†`.
fn entangle(model: &RepeatedInteractionModel, rho: &State) -> Matrix {
    &model.unitary * kron(rho.rho(), model.probe_state.rho()) * model.unitary.adjoint()
}

/// `p(y)` for every probe outcome, in PVM order.
pub fn outcome_probabilities(model: &RepeatedInteractionModel, fs: &FilterState) -> Result<Vec<(f64, f64)>> {
    let joint = entangle(model, &fs.conditioned);
    model
        .probe_pvm
        .outcomes()
        .iter()
        .map(|o| {
            let q = kron(&identity(model.sys_dim), o.event.projector());
            Ok((o.value, trace(&(q * &joint)).re.clamp(0.0, 1.0)))
        })
        .collect()
}

/// One interaction and probe reading `y`.
pub fn filter_step(model: &RepeatedInteractionModel, fs: &FilterState, y: f64, tol: f64) -> Result<FilterState> {
    if fs.conditioned.dim() != model.sys_dim {
        return Err(Error::DimensionMismatch { expected: model.sys_dim, found: fs.conditioned.dim() });
    }
    let q = probe_event(model, y)?;
    let post = &q * entangle(model, &fs.conditioned) * &q;
    let p = trace(&post).re;
    let step = fs.record.len() + 1;
    if p <= tol {
        return Err(Error::ZeroProbabilityOutcome { step });
    }
    let reduced = partial_trace(&post, (model.sys_dim, model.probe_dim), Keep::First)?;
    let mut record = fs.record.clone();
    record.push(y);
    Ok(FilterState { conditioned: State::normalized(reduced), record, record_prob: fs.record_prob * p.min(1.0) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRun {
    /// States after `0..=n` readings.
    pub trajectory: Vec<FilterState>,
    /// `tr{ρ_k X}` for each state in the trajectory.
    pub estimates: Vec<f64>,
}

pub fn filter_run(model: &RepeatedInteractionModel, initial: &State, record: &[f64], tol: f64) -> Result<FilterRun> {
    if initial.dim() != model.sys_dim {
        return Err(Error::DimensionMismatch { expected: model.sys_dim, found: initial.dim() });
    }
    let mut trajectory = vec![FilterState::initial(initial.clone())];
    for y in record {
        let next = filter_step(model, trajectory.last().expect("nonempty"), *y, tol)?;
        trajectory.push(next);
    }
    let estimates = trajectory.iter().map(|fs| fs.conditioned.expectation(&model.observed)).collect::<Result<_>>()?;
    Ok(FilterRun { trajectory, estimates })
}

/// Samples `n` readings from the filter's own predictive probabilities.
pub fn simulate_record(
    model: &RepeatedInteractionModel,
    initial: &State,
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<FilterRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut record = Vec::with_capacity(n);
    let mut fs = FilterState::initial(initial.clone());
    for _ in 0..n {
        let probs: Vec<(f64, f64)> = outcome_probabilities(model, &fs)?.into_iter().filter(|(_, p)| *p > tol).collect();
        let total: f64 = probs.iter().map(|(_, p)| p).sum();
        let mut u = rng.random::<f64>() * total;
        let mut y = probs.last().ok_or(Error::AllBranchesNull)?.0;
        for (value, p) in &probs {
            if u < *p {
                y = *value;
                break;
            }
            u -= p;
        }
        fs = filter_step(model, &fs, y, tol)?;
        record.push(y);
    }
    filter_run(model, initial, &record, tol)
}

/// Every record's probability from the pyramidal formula on the full
/// chain, and the conditioned system state for records of positive
/// probability.
#[derive(Debug, Clone)]
pub struct GlobalOracle {
    pub joint: JointDistribution,
    pub states: Vec<Option<State>>,
}

impl GlobalOracle {
    pub fn lookup(&self, record: &[f64]) -> Option<(f64, Option<&State>)> {
        let axes = &self.joint.axes;
        let (flat, (_, p)) = self.joint.records().enumerate().find(|(_, (idx, _))| {
            idx.len() == record.len()
                && idx.iter().zip(record).enumerate().all(|(k, (i, y))| same_value(axes[k][*i].0[0], *y))
        })?;
        Some((p, self.states[flat].as_ref()))
    }
}

pub fn global_oracle(
    model: &RepeatedInteractionModel,
    initial: &State,
    n: usize,
    cap: usize,
    tol: f64,
) -> Result<GlobalOracle> {
    if initial.dim() != model.sys_dim {
        return Err(Error::DimensionMismatch { expected: model.sys_dim, found: initial.dim() });
    }
    let chain = chain_observables(model, n, cap, tol)?;
    let rho0 = chain.initial_state(model, initial);
    let w = chain.propagators.last().expect("n >= 1");
    let axes: Vec<Vec<OutcomeLabel>> =
        chain.y_events.iter().map(|step| step.iter().map(|(v, _)| OutcomeLabel::single(*v)).collect()).collect();
    let mut probs = Vec::new();
    let mut states = Vec::new();
    let env = model.probe_dim.pow(n as u32);
    descend(&rho0, &chain.y_events, &mut |m| {
        let p = trace(m).re;
        if p > tol {
            let schrodinger = w * m * w.adjoint();
            let reduced = partial_trace(&schrodinger, (model.sys_dim, env), Keep::First)?;
            states.push(Some(State::normalized(reduced)));
        } else {
            states.push(None);
        }
        probs.push(p.max(0.0));
        Ok(())
    })?;
    Ok(GlobalOracle { joint: JointDistribution { axes, probs }, states })
}

fn descend(m: &Matrix, steps: &[Vec<(f64, Matrix)>], leaf: &mut impl FnMut(&Matrix) -> Result<()>) -> Result<()> {
    match steps.split_first() {
        None => leaf(m),
        Some((step, rest)) => {
            for (_, p) in step {
                descend(&(p * m * p), rest, leaf)?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DEFAULT_TOL;
    use crate::paulis::{cnot, hadamard, ket, sigma_x, sigma_z};
    use crate::qpspace::make_pure_state;

    const TOL: f64 = DEFAULT_TOL;

    fn pure(amps: &[f64]) -> State {
        make_pure_state(&ket(amps), TOL).unwrap()
    }

    fn obs(m: Matrix) -> Observable {
        Observable::new(m, TOL).unwrap()
    }

    fn model(u: Matrix, x: Matrix) -> RepeatedInteractionModel {
        RepeatedInteractionModel::new(
            2,
            2,
            u,
            pure(&[1.0, 0.0]),
            Pvm::spectral(&obs(sigma_z()), TOL).unwrap(),
            obs(x),
            TOL,
        )
        .unwrap()
    }

    fn cnot_model() -> RepeatedInteractionModel {
        model(cnot(), sigma_z())
    }

    #[test]
    fn partial_trace_examples() {
        let a = pure(&[0.6, 0.8]).rho().clone();
        let b = pure(&[1.0, 1.0]).rho().clone();
        let keep_a = partial_trace(&kron(&a, &b), (2, 2), Keep::First).unwrap();
        assert!(frobenius(&(keep_a - &a)) < 1e-15);
        let keep_b = partial_trace(&kron(&a, &b), (2, 2), Keep::Second).unwrap();
        assert!(frobenius(&(keep_b - &b)) < 1e-15);
        let bell = pure(&[1.0, 0.0, 0.0, 1.0]);
        let reduced = partial_trace(bell.rho(), (2, 2), Keep::First).unwrap();
        assert!(frobenius(&(reduced - identity(2).scale(0.5))) < 1e-15);
        let eye = partial_trace(&identity(4), (2, 2), Keep::First).unwrap();
        assert!(frobenius(&(eye - identity(2).scale(2.0))) < 1e-15);
        assert!(partial_trace(&identity(4), (3, 2), Keep::First).is_err());
    }

    #[test]
    fn embedding_matches_kron_for_last_slot() {
        let u = cnot();
        let e = embed(&u, 2, 2, 1, 1);
        assert!(frobenius(&(e - &u)) < 1e-15);
        // Slot 1 of a two-probe chain acts as U ⊗ I.
        let e = embed(&u, 2, 2, 2, 1);
        assert!(frobenius(&(e - kron(&u, &identity(2)))) < 1e-15);
    }

    #[test]
    fn trivial_chain() {
        let m = model(identity(4), sigma_x());
        let chain = chain_observables(&m, 1, DEFAULT_CHAIN_CAP, TOL).unwrap();
        assert!(frobenius(&(chain.y[0].matrix() - kron(&identity(2), &sigma_z()))) < 1e-15);
        assert!(frobenius(&(chain.x_n.matrix() - kron(&sigma_x(), &identity(2)))) < 1e-15);
    }

    #[test]
    fn cnot_chain_is_non_demolition() {
        let m = cnot_model();
        let chain = chain_observables(&m, 1, DEFAULT_CHAIN_CAP, TOL).unwrap();
        assert!(frobenius(&commutator(chain.x_n.matrix(), chain.y[0].matrix()).unwrap()) < 1e-15);
        let r = check_self_non_demolition(&m, 3, TOL).unwrap();
        assert!(r.passes && r.max_residual <= 1e-10);
        assert_eq!(r.filtration_nested, Some(true));
        assert!(check_self_non_demolition(&m, 1, TOL).unwrap().passes);
        assert!(check_non_demolition(&m, 2, TOL).unwrap().passes);
        // X₁ = σx⊗σx and Y₁ = σz⊗σz commute; the observable before the
        // interaction does not.
        assert!(check_non_demolition(&model(cnot(), sigma_x()), 1, TOL).unwrap().passes);
        let early = check_non_demolition_at(&model(cnot(), sigma_x()), 1, 0, TOL).unwrap();
        assert!(!early.passes && early.max_residual > 1.0);
        assert!(check_non_demolition(&model(cnot(), identity(2)), 2, TOL).unwrap().passes);
    }

    #[test]
    fn reused_probe_breaks_self_non_demolition() {
        // Rotating the probe after a CNOT leaves σz⊗σx then σz⊗σz.
        let m = model(cnot() * kron(&identity(2), &hadamard()), sigma_z());
        let ys = reused_probe_observables(&m, 2, TOL).unwrap();
        let r = self_commutation_report(&ys, TOL).unwrap();
        assert!(!r.passes && r.max_residual > 0.1);
        // The same model on fresh probes is fine.
        assert!(check_self_non_demolition(&m, 2, TOL).unwrap().passes);
    }

    #[test]
    fn chain_cap() {
        assert!(matches!(
            chain_observables(&cnot_model(), 8, DEFAULT_CHAIN_CAP, TOL),
            Err(Error::ChainTooLarge { .. })
        ));
    }

    #[test]
    fn filter_step_examples() {
        let idle = model(identity(4), sigma_z());
        let rho = pure(&[0.6, 0.8]);
        let fs = filter_step(&idle, &FilterState::initial(rho.clone()), 1.0, TOL).unwrap();
        assert!(frobenius(&(fs.conditioned.rho() - rho.rho())) < 1e-14);
        assert!((fs.record_prob - 1.0).abs() < 1e-15);

        let m = cnot_model();
        let fs = filter_step(&m, &FilterState::initial(pure(&[1.0, 1.0])), 1.0, TOL).unwrap();
        assert!(frobenius(&(fs.conditioned.rho() - pure(&[1.0, 0.0]).rho())) < 1e-14);
        assert!((fs.record_prob - 0.5).abs() < 1e-15);

        let err = filter_step(&m, &FilterState::initial(pure(&[1.0, 0.0])), -1.0, TOL);
        assert!(matches!(err, Err(Error::ZeroProbabilityOutcome { step: 1 })));
    }

    #[test]
    fn filter_run_examples() {
        let m = cnot_model();
        let run = filter_run(&m, &pure(&[0.6, 0.8]), &[], TOL).unwrap();
        assert_eq!(run.trajectory.len(), 1);
        assert!((run.estimates[0] - (0.36 - 0.64)).abs() < 1e-14);

        let run = filter_run(&m, &pure(&[0.6, 0.8]), &[1.0], TOL).unwrap();
        assert!((run.estimates[1] - 1.0).abs() < 1e-14);
        assert!((run.trajectory[1].record_prob - 0.36).abs() < 1e-14);

        let run = filter_run(&m, &pure(&[0.6, 0.8]), &[-1.0; 4], TOL).unwrap();
        assert!(run.estimates[1..].iter().all(|e| (e + 1.0).abs() < 1e-14));

        let err = filter_run(&m, &pure(&[0.6, 0.8]), &[1.0, -1.0], TOL);
        assert!(matches!(err, Err(Error::ZeroProbabilityOutcome { step: 2 })));
    }

    #[test]
    fn simulation_is_deterministic() {
        let m = cnot_model();
        let a = simulate_record(&m, &pure(&[1.0, 1.0]), 5, 9, TOL).unwrap();
        let b = simulate_record(&m, &pure(&[1.0, 1.0]), 5, 9, TOL).unwrap();
        assert_eq!(a, b);
        let record = &a.trajectory.last().unwrap().record;
        assert!(record.iter().all(|y| *y == record[0]));
        let sure = simulate_record(&m, &pure(&[1.0, 0.0]), 4, 1, TOL).unwrap();
        assert_eq!(sure.trajectory.last().unwrap().record, vec![1.0; 4]);
    }

    #[test]
    fn oracle_on_perfect_correlation_chain() {
        let m = cnot_model();
        let oracle = global_oracle(&m, &pure(&[1.0, 1.0]), 3, DEFAULT_CHAIN_CAP, TOL).unwrap();
        assert!((oracle.joint.total() - 1.0).abs() < 1e-12);
        let (p_up, state) = oracle.lookup(&[1.0, 1.0, 1.0]).unwrap();
        assert!((p_up - 0.5).abs() < 1e-12);
        assert!(frobenius(&(state.unwrap().rho() - pure(&[1.0, 0.0]).rho())) < 1e-12);
        assert!((oracle.lookup(&[-1.0; 3]).unwrap().0 - 0.5).abs() < 1e-12);
        assert!(oracle.lookup(&[1.0, -1.0, 1.0]).unwrap().0.abs() < 1e-12);
    }

    #[test]
    fn oracle_matches_single_step() {
        let u = crate::numerics::sample::unitary(&mut ChaCha8Rng::seed_from_u64(3), 4);
        let m = model(u, sigma_x());
        let rho = pure(&[0.6, 0.8]);
        let oracle = global_oracle(&m, &rho, 1, DEFAULT_CHAIN_CAP, TOL).unwrap();
        for y in [-1.0, 1.0] {
            let fs = filter_step(&m, &FilterState::initial(rho.clone()), y, TOL).unwrap();
            let (p, state) = oracle.lookup(&[y]).unwrap();
            assert!((p - fs.record_prob).abs() < 1e-12);
            assert!(state.unwrap().trace_distance(&fs.conditioned).unwrap() < 1e-12);
        }
    }
}
