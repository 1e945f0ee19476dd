//! Invariants of the spectral engine, state space and dynamics.

use proptest::prelude::*;
use qcond_core::dynamics::{conjugate_by, HamiltonianSchedule, SchedulePiece};
use qcond_core::numerics::{
    eig_hermitian, frobenius, gram_schmidt_hs, hs_inner, identity, kron, nullspace, sample, unitary_residual, vectorize,
};
use qcond_core::{Event, Matrix, Observable, Pvm, State, C64, DEFAULT_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Hermitian matrix with deliberately repeated eigenvalues.
fn degenerate_hermitian(r: &mut ChaCha8Rng, dim: usize) -> Matrix {
    let u = sample::unitary(r, dim);
    let d =
        Matrix::from_fn(dim, dim, |i, j| if i == j { C64::new((i / 2) as f64 - 1.0, 0.0) } else { C64::new(0.0, 0.0) });
    &u * d * u.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectral_reconstruction(seed in any::<u64>(), dim in 1usize..=16, degenerate in any::<bool>()) {
        let mut r = rng(seed);
        let a = if degenerate { degenerate_hermitian(&mut r, dim) } else { sample::hermitian(&mut r, dim) };
        let s = eig_hermitian(&a, DEFAULT_TOL).unwrap();
        prop_assert!(frobenius(&(&a - s.reconstruct())) <= 1e-9 * frobenius(&a).max(1.0));
        let sum = s.projectors.iter().fold(Matrix::zeros(dim, dim), |acc, p| acc + p);
        prop_assert!(frobenius(&(sum - identity(dim))) <= 1e-9);
        for (i, p) in s.projectors.iter().enumerate() {
            prop_assert!(frobenius(&(p * p - p)) <= 1e-9);
            for q in &s.projectors[i + 1..] {
                prop_assert!(frobenius(&(p * q)) <= 1e-9);
            }
        }
        if degenerate {
            prop_assert_eq!(s.eigenvalues.len(), dim.div_ceil(2));
        }
    }

    #[test]
    fn commutation_nullspace_contains_identity(seed in any::<u64>(), dim in 1usize..=6) {
        let a = sample::hermitian(&mut rng(seed), dim);
        let l = kron(&a, &identity(dim)) - kron(&identity(dim), &a.transpose());
        let null = nullspace(&l, DEFAULT_TOL).unwrap();
        prop_assert!(null.len() >= dim);
        let v = vectorize(&identity(dim));
        let projected: C64 = null.iter().map(|n| n.dotc(&v) * n.dotc(&v).conj()).sum();
        prop_assert!((projected.re - v.norm_squared()).abs() <= 1e-9 * dim as f64);
    }

    #[test]
    fn gram_schmidt_is_orthonormal(seed in any::<u64>(), dim in 1usize..=5, count in 1usize..=12) {
        let mut r = rng(seed);
        let mut ops: Vec<Matrix> = (0..count).map(|_| sample::ginibre(&mut r, dim, dim)).collect();
        // A dependent element must be dropped.
        ops.push(&ops[0] * C64::new(2.0, -1.0) + &ops[count - 1]);
        let g = gram_schmidt_hs(&ops, DEFAULT_TOL).unwrap();
        prop_assert_eq!(g.len(), count.min(dim * dim));
        for i in 0..g.len() {
            for j in 0..g.len() {
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((hs_inner(&g[i], &g[j]).unwrap() - C64::new(expected, 0.0)).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn distribution_laws(seed in any::<u64>(), dim in 1usize..=8) {
        let mut r = rng(seed);
        let state = State::new(sample::density(&mut r, dim), DEFAULT_TOL).unwrap();
        let x = Observable::new(sample::hermitian(&mut r, dim), DEFAULT_TOL).unwrap();
        let pvm = Pvm::spectral(&x, DEFAULT_TOL).unwrap();
        let probs: Vec<f64> = pvm.outcomes().iter().map(|o| state.probability(&o.event).unwrap()).collect();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let mean: f64 = pvm.values().iter().zip(&probs).map(|(v, p)| v * p).sum();
        prop_assert!((state.expectation(&x).unwrap() - mean).abs() <= 1e-9 * (1.0 + frobenius(x.matrix())));
        let dist = state.distribution(&x, DEFAULT_TOL).unwrap();
        let x2 = Observable::new(x.matrix() * x.matrix(), DEFAULT_TOL).unwrap();
        prop_assert!((state.expectation(&x2).unwrap() - dist.moment(2)).abs() <= 1e-8 * (1.0 + frobenius(x2.matrix())));
    }

    #[test]
    fn complement_probabilities(seed in any::<u64>(), dim in 1usize..=8, rank_frac in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let state = State::new(sample::density(&mut r, dim), DEFAULT_TOL).unwrap();
        let rank = ((dim as f64) * rank_frac).round() as usize;
        let event = Event::new(sample::projector(&mut r, dim, rank), DEFAULT_TOL).unwrap();
        let total = state.probability(&event).unwrap() + state.probability(&event.complement()).unwrap();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }
}

fn random_schedule(r: &mut ChaCha8Rng, dim: usize, cuts: &[f64]) -> HamiltonianSchedule {
    let pieces = cuts
        .windows(2)
        .map(|w| {
            SchedulePiece::new(w[0], w[1], Observable::new(sample::hermitian(r, dim), DEFAULT_TOL).unwrap()).unwrap()
        })
        .collect();
    HamiltonianSchedule::new(pieces).unwrap()
}

/// Propagator recomputed with nalgebra's Padé exponential, piece by piece.
fn pade_propagator(schedule: &HamiltonianSchedule, s: f64, t: f64) -> Matrix {
    let mut u = identity(schedule.dim());
    for piece in schedule.pieces() {
        let lo = piece.t_start().max(s);
        let hi = piece.t_end().min(t);
        if hi > lo {
            let gen = piece.hamiltonian().matrix() * C64::new(0.0, -(hi - lo));
            u = gen.exp() * u;
        }
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flow_and_heisenberg_composition(
        seed in any::<u64>(),
        dim in 1usize..=5,
        times in proptest::collection::vec(0.0f64..3.0, 3),
    ) {
        let mut r = rng(seed);
        let schedule = random_schedule(&mut r, dim, &[0.0, 0.7, 1.5, 2.2, 3.0]);
        let mut t = times.clone();
        t.sort_by(f64::total_cmp);
        let (t1, t2, t3) = (t[0], t[1], t[2]);
        let u12 = schedule.propagator(t1, t2).unwrap();
        let u23 = schedule.propagator(t2, t3).unwrap();
        let u13 = schedule.propagator(t1, t3).unwrap();
        prop_assert!(frobenius(&(&u23 * &u12 - &u13)) <= 1e-9);
        prop_assert!(frobenius(&(pade_propagator(&schedule, t1, t3) - &u13)) <= 1e-9);
        for u in [&u12, &u23, &u13] {
            prop_assert!(unitary_residual(u) <= 1e-9);
        }
        let x = sample::hermitian(&mut r, dim);
        let composed = conjugate_by(&u12, &conjugate_by(&u23, &x));
        prop_assert!(frobenius(&(composed - conjugate_by(&u13, &x))) <= 1e-9 * (1.0 + frobenius(&x)));
    }

    #[test]
    fn flow_at_piece_boundaries(seed in any::<u64>(), dim in 1usize..=5) {
        let schedule = random_schedule(&mut rng(seed), dim, &[0.0, 1.0, 2.0, 3.0]);
        let u = schedule.propagator(1.0, 2.0).unwrap() * schedule.propagator(0.0, 1.0).unwrap();
        prop_assert!(frobenius(&(u - schedule.propagator(0.0, 2.0).unwrap())) <= 1e-9);
    }
}

#[test]
fn state_json_round_trip() {
    let state = State::new(sample::density(&mut rng(5), 3), DEFAULT_TOL).unwrap();
    let json = serde_json::to_string(&state).unwrap();
    let back: State = serde_json::from_str(&json).unwrap();
    assert!(frobenius(&(back.rho() - state.rho())) == 0.0);
}
