//! Wigner's form of the Bell inequality, `Pr{A,C} ≤ Pr{A,B̄} + Pr{B,C}`.
//!
//! Classical joints always satisfy it. Quantum events measured in
//! chronological order need not.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::sequential_probability;
use crate::numerics::check_same_dim;
use crate::paulis::spin_projector;
use crate::qpspace::{Event, State};

/// Joint law of three classical yes/no events, `p[a·4 + b·2 + c]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalJoint3 {
    p: [f64; 8],
}

impl ClassicalJoint3 {
    pub fn new(p: [f64; 8], tol: f64) -> Result<Self> {
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(x) = p.iter().find(|x| **x < -tol) {
            return Err(Error::InvalidJoint { reason: format!("negative entry {x}") });
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidJoint { reason: format!("entries sum to {total}") });
        }
        Ok(Self { p })
    }

    pub fn probs(&self) -> &[f64; 8] {
        &self.p
    }

    /// `Pr{A = a, B = b, C = c}`, with `true` meaning the event occurred.
    pub fn get(&self, a: bool, b: bool, c: bool) -> f64 {
        self.p[(a as usize) * 4 + (b as usize) * 2 + c as usize]
    }

    /// Sum over cells where `pred(a, b, c)` holds.
    pub fn prob(&self, pred: impl Fn(bool, bool, bool) -> bool) -> f64 {
        let mut s = 0.0;
        for (i, p) in self.p.iter().enumerate() {
            if pred(i & 4 != 0, i & 2 != 0, i & 1 != 0) {
                s += p;
            }
        }
        s
    }

    /// `Pr{A,B̄,C̄} + Pr{Ā,B,C}`, the slack in the inequality.
    pub fn slack(&self) -> f64 {
        self.get(true, false, false) + self.get(false, true, true)
    }
}

/// `Pr{A,C} − Pr{A,B̄} − Pr{B,C}` for a classical joint.
pub fn classical_wigner_gap(j: &ClassicalJoint3) -> f64 {
    j.prob(|a, _, c| a && c) - j.prob(|a, b, _| a && !b) - j.prob(|_, b, c| b && c)
}

/// The same gap for quantum events measured in the order A, B, C. Each
/// pair probability is a two-step sequential probability with nothing
/// measured in the skipped slot.
pub fn quantum_wigner_gap(state: &State, a: &Event, b: &Event, c: &Event) -> Result<f64> {
    for e in [a, b, c] {
        check_same_dim(state.rho(), e.projector())?;
    }
    let ac = sequential_probability(state, &[a.clone(), c.clone()])?;
    let ab_bar = sequential_probability(state, &[a.clone(), b.complement()])?;
    let bc = sequential_probability(state, &[b.clone(), c.clone()])?;
    Ok(ac - ab_bar - bc)
}

pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellPoint {
    pub angles: [f64; 3],
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellScan {
    pub best_gap: f64,
    pub angles: [f64; 3],
    pub grid_resolution: usize,
}

fn check_scan_input(state: &State, resolution: usize) -> Result<()> {
    if state.dim() != 2 {
        return Err(Error::NotQubit { dim: state.dim() });
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::ResolutionTooSmall { resolution, min: MIN_RESOLUTION });
    }
    Ok(())
}

/// Gap at every point of the grid `θ = iπ/resolution` on each axis, in
/// lexicographic order of `(α, β, γ)`.
pub fn bell_grid(state: &State, resolution: usize) -> Result<Vec<BellPoint>> {
    check_scan_input(state, resolution)?;
    let events: Vec<Event> = (0..resolution)
        .map(|i| Event::from_projector_unchecked(spin_projector(i as f64 * PI / resolution as f64)))
        .collect();
    let angle = |i: usize| i as f64 * PI / resolution as f64;
    let mut out = Vec::with_capacity(resolution.pow(3));
    for (i, a) in events.iter().enumerate() {
        for (j, b) in events.iter().enumerate() {
            for (k, c) in events.iter().enumerate() {
                let gap = quantum_wigner_gap(state, a, b, c)?;
                out.push(BellPoint { angles: [angle(i), angle(j), angle(k)], gap });
            }
        }
    }
    Ok(out)
}

/// Largest gap on the grid. Ties go to the lexicographically first angles.
pub fn bell_scan(state: &State, resolution: usize) -> Result<BellScan> {
    let grid = bell_grid(state, resolution)?;
    let mut best = grid[0];
    for p in &grid[1..] {
        if p.gap > best.gap {
            best = *p;
        }
    }
    Ok(BellScan { best_gap: best.gap, angles: best.angles, grid_resolution: resolution })
}

/// One joint drawn uniformly from the probability simplex.
pub fn random_joint<R: rand::Rng + ?Sized>(rng: &mut R) -> ClassicalJoint3 {
    let mut p = [0.0; 8];
    for x in p.iter_mut() {
        *x = Exp1.sample(rng);
    }
    let total: f64 = p.iter().sum();
    for x in p.iter_mut() {
        *x /= total;
    }
    ClassicalJoint3 { p }
}

/// Maximum classical gap over `n` seeded uniform draws from the simplex.
pub fn random_classical_sweep(n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptySweep);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| classical_wigner_gap(&random_joint(&mut rng))).fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DEFAULT_TOL;
    use crate::paulis::ket;
    use crate::qpspace::make_pure_state;

    fn point_mass(a: usize, b: usize, c: usize) -> ClassicalJoint3 {
        let mut p = [0.0; 8];
        p[a * 4 + b * 2 + c] = 1.0;
        ClassicalJoint3::new(p, DEFAULT_TOL).unwrap()
    }

    fn spin(theta: f64) -> Event {
        Event::new(spin_projector(theta), DEFAULT_TOL).unwrap()
    }

    fn up() -> State {
        make_pure_state(&ket(&[1.0, 0.0]), DEFAULT_TOL).unwrap()
    }

    #[test]
    fn classical_examples() {
        let uniform = ClassicalJoint3::new([0.125; 8], DEFAULT_TOL).unwrap();
        assert!((classical_wigner_gap(&uniform) + 0.25).abs() < 1e-15);
        assert_eq!(classical_wigner_gap(&point_mass(1, 1, 1)), 0.0);
        assert_eq!(classical_wigner_gap(&point_mass(1, 0, 1)), 0.0);
    }

    #[test]
    fn invalid_joints() {
        let mut p = [0.125; 8];
        p[0] = -0.125;
        p[1] = 0.375;
        assert!(matches!(ClassicalJoint3::new(p, DEFAULT_TOL), Err(Error::InvalidJoint { .. })));
        assert!(matches!(ClassicalJoint3::new([0.1; 8], DEFAULT_TOL), Err(Error::InvalidJoint { .. })));
    }

    #[test]
    fn quantum_violation_at_reference_angles() {
        let (b, g) = (0.3f64, 0.1f64);
        let oracle =
            (g / 2.0).cos().powi(2) - (b / 2.0).sin().powi(2) - (b / 2.0).cos().powi(2) * ((g - b) / 2.0).cos().powi(2);
        let gap = quantum_wigner_gap(&up(), &spin(0.0), &spin(b), &spin(g)).unwrap();
        assert!((gap - oracle).abs() < 1e-12);
        assert!((gap - 0.0072).abs() < 1e-3);
    }

    #[test]
    fn identity_middle_event() {
        let state = up();
        let (a, c) = (spin(0.4), spin(1.1));
        let gap = quantum_wigner_gap(&state, &a, &Event::identity(2), &c).unwrap();
        let ac = sequential_probability(&state, &[a.clone(), c.clone()]).unwrap();
        assert!((gap - (ac - state.probability(&c).unwrap())).abs() < 1e-15);
        // Sequential probabilities are not monotone, so this can be positive.
        assert!(gap > 0.1);
        // With A and C commuting it cannot.
        let gap = quantum_wigner_gap(&state, &a, &Event::identity(2), &a.complement()).unwrap();
        assert!(gap <= DEFAULT_TOL);
    }

    #[test]
    fn coincident_events_have_zero_gap() {
        let e = spin(0.7);
        let gap = quantum_wigner_gap(&up(), &e, &e, &e).unwrap();
        assert!(gap.abs() < 1e-14);
    }

    #[test]
    fn scan_finds_violation() {
        let scan = bell_scan(&up(), 32).unwrap();
        assert!(scan.best_gap >= 0.005);
        let [a, b, c] = scan.angles;
        let direct = quantum_wigner_gap(&up(), &spin(a), &spin(b), &spin(c)).unwrap();
        assert!((direct - scan.best_gap).abs() < 1e-14);
    }

    #[test]
    fn scan_rejects_bad_input() {
        assert!(matches!(bell_scan(&State::maximally_mixed(3), 32), Err(Error::NotQubit { dim: 3 })));
        assert!(matches!(bell_scan(&up(), 4), Err(Error::ResolutionTooSmall { .. })));
    }

    #[test]
    fn sweep() {
        assert!(random_classical_sweep(1, 7).unwrap() <= 0.0);
        assert!(random_classical_sweep(1000, 42).unwrap() <= 1e-12);
        assert!(matches!(random_classical_sweep(0, 1), Err(Error::EmptySweep)));
        assert_eq!(random_classical_sweep(50, 3).unwrap(), random_classical_sweep(50, 3).unwrap());
    }
}
