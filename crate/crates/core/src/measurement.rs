//! Sequential projective measurement.
//!
//! A record `Y₁ ∈ G₁; …; Yₙ ∈ Gₙ` of measurements made at times
//! `t₁ < … < tₙ` has probability `tr{Pₙ⋯P₁ ρ P₁⋯Pₙ}`, where each
//! `P_k = J_(0,t_k)(P_{Z_k}[G_k])` is the Schrödinger-picture event carried to
//! the Heisenberg picture. The value depends on the chronological order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::{conjugate_by, HamiltonianSchedule};
use crate::error::{Error, Result};
use crate::numerics::{check_same_dim, frobenius, identity, scaled, trace, Matrix};
use crate::qpspace::{same_value, Event, Pvm, State};

/// Post-measurement state `PρP / tr{ρP}` and the probability `tr{ρP}`.
pub fn project_state(state: &State, event: &Event, tol: f64) -> Result<(f64, State)> {
    check_same_dim(state.rho(), event.projector())?;
    let p = event.projector();
    let post = p * state.rho() * p;
    let prob = trace(&post).re;
    if prob <= tol {
        return Err(Error::ZeroProbabilityOutcome { step: 0 });
    }
    Ok((prob.min(1.0), State::normalized(post)))
}

/// Unnormalized `Pₙ⋯P₁ ρ P₁⋯Pₙ`.
pub(crate) fn pyramid(rho: &Matrix, projectors: &[&Matrix]) -> Matrix {
    let mut m = rho.clone();
    for p in projectors {
        m = *p * m * *p;
    }
    m
}

/// `tr{Pₙ⋯P₁ ρ P₁⋯Pₙ}`, clamped to `[0, 1]`.
pub fn sequential_probability(state: &State, events: &[Event]) -> Result<f64> {
    for e in events {
        check_same_dim(state.rho(), e.projector())?;
    }
    let projectors: Vec<&Matrix> = events.iter().map(Event::projector).collect();
    Ok(trace(&pyramid(state.rho(), &projectors)).re.clamp(0.0, 1.0))
}

/// Label of one axis cell: the outcome values grouped into that cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutcomeLabel(pub Vec<f64>);

impl OutcomeLabel {
    pub fn single(value: f64) -> Self {
        Self(vec![value])
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PlanStep {
    pub time: f64,
    pub pvm: Pvm,
    pub label: String,
    /// Coarse-graining of the PVM outcomes into cells; `None` keeps every
    /// outcome separate.
    pub groups: Option<Vec<Vec<f64>>>,
}

impl PlanStep {
    pub fn new(time: f64, pvm: Pvm) -> Self {
        Self { time, pvm, label: String::new(), groups: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_groups(mut self, groups: Vec<Vec<f64>>) -> Self {
        self.groups = Some(groups);
        self
    }

    fn validate_groups(&self) -> Result<()> {
        let Some(groups) = &self.groups else { return Ok(()) };
        let values = self.pvm.values();
        let mut seen = vec![0usize; values.len()];
        for g in groups {
            if g.is_empty() {
                return Err(Error::InvalidPlan { reason: "empty outcome group".into() });
            }
            for v in g {
                let k = values.iter().position(|x| same_value(*x, *v)).ok_or(Error::UnknownOutcome { value: *v })?;
                seen[k] += 1;
            }
        }
        if seen.iter().any(|n| *n != 1) {
            return Err(Error::InvalidPlan { reason: "outcome groups must partition the measurement outcomes".into() });
        }
        Ok(())
    }

    /// Axis labels and the matching Schrödinger-picture events.
    pub fn cells(&self) -> Result<Vec<(OutcomeLabel, Event)>> {
        match &self.groups {
            None => Ok(self.pvm.outcomes().iter().map(|o| (OutcomeLabel::single(o.value), o.event.clone())).collect()),
            Some(groups) => groups.iter().map(|g| Ok((OutcomeLabel(g.clone()), self.pvm.restrict(g)?))).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementPlan {
    steps: Vec<PlanStep>,
    schedule: Option<HamiltonianSchedule>,
}

impl MeasurementPlan {
    pub fn new(steps: Vec<PlanStep>, schedule: Option<HamiltonianSchedule>) -> Result<Self> {
        let first = steps.first().ok_or(Error::InvalidPlan { reason: "plan has no steps".into() })?;
        let dim = first.pvm.dim();
        for w in steps.windows(2) {
            if w[1].time.partial_cmp(&w[0].time).is_none_or(|o| o.is_le()) {
                return Err(Error::InvalidPlan {
                    reason: format!("times must increase strictly ({} then {})", w[0].time, w[1].time),
                });
            }
        }
        for s in &steps {
            if !s.time.is_finite() {
                return Err(Error::InvalidPlan { reason: "non-finite time".into() });
            }
            if s.pvm.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: s.pvm.dim() });
            }
            s.validate_groups()?;
        }
        if let Some(schedule) = &schedule {
            if schedule.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: schedule.dim() });
            }
            let last = steps[steps.len() - 1].time;
            if first.time < 0.0 {
                return Err(Error::InvalidPlan { reason: "times must be nonnegative".into() });
            }
            if last > 0.0 && !schedule.covers(0.0, last) {
                return Err(Error::OutOfSchedule { s: 0.0, t: last });
            }
        }
        Ok(Self { steps, schedule })
    }

    pub fn steps(&self) -> &[PlanStep] {
        &self.steps
    }

    pub fn schedule(&self) -> Option<&HamiltonianSchedule> {
        self.schedule.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.steps[0].pvm.dim()
    }

    /// The first `n` steps.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        Self::new(self.steps[..n.min(self.steps.len())].to_vec(), self.schedule.clone())
    }

    /// The plan with measurement `axis` deleted.
    pub fn without_step(&self, axis: usize) -> Result<Self> {
        if axis >= self.steps.len() {
            return Err(Error::AxisOutOfRange { axis, len: self.steps.len() });
        }
        let mut steps = self.steps.clone();
        steps.remove(axis);
        Self::new(steps, self.schedule.clone())
    }

    /// Heisenberg-picture events `J_(0,t_k)(P_{Z_k}[G])` per step.
    pub fn evolved_cells(&self) -> Result<Vec<Vec<(OutcomeLabel, Matrix)>>> {
        self.steps
            .iter()
            .map(|step| {
                let u = match &self.schedule {
                    Some(s) if step.time > 0.0 => s.propagator(0.0, step.time)?,
                    _ => identity(self.dim()),
                };
                Ok(step.cells()?.into_iter().map(|(label, e)| (label, conjugate_by(&u, e.projector()))).collect())
            })
            .collect()
    }
}

/// Probabilities of every record of a plan, row-major with the last axis
/// varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub axes: Vec<Vec<OutcomeLabel>>,
    pub probs: Vec<f64>,
}

impl JointDistribution {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn strides(&self) -> Vec<usize> {
        let shape = self.shape();
        let mut strides = vec![1; shape.len()];
        for k in (0..shape.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * shape[k + 1];
        }
        strides
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let strides = self.strides();
        self.probs[index.iter().zip(&strides).map(|(i, s)| i * s).sum::<usize>()]
    }

    /// Every record as (cell index per axis, probability).
    pub fn records(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let shape = self.shape();
        self.probs.iter().enumerate().map(move |(flat, p)| {
            let mut idx = vec![0; shape.len()];
            let mut rem = flat;
            for k in (0..shape.len()).rev() {
                idx[k] = rem % shape[k];
                rem /= shape[k];
            }
            (idx, *p)
        })
    }

    /// Sums out one axis.
    pub fn marginalize(&self, axis: usize) -> Result<Self> {
        let n = self.axes.len();
        if axis >= n {
            return Err(Error::AxisOutOfRange { axis, len: n });
        }
        let mut axes = self.axes.clone();
        axes.remove(axis);
        let size: usize = axes.iter().map(Vec::len).product();
        let mut out = Self { axes, probs: vec![0.0; size] };
        let strides = out.strides();
        for (idx, p) in self.records() {
            let flat: usize =
                idx.iter().enumerate().filter(|(k, _)| *k != axis).zip(&strides).map(|((_, i), s)| i * s).sum();
            out.probs[flat] += p;
        }
        Ok(out)
    }

    /// Largest absolute cell difference against a table of the same shape.
    pub fn max_abs_diff(&self, other: &JointDistribution) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch { expected: self.probs.len(), found: other.probs.len() });
        }
        Ok(self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// Joint table of all records of `plan`, each cell evaluated by the
/// pyramidal formula on the Heisenberg-evolved events.
pub fn run_plan(state: &State, plan: &MeasurementPlan) -> Result<JointDistribution> {
    if state.dim() != plan.dim() {
        return Err(Error::DimensionMismatch { expected: plan.dim(), found: state.dim() });
    }
    let cells = plan.evolved_cells()?;
    let axes: Vec<Vec<OutcomeLabel>> = cells.iter().map(|c| c.iter().map(|(l, _)| l.clone()).collect()).collect();
    let mut probs = Vec::with_capacity(axes.iter().map(Vec::len).product());
    descend(state.rho(), &cells, &mut probs);
    Ok(JointDistribution { axes, probs })
}

// Depth-first over records, reusing each prefix `P_k⋯P₁ρP₁⋯P_k`.
fn descend(m: &Matrix, cells: &[Vec<(OutcomeLabel, Matrix)>], out: &mut Vec<f64>) {
    match cells.split_first() {
        None => out.push(trace(m).re.max(0.0)),
        Some((step, rest)) => {
            for (_, p) in step {
                descend(&(p * m * p), rest, out);
            }
        }
    }
}

/// Sums out the most recent measurement.
pub fn marginalize_last(joint: &JointDistribution) -> Result<JointDistribution> {
    if joint.axes.len() < 2 {
        return Err(Error::TooFewSteps);
    }
    joint.marginalize(joint.axes.len() - 1)
}

/// Max-norm gap between summing out `axis` and the table of the plan with
/// that measurement deleted.
pub fn marginal_defect(joint: &JointDistribution, axis: usize, truncated: &JointDistribution) -> Result<f64> {
    joint.marginalize(axis)?.max_abs_diff(truncated)
}

/// `Pr{∪A_k; B} − Σ_k Pr{A_k; B}` for mutually exclusive `A_k` measured
/// before `B`.
pub fn interference_defect(state: &State, exclusive: &[Event], b: &Event, tol: f64) -> Result<f64> {
    let dim = state.dim();
    let mut union = Matrix::zeros(dim, dim);
    for (i, a) in exclusive.iter().enumerate() {
        check_same_dim(state.rho(), a.projector())?;
        for other in &exclusive[i + 1..] {
            let overlap = frobenius(&(a.projector() * other.projector()));
            if overlap > scaled(tol, frobenius(a.projector()) * frobenius(other.projector())) {
                return Err(Error::NotMutuallyExclusive { overlap });
            }
        }
        union += a.projector();
    }
    let union = Event::new(union, tol)?;
    let joint = sequential_probability(state, &[union, b.clone()])?;
    let mut separate = 0.0;
    for a in exclusive {
        separate += sequential_probability(state, &[a.clone(), b.clone()])?;
    }
    Ok(joint - separate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DEFAULT_TOL;
    use crate::paulis::{ket, sigma_x, sigma_z};
    use crate::qpspace::{make_pure_state, Observable};

    const TOL: f64 = DEFAULT_TOL;

    fn ev(amps: &[f64]) -> Event {
        Event::from_ket(&ket(amps)).unwrap()
    }

    fn pure(amps: &[f64]) -> State {
        make_pure_state(&ket(amps), TOL).unwrap()
    }

    fn pvm(m: Matrix) -> Pvm {
        Pvm::spectral(&Observable::new(m, TOL).unwrap(), TOL).unwrap()
    }

    #[test]
    fn project_state_examples() {
        let (p, post) = project_state(&pure(&[1.0, 0.0]), &ev(&[1.0, 0.0]), TOL).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!(frobenius(&(post.rho() - pure(&[1.0, 0.0]).rho())) < 1e-15);

        let (p, post) = project_state(&pure(&[1.0, 1.0]), &ev(&[1.0, 0.0]), TOL).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(frobenius(&(post.rho() - pure(&[1.0, 0.0]).rho())) < 1e-15);

        assert!(matches!(
            project_state(&pure(&[1.0, 0.0]), &ev(&[0.0, 1.0]), TOL),
            Err(Error::ZeroProbabilityOutcome { .. })
        ));
    }

    #[test]
    fn repeated_projection_is_stable() {
        let e = ev(&[1.0, 2.0]);
        let (_, once) = project_state(&pure(&[1.0, 0.3]), &e, TOL).unwrap();
        let (p, twice) = project_state(&once, &e, TOL).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!(frobenius(&(once.rho() - twice.rho())) < 1e-12);
    }

    #[test]
    fn sequential_order_matters() {
        let rho = pure(&[1.0, 0.0]);
        let (z_up, x_up) = (ev(&[1.0, 0.0]), ev(&[1.0, 1.0]));
        let single = sequential_probability(&rho, std::slice::from_ref(&x_up)).unwrap();
        assert!((single - rho.probability(&x_up).unwrap()).abs() < 1e-15);
        let zx = sequential_probability(&rho, &[z_up.clone(), x_up.clone()]).unwrap();
        let xz = sequential_probability(&rho, &[x_up, z_up]).unwrap();
        assert!((zx - 0.5).abs() < 1e-15);
        assert!((xz - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sigma_z_then_sigma_x_table() {
        let plan =
            MeasurementPlan::new(vec![PlanStep::new(1.0, pvm(sigma_z())), PlanStep::new(2.0, pvm(sigma_x()))], None)
                .unwrap();
        let joint = run_plan(&pure(&[1.0, 0.0]), &plan).unwrap();
        // Axes follow increasing eigenvalue order: (−1, +1).
        assert_eq!(joint.axes[0], vec![OutcomeLabel::single(-1.0), OutcomeLabel::single(1.0)]);
        let expected = [0.0, 0.0, 0.5, 0.5];
        for (p, e) in joint.probs.iter().zip(expected) {
            assert!((p - e).abs() < 1e-15);
        }
        let m = marginalize_last(&joint).unwrap();
        assert!((m.probs[0]).abs() < 1e-15 && (m.probs[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn marginal_defect_for_inserted_measurement() {
        let zxz = MeasurementPlan::new(
            vec![
                PlanStep::new(1.0, pvm(sigma_z())),
                PlanStep::new(2.0, pvm(sigma_x())),
                PlanStep::new(3.0, pvm(sigma_z())),
            ],
            None,
        )
        .unwrap();
        let rho = pure(&[1.0, 0.0]);
        let joint = run_plan(&rho, &zxz).unwrap();
        let zz = run_plan(&rho, &zxz.without_step(1).unwrap()).unwrap();
        let defect = marginal_defect(&joint, 1, &zz).unwrap();
        assert!((defect - 0.5).abs() < 1e-12);
        let last = run_plan(&rho, &zxz.truncated(2).unwrap()).unwrap();
        assert!(marginal_defect(&joint, 2, &last).unwrap() < 1e-15);
        assert!(matches!(marginal_defect(&joint, 3, &zz), Err(Error::AxisOutOfRange { .. })));
    }

    #[test]
    fn marginalize_last_needs_two_steps() {
        let plan = MeasurementPlan::new(vec![PlanStep::new(0.0, pvm(sigma_z()))], None).unwrap();
        let joint = run_plan(&pure(&[1.0, 1.0]), &plan).unwrap();
        assert!(matches!(marginalize_last(&joint), Err(Error::TooFewSteps)));
    }

    #[test]
    fn plan_validation() {
        let steps = vec![PlanStep::new(2.0, pvm(sigma_z())), PlanStep::new(1.0, pvm(sigma_x()))];
        assert!(matches!(MeasurementPlan::new(steps, None), Err(Error::InvalidPlan { .. })));
        let grouped = PlanStep::new(0.0, pvm(sigma_z())).with_groups(vec![vec![1.0]]);
        assert!(MeasurementPlan::new(vec![grouped], None).is_err());
        assert!(MeasurementPlan::new(vec![], None).is_err());
    }

    #[test]
    fn grouped_step_coarse_grains() {
        let d = crate::numerics::real_matrix(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]);
        let step = PlanStep::new(0.0, pvm(d)).with_groups(vec![vec![1.0, 2.0], vec![3.0]]);
        let plan = MeasurementPlan::new(vec![step], None).unwrap();
        let rho = State::maximally_mixed(3);
        let joint = run_plan(&rho, &plan).unwrap();
        assert_eq!(joint.axes[0][0].to_string(), "1|2");
        assert!((joint.probs[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_slit_defect() {
        let psi = pure(&[1.0, 1.0]);
        let slits = [ev(&[1.0, 0.0]), ev(&[0.0, 1.0])];
        let screen = ev(&[1.0, 1.0]);
        let d = interference_defect(&psi, &slits, &screen, TOL).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
        assert!(interference_defect(&psi, &slits, &ev(&[1.0, 0.0]), TOL).unwrap().abs() < 1e-15);
        assert!(interference_defect(&psi, &slits, &Event::identity(2), TOL).unwrap().abs() < 1e-15);
        let overlapping = [ev(&[1.0, 0.0]), ev(&[1.0, 1.0])];
        assert!(matches!(
            interference_defect(&psi, &overlapping, &screen, TOL),
            Err(Error::NotMutuallyExclusive { .. })
        ));
    }
}
