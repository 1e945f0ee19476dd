//! Scenario documents: JSON parsing with field paths, then semantic
//! validation of every matrix against its role.

use qcond_core::dynamics::{HamiltonianSchedule, SchedulePiece};
use qcond_core::filtering::RepeatedInteractionModel;
use qcond_core::measurement::{MeasurementPlan, PlanStep};
use qcond_core::numerics::check_unitary;
use qcond_core::qpspace::make_pure_state;
use qcond_core::wire::{matrix_from_wire, vector_from_wire, MatrixWire, VectorWire};
use qcond_core::{Matrix, Observable, Pvm, PvmOutcome, State, DEFAULT_TOL};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    MeasurementPlan,
    BellScan,
    Filter,
    Check,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::MeasurementPlan => "measurement_plan",
            Kind::BellScan => "bell_scan",
            Kind::Filter => "filter",
            Kind::Check => "check",
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: Kind,
    #[serde(default)]
    state: Option<RawState>,
    #[serde(default)]
    payload: Value,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawState {
    #[serde(default)]
    ket: Option<VectorWire>,
    #[serde(default)]
    density: Option<MatrixWire>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    steps: Vec<RawStep>,
    #[serde(default)]
    schedule: Option<Vec<RawPiece>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    time: f64,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    observable: Option<MatrixWire>,
    #[serde(default)]
    pvm: Option<Vec<RawOutcome>>,
    #[serde(default)]
    groups: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutcome {
    value: f64,
    projector: MatrixWire,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPiece {
    t_start: f64,
    t_end: f64,
    #[serde(rename = "H")]
    h: MatrixWire,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    resolution: usize,
    #[serde(default)]
    emit_grid: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    model: RawModel,
    #[serde(default)]
    steps: Option<usize>,
    #[serde(default)]
    record: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct RawModel {
    sys_dim: usize,
    probe_dim: usize,
    #[serde(rename = "U")]
    u: MatrixWire,
    probe_state: RawState,
    probe_pvm: Vec<RawOutcome>,
    observed: MatrixWire,
    /// Initial system state, used only when the model file is given on its
    /// own.
    #[serde(default)]
    initial: Option<RawState>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    operators: Vec<RawOperator>,
    #[serde(default)]
    conditioning: Option<RawConditioning>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    #[serde(default)]
    label: Option<String>,
    matrix: MatrixWire,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConditioning {
    observable: MatrixWire,
    generators: Vec<MatrixWire>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: Kind,
    pub tol: f64,
    pub seed: u64,
    pub state: Option<State>,
    pub task: Task,
}

#[derive(Debug, Clone)]
pub enum Task {
    Plan(MeasurementPlan),
    BellScan { resolution: usize, emit_grid: bool },
    Filter(FilterTask),
    Check(CheckTask),
}

#[derive(Debug, Clone)]
pub struct FilterTask {
    pub model: RepeatedInteractionModel,
    pub steps: usize,
    /// Explicit readings; sampled from the model when absent.
    pub record: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct CheckTask {
    pub operators: Vec<(String, Observable)>,
    pub conditioning: Option<(Observable, Vec<Matrix>)>,
}

/// Values given on the command line, which take precedence over the
/// document.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| schema_error("", e))
}

fn from_value<T: DeserializeOwned>(prefix: &str, value: Value) -> Result<T, CliError> {
    serde_path_to_error::deserialize(value).map_err(|e| schema_error(prefix, e))
}

fn schema_error(prefix: &str, e: serde_path_to_error::Error<serde_json::Error>) -> CliError {
    let inner = e.path().to_string();
    let path = match (prefix.is_empty(), inner.as_str()) {
        (true, _) => inner.clone(),
        (false, ".") => prefix.to_string(),
        (false, _) => format!("{prefix}.{inner}"),
    };
    CliError::Schema { path, reason: e.into_inner().to_string() }
}

fn at<T>(path: impl Into<String>, r: qcond_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Validation { path: path.into(), source })
}

fn matrix(path: &str, w: &MatrixWire) -> Result<Matrix, CliError> {
    at(path, matrix_from_wire(w))
}

fn observable(path: &str, w: &MatrixWire, tol: f64) -> Result<Observable, CliError> {
    at(path, Observable::new(matrix(path, w)?, tol))
}

pub(crate) fn state(path: &str, raw: &RawState, tol: f64) -> Result<State, CliError> {
    match (&raw.ket, &raw.density) {
        (Some(ket), None) => {
            let path = format!("{path}.ket");
            at(&path, vector_from_wire(ket).and_then(|v| make_pure_state(&v, tol)))
        }
        (None, Some(density)) => {
            let path = format!("{path}.density");
            at(&path, State::new(matrix(&path, density)?, tol))
        }
        _ => Err(CliError::Schema {
            path: path.to_string(),
            reason: "expected exactly one of `ket` or `density`".into(),
        }),
    }
}

fn pvm(path: &str, outcomes: &[RawOutcome], tol: f64) -> Result<Pvm, CliError> {
    let mut parsed = Vec::with_capacity(outcomes.len());
    for (i, o) in outcomes.iter().enumerate() {
        let p = format!("{path}[{i}].projector");
        let event = at(&p, qcond_core::Event::new(matrix(&p, &o.projector)?, tol))?;
        parsed.push(PvmOutcome { value: o.value, event });
    }
    at(path, Pvm::new(parsed, tol))
}

fn plan(raw: RawPlan, tol: f64) -> Result<MeasurementPlan, CliError> {
    let mut steps = Vec::with_capacity(raw.steps.len());
    for (i, s) in raw.steps.iter().enumerate() {
        let base = format!("payload.steps[{i}]");
        let measured = match (&s.observable, &s.pvm) {
            (Some(m), None) => {
                let path = format!("{base}.observable");
                at(&path, Pvm::spectral(&observable(&path, m, tol)?, tol))?
            }
            (None, Some(outcomes)) => pvm(&format!("{base}.pvm"), outcomes, tol)?,
            _ => {
                return Err(CliError::Schema {
                    path: base,
                    reason: "expected exactly one of `observable` or `pvm`".into(),
                })
            }
        };
        let mut step = PlanStep::new(s.time, measured).with_label(s.label.clone().unwrap_or_default());
        if let Some(groups) = &s.groups {
            step = step.with_groups(groups.clone());
        }
        steps.push(step);
    }
    let schedule = match raw.schedule {
        None => None,
        Some(pieces) => {
            let mut parsed = Vec::with_capacity(pieces.len());
            for (i, p) in pieces.iter().enumerate() {
                let path = format!("payload.schedule[{i}]");
                let h = observable(&format!("{path}.H"), &p.h, tol)?;
                parsed.push(at(&path, SchedulePiece::new(p.t_start, p.t_end, h))?);
            }
            Some(at("payload.schedule", HamiltonianSchedule::new(parsed))?)
        }
    };
    at("payload.steps", MeasurementPlan::new(steps, schedule))
}

pub(crate) fn model(prefix: &str, raw: &RawModel, tol: f64) -> Result<RepeatedInteractionModel, CliError> {
    let u_path = format!("{prefix}.U");
    let u = matrix(&u_path, &raw.u)?;
    at(&u_path, check_unitary(&u, tol))?;
    let probe_state = state(&format!("{prefix}.probe_state"), &raw.probe_state, tol)?;
    let probe_pvm = pvm(&format!("{prefix}.probe_pvm"), &raw.probe_pvm, tol)?;
    let observed = observable(&format!("{prefix}.observed"), &raw.observed, tol)?;
    at(prefix, RepeatedInteractionModel::new(raw.sys_dim, raw.probe_dim, u, probe_state, probe_pvm, observed, tol))
}

fn check(raw: RawCheck, tol: f64) -> Result<CheckTask, CliError> {
    if raw.operators.is_empty() {
        return Err(CliError::Schema {
            path: "payload.operators".into(),
            reason: "expected at least one operator".into(),
        });
    }
    let mut operators = Vec::with_capacity(raw.operators.len());
    for (i, op) in raw.operators.iter().enumerate() {
        let path = format!("payload.operators[{i}].matrix");
        let label = op.label.clone().unwrap_or_else(|| format!("op{i}"));
        operators.push((label.clone(), observable(&path, &op.matrix, tol)?.with_label(label)));
    }
    let conditioning = match raw.conditioning {
        None => None,
        Some(c) => {
            let x = observable("payload.conditioning.observable", &c.observable, tol)?;
            let mut gens = Vec::with_capacity(c.generators.len());
            for (i, g) in c.generators.iter().enumerate() {
                gens.push(observable(&format!("payload.conditioning.generators[{i}]"), g, tol)?.matrix().clone());
            }
            Some((x, gens))
        }
    };
    Ok(CheckTask { operators, conditioning })
}

fn require_state(state: Option<State>, kind: Kind) -> Result<Option<State>, CliError> {
    if state.is_none() {
        return Err(CliError::Schema {
            path: "state".into(),
            reason: format!("a `{}` scenario needs a state", kind.name()),
        });
    }
    Ok(state)
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str, overrides: Overrides) -> Result<Scenario, CliError> {
    let raw: RawScenario = from_json(text)?;
    let tol = overrides.tol.or(raw.tol).unwrap_or(DEFAULT_TOL);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::Usage(format!("tolerance must be positive, got {tol}")));
    }
    let seed = overrides.seed.or(raw.seed).unwrap_or(0);
    let st = raw.state.as_ref().map(|s| state("state", s, tol)).transpose()?;
    let (state, task) = match raw.kind {
        Kind::MeasurementPlan => {
            let p = plan(from_value("payload", raw.payload)?, tol)?;
            (require_state(st, raw.kind)?, Task::Plan(p))
        }
        Kind::BellScan => {
            let s: RawScan = from_value("payload", raw.payload)?;
            (require_state(st, raw.kind)?, Task::BellScan { resolution: s.resolution, emit_grid: s.emit_grid })
        }
        Kind::Filter => {
            let f: RawFilter = from_value("payload", raw.payload)?;
            let model = model("payload.model", &f.model, tol)?;
            let steps = match (&f.record, f.steps) {
                (Some(r), Some(n)) if r.len() != n => {
                    return Err(CliError::Schema {
                        path: "payload.steps".into(),
                        reason: format!("record has {} readings but steps is {n}", r.len()),
                    })
                }
                (Some(r), _) => r.len(),
                (None, Some(n)) => n,
                (None, None) => {
                    return Err(CliError::Schema {
                        path: "payload".into(),
                        reason: "expected `steps` or `record`".into(),
                    })
                }
            };
            (require_state(st, raw.kind)?, Task::Filter(FilterTask { model, steps, record: f.record }))
        }
        Kind::Check => (st, Task::Check(check(from_value("payload", raw.payload)?, tol)?)),
    };
    Ok(Scenario { kind: raw.kind, tol, seed, state, task })
}

/// Builds a filter scenario from a bare model document (as used by
/// `qcond filter --model`). The initial state is the model's `initial`
/// field, or the maximally mixed state.
pub fn parse_model_scenario(
    text: &str,
    steps: Option<usize>,
    record: Option<Vec<f64>>,
    overrides: Overrides,
) -> Result<Scenario, CliError> {
    let raw: RawModel = from_json(text)?;
    let tol = overrides.tol.unwrap_or(DEFAULT_TOL);
    let model = model("model", &raw, tol)?;
    let initial = match &raw.initial {
        Some(s) => state("model.initial", s, tol)?,
        None => State::maximally_mixed(model.sys_dim()),
    };
    let steps = match (&record, steps) {
        (Some(r), _) => r.len(),
        (None, Some(n)) => n,
        (None, None) => return Err(CliError::Usage("`--model` needs `--steps` or `--record`".into())),
    };
    Ok(Scenario {
        kind: Kind::Filter,
        tol,
        seed: overrides.seed.unwrap_or(0),
        state: Some(initial),
        task: Task::Filter(FilterTask { model, steps, record }),
    })
}
