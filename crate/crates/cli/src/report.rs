//! Report types and the dispatch that produces them.

use qcond_core::algebra::{compatibility_report, condition, generated_algebra};
use qcond_core::bell::{bell_grid, bell_scan, BellPoint};
use qcond_core::filtering::{filter_run, simulate_record};
use qcond_core::measurement::{run_plan, OutcomeLabel};
use qcond_core::{wire, Matrix, State};
use serde::{Deserialize, Serialize};

use crate::scenario::{CheckTask, FilterTask, Scenario, Task};
use crate::CliError;

pub const TOOL: &str = "qcond";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub tol: f64,
    pub seed: u64,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    MeasurementPlan(PlanReport),
    BellScan(BellReport),
    Filter(FilterReport),
    Check(CheckReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub label: String,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordProbability {
    pub outcomes: Vec<OutcomeLabel>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub steps: Vec<StepInfo>,
    pub records: Vec<RecordProbability>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellReport {
    pub best_gap: f64,
    pub angles: [f64; 3],
    pub grid_resolution: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<BellPoint>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterLine {
    pub k: usize,
    pub y: f64,
    /// Probability of this reading given the earlier ones.
    pub p: f64,
    pub estimate: f64,
    pub conditioned_state: State,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub sampled: bool,
    pub record: Vec<f64>,
    pub record_prob: f64,
    pub prior_estimate: f64,
    pub steps: Vec<FilterLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub a: String,
    pub b: String,
    pub commutator_residual: f64,
    pub projector_residual: f64,
    pub compatible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub probability: f64,
    pub value: f64,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningReport {
    #[serde(with = "wire::matrix")]
    pub operator: Matrix,
    pub branches: Vec<BranchReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub operators: Vec<String>,
    pub pairs: Vec<PairReport>,
    pub compatible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<ConditioningReport>,
}

fn domain(context: &str) -> impl FnOnce(qcond_core::Error) -> CliError + '_ {
    move |source| CliError::Domain { context: context.to_string(), source }
}

/// Runs a validated scenario. `want_grid` forces the full Bell grid into
/// the report (used for CSV output).
pub fn run_scenario(s: &Scenario, want_grid: bool) -> Result<Report, CliError> {
    let body = match &s.task {
        Task::Plan(plan) => {
            let state = s.state.as_ref().expect("validated");
            let joint = run_plan(state, plan).map_err(domain("run_plan"))?;
            let steps = plan
                .steps()
                .iter()
                .enumerate()
                .map(|(k, st)| StepInfo {
                    label: if st.label.is_empty() { format!("step{}", k + 1) } else { st.label.clone() },
                    time: st.time,
                })
                .collect();
            let records = joint
                .records()
                .map(|(idx, probability)| RecordProbability {
                    outcomes: idx.iter().enumerate().map(|(k, i)| joint.axes[k][*i].clone()).collect(),
                    probability,
                })
                .collect();
            Body::MeasurementPlan(PlanReport { steps, records, total: joint.total() })
        }
        Task::BellScan { resolution, emit_grid } => {
            let state = s.state.as_ref().expect("validated");
            let scan = bell_scan(state, *resolution).map_err(domain("bell_scan"))?;
            let grid = if *emit_grid || want_grid {
                Some(bell_grid(state, *resolution).map_err(domain("bell_scan"))?)
            } else {
                None
            };
            Body::BellScan(BellReport {
                best_gap: scan.best_gap,
                angles: scan.angles,
                grid_resolution: scan.grid_resolution,
                grid,
            })
        }
        Task::Filter(task) => Body::Filter(filter(s, task)?),
        Task::Check(task) => Body::Check(check(s, task)?),
    };
    Ok(Report {
        tool: TOOL.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        tol: s.tol,
        seed: s.seed,
        body,
    })
}

fn filter(s: &Scenario, task: &FilterTask) -> Result<FilterReport, CliError> {
    let initial = s.state.as_ref().expect("validated");
    let (sampled, run) = match &task.record {
        Some(record) => (false, filter_run(&task.model, initial, record, s.tol).map_err(domain("filter_run"))?),
        None => {
            (true, simulate_record(&task.model, initial, task.steps, s.seed, s.tol).map_err(domain("simulate_record"))?)
        }
    };
    let last = run.trajectory.last().expect("nonempty trajectory");
    let steps = run
        .trajectory
        .windows(2)
        .enumerate()
        .map(|(i, w)| FilterLine {
            k: i + 1,
            y: w[1].record[i],
            p: w[1].record_prob / w[0].record_prob,
            estimate: run.estimates[i + 1],
            conditioned_state: w[1].conditioned.clone(),
        })
        .collect();
    Ok(FilterReport {
        sampled,
        record: last.record.clone(),
        record_prob: last.record_prob,
        prior_estimate: run.estimates[0],
        steps,
    })
}

fn check(s: &Scenario, task: &CheckTask) -> Result<CheckReport, CliError> {
    let mut pairs = Vec::new();
    for (i, (la, a)) in task.operators.iter().enumerate() {
        for (lb, b) in &task.operators[i + 1..] {
            let r = compatibility_report(a, b, s.tol).map_err(domain("compatibility"))?;
            pairs.push(PairReport {
                a: la.clone(),
                b: lb.clone(),
                commutator_residual: r.commutator_residual,
                projector_residual: r.projector_residual,
                compatible: r.compatible(),
            });
        }
    }
    let conditioning = match &task.conditioning {
        None => None,
        Some((x, gens)) => {
            let state = s.state.as_ref().ok_or_else(|| CliError::Schema {
                path: "state".into(),
                reason: "conditioning needs a state".into(),
            })?;
            let algebra = generated_algebra(x.dim(), gens, s.tol).map_err(domain("conditioning"))?;
            let c = condition(state, x, &algebra, s.tol).map_err(domain("conditioning"))?;
            Some(ConditioningReport {
                operator: c.operator.matrix().clone(),
                branches: c
                    .branches
                    .iter()
                    .map(|b| BranchReport { probability: b.probability, value: b.value, retained: b.retained })
                    .collect(),
            })
        }
    };
    Ok(CheckReport {
        operators: task.operators.iter().map(|(l, _)| l.clone()).collect(),
        compatible: pairs.iter().all(|p| p.compatible),
        pairs,
        conditioning,
    })
}
