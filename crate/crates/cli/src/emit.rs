//! Rendering reports as JSON, JSON lines or CSV.

use clap::ValueEnum;

use crate::report::{Body, Report};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Jsonl,
    Csv,
}

impl Format {
    /// Filter runs stream one line per step; everything else is a single
    /// JSON document.
    pub fn default_for(body: &Body) -> Self {
        match body {
            Body::Filter(_) => Format::Jsonl,
            _ => Format::Json,
        }
    }
}

fn json_err(e: serde_json::Error) -> CliError {
    CliError::Output(e.to_string())
}

pub fn emit(report: &Report, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report).map_err(json_err)? + "\n"),
        Format::Jsonl => jsonl(report),
        Format::Csv => csv(report),
    }
}

fn jsonl(report: &Report) -> Result<String, CliError> {
    let mut out = String::new();
    match &report.body {
        Body::Filter(f) => {
            for line in &f.steps {
                out += &serde_json::to_string(line).map_err(json_err)?;
                out.push('\n');
            }
        }
        _ => {
            out += &serde_json::to_string(report).map_err(json_err)?;
            out.push('\n');
        }
    }
    Ok(out)
}

fn csv(report: &Report) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Output(e.to_string());
    match &report.body {
        Body::MeasurementPlan(p) => {
            let mut header: Vec<String> = p.steps.iter().map(|s| s.label.clone()).collect();
            header.push("probability".into());
            w.write_record(&header).map_err(err)?;
            for r in &p.records {
                let mut row: Vec<String> = r.outcomes.iter().map(ToString::to_string).collect();
                row.push(r.probability.to_string());
                w.write_record(&row).map_err(err)?;
            }
        }
        Body::BellScan(b) => {
            w.write_record(["alpha", "beta", "gamma", "gap"]).map_err(err)?;
            for p in b.grid.as_deref().unwrap_or_default() {
                let [a, be, g] = p.angles;
                w.write_record([a, be, g, p.gap].map(|x| x.to_string())).map_err(err)?;
            }
        }
        Body::Filter(f) => {
            w.write_record(["k", "y", "p", "estimate"]).map_err(err)?;
            for l in &f.steps {
                w.write_record([l.k.to_string(), l.y.to_string(), l.p.to_string(), l.estimate.to_string()])
                    .map_err(err)?;
            }
        }
        Body::Check(c) => {
            w.write_record(["a", "b", "commutator_residual", "projector_residual", "compatible"]).map_err(err)?;
            for p in &c.pairs {
                w.write_record([
                    p.a.clone(),
                    p.b.clone(),
                    p.commutator_residual.to_string(),
                    p.projector_residual.to_string(),
                    p.compatible.to_string(),
                ])
                .map_err(err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}
