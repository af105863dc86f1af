//! Run reports.
//!
//! A report serializes to one JSON document with the fixed top-level
//! keys `command`, `input`, `certificate`, `validation`, `oracle`,
//! `duration_ms`. Everything except `duration_ms` is the payload and is
//! deterministic for identical inputs.

use lticert::certificates::ValidationReport;
use lticert::linalg::Matrix;
use lticert::oracles::OracleReport;
use lticert::trajectory::Trajectory;
use serde::Serialize;
use serde_json::{json, Value};

use crate::CliError;

#[derive(Serialize)]
pub struct InputDigest {
    pub path: String,
    pub samples: usize,
    pub dt: f64,
    pub t_final: f64,
    pub states: usize,
    pub inputs: usize,
    pub outputs: usize,
}

impl InputDigest {
    pub fn of(path: &str, traj: &Trajectory) -> Self {
        Self {
            path: path.to_string(),
            samples: traj.samples(),
            dt: traj.dt,
            t_final: traj.t_final(),
            states: traj.state_dim(),
            inputs: traj.inputs.as_ref().map_or(0, Matrix::cols),
            outputs: traj.outputs.as_ref().map_or(0, Matrix::cols),
        }
    }
}

#[derive(Serialize)]
pub struct Report {
    pub command: String,
    pub input: InputDigest,
    pub certificate: Value,
    pub validation: Option<Value>,
    pub oracle: Option<Value>,
    pub duration_ms: u64,
}

pub fn matrix_json(m: &Matrix) -> Value {
    json!(m.to_rows())
}

pub fn validation_json(v: &ValidationReport) -> Value {
    json!({
        "samples": v.samples,
        "v_min": v.v_min,
        "v_max": v.v_max,
        "vdot_max": v.vdot_max,
        "violations": v.violations,
        "violation_fraction": v.violation_fraction,
        "v_monotone_decreasing": v.v_monotone_decreasing,
        "max_output_norm": v.max_output_norm,
    })
}

pub fn oracle_json(r: &OracleReport) -> Value {
    json!({
        "quantity": r.quantity,
        "oracle_value": r.oracle_value,
        "data_value": r.data_value,
        "abs_deviation": r.abs_deviation,
        "rel_deviation": r.rel_deviation,
    })
}

/// Write the report to the given path, or pretty-print it to stdout.
pub fn emit(report: &Report, out: Option<&str>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Input(format!("report serialization failed: {e}")))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Input(format!("cannot write report {path}: {e}"))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Boundary of `{x : x' P x = level}` for 2-dimensional states, written
/// as a `x1,x2` CSV with 360 points.
pub fn write_level_set(p: &Matrix, level: f64, path: &str) -> Result<(), CliError> {
    if p.rows() != 2 {
        return Err(CliError::Input(format!(
            "level-set emission needs a 2-dimensional state, got {}",
            p.rows()
        )));
    }
    if level.is_nan() || level <= 0.0 {
        return Err(CliError::Input("level must be positive".into()));
    }
    let mut text = String::from("x1,x2\n");
    for k in 0..360 {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / 360.0;
        let dir = [theta.cos(), theta.sin()];
        let q = dir[0] * dir[0] * p[(0, 0)]
            + 2.0 * dir[0] * dir[1] * p[(0, 1)]
            + dir[1] * dir[1] * p[(1, 1)];
        let r = (level / q).sqrt();
        text.push_str(&format!("{},{}\n", r * dir[0], r * dir[1]));
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot write boundary CSV {path}: {e}")))
}
