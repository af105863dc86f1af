//! CSV trajectory interchange.
//!
//! Format: mandatory header `t,x1..xn[,u1..um][,z1..zp]`, comma
//! separated, `.` decimal point, LF or CRLF line endings. The time
//! column must start at zero and advance on a uniform grid. Values are
//! written in shortest round-trip form, so write-then-read reproduces a
//! trajectory exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::linalg::Matrix;

use super::{Trajectory, TrajectoryError};

fn parse_header(line: &str) -> Result<(usize, usize, usize), TrajectoryError> {
    let cols: Vec<&str> = line.split(',').map(str::trim).collect();
    if cols.first() != Some(&"t") {
        return Err(TrajectoryError::MalformedHeader(
            "first column must be 't'".into(),
        ));
    }
    let mut idx = 1;
    let mut count = |prefix: char| -> Result<usize, TrajectoryError> {
        let mut k = 0usize;
        while idx < cols.len() {
            let want = format!("{}{}", prefix, k + 1);
            if cols[idx] == want {
                k += 1;
                idx += 1;
            } else {
                break;
            }
        }
        Ok(k)
    };
    let n = count('x')?;
    let m = count('u')?;
    let p = count('z')?;
    if n == 0 {
        return Err(TrajectoryError::MalformedHeader(
            "expected at least one state column 'x1'".into(),
        ));
    }
    if idx != cols.len() {
        return Err(TrajectoryError::MalformedHeader(format!(
            "unexpected column '{}'",
            cols[idx]
        )));
    }
    Ok((n, m, p))
}

/// Read a trajectory from a CSV file.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Trajectory, TrajectoryError> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();

    let header = lines
        .next()
        .ok_or_else(|| TrajectoryError::MalformedHeader("empty file".into()))??;
    let (n, m, p) = parse_header(&header)?;
    let width = 1 + n + m + p;

    let mut times = Vec::new();
    let mut cells: Vec<Vec<f64>> = Vec::new();
    for (row_idx, line) in lines.enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != width {
            return Err(TrajectoryError::MalformedHeader(format!(
                "data row {} has {} fields, header implies {}",
                row_idx,
                fields.len(),
                width
            )));
        }
        let mut row = Vec::with_capacity(width - 1);
        let mut t = 0.0;
        for (col, field) in fields.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| TrajectoryError::NonNumericCell { row: row_idx, col })?;
            if !v.is_finite() {
                return Err(TrajectoryError::NonNumericCell { row: row_idx, col });
            }
            if col == 0 {
                t = v;
            } else {
                row.push(v);
            }
        }
        times.push(t);
        cells.push(row);
    }

    if times.len() < 2 {
        return Err(TrajectoryError::TooFewSamples { needed: 2, got: times.len() });
    }
    let dt = times[1] - times[0];
    if dt.is_nan() || dt <= 0.0 {
        return Err(TrajectoryError::NonUniformGrid { row: 1 });
    }
    for (k, &t) in times.iter().enumerate() {
        if (t - k as f64 * dt).abs() > 1e-9 * dt {
            return Err(TrajectoryError::NonUniformGrid { row: k });
        }
    }

    let rows = cells.len();
    let states = Matrix::from_fn(rows, n, |i, j| cells[i][j]);
    let inputs = (m > 0).then(|| Matrix::from_fn(rows, m, |i, j| cells[i][n + j]));
    let outputs = (p > 0).then(|| Matrix::from_fn(rows, p, |i, j| cells[i][n + m + j]));
    Ok(Trajectory { dt, states, inputs, outputs })
}

/// Write a trajectory to a CSV file.
pub fn write_csv(traj: &Trajectory, path: impl AsRef<Path>) -> Result<(), TrajectoryError> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);

    let n = traj.state_dim();
    let m = traj.inputs.as_ref().map_or(0, Matrix::cols);
    let p = traj.outputs.as_ref().map_or(0, Matrix::cols);

    let mut header = String::from("t");
    for j in 0..n {
        header.push_str(&format!(",x{}", j + 1));
    }
    for j in 0..m {
        header.push_str(&format!(",u{}", j + 1));
    }
    for j in 0..p {
        header.push_str(&format!(",z{}", j + 1));
    }
    writeln!(w, "{header}")?;

    for i in 0..traj.samples() {
        let mut line = format!("{}", i as f64 * traj.dt);
        for v in traj.states.row(i) {
            line.push(',');
            line.push_str(&format!("{v}"));
        }
        if let Some(u) = &traj.inputs {
            for v in u.row(i) {
                line.push(',');
                line.push_str(&format!("{v}"));
            }
        }
        if let Some(z) = &traj.outputs {
            for v in z.row(i) {
                line.push(',');
                line.push_str(&format!("{v}"));
            }
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}
