//! Trajectory generation, numerical differentiation, and CSV
//! interchange for LTI systems.
//!
//! A trajectory sampled on a uniform grid is the sole data source for
//! every certificate: `simulate` produces one from a model,
//! `differentiate` turns it into the state/derivative pairs the
//! learners consume, and the CSV routines move trajectories in and out
//! of the process.

mod csv;

pub use csv::{read_csv, write_csv};

use crate::linalg::{expm, Matrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("time step must be positive and no larger than the horizon")]
    NonPositiveStep,
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("malformed CSV header: {0}")]
    MalformedHeader(String),
    #[error("non-uniform time grid at data row {row}")]
    NonUniformGrid { row: usize },
    #[error("non-numeric cell at data row {row}, column {col}")]
    NonNumericCell { row: usize, col: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Continuous-time model `x' = A x + B u`, `z = C x + D u`.
///
/// Input and output channels may be absent, encoded by zero-width
/// `B`/`C`/`D` blocks.
#[derive(Debug, Clone)]
pub struct LtiModel {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
}

impl LtiModel {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self, TrajectoryError> {
        let n = a.rows();
        if !a.is_square() {
            return Err(TrajectoryError::DimensionMismatch("A must be square".into()));
        }
        if b.rows() != n {
            return Err(TrajectoryError::DimensionMismatch(format!(
                "B must have {} rows, got {}",
                n,
                b.rows()
            )));
        }
        if c.cols() != n && c.rows() != 0 {
            return Err(TrajectoryError::DimensionMismatch(format!(
                "C must have {} columns, got {}",
                n,
                c.cols()
            )));
        }
        if d.rows() != c.rows() || d.cols() != b.cols() {
            return Err(TrajectoryError::DimensionMismatch(format!(
                "D must be {}x{}, got {}x{}",
                c.rows(),
                b.cols(),
                d.rows(),
                d.cols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Unforced system `x' = A x` with no output map.
    pub fn unforced(a: Matrix) -> Result<Self, TrajectoryError> {
        let n = a.rows();
        Self::new(a, Matrix::zeros(n, 0), Matrix::zeros(0, n), Matrix::zeros(0, 0))
    }

    /// Autonomous system with an output map: `x' = A x`, `z = C x`.
    pub fn autonomous_with_output(a: Matrix, c: Matrix) -> Result<Self, TrajectoryError> {
        let n = a.rows();
        let p = c.rows();
        Self::new(a, Matrix::zeros(n, 0), c, Matrix::zeros(p, 0))
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.rows()
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }
}

/// Input excitation applied during simulation; held constant over each
/// step (zero-order hold).
#[derive(Debug, Clone)]
pub enum InputSignal {
    Zero,
    UnitStep,
    /// Explicit per-sample values, one row per sample, one column per
    /// channel. Must cover every sample of the run.
    Table(Matrix),
}

/// Integration scheme for `simulate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationMethod {
    /// Exact discrete propagation under zero-order-hold input, via the
    /// exponential of the augmented `[[A dt, B dt], [0, 0]]` block.
    ExactZoh,
    /// Classical fourth-order Runge-Kutta with the input frozen over
    /// each step.
    Rk4,
}

/// Uniformly sampled trajectory starting at `t = 0`.
///
/// Holds one more sample than the last usable index so that forward
/// differences can consume the final point.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    /// One row per sample, `n` columns.
    pub states: Matrix,
    /// One row per sample, `m` columns; `None` for unforced runs.
    pub inputs: Option<Matrix>,
    /// One row per sample, `p` columns; `None` when no output map.
    pub outputs: Option<Matrix>,
}

impl Trajectory {
    pub fn samples(&self) -> usize {
        self.states.rows()
    }

    pub fn state_dim(&self) -> usize {
        self.states.cols()
    }

    pub fn t_final(&self) -> f64 {
        (self.samples().saturating_sub(1)) as f64 * self.dt
    }

    /// Restrict to samples with `t <= t_final + dt` (keeps the extra
    /// trailing sample so forward differences still cover `t_final`).
    pub fn truncate(&self, t_final: f64) -> Result<Trajectory, TrajectoryError> {
        if t_final.is_nan() || t_final < self.dt {
            return Err(TrajectoryError::NonPositiveStep);
        }
        let n_steps = (t_final / self.dt).round() as usize;
        let keep = (n_steps + 2).min(self.samples());
        let take_rows = |m: &Matrix| {
            Matrix::from_fn(keep, m.cols(), |i, j| m[(i, j)])
        };
        Ok(Trajectory {
            dt: self.dt,
            states: take_rows(&self.states),
            inputs: self.inputs.as_ref().map(&take_rows),
            outputs: self.outputs.as_ref().map(&take_rows),
        })
    }
}

/// Sampled states paired with numerical (or substituted exact) state
/// derivatives; what the certificate learners consume.
#[derive(Debug, Clone)]
pub struct DiffTrajectory {
    pub dt: f64,
    pub states: Matrix,
    pub derivs: Matrix,
    pub inputs: Option<Matrix>,
    pub outputs: Option<Matrix>,
}

impl DiffTrajectory {
    pub fn new(
        dt: f64,
        states: Matrix,
        derivs: Matrix,
        inputs: Option<Matrix>,
        outputs: Option<Matrix>,
    ) -> Result<Self, TrajectoryError> {
        if derivs.rows() != states.rows() || derivs.cols() != states.cols() {
            return Err(TrajectoryError::DimensionMismatch(
                "derivative rows must mirror state rows".into(),
            ));
        }
        for block in [&inputs, &outputs].into_iter().flatten() {
            if block.rows() != states.rows() {
                return Err(TrajectoryError::DimensionMismatch(
                    "input/output rows must mirror state rows".into(),
                ));
            }
        }
        Ok(Self { dt, states, derivs, inputs, outputs })
    }

    pub fn samples(&self) -> usize {
        self.states.rows()
    }

    pub fn state_dim(&self) -> usize {
        self.states.cols()
    }

    /// Keep only the given sample indices (in the given order).
    pub fn select(&self, indices: &[usize]) -> Result<DiffTrajectory, TrajectoryError> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.samples()) {
            return Err(TrajectoryError::DimensionMismatch(format!(
                "sample index {} out of range ({} samples)",
                bad,
                self.samples()
            )));
        }
        let pick = |m: &Matrix| {
            Matrix::from_fn(indices.len(), m.cols(), |i, j| m[(indices[i], j)])
        };
        Ok(DiffTrajectory {
            dt: self.dt,
            states: pick(&self.states),
            derivs: pick(&self.derivs),
            inputs: self.inputs.as_ref().map(&pick),
            outputs: self.outputs.as_ref().map(&pick),
        })
    }

    /// Replace numerical derivatives by the model's exact vector field
    /// `A x + B u`; used to separate differencing error from everything
    /// else.
    pub fn with_exact_derivatives(&self, model: &LtiModel) -> Result<DiffTrajectory, TrajectoryError> {
        if model.state_dim() != self.state_dim() {
            return Err(TrajectoryError::DimensionMismatch(
                "model state dimension does not match trajectory".into(),
            ));
        }
        let mut derivs = Matrix::zeros(self.samples(), self.state_dim());
        for i in 0..self.samples() {
            let mut dx = model.a().matvec(self.states.row(i));
            if let Some(u) = &self.inputs {
                let bu = model.b().matvec(u.row(i));
                for (d, v) in dx.iter_mut().zip(&bu) {
                    *d += v;
                }
            }
            derivs.row_mut(i).copy_from_slice(&dx);
        }
        DiffTrajectory::new(self.dt, self.states.clone(), derivs, self.inputs.clone(), self.outputs.clone())
    }
}

/// Finite-difference scheme for `differentiate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffScheme {
    /// First-order forward differences over `i = 0..=N`.
    #[default]
    Forward,
    /// Second-order central differences; the first and last samples are
    /// dropped.
    Central,
}

fn input_row(signal: &InputSignal, m: usize, k: usize, total: usize) -> Result<Vec<f64>, TrajectoryError> {
    match signal {
        InputSignal::Zero => Ok(vec![0.0; m]),
        InputSignal::UnitStep => Ok(vec![1.0; m]),
        InputSignal::Table(table) => {
            if table.cols() != m {
                return Err(TrajectoryError::DimensionMismatch(format!(
                    "input table has {} channels, model expects {}",
                    table.cols(),
                    m
                )));
            }
            if table.rows() < total {
                return Err(TrajectoryError::TooFewSamples { needed: total, got: table.rows() });
            }
            Ok(table.row(k).to_vec())
        }
    }
}

/// Simulate the model from `x0` over `[0, T + dt]`, producing `N + 2`
/// samples with `N = round(T / dt)`.
pub fn simulate(
    model: &LtiModel,
    x0: &[f64],
    input: &InputSignal,
    t_final: f64,
    dt: f64,
    method: IntegrationMethod,
) -> Result<Trajectory, TrajectoryError> {
    if dt <= 0.0 || t_final < dt || !dt.is_finite() || !t_final.is_finite() {
        return Err(TrajectoryError::NonPositiveStep);
    }
    let n = model.state_dim();
    let m = model.input_dim();
    let p = model.output_dim();
    if x0.len() != n {
        return Err(TrajectoryError::DimensionMismatch(format!(
            "x0 has length {}, model expects {}",
            x0.len(),
            n
        )));
    }
    let steps = (t_final / dt).round() as usize; // N
    let total = steps + 2;

    let mut states = Matrix::zeros(total, n);
    let mut inputs = if m > 0 { Some(Matrix::zeros(total, m)) } else { None };
    let mut outputs = if p > 0 { Some(Matrix::zeros(total, p)) } else { None };

    // discrete propagator for the exact path
    let propagator = match method {
        IntegrationMethod::ExactZoh => {
            let aug = Matrix::from_fn(n + m, n + m, |i, j| {
                if i < n && j < n {
                    model.a()[(i, j)] * dt
                } else if i < n {
                    model.b()[(i, j - n)] * dt
                } else {
                    0.0
                }
            });
            let e = expm(&aug)?;
            let ad = Matrix::from_fn(n, n, |i, j| e[(i, j)]);
            let bd = Matrix::from_fn(n, m, |i, j| e[(i, j + n)]);
            Some((ad, bd))
        }
        IntegrationMethod::Rk4 => None,
    };

    let mut x = x0.to_vec();
    for k in 0..total {
        let u = input_row(input, m, k, total)?;
        states.row_mut(k).copy_from_slice(&x);
        if let Some(inp) = inputs.as_mut() {
            inp.row_mut(k).copy_from_slice(&u);
        }
        if let Some(out) = outputs.as_mut() {
            let mut z = model.c().matvec(&x);
            let du = model.d().matvec(&u);
            for (zi, di) in z.iter_mut().zip(&du) {
                *zi += di;
            }
            out.row_mut(k).copy_from_slice(&z);
        }
        if k + 1 == total {
            break;
        }
        x = match &propagator {
            Some((ad, bd)) => {
                let mut next = ad.matvec(&x);
                let forced = bd.matvec(&u);
                for (ni, fi) in next.iter_mut().zip(&forced) {
                    *ni += fi;
                }
                next
            }
            None => rk4_step(model, &x, &u, dt),
        };
    }

    Ok(Trajectory { dt, states, inputs, outputs })
}

fn vector_field(model: &LtiModel, x: &[f64], u: &[f64]) -> Vec<f64> {
    let mut dx = model.a().matvec(x);
    if model.input_dim() > 0 {
        let bu = model.b().matvec(u);
        for (d, v) in dx.iter_mut().zip(&bu) {
            *d += v;
        }
    }
    dx
}

fn rk4_step(model: &LtiModel, x: &[f64], u: &[f64], dt: f64) -> Vec<f64> {
    let add_scaled = |base: &[f64], dir: &[f64], s: f64| -> Vec<f64> {
        base.iter().zip(dir).map(|(b, d)| b + s * d).collect()
    };
    let k1 = vector_field(model, x, u);
    let k2 = vector_field(model, &add_scaled(x, &k1, dt / 2.0), u);
    let k3 = vector_field(model, &add_scaled(x, &k2, dt / 2.0), u);
    let k4 = vector_field(model, &add_scaled(x, &k3, dt), u);
    x.iter()
        .enumerate()
        .map(|(i, xi)| xi + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Numerical differentiation of a sampled trajectory.
pub fn differentiate(traj: &Trajectory, scheme: DiffScheme) -> Result<DiffTrajectory, TrajectoryError> {
    let s = traj.samples();
    let n = traj.state_dim();
    match scheme {
        DiffScheme::Forward => {
            if s < 2 {
                return Err(TrajectoryError::TooFewSamples { needed: 2, got: s });
            }
            let kept = s - 1;
            let mut derivs = Matrix::zeros(kept, n);
            for i in 0..kept {
                for j in 0..n {
                    derivs[(i, j)] = (traj.states[(i + 1, j)] - traj.states[(i, j)]) / traj.dt;
                }
            }
            let subset = |m: &Matrix| Matrix::from_fn(kept, m.cols(), |i, j| m[(i, j)]);
            DiffTrajectory::new(
                traj.dt,
                subset(&traj.states),
                derivs,
                traj.inputs.as_ref().map(&subset),
                traj.outputs.as_ref().map(&subset),
            )
        }
        DiffScheme::Central => {
            if s < 3 {
                return Err(TrajectoryError::TooFewSamples { needed: 3, got: s });
            }
            let kept = s - 2;
            let mut derivs = Matrix::zeros(kept, n);
            for i in 0..kept {
                for j in 0..n {
                    derivs[(i, j)] =
                        (traj.states[(i + 2, j)] - traj.states[(i, j)]) / (2.0 * traj.dt);
                }
            }
            // retained sample k corresponds to original index k + 1
            let subset = |m: &Matrix| Matrix::from_fn(kept, m.cols(), |i, j| m[(i + 1, j)]);
            DiffTrajectory::new(
                traj.dt,
                subset(&traj.states),
                derivs,
                traj.inputs.as_ref().map(&subset),
                traj.outputs.as_ref().map(&subset),
            )
        }
    }
}
