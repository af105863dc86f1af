//! Model-based ground truth for every certificate.
//!
//! Where the data-driven learners see only samples, these oracles see
//! the true `(A, B, C, D)` and compute reference values with plain
//! dense linear algebra: the Lyapunov equation through a
//! Kronecker-product solve, output energy through the observability
//! gramian, the L2 gain through a frequency sweep of the largest
//! transfer-function singular value. Used by tests and by the CLI's
//! compare mode.

use crate::exec;
use crate::linalg::{
    self, cholesky, dot, is_positive_definite, kron, lu_factor, norm2, Matrix,
};
use crate::trajectory::{simulate, InputSignal, IntegrationMethod, LtiModel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("system is not asymptotically stable")]
    NotStable,
    #[error("Lyapunov operator is singular (eigenvalue pair sums to zero)")]
    SingularLyapunovOperator,
    #[error("output energy integral tail has not converged (estimated tail fraction {tail_fraction:.3e})")]
    TailNotConverged { tail_fraction: f64 },
    #[error("model has no outputs")]
    MissingOutputs,
    #[error("model has no inputs")]
    MissingInputs,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
    #[error(transparent)]
    Trajectory(#[from] crate::trajectory::TrajectoryError),
}

/// Deviation record comparing a data-driven value against its oracle.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub quantity: String,
    pub oracle_value: f64,
    pub data_value: f64,
    pub abs_deviation: f64,
    pub rel_deviation: f64,
}

impl OracleReport {
    pub fn new(quantity: impl Into<String>, oracle_value: f64, data_value: f64) -> Self {
        let abs_deviation = (data_value - oracle_value).abs();
        let rel_deviation = abs_deviation / oracle_value.abs().max(f64::MIN_POSITIVE);
        Self { quantity: quantity.into(), oracle_value, data_value, abs_deviation, rel_deviation }
    }

    /// Recompute the stored deviations and confirm they are consistent.
    pub fn is_consistent(&self) -> bool {
        let abs = (self.data_value - self.oracle_value).abs();
        let rel = abs / self.oracle_value.abs().max(f64::MIN_POSITIVE);
        (abs - self.abs_deviation).abs() <= 1e-12 * (1.0 + abs)
            && (rel - self.rel_deviation).abs() <= 1e-12 * (1.0 + rel)
    }
}

/// Solve `P A + A' P = -Q` by vectorizing through Kronecker products.
///
/// The full `n^2` unknowns are solved for and the result symmetrized;
/// the operator `A' (x) I + I (x) A'` is singular exactly when two
/// eigenvalues of `A` sum to zero.
pub fn lyap_solve_model(a: &Matrix, q: &Matrix) -> Result<Matrix, OracleError> {
    if !a.is_square() {
        return Err(OracleError::DimensionMismatch("A must be square".into()));
    }
    let n = a.rows();
    if q.rows() != n || q.cols() != n {
        return Err(OracleError::DimensionMismatch(format!("Q must be {n}x{n}")));
    }
    let at = a.transpose();
    let eye = Matrix::identity(n);
    // column-major vectorization: vec(PA) = (A' (x) I) vec(P),
    // vec(A'P) = (I (x) A') vec(P)
    let op = kron(&at, &eye).add(&kron(&eye, &at));
    let rhs: Vec<f64> = {
        // vec(-Q), column-stacked
        let mut v = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                v.push(-q[(i, j)]);
            }
        }
        v
    };
    let factors = match lu_factor(&op, 0.0) {
        Ok(f) => f,
        Err(linalg::LinalgError::Singular) => return Err(OracleError::SingularLyapunovOperator),
        Err(e) => return Err(e.into()),
    };
    let vec_p = factors.solve(&rhs);
    let p_raw = Matrix::from_fn(n, n, |i, j| vec_p[j * n + i]);
    let p = p_raw.add(&p_raw.transpose()).scale(0.5);

    let resid = p.matmul(a).add(&at.matmul(&p)).add(q).norm_fro();
    debug_assert!(
        resid <= 1e-8 * q.norm_fro().max(1.0),
        "Lyapunov residual {resid} too large"
    );
    Ok(p)
}

/// Stability test via Lyapunov: `A` is Hurwitz iff `P A + A' P = -I`
/// has a positive definite solution.
pub fn is_hurwitz(a: &Matrix) -> bool {
    match lyap_solve_model(a, &Matrix::identity(a.rows())) {
        Ok(p) => is_positive_definite(&p),
        Err(_) => false,
    }
}

/// Observability gramian `W` solving `A' W + W A = -C' C`.
pub fn observability_gramian(a: &Matrix, c: &Matrix) -> Result<Matrix, OracleError> {
    if c.cols() != a.rows() {
        return Err(OracleError::DimensionMismatch(format!(
            "C must have {} columns, got {}",
            a.rows(),
            c.cols()
        )));
    }
    if !is_hurwitz(a) {
        return Err(OracleError::NotStable);
    }
    let ctc = c.transpose().matmul(c);
    lyap_solve_model(a, &ctc)
}

/// Frequency response `G(jw) = D + C (jwI - A)^{-1} B` as a real/imag
/// pair, computed through the equivalent real 2n x 2n block solve.
fn frequency_response(model: &LtiModel, w: f64) -> Result<(Matrix, Matrix), OracleError> {
    let n = model.state_dim();
    let m = model.input_dim();
    let a = model.a();
    // [[-A, -wI], [wI, -A]] [u; v] = [b; 0]  encodes (jwI - A)(u + jv) = b
    let block = Matrix::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, bj) = (i / n, j / n);
        let (ii, jj) = (i % n, j % n);
        match (bi, bj) {
            (0, 0) | (1, 1) => -a[(ii, jj)],
            (0, 1) => {
                if ii == jj {
                    -w
                } else {
                    0.0
                }
            }
            _ => {
                if ii == jj {
                    w
                } else {
                    0.0
                }
            }
        }
    });
    let factors = match lu_factor(&block, 0.0) {
        Ok(f) => f,
        Err(linalg::LinalgError::Singular) => return Err(OracleError::NotStable),
        Err(e) => return Err(e.into()),
    };
    let mut re = Matrix::zeros(n, m);
    let mut im = Matrix::zeros(n, m);
    for j in 0..m {
        let mut rhs = vec![0.0; 2 * n];
        for i in 0..n {
            rhs[i] = model.b()[(i, j)];
        }
        let sol = factors.solve(&rhs);
        for i in 0..n {
            re[(i, j)] = sol[i];
            im[(i, j)] = sol[n + i];
        }
    }
    let g_re = model.d().add(&model.c().matmul(&re));
    let g_im = model.c().matmul(&im);
    Ok((g_re, g_im))
}

/// Largest singular value of a complex matrix given as (re, im), via
/// power iteration on the Hermitian Gram matrix `G^H G`.
fn max_singular_value(re: &Matrix, im: &Matrix) -> f64 {
    let m = re.cols();
    if m == 0 || re.rows() == 0 {
        return 0.0;
    }
    // H = G^H G: h_re = re're + im'im, h_im = re'im - im're
    let h_re = re.transpose().matmul(re).add(&im.transpose().matmul(im));
    let h_im = re.transpose().matmul(im).sub(&im.transpose().matmul(re));
    if m == 1 {
        return h_re[(0, 0)].max(0.0).sqrt();
    }

    let mut v_re = vec![0.0; m];
    let mut v_im = vec![0.0; m];
    for (i, v) in v_re.iter_mut().enumerate() {
        *v = 1.0 + (i as f64 + 1.0) * 1e-3;
    }
    let mut lambda = 0.0;
    for _ in 0..300 {
        // w = H v (complex)
        let hr_v = h_re.matvec(&v_re);
        let hi_v = h_im.matvec(&v_im);
        let hr_vi = h_re.matvec(&v_im);
        let hi_vr = h_im.matvec(&v_re);
        let w_re: Vec<f64> = hr_v.iter().zip(&hi_v).map(|(a, b)| a - b).collect();
        let w_im: Vec<f64> = hr_vi.iter().zip(&hi_vr).map(|(a, b)| a + b).collect();
        let norm = (dot(&w_re, &w_re) + dot(&w_im, &w_im)).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let new_lambda = norm; // Rayleigh quotient of unit v equals |Hv| in the limit
        for i in 0..m {
            v_re[i] = w_re[i] / norm;
            v_im[i] = w_im[i] / norm;
        }
        if (new_lambda - lambda).abs() <= 1e-13 * new_lambda.max(1.0) {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    lambda.max(0.0).sqrt()
}

fn gain_at(model: &LtiModel, w: f64) -> Result<f64, OracleError> {
    let (re, im) = frequency_response(model, w)?;
    Ok(max_singular_value(&re, &im))
}

/// H-infinity norm by frequency sweep.
///
/// Evaluates the largest transfer-function singular value at `w = 0`
/// and on a log-spaced grid over `[w_min, w_max]` (rad/s), then refines
/// around the best grid point with golden-section search to a relative
/// frequency tolerance of `1e-6`.
pub fn hinf_norm(
    model: &LtiModel,
    w_min: f64,
    w_max: f64,
    grid: usize,
) -> Result<f64, OracleError> {
    if model.input_dim() == 0 {
        return Err(OracleError::MissingInputs);
    }
    if model.output_dim() == 0 {
        return Err(OracleError::MissingOutputs);
    }
    if w_min.is_nan() || w_min <= 0.0 || w_max <= w_min || grid < 2 {
        return Err(OracleError::DimensionMismatch(
            "need 0 < w_min < w_max and at least two grid points".into(),
        ));
    }
    if !is_hurwitz(model.a()) {
        return Err(OracleError::NotStable);
    }

    let ratio = w_max / w_min;
    let freqs: Vec<f64> = (0..grid)
        .map(|k| w_min * ratio.powf(k as f64 / (grid - 1) as f64))
        .collect();
    let gains = exec::map_indexed(grid, |k| gain_at(model, freqs[k]));
    let mut best_idx = usize::MAX; // MAX marks the DC point
    let mut best = gain_at(model, 0.0)?;
    for (k, g) in gains.into_iter().enumerate() {
        let g = g?;
        if g > best {
            best = g;
            best_idx = k;
        }
    }

    // bracket around the winner and refine
    let (lo, hi, log_space) = if best_idx == usize::MAX {
        (0.0, freqs[0], false)
    } else {
        let lo = if best_idx == 0 { freqs[0] } else { freqs[best_idx - 1] };
        let hi = if best_idx + 1 == grid { freqs[grid - 1] } else { freqs[best_idx + 1] };
        (lo, hi, true)
    };
    let eval = |t: f64| -> Result<f64, OracleError> {
        let w = if log_space { t.exp() } else { t };
        gain_at(model, w)
    };
    let (mut a, mut b) = if log_space { (lo.ln(), hi.ln()) } else { (lo, hi) };
    if b > a {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = eval(c)?;
        let mut fd = eval(d)?;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let scale = if log_space { 1.0 } else { mid.abs().max(freqs[0]) };
            if (b - a).abs() <= 1e-6 * scale.max(1e-12) {
                break;
            }
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = eval(d)?;
            }
        }
        best = best.max(fc).max(fd);
    }
    Ok(best)
}

/// Maximum output energy from `x0`, computed by simulating the unforced
/// response and integrating `z' z` with the trapezoidal rule.
///
/// The horizon must be long enough that the estimated tail (from the
/// decay rate observed over the last tenth of the run) stays below
/// `1e-6` of the accumulated integral.
pub fn max_output_energy_sim(
    model: &LtiModel,
    x0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<f64, OracleError> {
    if model.output_dim() == 0 {
        return Err(OracleError::MissingOutputs);
    }
    if !is_hurwitz(model.a()) {
        return Err(OracleError::NotStable);
    }
    let traj = simulate(model, x0, &InputSignal::Zero, t_final, dt, IntegrationMethod::ExactZoh)?;
    let z = traj.outputs.as_ref().expect("output dimension checked");
    let g: Vec<f64> = (0..traj.samples()).map(|i| dot(z.row(i), z.row(i))).collect();
    let mut energy = 0.0;
    for i in 1..g.len() {
        energy += 0.5 * (g[i] + g[i - 1]) * dt;
    }
    if energy == 0.0 {
        return Ok(0.0);
    }

    // tail estimate from the slowest decay over the last 10% of samples
    let tail_window = (g.len() / 10).max(2);
    let k0 = g.len() - tail_window;
    let g_start = g[k0];
    let g_end = *g.last().expect("nonempty");
    let tail = if g_end <= 1e-300 {
        0.0
    } else if g_start > g_end {
        let rate = (g_end / g_start).ln() / ((tail_window - 1) as f64 * dt);
        g_end / (-rate)
    } else {
        f64::INFINITY
    };
    let tail_fraction = tail / energy;
    if tail_fraction.is_nan() || tail_fraction > 1e-6 {
        return Err(OracleError::TailNotConverged { tail_fraction });
    }
    Ok(energy)
}

/// Aggregate result of simulating trajectories started on the boundary
/// of the ellipsoid `{x : x' P x = 1}`.
#[derive(Debug, Clone)]
pub struct EllipsoidReport {
    pub samples: usize,
    /// Largest `x' P x` seen over all trajectories and times.
    pub max_quad_form: f64,
    /// Largest `|z|` seen; absent when the model has no outputs.
    pub max_output_norm: Option<f64>,
}

/// Check ellipsoid invariance empirically: draw `samples` uniformly
/// random boundary points, simulate each, and report the worst
/// excursion of `x' P x` and of `|z|`. Violations are reported in the
/// numbers, never raised.
pub fn ellipsoid_invariance_check(
    model: &LtiModel,
    p: &Matrix,
    samples: usize,
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<EllipsoidReport, OracleError> {
    let n = model.state_dim();
    if p.rows() != n || p.cols() != n {
        return Err(OracleError::DimensionMismatch(format!("P must be {n}x{n}")));
    }
    // constructive positive-definiteness check up front
    cholesky(p)?;

    let per_sample = |idx: usize| -> Result<(f64, Option<f64>), OracleError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        // gaussian direction scaled onto the boundary x' P x = 1
        let mut dir;
        loop {
            dir = gaussian_vector(&mut rng, n);
            if norm2(&dir) > 1e-9 {
                break;
            }
        }
        let q = dot(&p.matvec(&dir), &dir);
        let x0: Vec<f64> = dir.iter().map(|v| v / q.sqrt()).collect();
        let traj = simulate(model, &x0, &InputSignal::Zero, t_final, dt, IntegrationMethod::ExactZoh)?;
        let mut max_v = f64::NEG_INFINITY;
        let mut max_z: Option<f64> = traj.outputs.as_ref().map(|_| 0.0);
        for i in 0..traj.samples() {
            let x = traj.states.row(i);
            max_v = max_v.max(dot(&p.matvec(x), x));
            if let (Some(mz), Some(z)) = (max_z.as_mut(), traj.outputs.as_ref()) {
                *mz = mz.max(norm2(z.row(i)));
            }
        }
        Ok((max_v, max_z))
    };

    let results = exec::map_indexed(samples, per_sample);
    let mut max_quad_form = f64::NEG_INFINITY;
    let mut max_output_norm: Option<f64> = None;
    for r in results {
        let (v, z) = r?;
        max_quad_form = max_quad_form.max(v);
        if let Some(z) = z {
            max_output_norm = Some(max_output_norm.unwrap_or(0.0).max(z));
        }
    }
    Ok(EllipsoidReport { samples, max_quad_form, max_output_norm })
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Box-Muller, two coordinates per draw
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out.push(r * theta.cos());
        if out.len() < n {
            out.push(r * theta.sin());
        }
    }
    out
}
