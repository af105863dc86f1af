//! Certificate learners: assemble data matrices from a differentiated
//! trajectory and solve the analysis problems as linear programs.
//!
//! All five learners share one construction. With `p` the packed
//! unknowns of a symmetric matrix `P`, the quadratic conditions
//! `x' P x > 0` and `d/dt (x' P x) = 2 x' P x' < 0` evaluated at sample
//! `i` become linear rows in `p`:
//!
//! ```text
//! L1[i] = (x(i) (+) x(i))'          so  L1 p  ~ x' P x
//! L2[i] = 2 (x(i) (+) dx(i))'       so  L2 p  ~ d/dt (x' P x)
//! ```
//!
//! Strict inequalities are realized as non-strict rows with explicit
//! margins scaled by `l[i] = |x(i)|^2` (so the margin is relative to the
//! sample magnitude). A pure-feasibility Lyapunov search is pinned down
//! by the normalization `trace(P) = n`.
//!
//! Large constraint sets are solved by row generation: a subset LP is
//! solved, violated rows are added, and the loop repeats until the
//! optimum of the subset satisfies every row. Since a subset LP is a
//! relaxation, the first subset optimum that is feasible for the full
//! row set is optimal for it.

use crate::exec;
use crate::linalg::{
    self, dot, is_positive_definite, lu_factor, oplus, packed_len, sym_unpack, Matrix, PackedSym,
};
use crate::lp::{feas_tol, LpProblem, LpSolution, LpStatus, Relation};
use crate::trajectory::{differentiate, DiffScheme, DiffTrajectory, Trajectory};
use thiserror::Error;

/// Default relative margin for the Lyapunov feasibility conditions.
pub const DEFAULT_MARGIN: f64 = 1e-3;
/// Margin keeping the positive-definiteness rows strictly away from
/// zero inside the bound LPs without perturbing their optima.
const EPS_MARGIN: f64 = 1e-9;
/// Row count above which certificate LPs switch to row generation.
/// Small subsets keep each tableau solve short, which also bounds the
/// numerical drift a long dense pivot sequence would accumulate.
const DIRECT_ROWS: usize = 160;
/// Violated rows added per row-generation round.
const ROW_BATCH: usize = 32;

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("trajectory has no recorded outputs")]
    MissingOutputs,
    #[error("trajectory has no recorded inputs")]
    MissingInputs,
    #[error("Q must be symmetric positive definite")]
    QNotPositiveDefinite,
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("data matrix is rank deficient: the trajectory does not excite enough directions")]
    RankDeficient,
    #[error("linear program infeasible: {0}")]
    Infeasible(&'static str),
    #[error("linear program unbounded: {0}")]
    Unbounded(&'static str),
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("sample constraints hold but the recovered matrix is not positive definite")]
    NotPositiveDefiniteResult,
    #[error("no finite output-peak bound certified from this data (lambda = 0)")]
    ZeroLambda,
    #[error("gain estimation requires a trajectory started at the origin")]
    NonzeroInitialState,
    #[error("operation requires an unforced trajectory, but nonzero inputs are present")]
    ForcedTrajectory,
    #[error("all recorded outputs are zero; nothing to bound")]
    AllOutputsZero,
    #[error("all recorded inputs are zero; the gain constraint set is degenerate")]
    AllInputsZero,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// The sample-wise constraint data shared by every learner.
#[derive(Debug, Clone)]
pub struct DataMatrices {
    /// State dimension.
    pub n: usize,
    /// Rows `(x(i) (+) x(i))'`.
    pub l1: Matrix,
    /// Rows `2 (x(i) (+) dx(i))'`.
    pub l2: Matrix,
    /// Squared state norms `|x(i)|^2`.
    pub l: Vec<f64>,
    /// Squared output norms `z(i)' z(i)`; absent without outputs.
    pub l_z: Option<Vec<f64>>,
    /// Squared input norms `u(i)' u(i)`; absent without inputs.
    pub l_u: Option<Vec<f64>>,
    /// Weighted state norms `x(i)' Q x(i)`; absent without a `Q`.
    pub l_q: Option<Vec<f64>>,
}

impl DataMatrices {
    pub fn samples(&self) -> usize {
        self.l1.rows()
    }
}

/// Assemble the constraint data from a differentiated trajectory.
///
/// Fields whose source data is absent are marked absent rather than
/// zero-filled. `q`, when given, must be symmetric positive definite.
pub fn build_data_matrices(
    diff: &DiffTrajectory,
    q: Option<&Matrix>,
) -> Result<DataMatrices, CertificateError> {
    let n = diff.state_dim();
    let rows = diff.samples();
    if rows == 0 {
        return Err(CertificateError::TooFewSamples { needed: 1, got: 0 });
    }
    if let Some(q) = q {
        if !q.is_square() || q.rows() != n {
            return Err(CertificateError::DimensionMismatch(format!(
                "Q must be {n}x{n}"
            )));
        }
        if !q.is_symmetric(1e-12) || !is_positive_definite(q) {
            return Err(CertificateError::QNotPositiveDefinite);
        }
    }

    let k = packed_len(n);
    let mut l1 = Matrix::zeros(rows, k);
    let mut l2 = Matrix::zeros(rows, k);
    let mut l = Vec::with_capacity(rows);
    for i in 0..rows {
        let x = diff.states.row(i);
        let dx = diff.derivs.row(i);
        l1.row_mut(i).copy_from_slice(&oplus(x, x)?);
        let mut cross = oplus(x, dx)?;
        for c in cross.iter_mut() {
            *c *= 2.0;
        }
        l2.row_mut(i).copy_from_slice(&cross);
        l.push(dot(x, x));
    }

    let l_z = diff
        .outputs
        .as_ref()
        .map(|z| (0..rows).map(|i| dot(z.row(i), z.row(i))).collect());
    let l_u = diff
        .inputs
        .as_ref()
        .map(|u| (0..rows).map(|i| dot(u.row(i), u.row(i))).collect());
    let l_q = match q {
        Some(q) => {
            let mut vals = Vec::with_capacity(rows);
            for i in 0..rows {
                let x = diff.states.row(i);
                vals.push(dot(&q.matvec(x), x));
            }
            Some(vals)
        }
        None => None,
    };

    Ok(DataMatrices { n, l1, l2, l, l_z, l_u, l_q })
}

// ---------------------------------------------------------------------
// LP plumbing
// ---------------------------------------------------------------------

fn ensure_unforced(dm: &DataMatrices) -> Result<(), CertificateError> {
    if let Some(l_u) = &dm.l_u {
        if l_u.iter().any(|&v| v > 0.0) {
            return Err(CertificateError::ForcedTrajectory);
        }
    }
    Ok(())
}

fn map_status(
    sol: LpSolution,
    infeasible_msg: &'static str,
    unbounded_msg: &'static str,
) -> Result<LpSolution, CertificateError> {
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible => Err(CertificateError::Infeasible(infeasible_msg)),
        LpStatus::Unbounded => Err(CertificateError::Unbounded(unbounded_msg)),
        LpStatus::IterationLimit => Err(CertificateError::IterationLimit),
    }
}

fn subset_problem(prob: &LpProblem, indices: &[usize]) -> LpProblem {
    let mut sub = LpProblem::new(prob.sense(), prob.cost().to_vec());
    for j in 0..prob.num_vars() {
        sub.set_bounds(j, prob.lower(j), prob.upper(j)).expect("valid variable index");
    }
    for &i in indices {
        let row = &prob.rows()[i];
        sub.add_row(row.coeffs.clone(), row.relation, row.rhs).expect("row length fixed");
    }
    sub
}

fn row_violation(prob: &LpProblem, i: usize, x: &[f64]) -> f64 {
    let row = &prob.rows()[i];
    let lhs = dot(&row.coeffs, x);
    match row.relation {
        Relation::Le => lhs - row.rhs,
        Relation::Ge => row.rhs - lhs,
        Relation::Eq => (lhs - row.rhs).abs(),
    }
}

/// Solve a certificate LP, using row generation when the row count is
/// large. Subset infeasibility certifies full infeasibility (the subset
/// is a relaxation); a subset optimum feasible for every row is optimal
/// for the full problem.
fn solve_certificate_lp(prob: &LpProblem, mandatory: &[usize]) -> LpSolution {
    let total = prob.num_rows();
    if total <= DIRECT_ROWS {
        return prob.solve();
    }

    let mut included = vec![false; total];
    for &i in mandatory {
        included[i] = true;
    }
    let seeds = DIRECT_ROWS.min(total);
    for s in 0..seeds {
        included[s * (total - 1) / (seeds - 1)] = true;
    }

    loop {
        let indices: Vec<usize> = (0..total).filter(|&i| included[i]).collect();
        let sub = subset_problem(prob, &indices);
        let sol = sub.solve();
        match sol.status {
            LpStatus::Infeasible | LpStatus::IterationLimit => return sol,
            LpStatus::Unbounded => {
                // not enough rows to pin the objective down; widen the net
                let missing: Vec<usize> = (0..total).filter(|&i| !included[i]).collect();
                if missing.is_empty() {
                    return sol;
                }
                let add = missing.len().min(indices.len().max(ROW_BATCH));
                let denom = (add - 1).max(1);
                for s in 0..add {
                    included[missing[s * (missing.len() - 1) / denom]] = true;
                }
            }
            LpStatus::Optimal => {
                let x = sol.x.as_ref().expect("optimal solution carries x");
                let mut violated: Vec<(usize, f64)> = (0..total)
                    .filter(|&i| !included[i])
                    .map(|i| (i, row_violation(prob, i, x)))
                    .filter(|&(i, v)| v > feas_tol(prob.rows()[i].rhs))
                    .collect();
                if violated.is_empty() {
                    debug_assert!(prob.max_violation(x) <= 0.0);
                    return sol;
                }
                violated.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                for &(i, _) in violated.iter().take(ROW_BATCH) {
                    included[i] = true;
                }
            }
        }
    }
}

fn recover_packed(n: usize, p_values: &[f64]) -> Matrix {
    let p = PackedSym::new(n, p_values.to_vec()).expect("solver preserves packed length");
    sym_unpack(&p)
}

// ---------------------------------------------------------------------
// Lyapunov learning
// ---------------------------------------------------------------------

/// A learned quadratic Lyapunov certificate.
#[derive(Debug, Clone)]
pub struct LyapunovCertificate {
    /// Positive definite matrix of the quadratic form, `trace(P) = n`.
    pub p: Matrix,
    pub c1: f64,
    pub c2: f64,
    /// `min_i (L1 p - c1 l)` over the training samples.
    pub min_positivity_margin: f64,
    /// `min_i (-L2 p - c2 l)` over the training samples.
    pub min_decrease_margin: f64,
}

/// Learn a quadratic Lyapunov function valid on every training sample.
///
/// Feasibility problem: `L1 p >= c1 l`, `L2 p <= -c2 l`, scale fixed by
/// `trace(P) = n`. Infeasibility means the data is inconsistent with a
/// common quadratic Lyapunov function at these margins.
pub fn learn_lyapunov(
    dm: &DataMatrices,
    c1: f64,
    c2: f64,
) -> Result<LyapunovCertificate, CertificateError> {
    if dm.samples() == 0 {
        return Err(CertificateError::TooFewSamples { needed: 1, got: 0 });
    }
    if c1.is_nan() || c2.is_nan() || c1 <= 0.0 || c2 <= 0.0 {
        return Err(CertificateError::DimensionMismatch(
            "margins c1 and c2 must be positive".into(),
        ));
    }
    let k = packed_len(dm.n);
    let mut prob = LpProblem::minimize(vec![0.0; k]);
    for i in 0..dm.samples() {
        prob.add_row(dm.l1.row(i).to_vec(), Relation::Ge, c1 * dm.l[i]).expect("row width");
        prob.add_row(dm.l2.row(i).to_vec(), Relation::Le, -c2 * dm.l[i]).expect("row width");
    }
    let mut trace_row = vec![0.0; k];
    trace_row[..dm.n].fill(1.0);
    prob.add_row(trace_row, Relation::Eq, dm.n as f64).expect("row width");
    let trace_idx = prob.num_rows() - 1;

    let sol = map_status(
        solve_certificate_lp(&prob, &[trace_idx]),
        "data is inconsistent with a common quadratic Lyapunov function at these margins",
        "Lyapunov feasibility program cannot be unbounded with the trace normalization",
    )?;
    let p_values = sol.x.expect("optimal");
    let p = recover_packed(dm.n, &p_values);
    if !is_positive_definite(&p) {
        return Err(CertificateError::NotPositiveDefiniteResult);
    }

    let mut min_pos = f64::INFINITY;
    let mut min_dec = f64::INFINITY;
    for i in 0..dm.samples() {
        min_pos = min_pos.min(dot(dm.l1.row(i), &p_values) - c1 * dm.l[i]);
        min_dec = min_dec.min(-dot(dm.l2.row(i), &p_values) - c2 * dm.l[i]);
    }

    Ok(LyapunovCertificate { p, c1, c2, min_positivity_margin: min_pos, min_decrease_margin: min_dec })
}

/// Recover the exact Lyapunov-equation solution from sampled data.
///
/// Solves `L2 p = -l_Q` (so that `P A + A' P = -Q` for positive
/// definite `Q`): square systems directly, overdetermined ones by
/// least squares through the normal equations.
pub fn solve_lyapunov_equation(
    diff: &DiffTrajectory,
    q: &Matrix,
) -> Result<Matrix, CertificateError> {
    let n = diff.state_dim();
    let k = packed_len(n);
    if diff.samples() < k {
        return Err(CertificateError::TooFewSamples { needed: k, got: diff.samples() });
    }
    let dm = build_data_matrices(diff, Some(q))?;
    ensure_unforced(&dm)?;
    let l_q = dm.l_q.as_ref().expect("Q was supplied");
    let rhs: Vec<f64> = l_q.iter().map(|v| -v).collect();

    let p_values = if dm.samples() == k {
        let square = Matrix::from_fn(k, k, |i, j| dm.l2[(i, j)]);
        match lu_factor(&square, 1e-9 * square.norm_inf().max(f64::MIN_POSITIVE)) {
            Ok(f) => f.solve(&rhs),
            Err(linalg::LinalgError::Singular) => return Err(CertificateError::RankDeficient),
            Err(e) => return Err(e.into()),
        }
    } else {
        // normal equations G p = L2' rhs
        let l2t = dm.l2.transpose();
        let gram = l2t.matmul(&dm.l2);
        let g = l2t.matvec(&rhs);
        match lu_factor(&gram, 1e-9 * gram.norm_inf().max(f64::MIN_POSITIVE)) {
            Ok(f) => f.solve(&g),
            Err(linalg::LinalgError::Singular) => return Err(CertificateError::RankDeficient),
            Err(e) => return Err(e.into()),
        }
    };
    Ok(recover_packed(n, &p_values))
}

// ---------------------------------------------------------------------
// Bound learners
// ---------------------------------------------------------------------

/// Upper bound on the output energy from `x0`.
#[derive(Debug, Clone)]
pub struct EnergyBound {
    pub p: Matrix,
    /// `x0' P x0`, the certified maximum output energy.
    pub bound: f64,
}

/// Learn an output-energy bound: minimize `(x0 (+) x0)' p` subject to
/// `L1 p >= eps l` and `L2 p <= -l_z`.
pub fn energy_bound(dm: &DataMatrices, x0: &[f64]) -> Result<EnergyBound, CertificateError> {
    let l_z = dm.l_z.as_ref().ok_or(CertificateError::MissingOutputs)?;
    ensure_unforced(dm)?;
    if x0.len() != dm.n {
        return Err(CertificateError::DimensionMismatch(format!(
            "x0 has length {}, expected {}",
            x0.len(),
            dm.n
        )));
    }
    let cost = oplus(x0, x0)?;
    let mut prob = LpProblem::minimize(cost);
    for i in 0..dm.samples() {
        prob.add_row(dm.l1.row(i).to_vec(), Relation::Ge, EPS_MARGIN * dm.l[i]).expect("row width");
        prob.add_row(dm.l2.row(i).to_vec(), Relation::Le, -l_z[i]).expect("row width");
    }
    let sol = map_status(
        solve_certificate_lp(&prob, &[]),
        "no quadratic storage function is consistent with these samples",
        "insufficient excitation: the energy objective is unbounded below on this data",
    )?;
    let p_values = sol.x.expect("optimal");
    Ok(EnergyBound { p: recover_packed(dm.n, &p_values), bound: sol.objective.expect("optimal") })
}

/// Invariant ellipsoid and output-peak bound.
#[derive(Debug, Clone)]
pub struct PeakBound {
    /// Ellipsoid matrix: the certified invariant set is `x' P x <= 1`.
    pub p: Matrix,
    pub lambda: f64,
    /// `sqrt(1 / lambda)`, the certified peak of `|z|`.
    pub bound: f64,
}

/// Learn an output-peak bound: maximize `lambda` subject to
/// `L1 p >= eps l`, `L2 p <= 0`, `(x0 (+) x0)' p <= 1`, and
/// `L1 p - lambda l_z >= 0`.
pub fn peak_bound(dm: &DataMatrices, x0: &[f64]) -> Result<PeakBound, CertificateError> {
    let l_z = dm.l_z.as_ref().ok_or(CertificateError::MissingOutputs)?;
    ensure_unforced(dm)?;
    if x0.len() != dm.n {
        return Err(CertificateError::DimensionMismatch(format!(
            "x0 has length {}, expected {}",
            x0.len(),
            dm.n
        )));
    }
    if l_z.iter().all(|&v| v == 0.0) {
        return Err(CertificateError::AllOutputsZero);
    }
    let k = packed_len(dm.n);
    // variables: p (free), lambda (>= 0, last)
    let mut cost = vec![0.0; k + 1];
    cost[k] = 1.0;
    let mut prob = LpProblem::maximize(cost);
    prob.set_bounds(k, Some(0.0), None).expect("lambda index");

    let with_lambda = |row: &[f64], lam: f64| -> Vec<f64> {
        let mut c = row.to_vec();
        c.push(lam);
        c
    };
    for i in 0..dm.samples() {
        prob.add_row(with_lambda(dm.l1.row(i), 0.0), Relation::Ge, EPS_MARGIN * dm.l[i])
            .expect("row width");
        prob.add_row(with_lambda(dm.l2.row(i), 0.0), Relation::Le, 0.0).expect("row width");
    }
    let x0_row = with_lambda(&oplus(x0, x0)?, 0.0);
    prob.add_row(x0_row, Relation::Le, 1.0).expect("row width");
    let x0_idx = prob.num_rows() - 1;
    for i in 0..dm.samples() {
        prob.add_row(with_lambda(dm.l1.row(i), -l_z[i]), Relation::Ge, 0.0).expect("row width");
    }

    let sol = map_status(
        solve_certificate_lp(&prob, &[x0_idx]),
        "no invariant ellipsoid containing x0 is consistent with these samples",
        "peak program unbounded; outputs may be identically zero on the sampled set",
    )?;
    let values = sol.x.expect("optimal");
    let lambda = values[k];
    if lambda <= 1e-12 {
        return Err(CertificateError::ZeroLambda);
    }
    Ok(PeakBound { p: recover_packed(dm.n, &values[..k]), lambda, bound: (1.0 / lambda).sqrt() })
}

/// Upper bound on the L2 / RMS gain.
#[derive(Debug, Clone)]
pub struct GainBound {
    pub p: Matrix,
    /// Optimal squared gain.
    pub beta: f64,
    /// `sqrt(beta)`, the certified gain.
    pub gamma: f64,
}

/// Learn a gain bound: minimize `beta` subject to `L1 p >= eps l` on
/// nonzero-state samples and `L2 p + l_z - beta l_u <= 0`.
///
/// The trajectory must start at the origin; rows whose state is
/// numerically zero are excluded from the positivity block.
pub fn l2_gain(dm: &DataMatrices) -> Result<GainBound, CertificateError> {
    let l_z = dm.l_z.as_ref().ok_or(CertificateError::MissingOutputs)?;
    let l_u = dm.l_u.as_ref().ok_or(CertificateError::MissingInputs)?;
    let max_l = dm.l.iter().fold(0.0f64, |a, &b| a.max(b));
    if dm.l[0] > 1e-18 * max_l.max(1.0) && dm.l[0].sqrt() > 1e-9 * max_l.sqrt() {
        return Err(CertificateError::NonzeroInitialState);
    }
    if l_u.iter().all(|&v| v == 0.0) {
        return Err(CertificateError::AllInputsZero);
    }

    let k = packed_len(dm.n);
    // variables: p (free), beta (>= 0, last)
    let mut cost = vec![0.0; k + 1];
    cost[k] = 1.0;
    let mut prob = LpProblem::minimize(cost);
    prob.set_bounds(k, Some(0.0), None).expect("beta index");

    for i in 0..dm.samples() {
        // skip the positivity row where the state is numerically zero
        if dm.l[i] >= 1e-12 * max_l {
            let mut row = dm.l1.row(i).to_vec();
            row.push(0.0);
            prob.add_row(row, Relation::Ge, EPS_MARGIN * dm.l[i]).expect("row width");
        }
    }
    for i in 0..dm.samples() {
        let mut row = dm.l2.row(i).to_vec();
        row.push(-l_u[i]);
        prob.add_row(row, Relation::Le, -l_z[i]).expect("row width");
    }

    let sol = map_status(
        solve_certificate_lp(&prob, &[]),
        "no quadratic storage function matches these input/output samples",
        "gain program unbounded; inputs may be identically zero on the sampled set",
    )?;
    let values = sol.x.expect("optimal");
    let beta = values[k].max(0.0);
    Ok(GainBound { p: recover_packed(dm.n, &values[..k]), beta, gamma: beta.sqrt() })
}

/// Gain bounds for a family of horizons of one trajectory, evaluated
/// independently (and concurrently when the `parallel` feature is on).
pub fn l2_gain_sweep(
    traj: &Trajectory,
    horizons: &[f64],
    scheme: DiffScheme,
) -> Vec<(f64, Result<GainBound, CertificateError>)> {
    let results = exec::map_indexed(horizons.len(), |idx| {
        let t = horizons[idx];
        traj.truncate(t)
            .map_err(|e| CertificateError::DimensionMismatch(e.to_string()))
            .and_then(|cut| {
                let diff = differentiate(&cut, scheme)
                    .map_err(|e| CertificateError::DimensionMismatch(e.to_string()))?;
                l2_gain(&build_data_matrices(&diff, None)?)
            })
    });
    horizons.iter().copied().zip(results).collect()
}

// ---------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------

/// Which certificate a validation run checks, with the scalars the
/// check needs.
#[derive(Debug, Clone, Copy)]
pub enum CertificateKind {
    Lyapunov,
    Energy,
    Peak { bound: f64 },
    Gain { beta: f64 },
}

/// Sample-wise audit of a certificate against (fresh) data. Violations
/// are reported, never raised as errors.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub samples: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub vdot_max: f64,
    pub violations: usize,
    pub violation_fraction: f64,
    /// Whether `V` strictly decreases along consecutive samples
    /// (reported for the Lyapunov and peak kinds).
    pub v_monotone_decreasing: Option<bool>,
    /// Largest `|z(i)|` seen (reported when outputs are present).
    pub max_output_norm: Option<f64>,
}

/// Evaluate a certificate's defining inequalities on a trajectory.
pub fn validate_certificate(
    p: &Matrix,
    fresh: &DiffTrajectory,
    kind: CertificateKind,
) -> Result<ValidationReport, CertificateError> {
    if !p.is_square() || p.rows() != fresh.state_dim() {
        return Err(CertificateError::DimensionMismatch(format!(
            "P is {}x{}, trajectory has state dimension {}",
            p.rows(),
            p.cols(),
            fresh.state_dim()
        )));
    }
    match kind {
        CertificateKind::Energy | CertificateKind::Peak { .. } => {
            if fresh.outputs.is_none() {
                return Err(CertificateError::MissingOutputs);
            }
        }
        CertificateKind::Gain { .. } => {
            if fresh.outputs.is_none() {
                return Err(CertificateError::MissingOutputs);
            }
            if fresh.inputs.is_none() {
                return Err(CertificateError::MissingInputs);
            }
        }
        CertificateKind::Lyapunov => {}
    }

    let rows = fresh.samples();
    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    let mut vdot_max = f64::NEG_INFINITY;
    let mut violations = 0usize;
    let mut max_z = fresh.outputs.as_ref().map(|_| 0.0f64);
    let mut v_prev: Option<f64> = None;
    let mut monotone = true;

    for i in 0..rows {
        let x = fresh.states.row(i);
        let dx = fresh.derivs.row(i);
        let px = p.matvec(x);
        let v = dot(&px, x);
        let vdot = 2.0 * dot(&px, dx);
        v_min = v_min.min(v);
        v_max = v_max.max(v);
        vdot_max = vdot_max.max(vdot);
        if let Some(prev) = v_prev {
            if v >= prev {
                monotone = false;
            }
        }
        v_prev = Some(v);

        let x_norm2 = dot(x, x);
        let z_norm2 = fresh.outputs.as_ref().map(|z| dot(z.row(i), z.row(i))).unwrap_or(0.0);
        if let Some(mz) = max_z.as_mut() {
            *mz = mz.max(z_norm2.sqrt());
        }
        let tol = 1e-7 * (1.0 + x_norm2);
        let violated = match kind {
            CertificateKind::Lyapunov => {
                (x_norm2 > 1e-14 && v <= 0.0) || (x_norm2 > 1e-14 && vdot >= tol)
            }
            CertificateKind::Energy => vdot + z_norm2 > 1e-7 * (1.0 + z_norm2),
            CertificateKind::Peak { bound } => {
                let invariance_broken = vdot > tol;
                let peak_broken = v <= 1.0 + 1e-6 && z_norm2.sqrt() > bound * (1.0 + 1e-3);
                invariance_broken || peak_broken
            }
            CertificateKind::Gain { beta } => {
                let u_norm2 =
                    fresh.inputs.as_ref().map(|u| dot(u.row(i), u.row(i))).unwrap_or(0.0);
                vdot + z_norm2 - beta * u_norm2 > 1e-7 * (1.0 + z_norm2 + beta * u_norm2)
            }
        };
        if violated {
            violations += 1;
        }
    }

    let monotone_field = match kind {
        CertificateKind::Lyapunov | CertificateKind::Peak { .. } => Some(monotone && rows > 1),
        _ => None,
    };

    Ok(ValidationReport {
        samples: rows,
        v_min,
        v_max,
        vdot_max,
        violations,
        violation_fraction: violations as f64 / rows.max(1) as f64,
        v_monotone_decreasing: monotone_field,
        max_output_norm: max_z,
    })
}

/// Re-check a certificate's sample rows under the stated margins;
/// used by tests and by callers wanting a hard guarantee.
pub fn lyapunov_rows_hold(
    dm: &DataMatrices,
    p: &Matrix,
    c1: f64,
    c2: f64,
    slack: f64,
) -> Result<bool, CertificateError> {
    let packed = crate::linalg::sym_pack(p)?;
    for i in 0..dm.samples() {
        let pos = dot(dm.l1.row(i), packed.data()) - c1 * dm.l[i];
        let dec = -dot(dm.l2.row(i), packed.data()) - c2 * dm.l[i];
        if pos < -slack || dec < -slack {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{quad_form, sym_pack};
    use crate::trajectory::{
        simulate, DiffScheme, InputSignal, IntegrationMethod, LtiModel,
    };

    fn damped_oscillator() -> LtiModel {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, -3.0]]).unwrap();
        LtiModel::unforced(a).unwrap()
    }

    fn energy_example_model() -> LtiModel {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-4.0, -2.0]]).unwrap();
        let c = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        LtiModel::autonomous_with_output(a, c).unwrap()
    }

    fn diff_of(model: &LtiModel, x0: &[f64], t: f64, dt: f64) -> DiffTrajectory {
        let traj = simulate(model, x0, &InputSignal::Zero, t, dt, IntegrationMethod::ExactZoh).unwrap();
        differentiate(&traj, DiffScheme::Forward).unwrap()
    }

    #[test]
    fn data_matrices_match_three_point_selection() {
        let diff = diff_of(&damped_oscillator(), &[2.0, 2.0], 1.0, 0.01);
        let picked = diff.select(&[0, 50, 100]).unwrap();
        let dm = build_data_matrices(&picked, Some(&Matrix::identity(2))).unwrap();
        assert_eq!(dm.l1.row(0), &[4.0, 4.0, 8.0]);
        let l_q = dm.l_q.as_ref().unwrap();
        // with Q = I the weighted norms coincide with the plain ones
        assert_eq!(l_q.as_slice(), dm.l.as_slice());
        // |x(t)|^2 at t = 0, 0.5, 1 from the eigendecomposition of A:
        // x(t) = 3.2360680 e^(-0.3819661 t) [1, -0.3819661]
        //      - 1.2360680 e^(-2.6180339 t) [1, -2.6180339]
        let expected = [8.0, 5.4955, 4.8580];
        for (got, want) in l_q.iter().zip(&expected) {
            assert!((got - want).abs() < 2e-3, "l_Q {got} vs {want}");
        }
    }

    #[test]
    fn data_matrices_single_sample() {
        let states = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let derivs = Matrix::zeros(1, 2);
        let diff = DiffTrajectory::new(0.1, states, derivs, None, None).unwrap();
        let dm = build_data_matrices(&diff, None).unwrap();
        assert_eq!(dm.l1.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(dm.l2.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(dm.l, vec![1.0]);
        assert!(dm.l_z.is_none() && dm.l_u.is_none() && dm.l_q.is_none());
    }

    #[test]
    fn data_matrix_rows_are_oplus_products() {
        let diff = diff_of(&damped_oscillator(), &[1.0, -2.0], 0.5, 0.05);
        let dm = build_data_matrices(&diff, None).unwrap();
        for i in 0..dm.samples() {
            let x = diff.states.row(i);
            assert_eq!(dm.l1.row(i), oplus(x, x).unwrap().as_slice());
        }
    }

    #[test]
    fn rejects_indefinite_q() {
        let diff = diff_of(&damped_oscillator(), &[2.0, 2.0], 0.5, 0.05);
        let q = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            build_data_matrices(&diff, Some(&q)),
            Err(CertificateError::QNotPositiveDefinite)
        ));
    }

    #[test]
    fn learns_lyapunov_for_stable_system() {
        let diff = diff_of(&damped_oscillator(), &[2.0, 2.0], 1.0, 0.01);
        let dm = build_data_matrices(&diff, None).unwrap();
        let cert = learn_lyapunov(&dm, DEFAULT_MARGIN, DEFAULT_MARGIN).unwrap();
        assert!(is_positive_definite(&cert.p));
        assert!((cert.p.trace() - 2.0).abs() < 1e-9);
        assert!(cert.min_positivity_margin > -1e-7);
        assert!(cert.min_decrease_margin > -1e-7);
        // scaling the certificate and margins together preserves the rows
        assert!(lyapunov_rows_hold(&dm, &cert.p.scale(2.0), 2.0 * cert.c1, 2.0 * cert.c2, 1e-7)
            .unwrap());
    }

    #[test]
    fn unstable_data_is_infeasible() {
        let a = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let model = LtiModel::unforced(a).unwrap();
        let diff = diff_of(&model, &[1.0], 1.0, 0.01);
        let dm = build_data_matrices(&diff, None).unwrap();
        assert!(matches!(
            learn_lyapunov(&dm, DEFAULT_MARGIN, DEFAULT_MARGIN),
            Err(CertificateError::Infeasible(_))
        ));
    }

    #[test]
    fn scalar_lyapunov_normalizes_to_one() {
        let a = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        let model = LtiModel::unforced(a).unwrap();
        let diff = diff_of(&model, &[1.0], 1.0, 0.01);
        let dm = build_data_matrices(&diff, None).unwrap();
        let cert = learn_lyapunov(&dm, DEFAULT_MARGIN, DEFAULT_MARGIN).unwrap();
        assert!((cert.p[(0, 0)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn scalar_lyapunov_equation() {
        // x' = -2x with one sample (x, dx) = (1, -2) and Q = [1]
        let states = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let derivs = Matrix::from_rows(&[vec![-2.0]]).unwrap();
        let diff = DiffTrajectory::new(0.1, states, derivs, None, None).unwrap();
        let p = solve_lyapunov_equation(&diff, &Matrix::identity(1)).unwrap();
        assert!((p[(0, 0)] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_equation_exact_recovery() {
        let model = damped_oscillator();
        let diff = diff_of(&model, &[2.0, 2.0], 1.0, 0.01);
        let picked = diff.select(&[0, 50, 100]).unwrap();
        let p = solve_lyapunov_equation(&picked, &Matrix::identity(2)).unwrap();
        let expected = Matrix::from_rows(&[vec![1.8333, 0.5], vec![0.5, 0.3333]]).unwrap();
        assert!(p.sub(&expected).max_abs() < 2e-2, "{p:?}");

        // exact derivatives pin it to the true solution of PA + A'P = -I
        let exact = picked.with_exact_derivatives(&model).unwrap();
        let p_exact = solve_lyapunov_equation(&exact, &Matrix::identity(2)).unwrap();
        let resid = p_exact
            .matmul(model.a())
            .add(&model.a().transpose().matmul(&p_exact))
            .add(&Matrix::identity(2));
        assert!(resid.max_abs() < 1e-9, "residual {}", resid.max_abs());
    }

    #[test]
    fn lyapunov_equation_on_eigenvector_ray_is_rank_deficient() {
        let a = Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -2.0]]).unwrap();
        let model = LtiModel::unforced(a).unwrap();
        let diff = diff_of(&model, &[1.0, 0.0], 1.0, 0.01);
        let picked = diff.select(&[0, 40, 80]).unwrap();
        assert!(matches!(
            solve_lyapunov_equation(&picked, &Matrix::identity(2)),
            Err(CertificateError::RankDeficient)
        ));
    }

    #[test]
    fn energy_bound_scalar_case() {
        // x' = -x, z = x from x0 = 1: exact energy 1/2
        let a = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        let c = Matrix::identity(1);
        let model = LtiModel::autonomous_with_output(a, c).unwrap();
        let diff = diff_of(&model, &[1.0], 6.0, 0.01).with_exact_derivatives(&model).unwrap();
        let dm = build_data_matrices(&diff, None).unwrap();
        let eb = energy_bound(&dm, &[1.0]).unwrap();
        assert!((eb.bound - 0.5).abs() < 1e-6, "bound {}", eb.bound);
        assert!((eb.p[(0, 0)] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn energy_bound_matches_gramian_value() {
        // central differences keep the derivative bias second order, so
        // the learned bound lands within a few percent of x0' W x0 = 3.25
        let model = energy_example_model();
        let traj = simulate(&model, &[2.0, 2.0], &InputSignal::Zero, 5.0, 0.1, IntegrationMethod::ExactZoh)
            .unwrap();
        let diff = differentiate(&traj, DiffScheme::Central).unwrap();
        let dm = build_data_matrices(&diff, None).unwrap();
        let eb = energy_bound(&dm, &[2.0, 2.0]).unwrap();
        assert!((eb.bound - 3.25).abs() < 0.05 * 3.25, "bound {}", eb.bound);
        // forward differences converge to the same value first order
        let fwd = |dt: f64| {
            let traj = simulate(&model, &[2.0, 2.0], &InputSignal::Zero, 5.0, dt, IntegrationMethod::ExactZoh)
                .unwrap();
            let diff = differentiate(&traj, DiffScheme::Forward).unwrap();
            energy_bound(&build_data_matrices(&diff, None).unwrap(), &[2.0, 2.0]).unwrap().bound
        };
        assert!((fwd(0.01) - 3.25).abs() < (fwd(0.05) - 3.25).abs());
    }

    #[test]
    fn energy_bound_zero_output() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-4.0, -2.0]]).unwrap();
        let c = Matrix::zeros(1, 2);
        let model = LtiModel::autonomous_with_output(a, c).unwrap();
        let diff = diff_of(&model, &[2.0, 2.0], 5.0, 0.1);
        let dm = build_data_matrices(&diff, None).unwrap();
        let eb = energy_bound(&dm, &[2.0, 2.0]).unwrap();
        assert!(eb.bound.abs() < 1e-6, "bound {}", eb.bound);
    }

    #[test]
    fn energy_bound_requires_outputs() {
        let diff = diff_of(&damped_oscillator(), &[2.0, 2.0], 1.0, 0.1);
        let dm = build_data_matrices(&diff, None).unwrap();
        assert!(matches!(
            energy_bound(&dm, &[2.0, 2.0]),
            Err(CertificateError::MissingOutputs)
        ));
    }

    #[test]
    fn peak_bound_scalar_case() {
        // x' = -x, z = x, x0 = 1: ellipsoid p = 1, lambda = 1, bound 1
        let a = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        let model = LtiModel::autonomous_with_output(a, Matrix::identity(1)).unwrap();
        let diff = diff_of(&model, &[1.0], 4.0, 0.01).with_exact_derivatives(&model).unwrap();
        let dm = build_data_matrices(&diff, None).unwrap();
        let pb = peak_bound(&dm, &[1.0]).unwrap();
        assert!((pb.p[(0, 0)] - 1.0).abs() < 1e-6);
        assert!((pb.lambda - 1.0).abs() < 1e-6);
        assert!((pb.bound - 1.0).abs() < 1e-6);
    }

    #[test]
    fn peak_bound_rejects_zero_outputs() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-4.0, -2.0]]).unwrap();
        let model = LtiModel::autonomous_with_output(a, Matrix::zeros(1, 2)).unwrap();
        let diff = diff_of(&model, &[3.0, 3.0], 5.0, 0.1);
        let dm = build_data_matrices(&diff, None).unwrap();
        assert!(matches!(peak_bound(&dm, &[3.0, 3.0]), Err(CertificateError::AllOutputsZero)));
    }

    #[test]
    fn gain_static_feedthrough() {
        // x' = -x driven but decoupled, z = 3 u: the gain is exactly 3
        let a = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        let b = Matrix::zeros(1, 1);
        let c = Matrix::zeros(1, 1);
        let d = Matrix::from_rows(&[vec![3.0]]).unwrap();
        let model = LtiModel::new(a, b, c, d).unwrap();
        let traj =
            simulate(&model, &[0.0], &InputSignal::UnitStep, 1.0, 0.01, IntegrationMethod::ExactZoh)
                .unwrap();
        let diff = differentiate(&traj, DiffScheme::Forward).unwrap();
        let dm = build_data_matrices(&diff, None).unwrap();
        let gb = l2_gain(&dm).unwrap();
        assert!((gb.beta - 9.0).abs() < 1e-7);
        assert!((gb.gamma - 3.0).abs() < 1e-7);
    }

    #[test]
    fn gain_rejects_nonzero_start() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, -2.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let c = Matrix::from_rows(&[vec![4.0, 1.0]]).unwrap();
        let model = LtiModel::new(a, b, c, Matrix::zeros(1, 1)).unwrap();
        let traj =
            simulate(&model, &[1.0, 0.0], &InputSignal::UnitStep, 2.0, 0.01, IntegrationMethod::ExactZoh)
                .unwrap();
        let diff = differentiate(&traj, DiffScheme::Forward).unwrap();
        let dm = build_data_matrices(&diff, None).unwrap();
        assert!(matches!(l2_gain(&dm), Err(CertificateError::NonzeroInitialState)));
    }

    #[test]
    fn gain_sweep_is_nondecreasing() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, -2.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let c = Matrix::from_rows(&[vec![4.0, 1.0]]).unwrap();
        let model = LtiModel::new(a, b, c, Matrix::zeros(1, 1)).unwrap();
        let traj =
            simulate(&model, &[0.0, 0.0], &InputSignal::UnitStep, 4.0, 0.01, IntegrationMethod::ExactZoh)
                .unwrap();
        let sweep = l2_gain_sweep(&traj, &[1.0, 2.0, 3.0, 4.0], DiffScheme::Forward);
        let gammas: Vec<f64> = sweep.iter().map(|(_, r)| r.as_ref().unwrap().gamma).collect();
        for w in gammas.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "sweep not monotone: {gammas:?}");
        }
    }

    #[test]
    fn validator_reports_violations_without_failing() {
        // identity certificate against data of a growing system
        let a = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let model = LtiModel::unforced(a).unwrap();
        let diff = diff_of(&model, &[1.0], 1.0, 0.01);
        let report = validate_certificate(&Matrix::identity(1), &diff, CertificateKind::Lyapunov)
            .unwrap();
        assert!(report.violations > 0);
        assert_eq!(report.v_monotone_decreasing, Some(false));
    }

    #[test]
    fn validator_passes_true_lyapunov_certificate() {
        let model = damped_oscillator();
        let diff = diff_of(&model, &[2.0, 2.0], 1.0, 0.01);
        let dm = build_data_matrices(&diff, None).unwrap();
        let cert = learn_lyapunov(&dm, DEFAULT_MARGIN, DEFAULT_MARGIN).unwrap();
        let fresh = diff_of(&model, &[-1.5, 2.5], 2.0, 0.01);
        let report = validate_certificate(&cert.p, &fresh, CertificateKind::Lyapunov).unwrap();
        assert_eq!(report.violations, 0);
        assert_eq!(report.v_monotone_decreasing, Some(true));
        assert!(report.vdot_max < 0.0);
    }

    #[test]
    fn validator_rejects_dimension_mismatch() {
        let diff = diff_of(&damped_oscillator(), &[2.0, 2.0], 1.0, 0.1);
        assert!(matches!(
            validate_certificate(&Matrix::identity(3), &diff, CertificateKind::Lyapunov),
            Err(CertificateError::DimensionMismatch(_))
        ));
    }

    // halving dt roughly halves the gap between the bound learned from
    // finite differences and the one learned from exact derivatives
    #[test]
    fn derivative_substitution_gap_shrinks_linearly() {
        let model = energy_example_model();
        let gap = |dt: f64| {
            let traj = simulate(&model, &[2.0, 2.0], &InputSignal::Zero, 5.0, dt, IntegrationMethod::ExactZoh)
                .unwrap();
            let diff = differentiate(&traj, DiffScheme::Forward).unwrap();
            let fd = energy_bound(&build_data_matrices(&diff, None).unwrap(), &[2.0, 2.0])
                .unwrap()
                .bound;
            let exact = diff.with_exact_derivatives(&model).unwrap();
            let ex = energy_bound(&build_data_matrices(&exact, None).unwrap(), &[2.0, 2.0])
                .unwrap()
                .bound;
            (fd - ex).abs()
        };
        let coarse = gap(0.1);
        let fine = gap(0.05);
        let ratio = coarse / fine;
        assert!((1.6..=2.4).contains(&ratio), "gap ratio {ratio} (coarse {coarse}, fine {fine})");
    }

    // with exact derivatives the energy LP reproduces the gramian value
    // on random stable systems
    #[test]
    fn energy_bound_tracks_gramian_on_random_systems() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let n = rng.random_range(1..=3);
            let mut a = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            for i in 0..n {
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
                a[(i, i)] = -(off + rng.random_range(0.3..1.0));
            }
            let c = Matrix::from_fn(1, n, |_, _| rng.random_range(-1.0..1.0));
            let model = LtiModel::autonomous_with_output(a.clone(), c.clone()).unwrap();
            let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            let traj = simulate(&model, &x0, &InputSignal::Zero, 8.0, 0.02, IntegrationMethod::ExactZoh)
                .unwrap();
            let diff = differentiate(&traj, DiffScheme::Forward)
                .unwrap()
                .with_exact_derivatives(&model)
                .unwrap();
            let dm = build_data_matrices(&diff, None).unwrap();
            let eb = energy_bound(&dm, &x0).unwrap();
            let w = crate::oracles::observability_gramian(&a, &c).unwrap();
            let exact = dot(&w.matvec(&x0), &x0);
            assert!(
                (eb.bound - exact).abs() <= 0.01 * exact.abs().max(1e-9),
                "bound {} vs gramian value {exact}",
                eb.bound
            );
        }
    }

    #[test]
    fn quad_form_consistency_of_energy_bound() {
        let model = energy_example_model();
        let diff = diff_of(&model, &[2.0, 2.0], 5.0, 0.1);
        let dm = build_data_matrices(&diff, None).unwrap();
        let eb = energy_bound(&dm, &[2.0, 2.0]).unwrap();
        let packed = sym_pack(&eb.p).unwrap();
        let direct = quad_form(&packed, &[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert!((direct - eb.bound).abs() <= 1e-9 * (1.0 + eb.bound.abs()));
    }
}
