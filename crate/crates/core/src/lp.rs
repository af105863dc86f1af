//! Dense two-phase primal simplex for small linear programs.
//!
//! Handles free variables (split into positive and negative parts),
//! optional per-variable bounds, and `<=`/`=`/`>=` rows. Phase 1
//! minimizes the sum of artificial variables to find a feasible basis;
//! phase 2 optimizes the real objective. Dantzig pricing is used until
//! 50 consecutive degenerate pivots, at which point Bland's rule takes
//! over to guarantee termination. Identical inputs always produce the
//! identical pivot sequence and output.

use thiserror::Error;

use crate::linalg::{lu_factor, Matrix};

/// Pivot/entering tolerance.
const PIVOT_TOL: f64 = 1e-9;
/// Ratio below which a pivot counts as degenerate.
const DEGENERATE_EPS: f64 = 1e-11;
/// Consecutive degenerate pivots before engaging Bland's rule.
const BLAND_TRIGGER: usize = 50;
/// Pivots between refactorizations of the tableau from original data.
const REFRESH_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A dense LP over free-by-default variables.
#[derive(Debug, Clone)]
pub struct LpProblem {
    sense: Sense,
    cost: Vec<f64>,
    rows: Vec<LpRow>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimizer in the original variables; present when `Optimal`.
    pub x: Option<Vec<f64>>,
    /// Objective value `cost . x`; present when `Optimal`.
    pub objective: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum LpBuildError {
    #[error("row has {got} coefficients, expected {expected}")]
    RowLength { expected: usize, got: usize },
    #[error("non-finite value in problem data")]
    NonFinite,
    #[error("variable index {0} out of range")]
    BadVariable(usize),
}

/// Per-row feasibility tolerance.
pub fn feas_tol(rhs: f64) -> f64 {
    1e-7 * (1.0 + rhs.abs())
}

impl LpProblem {
    pub fn new(sense: Sense, cost: Vec<f64>) -> Self {
        let v = cost.len();
        Self { sense, cost, rows: Vec::new(), lower: vec![None; v], upper: vec![None; v] }
    }

    pub fn minimize(cost: Vec<f64>) -> Self {
        Self::new(Sense::Minimize, cost)
    }

    pub fn maximize(cost: Vec<f64>) -> Self {
        Self::new(Sense::Maximize, cost)
    }

    pub fn add_row(
        &mut self,
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
    ) -> Result<(), LpBuildError> {
        if coeffs.len() != self.cost.len() {
            return Err(LpBuildError::RowLength { expected: self.cost.len(), got: coeffs.len() });
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LpBuildError::NonFinite);
        }
        self.rows.push(LpRow { coeffs, relation, rhs });
        Ok(())
    }

    pub fn set_bounds(
        &mut self,
        var: usize,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Result<(), LpBuildError> {
        if var >= self.cost.len() {
            return Err(LpBuildError::BadVariable(var));
        }
        self.lower[var] = lower;
        self.upper[var] = upper;
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn lower(&self, var: usize) -> Option<f64> {
        self.lower[var]
    }

    pub fn upper(&self, var: usize) -> Option<f64> {
        self.upper[var]
    }

    /// Worst constraint violation of `x`, measured against the per-row
    /// feasibility tolerance (values <= 0 mean feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
            let gap = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(gap - feas_tol(row.rhs));
        }
        for (j, &v) in x.iter().enumerate() {
            if let Some(l) = self.lower[j] {
                worst = worst.max(l - v - feas_tol(l));
            }
            if let Some(u) = self.upper[j] {
                worst = worst.max(v - u - feas_tol(u));
            }
        }
        worst
    }

    pub fn solve(&self) -> LpSolution {
        solve(self)
    }
}

// ---------------------------------------------------------------------
// standard-form expansion
// ---------------------------------------------------------------------

/// How an original variable maps into standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = y_pos - y_neg
    Split { pos: usize, neg: usize },
    /// x = shift + y
    Shifted { col: usize, shift: f64 },
    /// x = shift - y
    Negated { col: usize, shift: f64 },
}

struct Tableau {
    /// rows * (cols + 1), last column is the rhs
    data: Vec<f64>,
    width: usize,
    rows: usize,
    basis: Vec<usize>,
    row_active: Vec<bool>,
    col_active: Vec<bool>,
    obj: Vec<f64>,
    /// entering threshold, scaled to the current objective magnitude
    rc_tol: f64,
    /// pristine copy of the standard-form data for refactorization
    origin: Vec<f64>,
    /// cost row of the phase currently running (over all columns)
    phase_cost: Vec<f64>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.data[pr * w + pc];
        for c in 0..w {
            self.data[pr * w + c] *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        for r in 0..self.rows {
            if r == pr || !self.row_active[r] {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor == 0.0 {
                continue;
            }
            for c in 0..w {
                let delta = factor * self.data[pr * w + c];
                self.data[r * w + c] -= delta;
            }
            self.data[r * w + pc] = 0.0;
        }
        let factor = self.obj[pc];
        if factor != 0.0 {
            for c in 0..w {
                let delta = factor * self.data[pr * w + c];
                self.obj[c] -= delta;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    fn pick_entering(&self, bland: bool) -> Option<usize> {
        let ncols = self.width - 1;
        if bland {
            (0..ncols).find(|&c| self.col_active[c] && self.obj[c] < -self.rc_tol)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for c in 0..ncols {
                if !self.col_active[c] {
                    continue;
                }
                let rc = self.obj[c];
                if rc < -self.rc_tol && best.is_none_or(|(_, b)| rc < b) {
                    best = Some((c, rc));
                }
            }
            best.map(|(c, _)| c)
        }
    }

    /// Rebuild the tableau and objective row for the current basis from
    /// the pristine standard-form data. Long pivot sequences on nearly
    /// parallel rows accumulate roundoff; a refactorization restores
    /// full accuracy. Returns false when the basis matrix is singular
    /// to working precision (the caller then keeps the current state).
    fn refactor(&mut self) -> bool {
        let n = self.rows;
        if n == 0 {
            self.obj = self.phase_cost.clone();
            return true;
        }
        let w = self.width;
        let basis_matrix =
            Matrix::from_fn(n, n, |i, j| self.origin[i * w + self.basis[j]]);
        let Ok(lu) = lu_factor(&basis_matrix, 0.0) else {
            return false;
        };
        let mut fresh = vec![0.0; n * w];
        let mut col = vec![0.0; n];
        for c in 0..w {
            for (i, slot) in col.iter_mut().enumerate() {
                *slot = self.origin[i * w + c];
            }
            let x = lu.solve(&col);
            for i in 0..n {
                fresh[i * w + c] = x[i];
            }
        }
        // basic columns are unit vectors by construction; tiny negative
        // basic values are roundoff and would poison the ratio test
        for (i, &b) in self.basis.iter().enumerate() {
            for r in 0..n {
                fresh[r * w + b] = if r == i { 1.0 } else { 0.0 };
            }
            let rhs = &mut fresh[i * w + (w - 1)];
            if *rhs < 0.0 && *rhs > -1e-9 {
                *rhs = 0.0;
            }
        }
        self.data = fresh;
        let mut obj = self.phase_cost.clone();
        for i in 0..n {
            let cb = self.phase_cost[self.basis[i]];
            if cb != 0.0 {
                for c in 0..w {
                    let delta = cb * self.data[i * w + c];
                    obj[c] -= delta;
                }
            }
        }
        for &b in &self.basis {
            obj[b] = 0.0;
        }
        self.obj = obj;
        true
    }

    fn ratio_test(&self, pc: usize) -> Option<(usize, f64)> {
        let mut pick: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            if !self.row_active[r] {
                continue;
            }
            let coef = self.at(r, pc);
            if coef <= PIVOT_TOL {
                continue;
            }
            let ratio = (self.rhs(r) / coef).max(0.0);
            match pick {
                None => pick = Some((r, ratio)),
                Some((br, bratio)) => {
                    if ratio < bratio - 1e-12
                        || ((ratio - bratio).abs() <= 1e-12 && self.basis[r] < self.basis[br])
                    {
                        pick = Some((r, ratio));
                    }
                }
            }
        }
        pick
    }
}

enum PhaseOutcome {
    Converged,
    Unbounded,
    IterationLimit,
}

fn run_phase(
    t: &mut Tableau,
    iterations: &mut usize,
    cap: usize,
    degenerate_streak: &mut usize,
    stop_below: Option<f64>,
) -> PhaseOutcome {
    let mut pivots_since_refresh = 0usize;
    // a verdict is only final on a freshly refactored tableau
    let mut confirmed = false;
    loop {
        if *iterations >= cap {
            return PhaseOutcome::IterationLimit;
        }
        // phase 1 may stop as soon as its objective hits zero
        if let Some(target) = stop_below {
            if -t.obj[t.width - 1] <= target {
                return PhaseOutcome::Converged;
            }
        }
        let bland = *degenerate_streak >= BLAND_TRIGGER;
        let Some(pc) = t.pick_entering(bland) else {
            if confirmed || !t.refactor() {
                return PhaseOutcome::Converged;
            }
            confirmed = true;
            continue;
        };
        let Some((pr, ratio)) = t.ratio_test(pc) else {
            if confirmed || !t.refactor() {
                return PhaseOutcome::Unbounded;
            }
            confirmed = true;
            continue;
        };
        if pivots_since_refresh >= REFRESH_EVERY {
            pivots_since_refresh = 0;
            if t.refactor() {
                confirmed = true;
                continue;
            }
        }
        if ratio <= DEGENERATE_EPS {
            *degenerate_streak += 1;
        } else {
            *degenerate_streak = 0;
        }
        t.pivot(pr, pc);
        confirmed = false;
        pivots_since_refresh += 1;
        *iterations += 1;
    }
}

/// Solve an LP with the two-phase primal simplex method.
pub fn solve(prob: &LpProblem) -> LpSolution {
    let v = prob.num_vars();

    // crossing bounds are infeasible outright
    for j in 0..v {
        if let (Some(l), Some(u)) = (prob.lower[j], prob.upper[j]) {
            if l > u + feas_tol(u) {
                return LpSolution { status: LpStatus::Infeasible, x: None, objective: None, iterations: 0 };
            }
        }
    }

    // column mapping for every original variable
    let mut var_map = Vec::with_capacity(v);
    let mut ncols = 0usize;
    // extra rows y <= u - l for doubly bounded variables
    let mut extra_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..v {
        match (prob.lower[j], prob.upper[j]) {
            (None, None) => {
                var_map.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
            (Some(l), None) => {
                var_map.push(VarMap::Shifted { col: ncols, shift: l });
                ncols += 1;
            }
            (None, Some(u)) => {
                var_map.push(VarMap::Negated { col: ncols, shift: u });
                ncols += 1;
            }
            (Some(l), Some(u)) => {
                var_map.push(VarMap::Shifted { col: ncols, shift: l });
                extra_rows.push((ncols, u - l));
                ncols += 1;
            }
        }
    }
    let structural = ncols;

    // assemble rows in standard form; relation after rhs normalization
    struct StdRow {
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
    }
    let mut std_rows: Vec<StdRow> = Vec::with_capacity(prob.num_rows() + extra_rows.len());
    for row in &prob.rows {
        let mut coeffs = vec![0.0; structural];
        let mut rhs = row.rhs;
        for (j, &a) in row.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match var_map[j] {
                VarMap::Split { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
                VarMap::Shifted { col, shift } => {
                    coeffs[col] += a;
                    rhs -= a * shift;
                }
                VarMap::Negated { col, shift } => {
                    coeffs[col] -= a;
                    rhs -= a * shift;
                }
            }
        }
        // equilibrate: unit max coefficient per row keeps tiny-magnitude
        // sample rows from starving the pivot tolerance
        let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if scale > 0.0 {
            for c in coeffs.iter_mut() {
                *c /= scale;
            }
            rhs /= scale;
        }
        let mut relation = row.relation;
        if rhs < 0.0 {
            for c in coeffs.iter_mut() {
                *c = -*c;
            }
            rhs = -rhs;
            relation = match relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        std_rows.push(StdRow { coeffs, relation, rhs });
    }
    for &(col, span) in &extra_rows {
        let mut coeffs = vec![0.0; structural];
        coeffs[col] = 1.0;
        // span >= 0 was checked above
        std_rows.push(StdRow { coeffs, relation: Relation::Le, rhs: span });
    }

    let nrows = std_rows.len();
    let n_slack = std_rows
        .iter()
        .filter(|r| matches!(r.relation, Relation::Le | Relation::Ge))
        .count();
    let n_art = std_rows
        .iter()
        .filter(|r| matches!(r.relation, Relation::Ge | Relation::Eq))
        .count();
    let total_cols = structural + n_slack + n_art;
    let width = total_cols + 1;

    let mut t = Tableau {
        data: vec![0.0; nrows * width],
        width,
        rows: nrows,
        basis: vec![usize::MAX; nrows],
        row_active: vec![true; nrows],
        col_active: vec![true; total_cols],
        obj: vec![0.0; width],
        rc_tol: PIVOT_TOL,
        origin: Vec::new(),
        phase_cost: vec![0.0; width],
    };

    let mut slack_cursor = structural;
    let mut art_cursor = structural + n_slack;
    let art_start = art_cursor;
    for (r, row) in std_rows.iter().enumerate() {
        let base = r * width;
        t.data[base..base + structural].copy_from_slice(&row.coeffs);
        t.data[base + width - 1] = row.rhs;
        match row.relation {
            Relation::Le => {
                t.data[base + slack_cursor] = 1.0;
                t.basis[r] = slack_cursor;
                slack_cursor += 1;
            }
            Relation::Ge => {
                t.data[base + slack_cursor] = -1.0;
                slack_cursor += 1;
                t.data[base + art_cursor] = 1.0;
                t.basis[r] = art_cursor;
                art_cursor += 1;
            }
            Relation::Eq => {
                t.data[base + art_cursor] = 1.0;
                t.basis[r] = art_cursor;
                art_cursor += 1;
            }
        }
    }

    t.origin = t.data.clone();

    let cap = (50 * (v + prob.num_rows())).max(1000);
    let mut iterations = 0usize;
    let mut degenerate_streak = 0usize;

    // ---------------- phase 1: drive artificials to zero ----------------
    if n_art > 0 {
        // obj = sum of artificials, reduced against the artificial basis
        for c in art_start..total_cols {
            t.obj[c] = 1.0;
            t.phase_cost[c] = 1.0;
        }
        for r in 0..nrows {
            if t.basis[r] >= art_start {
                for c in 0..width {
                    let delta = t.at(r, c);
                    t.obj[c] -= delta;
                }
            }
        }
        let max_rhs = std_rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        let done_tol = 1e-9 * (1.0 + max_rhs);
        let obj_scale = t.obj.iter().take(total_cols).fold(0.0f64, |m, c| m.max(c.abs()));
        t.rc_tol = PIVOT_TOL * (1.0 + obj_scale);
        match run_phase(&mut t, &mut iterations, cap, &mut degenerate_streak, Some(done_tol)) {
            PhaseOutcome::Converged => {}
            PhaseOutcome::IterationLimit => {
                return LpSolution { status: LpStatus::IterationLimit, x: None, objective: None, iterations };
            }
            PhaseOutcome::Unbounded => {
                // the phase-1 objective is bounded below by zero, so this
                // branch is numerical breakdown rather than a real ray
                return LpSolution { status: LpStatus::IterationLimit, x: None, objective: None, iterations };
            }
        }
        let phase1_value = -t.obj[width - 1];
        if phase1_value > 1e-7 * (1.0 + max_rhs) {
            return LpSolution { status: LpStatus::Infeasible, x: None, objective: None, iterations };
        }
        // remove artificials still sitting in the basis at level zero
        for r in 0..nrows {
            if t.basis[r] < art_start {
                continue;
            }
            let mut replaced = false;
            for c in 0..art_start {
                if t.col_active[c] && t.at(r, c).abs() > PIVOT_TOL {
                    t.pivot(r, c);
                    replaced = true;
                    break;
                }
            }
            if !replaced {
                // redundant constraint row
                t.row_active[r] = false;
            }
        }
        for c in art_start..total_cols {
            t.col_active[c] = false;
        }
    }

    // ---------------- phase 2: optimize the real objective ----------------
    let mut expanded_cost = vec![0.0; width];
    let sign = match prob.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    for (j, &c) in prob.cost.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        match var_map[j] {
            VarMap::Split { pos, neg } => {
                expanded_cost[pos] += sign * c;
                expanded_cost[neg] -= sign * c;
            }
            VarMap::Shifted { col, .. } => {
                expanded_cost[col] += sign * c;
            }
            VarMap::Negated { col, .. } => {
                expanded_cost[col] -= sign * c;
            }
        }
    }
    let cost_scale = expanded_cost.iter().take(total_cols).fold(0.0f64, |m, c| m.max(c.abs()));
    t.rc_tol = PIVOT_TOL * (1.0 + cost_scale);
    t.phase_cost = expanded_cost.clone();
    if !t.refactor() {
        // singular basis refresh: reduce the cost row against the
        // current tableau instead
        t.obj = expanded_cost;
        for r in 0..nrows {
            if !t.row_active[r] {
                continue;
            }
            let b = t.basis[r];
            let cb = t.obj[b];
            if cb != 0.0 {
                for c in 0..width {
                    let delta = cb * t.at(r, c);
                    t.obj[c] -= delta;
                }
                t.obj[b] = 0.0;
            }
        }
    }

    degenerate_streak = 0;
    match run_phase(&mut t, &mut iterations, cap, &mut degenerate_streak, None) {
        PhaseOutcome::Converged => {}
        PhaseOutcome::IterationLimit => {
            return LpSolution { status: LpStatus::IterationLimit, x: None, objective: None, iterations };
        }
        PhaseOutcome::Unbounded => {
            return LpSolution { status: LpStatus::Unbounded, x: None, objective: None, iterations };
        }
    }

    // recover the original variables
    let mut y = vec![0.0; total_cols];
    for r in 0..nrows {
        if t.row_active[r] {
            y[t.basis[r]] = t.rhs(r);
        }
    }
    let x: Vec<f64> = var_map
        .iter()
        .map(|m| match *m {
            VarMap::Split { pos, neg } => y[pos] - y[neg],
            VarMap::Shifted { col, shift } => shift + y[col],
            VarMap::Negated { col, shift } => shift - y[col],
        })
        .collect();
    let objective: f64 = prob.cost.iter().zip(&x).map(|(c, v)| c * v).sum();

    debug_assert!(
        prob.max_violation(&x) <= 0.0,
        "simplex returned an infeasible optimum (violation {})",
        prob.max_violation(&x)
    );

    LpSolution { status: LpStatus::Optimal, x: Some(x), objective: Some(objective), iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimize_single_bound() {
        let mut p = LpProblem::minimize(vec![1.0]);
        p.add_row(vec![1.0], Relation::Ge, 1.0).unwrap();
        let s = p.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x.unwrap()[0] - 1.0).abs() < 1e-9);
        assert!((s.objective.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn maximize_with_coupling_row() {
        let mut p = LpProblem::maximize(vec![1.0, 1.0]);
        p.add_row(vec![1.0, 0.0], Relation::Le, 2.0).unwrap();
        p.add_row(vec![0.0, 1.0], Relation::Le, 3.0).unwrap();
        p.add_row(vec![1.0, 1.0], Relation::Le, 4.0).unwrap();
        let s = p.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective.unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut p = LpProblem::minimize(vec![0.0]);
        p.add_row(vec![1.0], Relation::Le, -1.0).unwrap();
        p.add_row(vec![1.0], Relation::Ge, 1.0).unwrap();
        assert_eq!(p.solve().status, LpStatus::Infeasible);
    }

    #[test]
    fn free_descent_is_unbounded() {
        let p = LpProblem::minimize(vec![-1.0]);
        assert_eq!(p.solve().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows() {
        let mut p = LpProblem::minimize(vec![1.0, 2.0]);
        p.add_row(vec![1.0, 1.0], Relation::Eq, 3.0).unwrap();
        p.add_row(vec![1.0, -1.0], Relation::Eq, 1.0).unwrap();
        let s = p.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        let x = s.x.unwrap();
        assert!((x[0] - 2.0).abs() < 1e-9);
        assert!((x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_optimum_for_free_variables() {
        // minimize x1 subject to x1 >= -5 expressed as a row
        let mut p = LpProblem::minimize(vec![1.0, 0.0]);
        p.add_row(vec![1.0, 0.0], Relation::Ge, -5.0).unwrap();
        p.add_row(vec![0.0, 1.0], Relation::Eq, 0.0).unwrap();
        let s = p.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x.unwrap()[0] + 5.0).abs() < 1e-9);
    }

    #[test]
    fn variable_bounds_respected() {
        let mut p = LpProblem::maximize(vec![1.0, 1.0]);
        p.set_bounds(0, Some(0.0), Some(2.5)).unwrap();
        p.set_bounds(1, None, Some(1.5)).unwrap();
        p.add_row(vec![1.0, 1.0], Relation::Le, 10.0).unwrap();
        let s = p.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        let x = s.x.unwrap();
        assert!((x[0] - 2.5).abs() < 1e-9);
        assert!((x[1] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn crossed_bounds_infeasible() {
        let mut p = LpProblem::minimize(vec![1.0]);
        p.set_bounds(0, Some(2.0), Some(1.0)).unwrap();
        assert_eq!(p.solve().status, LpStatus::Infeasible);
    }

    #[test]
    fn lower_bounded_variable_at_negative_level() {
        let mut p = LpProblem::minimize(vec![1.0]);
        p.set_bounds(0, Some(-3.0), None).unwrap();
        let s = p.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x.unwrap()[0] + 3.0).abs() < 1e-9);
    }

    #[test]
    fn solutions_satisfy_rows_within_tolerance() {
        let mut p = LpProblem::minimize(vec![1.0, -2.0, 0.5]);
        p.add_row(vec![1.0, 1.0, 1.0], Relation::Le, 6.0).unwrap();
        p.add_row(vec![1.0, -1.0, 2.0], Relation::Ge, -4.0).unwrap();
        p.add_row(vec![0.0, 1.0, -1.0], Relation::Le, 3.0).unwrap();
        p.set_bounds(2, Some(-1.0), Some(4.0)).unwrap();
        p.set_bounds(0, Some(-5.0), Some(5.0)).unwrap();
        p.set_bounds(1, Some(-5.0), Some(5.0)).unwrap();
        let s = p.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        let x = s.x.unwrap();
        assert!(p.max_violation(&x) <= 0.0);
        let obj: f64 = p.cost().iter().zip(&x).map(|(c, v)| c * v).sum();
        assert!((obj - s.objective.unwrap()).abs() <= 1e-9 * (1.0 + obj.abs()));
    }

    #[test]
    fn deterministic_replay() {
        let build = || {
            let mut p = LpProblem::maximize(vec![3.0, 1.0, 2.0]);
            p.add_row(vec![1.0, 1.0, 3.0], Relation::Le, 30.0).unwrap();
            p.add_row(vec![2.0, 2.0, 5.0], Relation::Le, 24.0).unwrap();
            p.add_row(vec![4.0, 1.0, 2.0], Relation::Le, 36.0).unwrap();
            p.set_bounds(0, Some(0.0), None).unwrap();
            p.set_bounds(1, Some(0.0), None).unwrap();
            p.set_bounds(2, Some(0.0), None).unwrap();
            p
        };
        let a = build().solve();
        let b = build().solve();
        assert_eq!(a.status, b.status);
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.x.unwrap(), b.x.unwrap());
        // classic CLRS instance, optimum 28
        assert!((a.objective.unwrap() - 28.0).abs() < 1e-9);
    }

    #[test]
    fn pure_feasibility_problem() {
        // minimize 0 with a feasible system returns some feasible point
        let mut p = LpProblem::minimize(vec![0.0, 0.0]);
        p.add_row(vec![1.0, 1.0], Relation::Ge, 2.0).unwrap();
        p.add_row(vec![1.0, -1.0], Relation::Le, 0.5).unwrap();
        let s = p.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(p.max_violation(&s.x.unwrap()) <= 0.0);
    }

    #[test]
    fn degenerate_cycling_guard() {
        // classic Beale cycling example; Bland fallback must terminate it
        let mut p = LpProblem::minimize(vec![-0.75, 150.0, -0.02, 6.0]);
        p.add_row(vec![0.25, -60.0, -1.0 / 25.0, 9.0], Relation::Le, 0.0).unwrap();
        p.add_row(vec![0.5, -90.0, -1.0 / 50.0, 3.0], Relation::Le, 0.0).unwrap();
        p.add_row(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0).unwrap();
        for j in 0..4 {
            p.set_bounds(j, Some(0.0), None).unwrap();
        }
        let s = p.solve();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective.unwrap() + 0.05).abs() < 1e-9);
    }
}
