//! Dense two-phase simplex for the small linear programs produced by the
//! commitment solvers.
//!
//! Problems are stated over non-negative variables `x` as: maximise `c·x`
//! subject to `A_le·x <= b_le` and `A_eq·x = b_eq`. Internally one slack
//! variable is appended per inequality row, and phase 1 minimises the sum of
//! one artificial variable per row. Pivoting follows Bland's rule (lowest
//! eligible index enters, ratio ties leave by lowest basic index), which
//! rules out cycling; degenerate pivots are allowed.

use serde::Serialize;
use thiserror::Error;

/// Entries smaller than this never serve as pivots or entering columns.
pub const PIVOT_TOL: f64 = 1e-9;

/// Feasibility tolerance: phase-1 residuals above this mean infeasible.
pub const FEAS_TOL: f64 = 1e-7;

/// Hard pivot cap; reaching it is reported as an error, never as an optimum.
pub const MAX_PIVOTS: usize = 1_000_000;

/// Errors from the solver entry points.
#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("pivot limit {0} reached without termination")]
    IterationLimit(usize),
    #[error("invalid seed: {0}")]
    InvalidSeed(String),
}

/// Terminal classification of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Linear program in the form described in the module docs.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub ineq_matrix: Vec<Vec<f64>>,
    pub ineq_rhs: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
}

impl LpProblem {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.ineq_matrix.len() + self.eq_matrix.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if n == 0 {
            return Err(LpError::Malformed("objective is empty".into()));
        }
        if self.ineq_matrix.len() != self.ineq_rhs.len() {
            return Err(LpError::Malformed(format!(
                "{} inequality rows but {} right-hand sides",
                self.ineq_matrix.len(),
                self.ineq_rhs.len()
            )));
        }
        if self.eq_matrix.len() != self.eq_rhs.len() {
            return Err(LpError::Malformed(format!(
                "{} equality rows but {} right-hand sides",
                self.eq_matrix.len(),
                self.eq_rhs.len()
            )));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.objective) || !finite(&self.ineq_rhs) || !finite(&self.eq_rhs) {
            return Err(LpError::Malformed("non-finite coefficient".into()));
        }
        for row in self.ineq_matrix.iter().chain(self.eq_matrix.iter()) {
            if row.len() != n {
                return Err(LpError::Malformed(format!(
                    "constraint row has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            if !finite(row) {
                return Err(LpError::Malformed("non-finite coefficient".into()));
            }
        }
        Ok(())
    }
}

/// Result of a solve; `solution` and `objective_value` are present iff
/// `status` is optimal. `pivots` counts simplex pivots across both phases.
#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub solution: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    pub pivots: usize,
}

/// Starting point for a warm-started solve: a basic feasible solution over
/// the standard-form variables (structural variables first, then one slack
/// per inequality row).
#[derive(Debug, Clone)]
pub struct BasicFeasibleSeed {
    pub basis: Vec<usize>,
    pub values: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
    cap: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, j: usize) -> Result<(), LpError> {
        self.pivots += 1;
        if self.pivots > self.cap {
            return Err(LpError::IterationLimit(self.cap));
        }
        let piv = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        self.rows[r][j] = 1.0;
        self.rhs[r] /= piv;
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][j] == 0.0 {
                continue;
            }
            let f = self.rows[i][j];
            for k in 0..self.rows[i].len() {
                self.rows[i][k] -= f * self.rows[r][k];
            }
            self.rows[i][j] = 0.0;
            self.rhs[i] -= f * self.rhs[r];
        }
        self.basis[r] = j;
        Ok(())
    }

    /// Bland leaving row for entering column `j`: minimum ratio, ties by
    /// lowest basic variable index.
    fn leaving_row(&self, j: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows.len() {
            let a = self.rows[i][j];
            if a > PIVOT_TOL {
                let ratio = self.rhs[i] / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|(i, _)| i)
    }

    /// Maximising simplex iterations over the reduced-cost row `rc`.
    /// `allow_unbounded` distinguishes phase 2 (an entering column with no
    /// pivot row proves an improving ray) from phase 1 (where the objective
    /// is bounded and such a column is numerical dust to be skipped).
    fn run(&mut self, rc: &mut [f64], allow_unbounded: bool) -> Result<LpStatus, LpError> {
        'outer: loop {
            for j in 0..rc.len() {
                if rc[j] <= PIVOT_TOL {
                    continue;
                }
                match self.leaving_row(j) {
                    Some(r) => {
                        self.pivot(r, j)?;
                        let f = rc[j];
                        for k in 0..rc.len() {
                            rc[k] -= f * self.rows[r][k];
                        }
                        rc[j] = 0.0;
                        continue 'outer;
                    }
                    None if allow_unbounded => return Ok(LpStatus::Unbounded),
                    None => continue,
                }
            }
            return Ok(LpStatus::Optimal);
        }
    }

    /// Reduced costs `c_j - c_B·B⁻¹·A_j` for a tableau already in basis form.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut rc = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for k in 0..rc.len() {
                    rc[k] -= cb * self.rows[i][k];
                }
            }
        }
        rc
    }

    fn extract(&self, n_struct: usize, objective: &[f64], status: LpStatus) -> LpOutcome {
        if status != LpStatus::Optimal {
            return LpOutcome {
                status,
                solution: None,
                objective_value: None,
                pivots: self.pivots,
            };
        }
        let mut x = vec![0.0; n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n_struct {
                x[b] = self.rhs[i];
            }
        }
        let objective_value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome {
            status: LpStatus::Optimal,
            solution: Some(x),
            objective_value: Some(objective_value),
            pivots: self.pivots,
        }
    }
}

/// Standard-form rows: structural columns, then one slack per inequality
/// row. Returns `(rows, rhs, n_total)`.
fn standard_form(p: &LpProblem) -> (Vec<Vec<f64>>, Vec<f64>, usize) {
    let n = p.n_vars();
    let m_le = p.ineq_matrix.len();
    let n_total = n + m_le;
    let mut rows = Vec::with_capacity(p.n_rows());
    let mut rhs = Vec::with_capacity(p.n_rows());
    for (i, row) in p.ineq_matrix.iter().enumerate() {
        let mut r = vec![0.0; n_total];
        r[..n].copy_from_slice(row);
        r[n + i] = 1.0;
        rows.push(r);
        rhs.push(p.ineq_rhs[i]);
    }
    for (row, &b) in p.eq_matrix.iter().zip(&p.eq_rhs) {
        let mut r = vec![0.0; n_total];
        r[..n].copy_from_slice(row);
        rows.push(r);
        rhs.push(b);
    }
    (rows, rhs, n_total)
}

/// Solves `p` from scratch with the two-phase method.
pub fn solve_lp(p: &LpProblem) -> Result<LpOutcome, LpError> {
    solve_with_cap(p, MAX_PIVOTS)
}

fn solve_with_cap(p: &LpProblem, cap: usize) -> Result<LpOutcome, LpError> {
    p.validate()?;
    let n = p.n_vars();
    let (mut rows, mut rhs, n_total) = standard_form(p);
    let m = rows.len();

    for i in 0..m {
        if rhs[i] < 0.0 {
            for v in rows[i].iter_mut() {
                *v = -*v;
            }
            rhs[i] = -rhs[i];
        }
    }
    for (i, row) in rows.iter_mut().enumerate() {
        row.resize(n_total + m, 0.0);
        row[n_total + i] = 1.0;
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis: (n_total..n_total + m).collect(),
        pivots: 0,
        cap,
    };

    // Phase 1: minimise the artificial sum, written as maximisation with
    // cost -1 per artificial. With the artificial basis, the reduced cost of
    // column j is its column sum.
    if m > 0 {
        let mut rc = vec![0.0; n_total + m];
        for j in 0..n_total {
            rc[j] = t.rows.iter().map(|r| r[j]).sum();
        }
        t.run(&mut rc, false)?;
        let art_sum: f64 = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(&b, _)| b >= n_total)
            .map(|(_, &v)| v)
            .sum();
        if art_sum > FEAS_TOL {
            return Ok(t.extract(n, &p.objective, LpStatus::Infeasible));
        }

        // Pivot leftover zero-valued artificials out of the basis; rows that
        // offer no pivot are redundant and dropped.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= n_total {
                match (0..n_total).find(|&j| t.rows[i][j].abs() > PIVOT_TOL) {
                    Some(j) => t.pivot(i, j)?,
                    None => {
                        t.rows.remove(i);
                        t.rhs.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for row in t.rows.iter_mut() {
            row.truncate(n_total);
        }
    }

    let mut cost = vec![0.0; n_total];
    cost[..n].copy_from_slice(&p.objective);
    let mut rc = t.reduced_costs(&cost);
    let status = t.run(&mut rc, true)?;
    Ok(t.extract(n, &p.objective, status))
}

/// Solves `p` starting from a supplied basic feasible solution, skipping
/// phase 1 entirely.
pub fn solve_lp_seeded(p: &LpProblem, seed: &BasicFeasibleSeed) -> Result<LpOutcome, LpError> {
    p.validate()?;
    let n = p.n_vars();
    let (rows, rhs, n_total) = standard_form(p);
    let m = rows.len();

    if seed.values.len() != n_total {
        return Err(LpError::InvalidSeed(format!(
            "assignment has {} entries, standard form has {n_total} variables",
            seed.values.len()
        )));
    }
    if seed.basis.len() != m {
        return Err(LpError::InvalidSeed(format!(
            "basis has {} entries, problem has {m} rows",
            seed.basis.len()
        )));
    }
    let mut seen = vec![false; n_total];
    for &b in &seed.basis {
        if b >= n_total {
            return Err(LpError::InvalidSeed(format!(
                "basis index {b} out of range"
            )));
        }
        if seen[b] {
            return Err(LpError::InvalidSeed(format!("basis index {b} repeated")));
        }
        seen[b] = true;
    }
    for (j, &v) in seed.values.iter().enumerate() {
        if !v.is_finite() || v < -PIVOT_TOL {
            return Err(LpError::InvalidSeed(format!("variable {j} has value {v}")));
        }
        if !seen[j] && v.abs() > PIVOT_TOL {
            return Err(LpError::InvalidSeed(format!(
                "non-basic variable {j} has non-zero value {v}"
            )));
        }
    }
    for (i, (row, &b)) in rows.iter().zip(&rhs).enumerate() {
        let lhs: f64 = row.iter().zip(&seed.values).map(|(a, v)| a * v).sum();
        if (lhs - b).abs() > 1e-9 {
            return Err(LpError::InvalidSeed(format!(
                "row {i} residual {} exceeds 1e-9",
                lhs - b
            )));
        }
    }

    let mut t = Tableau {
        rows,
        rhs,
        basis: vec![usize::MAX; m],
        pivots: 0,
        cap: MAX_PIVOTS,
    };
    // Bring the tableau into basis form by eliminating one row per basic
    // column; the largest available pivot is used for stability.
    let mut assigned = vec![false; m];
    let mut order: Vec<usize> = seed.basis.clone();
    order.sort_unstable();
    for &j in &order {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            if assigned[i] {
                continue;
            }
            let a = t.rows[i][j].abs();
            if a > PIVOT_TOL && best.map_or(true, |(_, ba)| a > ba) {
                best = Some((i, a));
            }
        }
        let Some((r, _)) = best else {
            return Err(LpError::InvalidSeed(format!(
                "basis column {j} is linearly dependent on the others"
            )));
        };
        t.pivot(r, j)?;
        assigned[r] = true;
    }
    t.pivots = 0;
    for v in t.rhs.iter_mut() {
        if *v < 0.0 {
            if *v < -FEAS_TOL {
                return Err(LpError::InvalidSeed(format!(
                    "seed basis yields negative basic value {v}"
                )));
            }
            *v = 0.0;
        }
    }

    let mut cost = vec![0.0; n_total];
    cost[..n].copy_from_slice(&p.objective);
    let mut rc = t.reduced_costs(&cost);
    let status = t.run(&mut rc, true)?;
    Ok(t.extract(n, &p.objective, status))
}
