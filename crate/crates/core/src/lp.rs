//! Dense two-phase tableau simplex, plus a cutting-plane
//! driver for constraint families that are only reachable through a
//! separation oracle.
//!
//! Problem sizes in this crate are a few dozen variables and at most a few
//! hundred rows, so a dense tableau is plenty. After the simplex terminates
//! the primal point is recomputed from the final basis with a fresh LU solve,
//! which keeps round-off from many pivots out of the reported values.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Phase-1 residual below which a system counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Reduced-cost threshold for optimality.
pub const OPTIMALITY_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
/// Slack in the ratio test that lets a larger pivot element win a near-tie.
const HARRIS_TOL: f64 = 1e-11;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_AFTER: usize = 50;

/// `min c·x` subject to `A x <= b`, `Aeq x = beq`, `lower <= x <= upper`.
///
/// Variables default to `[0, +inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    le_rows: Vec<(Vec<f64>, f64)>,
    eq_rows: Vec<(Vec<f64>, f64)>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective at `point`; `NaN` unless optimal.
    pub value: f64,
    /// Empty unless optimal.
    pub point: Vec<f64>,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        LpSolution { status, value: f64::NAN, point: Vec::new() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            le_rows: Vec::new(),
            eq_rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    /// A pure feasibility problem in `n` variables.
    pub fn feasibility(n: usize) -> Self {
        LinearProgram::new(vec![0.0; n])
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.le_rows.len() + self.eq_rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        self.objective = objective;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.le_rows.push((coeffs, rhs));
        self
    }

    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.le_rows.push((coeffs.into_iter().map(|a| -a).collect(), -rhs));
        self
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq_rows.push((coeffs, rhs));
        self
    }

    /// Largest constraint or bound violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in &self.le_rows {
            worst = worst.max(dot(a, x) - b);
        }
        for (a, b) in &self.eq_rows {
            worst = worst.max((dot(a, x) - b).abs());
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        for (a, b) in self.le_rows.iter().chain(&self.eq_rows) {
            if a.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: a.len() });
            }
            if !b.is_finite() || a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain("non-finite constraint data".to_string()));
            }
        }
        if self.objective.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("non-finite objective".to_string()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::Domain(alloc::format!("variable {j} has empty bounds")));
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How an original variable is expressed through nonnegative columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lower + z`
    Shifted { col: usize, lower: f64 },
    /// `x = upper - z`
    Reflected { col: usize, upper: f64 },
    /// `x = z+ - z-`
    Split { pos: usize, neg: usize },
}

/// `min c·z` s.t. `A z = b`, `z >= 0`, `b >= 0`.
struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// Column that can start in the basis for each row (a `+1` slack), if any.
    natural_basis: Vec<Option<usize>>,
    maps: Vec<VarMap>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.num_vars();
        let mut maps = Vec::with_capacity(n);
        let mut ncols = 0;
        for j in 0..n {
            let (lo, hi) = (lp.lower[j], lp.upper[j]);
            let map = if lo.is_finite() {
                VarMap::Shifted { col: ncols, lower: lo }
            } else if hi.is_finite() {
                VarMap::Reflected { col: ncols, upper: hi }
            } else {
                ncols += 1;
                VarMap::Split { pos: ncols - 1, neg: ncols }
            };
            ncols += 1;
            maps.push(map);
        }

        // Rewrite a row over x as a row over z plus a constant.
        let translate = |coeffs: &[f64]| -> (Vec<f64>, f64) {
            let mut row = vec![0.0; ncols];
            let mut constant = 0.0;
            for (j, &a) in coeffs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                match maps[j] {
                    VarMap::Shifted { col, lower } => {
                        row[col] += a;
                        constant += a * lower;
                    }
                    VarMap::Reflected { col, upper } => {
                        row[col] -= a;
                        constant += a * upper;
                    }
                    VarMap::Split { pos, neg } => {
                        row[pos] += a;
                        row[neg] -= a;
                    }
                }
            }
            (row, constant)
        };

        let mut le: Vec<(Vec<f64>, f64)> = Vec::new();
        for (coeffs, rhs) in &lp.le_rows {
            let (row, k) = translate(coeffs);
            le.push((row, rhs - k));
        }
        // Finite upper bounds on shifted variables become rows.
        for j in 0..n {
            if let VarMap::Shifted { col, lower } = maps[j] {
                if lp.upper[j].is_finite() {
                    let mut row = vec![0.0; ncols];
                    row[col] = 1.0;
                    le.push((row, lp.upper[j] - lower));
                }
            }
        }
        let mut eq: Vec<(Vec<f64>, f64)> = Vec::new();
        for (coeffs, rhs) in &lp.eq_rows {
            let (row, k) = translate(coeffs);
            eq.push((row, rhs - k));
        }

        let nslack = le.len();
        let total = ncols + nslack;
        let mut a = Vec::with_capacity(le.len() + eq.len());
        let mut b = Vec::with_capacity(le.len() + eq.len());
        let mut natural_basis = Vec::with_capacity(le.len() + eq.len());
        for (s, (row, rhs)) in le.into_iter().enumerate() {
            let mut full = row;
            full.resize(total, 0.0);
            full[ncols + s] = 1.0;
            if rhs < 0.0 {
                full.iter_mut().for_each(|x| *x = -*x);
                a.push(full);
                b.push(-rhs);
                natural_basis.push(None);
            } else {
                a.push(full);
                b.push(rhs);
                natural_basis.push(Some(ncols + s));
            }
        }
        for (row, rhs) in eq {
            let mut full = row;
            full.resize(total, 0.0);
            if rhs < 0.0 {
                full.iter_mut().for_each(|x| *x = -*x);
                a.push(full);
                b.push(-rhs);
            } else {
                a.push(full);
                b.push(rhs);
            }
            natural_basis.push(None);
        }

        // The constant part of the objective does not affect the argmin.
        let (mut c, _) = translate(&lp.objective);
        c.resize(total, 0.0);
        StandardForm { a, b, c, natural_basis, maps }
    }

    fn recover(&self, z: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|m| match *m {
                VarMap::Shifted { col, lower } => lower + z[col],
                VarMap::Reflected { col, upper } => upper - z[col],
                VarMap::Split { pos, neg } => z[pos] - z[neg],
            })
            .collect()
    }
}

/// Dense tableau over `ncols` structural columns followed by artificials.
struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
    iterations: usize,
    cap: usize,
}

enum PivotOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    /// Minimizes `cost` over the columns for which `allowed` is true.
    ///
    /// Dantzig pricing with a two-pass (Harris) ratio test that prefers large
    /// pivot elements among near-ties; after a run of degenerate pivots it
    /// falls back to Bland's rule, which cannot cycle.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<PivotOutcome> {
        let width = self.rows.first().map_or(0, |r| r.len());
        let mut degenerate_run = 0;
        loop {
            let bland = degenerate_run >= BLAND_AFTER;
            let mut in_basis = vec![false; width];
            for &bv in &self.basis {
                if bv < width {
                    in_basis[bv] = true;
                }
            }
            // Reduced costs c_j - c_B B^{-1} A_j, computed from the tableau.
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..width {
                if !allowed(j) || in_basis[j] {
                    continue;
                }
                let mut rc = cost[j];
                for (r, &bv) in self.basis.iter().enumerate() {
                    rc -= cost[bv] * self.rows[r][j];
                }
                if rc < -OPTIMALITY_TOL {
                    if bland {
                        entering = Some((j, rc));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| rc < best) {
                        entering = Some((j, rc));
                    }
                }
            }
            let Some((col, _)) = entering else {
                return Ok(PivotOutcome::Optimal);
            };

            let candidates = (0..self.rows.len()).filter(|&r| self.rows[r][col] > PIVOT_TOL);
            let row = if bland {
                candidates.min_by(|&a, &b| {
                    let ra = self.rhs[a].max(0.0) / self.rows[a][col];
                    let rb = self.rhs[b].max(0.0) / self.rows[b][col];
                    ra.total_cmp(&rb).then(self.basis[a].cmp(&self.basis[b]))
                })
            } else {
                let bound = candidates
                    .clone()
                    .map(|r| (self.rhs[r].max(0.0) + HARRIS_TOL) / self.rows[r][col])
                    .fold(f64::INFINITY, f64::min);
                candidates.filter(|&r| self.rhs[r].max(0.0) / self.rows[r][col] <= bound).max_by(|&a, &b| {
                    self.rows[a][col].total_cmp(&self.rows[b][col]).then(self.basis[b].cmp(&self.basis[a]))
                })
            };
            let Some(row) = row else {
                return Ok(PivotOutcome::Unbounded);
            };
            if self.rhs[row] <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(row, col)?;
        }
    }

    fn pivot(&mut self, row: usize, col: usize) -> Result<()> {
        self.iterations += 1;
        if self.iterations > self.cap {
            return Err(Error::NumericalFailure(alloc::format!(
                "simplex iteration cap {} reached",
                self.cap
            )));
        }
        let p = self.rows[row][col];
        let inv = 1.0 / p;
        for x in self.rows[row].iter_mut() {
            *x *= inv;
        }
        self.rhs[row] *= inv;
        self.rows[row][col] = 1.0;
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row];
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let f = self.rows[r][col];
            if f == 0.0 {
                continue;
            }
            for (x, &pr) in self.rows[r].iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            self.rows[r][col] = 0.0;
            self.rhs[r] -= f * pivot_rhs;
            if self.rhs[r] < 0.0 && self.rhs[r] > -1e-12 {
                self.rhs[r] = 0.0;
            }
        }
        self.basis[row] = col;
        Ok(())
    }
}

enum Phase1 {
    Infeasible,
    Feasible(Tableau),
}

fn phase_one(sf: &StandardForm) -> Result<Phase1> {
    let m = sf.a.len();
    let ncols = sf.c.len();
    let artificial_rows: Vec<usize> = (0..m).filter(|&r| sf.natural_basis[r].is_none()).collect();
    let width = ncols + artificial_rows.len();
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = ncols;
    for r in 0..m {
        let mut row = sf.a[r].clone();
        row.resize(width, 0.0);
        match sf.natural_basis[r] {
            Some(col) => basis.push(col),
            None => {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }
    let cap = 50 * (width + m).max(1);
    let mut tab = Tableau { rows, rhs: sf.b.clone(), basis, ncols, iterations: 0, cap };
    if artificial_rows.is_empty() {
        return Ok(Phase1::Feasible(tab));
    }

    let mut cost = vec![0.0; width];
    cost[ncols..].iter_mut().for_each(|c| *c = 1.0);
    tab.optimize(&cost, &|_| true)?;
    let residual: f64 = tab.basis.iter().zip(&tab.rhs).filter(|(&bv, _)| bv >= ncols).map(|(_, &v)| v).sum();
    let scale = 1.0 + sf.b.iter().fold(0.0f64, |m, &x| m.max(x));
    if residual > FEASIBILITY_TOL * scale {
        return Ok(Phase1::Infeasible);
    }

    // Drive remaining (zero-valued) artificials out of the basis; rows where
    // that is impossible are redundant and get dropped.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= ncols {
            let col = (0..ncols)
                .filter(|&j| tab.rows[r][j].abs() > 1e-9 && !tab.basis.contains(&j))
                .max_by(|&a, &b| tab.rows[r][a].abs().total_cmp(&tab.rows[r][b].abs()).then(b.cmp(&a)));
            match col {
                Some(j) => {
                    // the artificial is zero up to the phase-1 tolerance
                    tab.rhs[r] = 0.0;
                    tab.pivot(r, j)?;
                    r += 1;
                }
                None => {
                    tab.rows.remove(r);
                    tab.rhs.remove(r);
                    tab.basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }
    for row in tab.rows.iter_mut() {
        row.truncate(ncols);
    }
    Ok(Phase1::Feasible(tab))
}

/// Solves `B x_B = b` for the final basis with partial-pivot elimination over
/// the original standard-form data.
fn refine_basic_solution(sf: &StandardForm, tab: &Tableau) -> Option<Vec<f64>> {
    let basis = &tab.basis;
    let k = basis.len();
    // Phase 1 may have dropped redundant rows, so the system over the basic
    // columns can be overdetermined but is consistent; eliminate on a
    // greedily chosen square subset.
    let m = sf.a.len();
    let mut mat: Vec<Vec<f64>> = (0..m).map(|r| basis.iter().map(|&c| sf.a[r][c]).collect()).collect();
    let mut rhs = sf.b.clone();
    let mut chosen_rows: Vec<usize> = Vec::with_capacity(k);
    let mut used = vec![false; m];
    for col in 0..k {
        let mut best = None;
        let mut best_abs = 1e-10;
        for r in 0..m {
            if !used[r] && mat[r][col].abs() > best_abs {
                best_abs = mat[r][col].abs();
                best = Some(r);
            }
        }
        let pr = best?;
        used[pr] = true;
        chosen_rows.push(pr);
        let pivot = mat[pr][col];
        for r in 0..m {
            if r == pr || mat[r][col] == 0.0 {
                continue;
            }
            let f = mat[r][col] / pivot;
            for c in col..k {
                mat[r][c] -= f * mat[pr][c];
            }
            rhs[r] -= f * rhs[pr];
        }
    }
    let mut z = vec![0.0; sf.c.len()];
    for (col, &pr) in chosen_rows.iter().enumerate() {
        z[basis[col]] = (rhs[pr] / mat[pr][col]).max(0.0);
    }
    Some(z)
}

fn tableau_point(sf: &StandardForm, tab: &Tableau) -> Vec<f64> {
    let mut z = vec![0.0; sf.c.len()];
    for (r, &bv) in tab.basis.iter().enumerate() {
        if bv < z.len() {
            z[bv] = tab.rhs[r].max(0.0);
        }
    }
    z
}

/// Solves `lp` to optimality, or reports infeasibility or unboundedness.
///
/// Deterministic: every pivot choice is fixed by the data.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let sf = StandardForm::build(lp);
    let mut tab = match phase_one(&sf)? {
        Phase1::Infeasible => return Ok(LpSolution::without_point(LpStatus::Infeasible)),
        Phase1::Feasible(t) => t,
    };
    let ncols = tab.ncols;
    match tab.optimize(&sf.c, &|j| j < ncols)? {
        PivotOutcome::Unbounded => return Ok(LpSolution::without_point(LpStatus::Unbounded)),
        PivotOutcome::Optimal => {}
    }

    let raw = tableau_point(&sf, &tab);
    let raw_x = sf.recover(&raw);
    let mut x = raw_x.clone();
    if let Some(z) = refine_basic_solution(&sf, &tab) {
        let refined = sf.recover(&z);
        if lp.max_violation(&refined) <= lp.max_violation(&raw_x) {
            x = refined;
        }
    }
    let scale = 1.0 + sf.b.iter().fold(0.0f64, |m, &v| m.max(v));
    let violation = lp.max_violation(&x);
    if violation > 1e-6 * scale {
        return Err(Error::NumericalFailure(alloc::format!("basic solution violates constraints by {violation:e}")));
    }
    let value = dot(&lp.objective, &x);
    Ok(LpSolution { status: LpStatus::Optimal, value, point: x })
}

/// Whether the constraint system admits a point (phase 1 only).
pub fn feasible(lp: &LinearProgram) -> Result<bool> {
    lp.validate()?;
    let sf = StandardForm::build(lp);
    Ok(matches!(phase_one(&sf)?, Phase1::Feasible(_)))
}

/// Supplies violated inequalities `a·x <= b` for a candidate point.
pub trait SeparationOracle {
    /// Returns a cut violated by `x`, or `None` when `x` satisfies the whole
    /// family (to the oracle's own tolerance).
    fn separate(&mut self, x: &[f64]) -> Result<Option<(Vec<f64>, f64)>>;
}

#[derive(Debug, Clone)]
pub struct CutOutcome {
    pub solution: LpSolution,
    /// The LP including every generated cut.
    pub lp: LinearProgram,
    pub cuts_added: usize,
}

/// Kelley-style loop: solve, ask the oracle for a violated cut, add it, repeat.
pub fn solve_with_cuts(
    lp: &LinearProgram,
    oracle: &mut dyn SeparationOracle,
    max_rounds: usize,
) -> Result<CutOutcome> {
    let mut lp = lp.clone();
    let mut cuts_added = 0;
    for _ in 0..max_rounds {
        let solution = solve_lp(&lp)?;
        if !solution.is_optimal() {
            return Ok(CutOutcome { solution, lp, cuts_added });
        }
        match oracle.separate(&solution.point)? {
            None => return Ok(CutOutcome { solution, lp, cuts_added }),
            Some((a, b)) => {
                lp.add_le(a, b);
                cuts_added += 1;
            }
        }
    }
    Err(Error::NumericalFailure(alloc::format!("cutting-plane loop exceeded {max_rounds} rounds")))
}
