//! Independent checks for the analytic solvers.
//!
//! Nothing here calls into [`crate::dp`] or [`crate::it`]: the brute-force
//! search only uses the definitions of validity and ε, and the bisection
//! check rebuilds the suppression subproblem from the vertices directly.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram};
use crate::math::{exp, ln};
use crate::mechanism::{eps_dp, is_valid};
use crate::types::{LeakageValue, Mechanism, SourceSet};

/// Candidate matrices the grid search may visit.
pub const BRUTE_FORCE_BUDGET: u64 = 100_000_000;

const REFINE_MIN_STEP: f64 = 1e-6;
const REFINE_MAX_EVALS: usize = 200_000;
const BISECTION_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    /// Best value after refinement.
    pub leakage: LeakageValue,
    /// Best value on the grid alone.
    pub grid_leakage: LeakageValue,
    pub mechanism: Option<Mechanism>,
    /// Complete candidate matrices visited by the grid search.
    pub candidates: u64,
}

/// Grid search over row-stochastic matrices, then local refinement.
///
/// Rows range over the simplex grid with spacing `1 / round(1 / grid_step)`,
/// corners included. The search is a branch and bound over rows: a partial
/// matrix is dropped once its distortion or its column ratios already rule
/// out beating the incumbent. The incumbent is then refined by coordinate
/// descent (mass moves inside one row, step halving down to 1e-6) and
/// finally polished by an ε-bisection LP restricted to its zero-column
/// pattern.
pub fn brute_force_dp(source: &SourceSet, d: f64, grid_step: f64) -> Result<BruteForce> {
    let m = source.m();
    if m > 3 {
        return Err(Error::Domain(alloc::format!("brute force supports M <= 3, got {m}")));
    }
    if !(0.005..=0.1).contains(&grid_step) {
        return Err(Error::Domain(alloc::format!("grid step {grid_step} outside [0.005, 0.1]")));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(alloc::format!("distortion {d} outside [0, 1]")));
    }
    let n = libm::round(1.0 / grid_step) as u32;
    let vertices: Vec<Vec<f64>> = source.vertices().iter().map(|v| v.probs().to_vec()).collect();

    let mut search = Grid {
        m,
        n,
        d,
        vertices: &vertices,
        best: f64::INFINITY,
        best_rows: None,
        rows: vec![vec![0; m]; m],
        candidates: 0,
    };
    search.row(0, &vec![0.0; vertices.len()])?;

    let mut best: Option<(f64, Mechanism)> = None;
    let uniform = Mechanism::uniform(m);
    if valid(&uniform, source, d)? {
        best = Some((0.0, uniform));
    }
    if let Some(rows) = search.best_rows.take() {
        let q = to_mechanism(&rows, n)?;
        if best.as_ref().is_none_or(|b| search.best < b.0) {
            best = Some((search.best, q));
        }
    }
    let grid_leakage = LeakageValue::finite(best.as_ref().map_or(f64::INFINITY, |b| b.0));
    let Some((mut value, mut q)) = best else {
        // a budget finer than the grid: start from the all-positive pattern
        let found = polish(&vec![false; m], f64::INFINITY, source, d)?;
        return Ok(BruteForce {
            leakage: LeakageValue::finite(found.as_ref().map_or(f64::INFINITY, |f| f.0)),
            grid_leakage,
            mechanism: found.map(|f| f.1),
            candidates: search.candidates,
        });
    };

    if value > 0.0 {
        let (v, refined) = coordinate_descent(q.clone(), value, source, d, 1.0 / n as f64)?;
        if v < value {
            value = v;
            q = refined;
        }
        let zero: Vec<bool> = (0..m).map(|j| q.column(j).all(|x| x <= 0.0)).collect();
        if let Some((v, polished)) = polish(&zero, value, source, d)? {
            if v < value {
                value = v;
                q = polished;
            }
        }
    }
    Ok(BruteForce {
        leakage: LeakageValue::finite(value),
        grid_leakage,
        mechanism: Some(q),
        candidates: search.candidates,
    })
}

fn valid(q: &Mechanism, source: &SourceSet, d: f64) -> Result<bool> {
    Ok(is_valid(q, source, d)?.valid)
}

fn to_mechanism(rows: &[Vec<u32>], n: u32) -> Result<Mechanism> {
    Mechanism::new(rows.iter().map(|r| r.iter().map(|&u| u as f64 / n as f64).collect()).collect())
}

struct Grid<'a> {
    m: usize,
    n: u32,
    d: f64,
    vertices: &'a [Vec<f64>],
    best: f64,
    best_rows: Option<Vec<Vec<u32>>>,
    rows: Vec<Vec<u32>>,
    candidates: u64,
}

impl Grid<'_> {
    /// Admissible units for column `j` of row `i` given the rows above.
    fn range(&self, i: usize, j: usize) -> (u32, u32) {
        if i == 0 {
            return (0, self.n);
        }
        let above = self.rows[..i].iter().map(|r| r[j]);
        let (lo, hi) = above.fold((u32::MAX, 0), |(lo, hi), u| (lo.min(u), hi.max(u)));
        if hi == 0 {
            return (0, 0);
        }
        if !self.best.is_finite() {
            return (1, self.n);
        }
        let r = exp(self.best);
        let need = libm::ceil(hi as f64 / r - 1e-9).max(1.0) as u32;
        let cap = libm::floor(lo as f64 * r + 1e-9).min(self.n as f64) as u32;
        (need, cap)
    }

    fn row(&mut self, i: usize, acc: &[f64]) -> Result<()> {
        if i == self.m {
            return self.leaf();
        }
        let ranges: Vec<(u32, u32)> = (0..self.m).map(|j| self.range(i, j)).collect();
        if ranges.iter().any(|&(lo, hi)| lo > hi) {
            return Ok(());
        }
        self.column(i, 0, self.n, &ranges, acc)
    }

    fn column(&mut self, i: usize, j: usize, left: u32, ranges: &[(u32, u32)], acc: &[f64]) -> Result<()> {
        let (lo, hi) = ranges[j];
        if j + 1 == self.m {
            if left < lo || left > hi {
                return Ok(());
            }
            self.rows[i][j] = left;
            return self.close_row(i, acc);
        }
        let hi = hi.min(left);
        if lo > hi {
            return Ok(());
        }
        // the rest of the row must be able to absorb what is left
        let rest: (u32, u32) =
            ranges[j + 1..].iter().fold((0, 0), |(a, b), &(l, h)| (a + l, b.saturating_add(h)));
        for u in (lo..=hi).rev() {
            let remaining = left - u;
            if remaining < rest.0 || remaining > rest.1 {
                continue;
            }
            self.rows[i][j] = u;
            self.column(i, j + 1, remaining, ranges, acc)?;
        }
        Ok(())
    }

    fn close_row(&mut self, i: usize, acc: &[f64]) -> Result<()> {
        let keep = 1.0 - self.rows[i][i] as f64 / self.n as f64;
        let next: Vec<f64> = self.vertices.iter().zip(acc).map(|(v, a)| a + v[i] * keep).collect();
        if next.iter().any(|&x| x > self.d + 1e-12) {
            return Ok(());
        }
        self.row(i + 1, &next)
    }

    fn leaf(&mut self) -> Result<()> {
        self.candidates += 1;
        if self.candidates > BRUTE_FORCE_BUDGET {
            return Err(Error::BudgetExceeded { candidates: self.candidates, cap: BRUTE_FORCE_BUDGET });
        }
        let mut eps = 0.0f64;
        for j in 0..self.m {
            let (lo, hi) = self.rows.iter().map(|r| r[j]).fold((u32::MAX, 0), |(lo, hi), u| (lo.min(u), hi.max(u)));
            if hi > 0 {
                eps = eps.max(ln(hi as f64 / lo as f64));
            }
        }
        if eps < self.best {
            self.best = eps;
            self.best_rows = Some(self.rows.clone());
        }
        Ok(())
    }
}

fn eps_value(q: &Mechanism) -> f64 {
    eps_dp(q).value()
}

/// Moves mass between two entries of one row while that lowers ε and keeps
/// the mechanism valid; halves the step when no move helps.
fn coordinate_descent(mut q: Mechanism, mut value: f64, source: &SourceSet, d: f64, start: f64) -> Result<(f64, Mechanism)> {
    let m = q.m();
    let mut step = start;
    let mut evals = 0;
    while step >= REFINE_MIN_STEP && evals < REFINE_MAX_EVALS {
        let mut improved = false;
        for i in 0..m {
            for a in 0..m {
                for b in 0..m {
                    if a == b || q.get(i, a) < step {
                        continue;
                    }
                    let mut rows = q.rows();
                    rows[i][a] -= step;
                    rows[i][b] += step;
                    rows[i][a] = rows[i][a].max(0.0);
                    let Ok(cand) = Mechanism::new(rows) else { continue };
                    evals += 1;
                    let v = eps_value(&cand);
                    if v < value && valid(&cand, source, d)? {
                        value = v;
                        q = cand;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok((value, q))
}

/// Smallest ε over mechanisms whose all-zero columns are `zero`, by
/// bisection on ε with an LP feasibility test at each step. `value` is the
/// incumbent.
fn polish(zero: &[bool], value: f64, source: &SourceSet, d: f64) -> Result<Option<(f64, Mechanism)>> {
    let m = zero.len();
    let feasible_at = |eps: f64| -> Result<Option<Vec<f64>>> {
        let r = exp(eps);
        let mut lp = LinearProgram::feasibility(m * m);
        for i in 0..m {
            for j in 0..m {
                lp.set_bounds(i * m + j, 0.0, if zero[j] { 0.0 } else { 1.0 });
            }
            let mut row = vec![0.0; m * m];
            row[i * m..(i + 1) * m].iter_mut().for_each(|x| *x = 1.0);
            lp.add_eq(row, 1.0);
        }
        for j in (0..m).filter(|&j| !zero[j]) {
            for a in 0..m {
                for b in (0..m).filter(|&b| b != a) {
                    let mut row = vec![0.0; m * m];
                    row[a * m + j] = 1.0;
                    row[b * m + j] = -r;
                    lp.add_le(row, 0.0);
                }
            }
        }
        for v in source.vertices() {
            let mut row = vec![0.0; m * m];
            for i in 0..m {
                row[i * m + i] = v.probs()[i];
            }
            // margin so LP round-off cannot push the result past the budget
            lp.add_ge(row, 1.0 - d + 1e-8);
        }
        let sol = solve_lp(&lp)?;
        Ok(sol.is_optimal().then_some(sol.point))
    };
    // the incumbent may sit on the budget, inside the LP margin
    let mut start = None;
    for hi in [value + 1e-6, value + 1e-3, 50.0].into_iter().filter(|h| h.is_finite() && *h <= 50.0) {
        if let Some(p) = feasible_at(hi)? {
            start = Some((hi, p));
            break;
        }
    }
    let Some((mut hi, mut point)) = start else {
        return Ok(None);
    };
    let mut lo = 0.0;
    if let Some(p) = feasible_at(0.0)? {
        point = p;
        hi = 0.0;
    }
    for _ in 0..BISECTION_ITERS {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match feasible_at(mid)? {
            Some(p) => {
                hi = mid;
                point = p;
            }
            None => lo = mid,
        }
    }
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let row: Vec<f64> = point[i * m..(i + 1) * m].iter().map(|x| x.max(0.0)).collect();
            let total: f64 = row.iter().sum();
            row.iter().map(|x| x / total).collect()
        })
        .collect();
    let cand = Mechanism::new(rows)?;
    if !valid(&cand, source, d)? {
        return Ok(None);
    }
    Ok(Some((eps_value(&cand), cand)))
}

/// The `k`-suppression subproblem solved by bisection on ε.
///
/// At fixed ε the fractional objective `(M-1-k - sum_{i>=2} D_i) / D_1 <= e^ε`
/// is a linear constraint, so feasibility is one LP. Each vertex is sorted
/// on its own; for a source with a common ordering this is the shared
/// decreasing relabelling.
pub fn bisection_cross_check(source: &SourceSet, d: f64, k: usize) -> Result<LeakageValue> {
    let m = source.m();
    if k + 1 >= m {
        return Err(Error::Domain(alloc::format!("k = {k} leaves fewer than two symbols")));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(alloc::format!("distortion {d} outside [0, 1]")));
    }
    let sorted: Vec<Vec<f64>> = source
        .vertices()
        .iter()
        .map(|v| {
            let mut p = v.probs().to_vec();
            p.sort_by(|a, b| b.total_cmp(a));
            p
        })
        .collect();
    let tail = sorted.iter().map(|p| p[m - k..].iter().sum::<f64>()).fold(0.0, f64::max);
    if d < tail {
        return Ok(LeakageValue::Infinite);
    }
    let n = m - k;
    let total = (m - 1 - k) as f64;
    let feasible_at = |eps: f64| -> Result<bool> {
        let mut lp = LinearProgram::feasibility(n);
        for i in 0..n {
            lp.set_bounds(i, 0.0, 1.0);
        }
        let mut row = vec![1.0; n];
        row[0] = exp(eps);
        lp.add_ge(row, total);
        lp.add_le(vec![1.0; n], total);
        for p in &sorted {
            lp.add_le(p[..n].to_vec(), d - tail);
        }
        for i in 0..n - 1 {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row[i + 1] = -1.0;
            lp.add_le(row, 0.0);
        }
        Ok(solve_lp(&lp)?.is_optimal())
    };
    let (mut lo, mut hi) = (0.0, 50.0);
    if feasible_at(lo)? {
        return Ok(LeakageValue::Finite(0.0));
    }
    if !feasible_at(hi)? {
        return Ok(LeakageValue::Infinite);
    }
    for _ in 0..BISECTION_ITERS {
        if hi - lo <= 1e-11 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(LeakageValue::finite(hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SublinearityReport {
    /// Utility of the combined distortion profile.
    pub lhs: f64,
    /// Sum of the individual utilities.
    pub rhs: f64,
    pub strict: bool,
}

/// `-max_{P} sum_i P_i d_i`, the utility of a distortion profile.
pub fn worst_case_utility(source: &SourceSet, distortions: &[f64]) -> f64 {
    -source.max_linear(distortions)
}

/// Compares `U(Q1 + Q2)` with `U(Q1) + U(Q2)` at the level of distortion
/// profiles.
pub fn sublinearity_check(source: &SourceSet, q1: &Mechanism, q2: &Mechanism) -> Result<SublinearityReport> {
    let d1 = q1.distortion_vector();
    let d2 = q2.distortion_vector();
    if d1.len() != source.m() || d2.len() != source.m() {
        return Err(Error::DimensionMismatch { expected: source.m(), found: d1.len().max(d2.len()) });
    }
    let sum: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a + b).collect();
    let lhs = worst_case_utility(source, &sum);
    let rhs = worst_case_utility(source, &d1) + worst_case_utility(source, &d2);
    Ok(SublinearityReport { lhs, rhs, strict: lhs > rhs })
}

/// Two binary mechanisms that each distort one symbol fully, against the
/// two point masses: the combined worst case is -1, the sum of the parts -2.
pub fn sublinearity_counterexample() -> SublinearityReport {
    let source = crate::types::make_source_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).expect("point masses");
    sublinearity_check(&source, &counterexample_mechanisms().0, &counterexample_mechanisms().1)
        .expect("matching dimensions")
}

/// Mechanisms with distortion vectors `(1, 0)` and `(0, 1)`.
pub fn counterexample_mechanisms() -> (Mechanism, Mechanism) {
    let q1 = Mechanism::constant(2, 1);
    let q2 = Mechanism::constant(2, 0);
    (q1, q2)
}

/// Hamming rate-distortion function `R_P(D)` in nats by Blahut–Arimoto,
/// bisecting the slope parameter until the achieved distortion matches `d`.
pub fn blahut_arimoto_rd(p: &[f64], d: f64) -> Result<f64> {
    let m = p.len();
    if m < 2 {
        return Err(Error::Domain("alphabet size must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(alloc::format!("distortion {d} outside [0, 1]")));
    }
    let pmax = p.iter().cloned().fold(0.0, f64::max);
    if d >= 1.0 - pmax {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while ba_point(p, hi).0 > d && hi < 1e3 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ba_point(p, mid).0 > d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ba_point(p, hi).1)
}

/// Distortion and rate at slope `s` (distortion weight `e^{-s}` off the
/// diagonal).
fn ba_point(p: &[f64], s: f64) -> (f64, f64) {
    let m = p.len();
    let off = exp(-s);
    let mut q = vec![1.0 / m as f64; m];
    let mut cond = vec![0.0; m * m];
    for _ in 0..20_000 {
        for i in 0..m {
            let z: f64 = (0..m).map(|j| q[j] * if i == j { 1.0 } else { off }).sum();
            for j in 0..m {
                cond[i * m + j] = q[j] * if i == j { 1.0 } else { off } / z;
            }
        }
        let next: Vec<f64> = (0..m).map(|j| (0..m).map(|i| p[i] * cond[i * m + j]).sum()).collect();
        let change = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        q = next;
        if change < 1e-15 {
            break;
        }
    }
    let mut dist = 0.0;
    let mut rate = 0.0;
    for i in 0..m {
        for j in 0..m {
            let x = cond[i * m + j];
            if i != j {
                dist += p[i] * x;
            }
            if x > 0.0 && q[j] > 0.0 {
                rate += p[i] * x * ln(x / q[j]);
            }
        }
    }
    (dist, rate.max(0.0))
}
