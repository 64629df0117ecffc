//! Optimal ε-DP leakage.
//!
//! Every path works in a *canonical* labelling where distributions are sorted
//! decreasingly (symbol 0 most likely) and maps the resulting mechanism back
//! to the caller's labels at the end.
//!
//! With `k` suppressed output symbols (the `k` least likely ones) the problem
//! reduces to a linear-fractional program over the remaining per-symbol
//! distortions `D_0 <= D_1 <= ... <= D_{M-k-1}`:
//!
//! ```text
//! minimize (M-1-k - sum_{i>=1} D_i) / D_0
//! s.t.     sum_{i<M-k} P_i D_i <= D - D^(k)   for every P in the region
//!          sum_i D_i <= M-1-k,  0 <= D_i <= 1
//! ```
//!
//! solved through the Charnes–Cooper substitution `y = t·D`, `y_0 = 1`.
//! The leakage is the log of the optimum, minimized over admissible `k`.

use alloc::vec;
use alloc::vec::Vec;

use crate::classify::{
    cap_cup_oracles, classify, common_ordering, find_folding_permutations, orbits, Classification, FoldedMax,
};
use crate::error::{Error, Result};
use crate::lp::{solve_with_cuts, LinearProgram, LpStatus, SeparationOracle};
use crate::math::ln;
use crate::mechanism::{construct_optimal_mechanism, symmetric_mechanism};
use crate::types::{LeakageValue, Mechanism, Permutation, SourceSet};

/// Slack when comparing a distortion budget against a threshold `D^(k)`.
/// Thresholds are float sums of table entries, so `0.3` may come out as
/// `0.30000000000000004`.
pub const THRESHOLD_TOL: f64 = 1e-12;

/// A distortion-constraint row is added when the region beats the budget by
/// more than this.
const CUT_TOL: f64 = 1e-11;

const MAX_CUT_ROUNDS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Exact,
    LowerBound,
    UpperBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DpSolution {
    pub leakage: LeakageValue,
    pub kind: BoundKind,
    /// Number of suppressed output symbols.
    pub chosen_k: Option<usize>,
    /// Per-symbol distortions in canonical (decreasing-probability) order,
    /// length `M - chosen_k`.
    pub dstar: Option<Vec<f64>>,
    /// The achieving mechanism in the caller's labels. For a lower bound this
    /// is optimal for the folded intersection, not necessarily valid for the
    /// source set itself.
    pub mechanism: Option<Mechanism>,
    /// Set on a lower bound computed from the canonical chamber piece
    /// because the folded intersection was empty.
    pub fallback_used: bool,
}

impl DpSolution {
    fn infinite(m: usize, kind: BoundKind) -> Self {
        DpSolution {
            leakage: LeakageValue::Infinite,
            kind,
            chosen_k: None,
            dstar: None,
            mechanism: Some(Mechanism::identity(m)),
            fallback_used: false,
        }
    }

    fn relabelled(mut self, t: &Permutation) -> Result<Self> {
        if let Some(q) = self.mechanism.take() {
            self.mechanism = Some(t.relabel(&q)?);
        }
        Ok(self)
    }
}

/// `D^(k)` for `k = 0..=M`: the largest mass a distribution of the region puts
/// on its `k` least likely (canonical) symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    dk: Vec<f64>,
}

impl Thresholds {
    /// Tail sums of the given vertices, read in the given coordinate order.
    pub fn of_vertices(source: &SourceSet) -> Thresholds {
        let m = source.m();
        let mut dk = vec![0.0; m + 1];
        for (k, slot) in dk.iter_mut().enumerate().skip(1) {
            *slot = source.vertices().iter().map(|v| v.tail_sum(k)).fold(0.0, f64::max);
        }
        dk[m] = 1.0;
        Thresholds { dk }
    }

    /// Tail maxima over an arbitrary region in the decreasing chamber.
    pub fn of_region(region: &mut dyn Region) -> Result<Thresholds> {
        let m = region.m();
        let mut dk = vec![0.0; m + 1];
        for k in 1..m {
            let mut c = vec![0.0; m];
            c[m - k..].iter_mut().for_each(|x| *x = 1.0);
            dk[k] = match region.maximize(&c)? {
                Some(hit) => hit.value.clamp(0.0, 1.0),
                None => return Err(Error::Domain("thresholds of an empty region".into())),
            };
        }
        dk[m] = 1.0;
        // the maxima are nondecreasing in exact arithmetic
        for k in 1..=m {
            dk[k] = dk[k].max(dk[k - 1]);
        }
        Ok(Thresholds { dk })
    }

    pub fn m(&self) -> usize {
        self.dk.len() - 1
    }

    /// `D^(k)`, with `D^(0) = 0`.
    pub fn get(&self, k: usize) -> f64 {
        self.dk[k]
    }

    /// `D^(1), ..., D^(M)`.
    pub fn values(&self) -> &[f64] {
        &self.dk[1..]
    }

    /// Largest `k` with `D^(k) <= d`.
    pub fn regime(&self, d: f64) -> usize {
        (0..=self.m()).rev().find(|&k| self.dk[k] <= d + THRESHOLD_TOL).unwrap_or(0)
    }
}

/// A convex region of the decreasing chamber, accessed through linear
/// maximization. Points returned by [`Region::maximize`] are remembered and
/// reused as initial constraint rows.
pub trait Region {
    fn m(&self) -> usize;
    /// `max c·P` over the region, `None` when it is empty.
    fn maximize(&mut self, c: &[f64]) -> Result<Option<FoldedMax>>;
    /// Region points seen so far.
    fn known_points(&self) -> Vec<Vec<f64>>;
}

/// The hull of an explicit vertex list.
#[derive(Debug, Clone)]
pub struct VertexRegion {
    m: usize,
    points: Vec<Vec<f64>>,
}

impl VertexRegion {
    pub fn new(source: &SourceSet) -> Self {
        VertexRegion { m: source.m(), points: source.vertices().iter().map(|v| v.probs().to_vec()).collect() }
    }
}

impl Region for VertexRegion {
    fn m(&self) -> usize {
        self.m
    }

    fn maximize(&mut self, c: &[f64]) -> Result<Option<FoldedMax>> {
        let mut best: Option<FoldedMax> = None;
        for p in &self.points {
            let value = crate::math::dot(p, c);
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(FoldedMax { value, point: p.clone() });
            }
        }
        Ok(best)
    }

    fn known_points(&self) -> Vec<Vec<f64>> {
        self.points.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FoldedKind {
    Cap,
    Cup,
    /// A single folded piece.
    Piece(Permutation),
}

/// Folded intersection, union or single piece of a source set.
#[derive(Debug, Clone)]
pub struct FoldedRegion {
    source: SourceSet,
    folding: Vec<Permutation>,
    kind: FoldedKind,
    cache: Vec<Vec<f64>>,
}

impl FoldedRegion {
    pub fn new(source: SourceSet, folding: Vec<Permutation>, kind: FoldedKind) -> Self {
        FoldedRegion { source, folding, kind, cache: Vec::new() }
    }

    pub fn is_empty(&mut self) -> Result<bool> {
        let m = self.m();
        Ok(self.maximize(&vec![0.0; m])?.is_none())
    }
}

impl Region for FoldedRegion {
    fn m(&self) -> usize {
        self.source.m()
    }

    fn maximize(&mut self, c: &[f64]) -> Result<Option<FoldedMax>> {
        let oracles = cap_cup_oracles(&self.source, &self.folding);
        let hit = match &self.kind {
            FoldedKind::Cap => oracles.max_over_cap(c)?,
            FoldedKind::Cup => oracles.max_over_cup(c)?,
            FoldedKind::Piece(t) => oracles.max_over_piece(t, c)?,
        };
        if let Some(h) = &hit {
            let seen = self.cache.iter().any(|p| p.iter().zip(&h.point).all(|(a, b)| (a - b).abs() <= 1e-12));
            if !seen {
                self.cache.push(h.point.clone());
            }
        }
        Ok(hit)
    }

    fn known_points(&self) -> Vec<Vec<f64>> {
        self.cache.clone()
    }
}

fn check_distortion(d: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(alloc::format!("distortion {d} outside [0, 1]")));
    }
    Ok(())
}

/// Closed form for sources whose hull contains the uniform distribution.
pub fn solve_class1(m: usize, d: f64) -> Result<DpSolution> {
    if m < 2 {
        return Err(Error::Domain("alphabet size must be at least 2".into()));
    }
    check_distortion(d)?;
    if d == 0.0 {
        return Ok(DpSolution::infinite(m, BoundKind::Exact));
    }
    Ok(closed_form(m, d, BoundKind::Exact))
}

/// `ln((M-1)(1-D)/D)` with the symmetric mechanism, or zero leakage with the
/// uniform mechanism once `D >= (M-1)/M`.
fn closed_form(m: usize, d: f64, kind: BoundKind) -> DpSolution {
    let mf = m as f64;
    if d >= (mf - 1.0) / mf {
        return DpSolution {
            leakage: LeakageValue::Finite(0.0),
            kind,
            chosen_k: None,
            dstar: None,
            mechanism: Some(Mechanism::uniform(m)),
            fallback_used: false,
        };
    }
    DpSolution {
        leakage: LeakageValue::finite(ln((mf - 1.0) * (1.0 - d) / d)),
        kind,
        chosen_k: Some(0),
        dstar: Some(vec![d; m]),
        mechanism: Some(symmetric_mechanism(m, d).expect("d in range")),
        fallback_used: false,
    }
}

/// Separation against a region for the distortion rows of one subproblem.
struct RegionCuts<'a> {
    region: &'a mut dyn Region,
    n: usize,
    budget: f64,
}

impl SeparationOracle for RegionCuts<'_> {
    fn separate(&mut self, x: &[f64]) -> Result<Option<(Vec<f64>, f64)>> {
        let n = self.n;
        let t = x[n];
        let m = self.region.m();
        let mut c = vec![0.0; m];
        for i in 0..n {
            c[i] = x[i] / t;
        }
        let Some(hit) = self.region.maximize(&c)? else {
            return Ok(None);
        };
        if hit.value <= self.budget + CUT_TOL {
            return Ok(None);
        }
        Ok(Some((distortion_row(&hit.point, n, self.budget), 0.0)))
    }
}

/// `sum_{i<n} p_i y_i - budget·t <= 0`.
fn distortion_row(p: &[f64], n: usize, budget: f64) -> Vec<f64> {
    let mut row = p[..n].to_vec();
    row.push(-budget);
    row
}

/// One subproblem with `k` suppressed symbols over a region, with optional
/// equalities `D_a = D_b` (a suppressed symbol counts as `D = 1`).
///
/// `dk` is `D^(k)` for the region. Returns the leakage and, when finite, the
/// optimal distortion vector of length `M - k`.
pub fn solve_lfp_region(
    region: &mut dyn Region,
    d: f64,
    k: usize,
    dk: f64,
    equalities: &[(usize, usize)],
) -> Result<(LeakageValue, Option<Vec<f64>>)> {
    let m = region.m();
    if k + 2 > m {
        return Err(Error::Domain(alloc::format!("k = {k} leaves fewer than two symbols (M = {m})")));
    }
    let budget = d - dk;
    if budget <= THRESHOLD_TOL {
        return Ok((LeakageValue::Infinite, None));
    }
    let n = m - k;
    let big_n = (m - 1 - k) as f64;
    let width = n + 1;
    let t = n;

    let mut obj = vec![-1.0; width];
    obj[0] = 0.0;
    obj[t] = big_n;
    let mut lp = LinearProgram::new(obj);

    let mut row = vec![0.0; width];
    row[0] = 1.0;
    lp.add_eq(row, 1.0);

    let mut row = vec![1.0; width];
    row[t] = -big_n;
    lp.add_le(row, 0.0);

    for i in 0..n {
        let mut row = vec![0.0; width];
        row[i] = 1.0;
        row[t] = -1.0;
        lp.add_le(row, 0.0);
    }
    for i in 0..n - 1 {
        let mut row = vec![0.0; width];
        row[i] = 1.0;
        row[i + 1] = -1.0;
        lp.add_le(row, 0.0);
    }
    for &(a, b) in equalities {
        let (a, b) = (a.min(b), a.max(b));
        if b >= m {
            return Err(Error::Domain(alloc::format!("equality index {b} out of range")));
        }
        if a == b || a >= n {
            continue;
        }
        let mut row = vec![0.0; width];
        row[a] = 1.0;
        if b < n {
            row[b] = -1.0;
        } else {
            row[t] = -1.0;
        }
        lp.add_eq(row, 0.0);
    }
    for p in region.known_points() {
        lp.add_le(distortion_row(&p, n, budget), 0.0);
    }

    let mut cuts = RegionCuts { region, n, budget };
    let outcome = solve_with_cuts(&lp, &mut cuts, MAX_CUT_ROUNDS)?;
    let sol = outcome.solution;
    match sol.status {
        LpStatus::Infeasible => Ok((LeakageValue::Infinite, None)),
        LpStatus::Unbounded => Err(Error::NumericalFailure("Charnes-Cooper LP unbounded".into())),
        LpStatus::Optimal => {
            let tv = sol.point[t];
            let mut dstar: Vec<f64> = sol.point[..n].iter().map(|y| (y / tv).clamp(0.0, 1.0)).collect();
            for i in 1..n {
                if dstar[i] < dstar[i - 1] {
                    dstar[i] = dstar[i - 1];
                }
            }
            Ok((LeakageValue::finite(ln(sol.value.max(1.0))), Some(dstar)))
        }
    }
}

/// The `k`-suppression subproblem for a source whose vertices are already
/// sorted decreasingly. `equalities` are pairs of (0-based) symbols forced
/// to share a distortion.
pub fn solve_lfp_k(
    sorted: &SourceSet,
    d: f64,
    k: usize,
    equalities: &[(usize, usize)],
) -> Result<(LeakageValue, Option<Vec<f64>>)> {
    check_distortion(d)?;
    let dk = Thresholds::of_vertices(sorted);
    if k > sorted.m() {
        return Err(Error::Domain(alloc::format!("k = {k} exceeds M")));
    }
    let mut region = VertexRegion::new(sorted);
    solve_lfp_region(&mut region, d, k, dk.get(k), equalities)
}

/// Trailing distortions of 1 are output symbols nobody maps to: count them
/// as suppressed.
fn trim_suppressed(mut k: usize, mut dstar: Vec<f64>) -> (usize, Vec<f64>) {
    while dstar.len() > 2 && *dstar.last().unwrap() >= 1.0 - 1e-9 {
        dstar.pop();
        k += 1;
    }
    (k, dstar)
}

/// Minimum over the admissible suppression counts, in canonical labels.
///
/// `zero_ok` says whether mapping everything to symbol 0 respects the
/// equalities (symbol 0 is only tied to itself).
fn solve_region(
    region: &mut dyn Region,
    th: &Thresholds,
    equalities: &[(usize, usize)],
    d: f64,
    kind: BoundKind,
) -> Result<DpSolution> {
    let m = region.m();
    check_distortion(d)?;
    if d == 0.0 {
        return Ok(DpSolution::infinite(m, kind));
    }
    if d < th.get(1) - THRESHOLD_TOL {
        return Ok(closed_form(m, d, kind));
    }
    let zero_ok = equalities.iter().all(|&(a, b)| a == b || (a != 0 && b != 0));
    if zero_ok && d >= th.get(m - 1) - THRESHOLD_TOL {
        return Ok(DpSolution {
            leakage: LeakageValue::Finite(0.0),
            kind,
            chosen_k: Some(m - 1),
            dstar: Some(vec![0.0]),
            mechanism: Some(Mechanism::constant(m, 0)),
            fallback_used: false,
        });
    }
    let mf = m as f64;
    if d >= (mf - 1.0) / mf {
        return Ok(closed_form(m, d, kind));
    }

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for l in 0..=m - 2 {
        if th.get(l) > d + THRESHOLD_TOL {
            break;
        }
        let (value, dstar) = solve_lfp_region(region, d, l, th.get(l), equalities)?;
        if let (LeakageValue::Finite(v), Some(dstar)) = (value, dstar) {
            let (k, dstar) = trim_suppressed(l, dstar);
            let better = match &best {
                None => true,
                Some(b) => v < b.0 - 1e-12 || (v <= b.0 + 1e-12 && k < b.1),
            };
            if better {
                best = Some((v, k, dstar));
            }
        }
    }
    let Some((v, l, dstar)) = best else {
        return Ok(DpSolution::infinite(m, kind));
    };
    let mechanism = construct_optimal_mechanism(&dstar, l, m)?;
    Ok(DpSolution {
        leakage: LeakageValue::finite(v),
        kind,
        chosen_k: Some(l),
        dstar: Some(dstar),
        mechanism: Some(mechanism),
        fallback_used: false,
    })
}

/// Exact leakage for a source whose distributions share one ordering.
///
/// The source is relabelled to decreasing order, solved, and the mechanism
/// relabelled back.
pub fn solve_class2(source: &SourceSet, d: f64) -> Result<DpSolution> {
    let ordering = common_ordering(source).ok_or(Error::WrongClass("no common ordering (Class II expected)"))?;
    let sorted = source.gather(&ordering)?;
    let th = Thresholds::of_vertices(&sorted);
    let mut region = VertexRegion::new(&sorted);
    solve_region(&mut region, &th, &[], d, BoundKind::Exact)?.relabelled(&ordering)
}

/// Precomputed state for repeated Class III evaluations on one source set.
///
/// The source is first relabelled by its lexicographically smallest folding
/// permutation, so that it meets the decreasing chamber.
#[derive(Debug, Clone)]
pub struct Class3Solver {
    relabel: Permutation,
    folding: Vec<Permutation>,
    equalities: Vec<(usize, usize)>,
    lower: FoldedRegion,
    upper: FoldedRegion,
    lower_th: Thresholds,
    upper_th: Thresholds,
    fallback: bool,
}

impl Class3Solver {
    pub fn new(source: &SourceSet) -> Result<Self> {
        let folding = find_folding_permutations(source)?;
        if folding.len() < 2 {
            return Err(Error::WrongClass("source meets a single chamber (Class III expected)"));
        }
        let relabel = folding[0].clone();
        let canon = source.gather(&relabel)?;
        let folding = find_folding_permutations(&canon)?;
        let mut equalities = Vec::new();
        for orbit in orbits(canon.m(), &folding) {
            for &j in &orbit[1..] {
                equalities.push((orbit[0], j));
            }
        }
        let mut upper = FoldedRegion::new(canon.clone(), folding.clone(), FoldedKind::Cup);
        let mut cap = FoldedRegion::new(canon.clone(), folding.clone(), FoldedKind::Cap);
        let (mut lower, fallback) = if cap.is_empty()? {
            let id = Permutation::identity(canon.m());
            (FoldedRegion::new(canon, folding.clone(), FoldedKind::Piece(id)), true)
        } else {
            (cap, false)
        };
        let lower_th = Thresholds::of_region(&mut lower)?;
        let upper_th = Thresholds::of_region(&mut upper)?;
        Ok(Class3Solver { relabel, folding, equalities, lower, upper, lower_th, upper_th, fallback })
    }

    /// Folding set of the relabelled source.
    pub fn folding(&self) -> &[Permutation] {
        &self.folding
    }

    /// Permutation used to relabel the input into canonical form.
    pub fn relabelling(&self) -> &Permutation {
        &self.relabel
    }

    pub fn cap_empty(&self) -> bool {
        self.fallback
    }

    pub fn lower_thresholds(&self) -> &Thresholds {
        &self.lower_th
    }

    pub fn upper_thresholds(&self) -> &Thresholds {
        &self.upper_th
    }

    pub fn solve(&mut self, d: f64) -> Result<(DpSolution, DpSolution)> {
        let lower = if self.fallback {
            let mut s = solve_region(&mut self.lower, &self.lower_th, &[], d, BoundKind::LowerBound)?;
            s.fallback_used = true;
            s
        } else {
            solve_region(&mut self.lower, &self.lower_th, &self.equalities, d, BoundKind::LowerBound)?
        };
        let upper = solve_region(&mut self.upper, &self.upper_th, &self.equalities, d, BoundKind::UpperBound)?;
        Ok((lower.relabelled(&self.relabel)?, upper.relabelled(&self.relabel)?))
    }
}

/// Lower and upper bounds for a source meeting several ordering chambers.
pub fn solve_class3_bounds(source: &SourceSet, d: f64) -> Result<(DpSolution, DpSolution)> {
    Class3Solver::new(source)?.solve(d)
}

#[derive(Debug, Clone, PartialEq)]
pub enum DpOutcome {
    Exact(DpSolution),
    Bounds { lower: DpSolution, upper: DpSolution },
}

/// Classifies the source and dispatches to the matching solver.
pub fn solve_dp(source: &SourceSet, d: f64) -> Result<DpOutcome> {
    Ok(match classify(source)? {
        Classification::ClassI => DpOutcome::Exact(solve_class1(source.m(), d)?),
        Classification::ClassII { .. } => DpOutcome::Exact(solve_class2(source, d)?),
        Classification::ClassIII { .. } => {
            let (lower, upper) = solve_class3_bounds(source, d)?;
            DpOutcome::Bounds { lower, upper }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{eps_dp, is_valid};
    use crate::types::make_source_set;

    fn v(x: f64) -> f64 {
        ln(x)
    }

    fn single(p: &[f64]) -> SourceSet {
        make_source_set(vec![p.to_vec()]).unwrap()
    }

    #[test]
    fn threshold_examples() {
        let t = Thresholds::of_vertices(&single(&[0.7, 0.15, 0.06, 0.04, 0.03, 0.02]));
        let want = [0.02, 0.05, 0.09, 0.15, 0.30, 1.0];
        for (a, b) in t.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let t2 = Thresholds::of_vertices(
            &make_source_set(vec![
                vec![0.3, 0.2, 0.15, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03, 0.02],
                vec![0.35, 0.16, 0.12, 0.10, 0.09, 0.09, 0.05, 0.02, 0.01, 0.01],
            ])
            .unwrap(),
        );
        assert!((t2.get(1) - 0.02).abs() < 1e-12);
        assert!((t2.get(9) - 0.70).abs() < 1e-12);
        let t3 = Thresholds::of_vertices(&single(&[0.5, 0.3, 0.2]));
        assert_eq!(t3.values().len(), 3);
        assert!((t3.get(1) - 0.2).abs() < 1e-12 && (t3.get(2) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn class1_examples() {
        let s = solve_class1(6, 0.3).unwrap();
        assert!((s.leakage.value() - v(35.0 / 3.0)).abs() < 1e-12);
        assert_eq!(solve_class1(10, 0.9).unwrap().leakage, LeakageValue::Finite(0.0));
        assert_eq!(solve_class1(2, 0.5).unwrap().leakage, LeakageValue::Finite(0.0));
        assert_eq!(solve_class1(3, 0.0).unwrap().leakage, LeakageValue::Infinite);
        assert!(solve_class1(3, -0.1).is_err());
    }

    #[test]
    fn lfp_examples() {
        let s = single(&[0.5, 0.3, 0.2]);
        let (l, d) = solve_lfp_k(&s, 0.45, 1, &[]).unwrap();
        assert!((l.value() - v(2.2)).abs() < 1e-9);
        let d = d.unwrap();
        assert!((d[0] - 0.3125).abs() < 1e-9 && (d[1] - 0.3125).abs() < 1e-9);

        // With D_2 allowed to reach 1 the k = 0 problem contains the k = 1
        // optimum; the all-equal point (0.45, 0.45, 0.45) only gives ln(22/9).
        let (l, d) = solve_lfp_k(&s, 0.45, 0, &[]).unwrap();
        assert!((l.value() - v(2.2)).abs() < 1e-9);
        let d = d.unwrap();
        assert!((d[0] - 0.3125).abs() < 1e-9 && (d[1] - 0.3125).abs() < 1e-9 && (d[2] - 1.0).abs() < 1e-9);
        assert!(v(2.2) < v(22.0 / 9.0));

        let (l, d) = solve_lfp_k(&s, 0.3, 1, &[]).unwrap();
        assert!((l.value() - v(7.0)).abs() < 1e-9);
        assert!(d.unwrap().iter().all(|x| (x - 0.125).abs() < 1e-9));

        // below the threshold there is no valid mechanism
        let (l, d) = solve_lfp_k(&s, 0.15, 1, &[]).unwrap();
        assert_eq!(l, LeakageValue::Infinite);
        assert!(d.is_none());
        // and exactly at it the residual budget is zero
        assert_eq!(solve_lfp_k(&s, 0.2, 1, &[]).unwrap().0, LeakageValue::Infinite);
    }

    #[test]
    fn class2_examples() {
        let s = solve_class2(&single(&[0.7, 0.3]), 0.1).unwrap();
        assert!((s.leakage.value() - v(9.0)).abs() < 1e-9);

        let s = solve_class2(&single(&[0.5, 0.3, 0.2]), 0.45).unwrap();
        assert!((s.leakage.value() - v(2.2)).abs() < 1e-9);
        assert_eq!(s.chosen_k, Some(1));

        let s = solve_class2(&single(&[0.5, 0.3, 0.2]), 0.3).unwrap();
        assert!((s.leakage.value() - v(14.0 / 3.0)).abs() < 1e-9);
        assert_eq!(s.chosen_k, Some(0));
    }

    #[test]
    fn class2_relabels_back() {
        let src = single(&[0.2, 0.5, 0.3]);
        let s = solve_class2(&src, 0.45).unwrap();
        assert!((s.leakage.value() - v(2.2)).abs() < 1e-9);
        let q = s.mechanism.unwrap();
        assert!(is_valid(&q, &src, 0.45).unwrap().valid);
        assert!((eps_dp(&q).value() - v(2.2)).abs() < 1e-9);
        // the suppressed symbol is the least likely one, index 0
        assert!(q.column(0).all(|x| x == 0.0));
    }

    #[test]
    fn zero_regime_maps_to_most_likely() {
        let src = single(&[0.2, 0.5, 0.3]);
        let s = solve_class2(&src, 0.5).unwrap();
        assert_eq!(s.leakage, LeakageValue::Finite(0.0));
        assert_eq!(s.chosen_k, Some(2));
        let q = s.mechanism.unwrap();
        assert!(q.column(1).all(|x| x == 1.0));
        let below = solve_class2(&src, 0.499).unwrap();
        assert!(below.leakage.value() > 0.0);
    }

    #[test]
    fn class3_symmetric_pair() {
        let s = make_source_set(vec![vec![0.5, 0.3, 0.2], vec![0.3, 0.5, 0.2]]).unwrap();
        let (lo, up) = solve_class3_bounds(&s, 0.45).unwrap();
        assert!((lo.leakage.value() - v(2.2)).abs() < 1e-7);
        assert!((up.leakage.value() - v(2.2)).abs() < 1e-7);
        assert!(!lo.fallback_used);
        let q = up.mechanism.unwrap();
        assert!(is_valid(&q, &s, 0.45).unwrap().valid);
    }

    #[test]
    fn class3_table3a_low_distortion() {
        let s = make_source_set(vec![
            vec![0.7, 0.15, 0.06, 0.04, 0.03, 0.02],
            vec![0.15, 0.7, 0.06, 0.04, 0.03, 0.02],
        ])
        .unwrap();
        let (lo, up) = solve_class3_bounds(&s, 0.01).unwrap();
        assert!((lo.leakage.value() - v(495.0)).abs() < 1e-9);
        assert!((up.leakage.value() - v(495.0)).abs() < 1e-9);
        let (lo, up) = solve_class3_bounds(&s, 0.9).unwrap();
        assert_eq!(lo.leakage, LeakageValue::Finite(0.0));
        assert_eq!(up.leakage, LeakageValue::Finite(0.0));
    }

    #[test]
    fn class3_cap_empty_falls_back() {
        let s = make_source_set(vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.5, 0.3]]).unwrap();
        let (lo, up) = solve_class3_bounds(&s, 0.4).unwrap();
        assert!(lo.fallback_used);
        assert!(lo.leakage.value() <= up.leakage.value() + 1e-9);
        let q = up.mechanism.unwrap();
        assert!(is_valid(&q, &s, 0.4).unwrap().valid);
    }

    #[test]
    fn wrong_class_is_reported() {
        let s = make_source_set(vec![vec![0.5, 0.3, 0.2], vec![0.3, 0.5, 0.2]]).unwrap();
        assert!(matches!(solve_class2(&s, 0.3), Err(Error::WrongClass(_))));
        assert!(matches!(solve_class3_bounds(&single(&[0.5, 0.3, 0.2]), 0.3), Err(Error::WrongClass(_))));
    }
}
