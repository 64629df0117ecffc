//! Source-set taxonomy.
//!
//! * Class I: the hull contains the uniform distribution.
//! * Class II: otherwise, if one ordering `P[T(0)] >= P[T(1)] >= ...` holds
//!   for every distribution in the hull.
//! * Class III: everything else. Such a set meets several ordering chambers
//!   of the simplex; the permutations of those chambers form the folding set,
//!   and sorting each chamber's piece into the canonical decreasing chamber
//!   gives the folded pieces whose intersection and union bound the leakage.
//!
//! Chambers are closed (`>=`), so points on tie hyperplanes belong to every
//! adjacent chamber.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lp::{feasible, solve_lp, LinearProgram, LpStatus};
use crate::types::{Distribution, Permutation, SourceSet};

/// Slack used when comparing coordinates across vertices.
const ORDER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    ClassI,
    ClassII {
        /// Symbols listed by decreasing probability.
        ordering: Permutation,
    },
    ClassIII {
        /// Sorted lexicographically by image list.
        folding: Vec<Permutation>,
        cap_nonempty: bool,
    },
}

impl Classification {
    pub fn tag(&self) -> &'static str {
        match self {
            Classification::ClassI => "ClassI",
            Classification::ClassII { .. } => "ClassII",
            Classification::ClassIII { .. } => "ClassIII",
        }
    }
}

/// Convex-combination weights over the vertices: `w >= 0`, `sum w = 1`,
/// with `extra` trailing variables left free for the caller.
fn hull_program(source: &SourceSet, extra: usize) -> LinearProgram {
    let n = source.len();
    let mut lp = LinearProgram::feasibility(n + extra);
    let mut row = vec![0.0; n + extra];
    row[..n].iter_mut().for_each(|x| *x = 1.0);
    lp.add_eq(row, 1.0);
    lp
}

/// Whether `point` lies in the hull of the vertices.
pub fn hull_contains(source: &SourceSet, point: &[f64]) -> Result<bool> {
    if point.len() != source.m() {
        return Err(Error::DimensionMismatch { expected: source.m(), found: point.len() });
    }
    let n = source.len();
    let mut lp = hull_program(source, 0);
    for (i, &target) in point.iter().enumerate() {
        let row: Vec<f64> = source.vertices().iter().map(|v| v.probs()[i]).collect();
        debug_assert_eq!(row.len(), n);
        lp.add_eq(row, target);
    }
    feasible(&lp)
}

pub fn contains_uniform(source: &SourceSet) -> Result<bool> {
    let m = source.m();
    hull_contains(source, &vec![1.0 / m as f64; m])
}

/// The lexicographically smallest permutation ordering every vertex, if any.
///
/// Greedy: at each position take the smallest remaining symbol that is at
/// least as likely as every other remaining symbol on every vertex.
pub fn common_ordering(source: &SourceSet) -> Option<Permutation> {
    let m = source.m();
    let dominates = |a: usize, b: usize| source.vertices().iter().all(|v| v.probs()[a] >= v.probs()[b] - ORDER_TOL);
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut order = Vec::with_capacity(m);
    while !remaining.is_empty() {
        let pick = remaining.iter().position(|&a| remaining.iter().all(|&b| a == b || dominates(a, b)))?;
        order.push(remaining.remove(pick));
    }
    Permutation::from_map(order).ok()
}

/// Ordering constraints `P[T(j)] - P[T(j+1)] >= 0` expressed on the weights.
fn add_chamber_rows(lp: &mut LinearProgram, source: &SourceSet, t: &Permutation, offset: usize) {
    let width = lp.num_vars();
    for j in 0..source.m() - 1 {
        let mut row = vec![0.0; width];
        for (k, v) in source.vertices().iter().enumerate() {
            row[offset + k] = v.probs()[t.apply(j)] - v.probs()[t.apply(j + 1)];
        }
        lp.add_ge(row, 0.0);
    }
}

/// Whether the hull meets the closed chamber of `t`.
pub fn chamber_feasible(source: &SourceSet, t: &Permutation) -> Result<bool> {
    if t.len() != source.m() {
        return Err(Error::DimensionMismatch { expected: source.m(), found: t.len() });
    }
    let mut lp = hull_program(source, 0);
    add_chamber_rows(&mut lp, source, t, 0);
    feasible(&lp)
}

fn factorial_saturating(m: usize) -> usize {
    (1..=m).try_fold(1usize, |acc, k| acc.checked_mul(k)).unwrap_or(usize::MAX)
}

/// Every permutation whose closed chamber meets the hull.
///
/// Breadth-first search over chambers, seeded with each vertex's sorting
/// permutation and expanded through adjacent transpositions of the ranking.
/// The chambers a convex set meets are connected through shared facets, and
/// facet neighbours differ by exactly one adjacent transposition.
pub fn find_folding_permutations(source: &SourceSet) -> Result<Vec<Permutation>> {
    let m = source.m();
    let cap = factorial_saturating(m).saturating_mul(10);
    let mut tested = BTreeSet::new();
    let mut found = BTreeSet::new();
    let mut queue = VecDeque::new();

    let test = |t: Permutation, tested: &mut BTreeSet<Permutation>| -> Result<Option<Permutation>> {
        if tested.contains(&t) {
            return Ok(None);
        }
        tested.insert(t.clone());
        if tested.len() > cap {
            return Err(Error::SearchBudgetExceeded { tested: tested.len(), cap });
        }
        Ok(if chamber_feasible(source, &t)? { Some(t) } else { None })
    };

    for v in source.vertices() {
        if let Some(t) = test(v.sort_permutation(), &mut tested)? {
            found.insert(t.clone());
            queue.push_back(t);
        }
    }
    while let Some(t) = queue.pop_front() {
        for j in 0..m - 1 {
            let mut map = t.as_slice().to_vec();
            map.swap(j, j + 1);
            let neighbour = Permutation::from_map(map)?;
            if let Some(n) = test(neighbour, &mut tested)? {
                found.insert(n.clone());
                queue.push_back(n);
            }
        }
    }
    Ok(found.into_iter().collect())
}

/// Brute-force counterpart of [`find_folding_permutations`]: tests all `M!`
/// chambers. Only sensible for small alphabets.
pub fn enumerate_folding_permutations(source: &SourceSet) -> Result<Vec<Permutation>> {
    let mut out = Vec::new();
    for t in all_permutations(source.m()) {
        if chamber_feasible(source, &t)? {
            out.push(t);
        }
    }
    out.sort();
    Ok(out)
}

/// All permutations of `0..m` in lexicographic order.
pub fn all_permutations(m: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..m).collect();
    loop {
        out.push(Permutation::from_map(cur.clone()).expect("valid"));
        // next lexicographic permutation
        let Some(i) = (0..m.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..m).rev().find(|&j| cur[j] > cur[i]).expect("exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

pub fn classify(source: &SourceSet) -> Result<Classification> {
    if contains_uniform(source)? {
        return Ok(Classification::ClassI);
    }
    if let Some(ordering) = common_ordering(source) {
        return Ok(Classification::ClassII { ordering });
    }
    let folding = find_folding_permutations(source)?;
    if folding.len() == 1 {
        // the greedy test disagreed with the LPs only by round-off
        return Ok(Classification::ClassII { ordering: folding[0].clone() });
    }
    let cap_nonempty = cap_cup_oracles(source, &folding).max_over_cap(&vec![0.0; source.m()])?.is_some();
    Ok(Classification::ClassIII { folding, cap_nonempty })
}

/// Maximizer of a linear functional over a folded region.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedMax {
    pub value: f64,
    /// A maximizing point in the decreasing chamber.
    pub point: Vec<f64>,
}

/// Linear-functional maximization over the folded pieces of a source set.
///
/// The folded piece of chamber `T` is `{ gather_T(P) : P in hull, P in chamber T }`,
/// a subset of the decreasing chamber. The cup is their union and the cap their
/// intersection; neither is materialized.
#[derive(Debug, Clone)]
pub struct FoldedOracles<'a> {
    source: &'a SourceSet,
    folding: &'a [Permutation],
}

pub fn cap_cup_oracles<'a>(source: &'a SourceSet, folding: &'a [Permutation]) -> FoldedOracles<'a> {
    FoldedOracles { source, folding }
}

impl<'a> FoldedOracles<'a> {
    pub fn m(&self) -> usize {
        self.source.m()
    }

    pub fn folding(&self) -> &[Permutation] {
        self.folding
    }

    /// `max c·P̄` over the folded piece of `t`; `None` when the piece is empty.
    pub fn max_over_piece(&self, t: &Permutation, c: &[f64]) -> Result<Option<FoldedMax>> {
        self.check(c)?;
        let n = self.source.len();
        let mut lp = hull_program(self.source, 0);
        add_chamber_rows(&mut lp, self.source, t, 0);
        let folded: Vec<Vec<f64>> = self.source.vertices().iter().map(|v| t.gather(v.probs())).collect();
        lp.set_objective(folded.iter().map(|f| -dot(f, c)).collect());
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => Err(Error::NumericalFailure("piece LP unbounded".into())),
            LpStatus::Optimal => {
                let mut point = vec![0.0; self.m()];
                for k in 0..n {
                    for (p, f) in point.iter_mut().zip(&folded[k]) {
                        *p += sol.point[k] * f;
                    }
                }
                Ok(Some(FoldedMax { value: dot(&point, c), point }))
            }
        }
    }

    /// `max c·P̄` over the union of the folded pieces.
    pub fn max_over_cup(&self, c: &[f64]) -> Result<Option<FoldedMax>> {
        let mut best: Option<FoldedMax> = None;
        for t in self.folding {
            if let Some(hit) = self.max_over_piece(t, c)? {
                if best.as_ref().is_none_or(|b| hit.value > b.value) {
                    best = Some(hit);
                }
            }
        }
        Ok(best)
    }

    /// `max c·P̄` over the intersection of the folded pieces; `None` when it
    /// is empty.
    ///
    /// One LP: `P̄` sorted decreasingly, and for every `T` a block of weights
    /// reproducing `scatter_T(P̄)` as a point of the hull.
    pub fn max_over_cap(&self, c: &[f64]) -> Result<Option<FoldedMax>> {
        self.check(c)?;
        let m = self.m();
        let n = self.source.len();
        let width = m + n * self.folding.len();
        let mut obj = vec![0.0; width];
        for j in 0..m {
            obj[j] = -c[j];
        }
        let mut lp = LinearProgram::new(obj);
        for j in 0..m {
            lp.set_bounds(j, 0.0, 1.0);
        }
        for j in 0..m - 1 {
            let mut row = vec![0.0; width];
            row[j] = 1.0;
            row[j + 1] = -1.0;
            lp.add_ge(row, 0.0);
        }
        for (b, t) in self.folding.iter().enumerate() {
            let off = m + b * n;
            let mut row = vec![0.0; width];
            row[off..off + n].iter_mut().for_each(|x| *x = 1.0);
            lp.add_eq(row, 1.0);
            for j in 0..m {
                let mut row = vec![0.0; width];
                for (k, v) in self.source.vertices().iter().enumerate() {
                    row[off + k] = v.probs()[t.apply(j)];
                }
                row[j] = -1.0;
                lp.add_eq(row, 0.0);
            }
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Infeasible => Ok(None),
            LpStatus::Unbounded => Err(Error::NumericalFailure("cap LP unbounded".into())),
            LpStatus::Optimal => {
                let point = sol.point[..m].to_vec();
                Ok(Some(FoldedMax { value: dot(&point, c), point }))
            }
        }
    }

    fn check(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.m() {
            return Err(Error::DimensionMismatch { expected: self.m(), found: c.len() });
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    crate::math::dot(a, b)
}

/// Orbits of the group generated by `perms` acting on `0..m`, each sorted,
/// listed by smallest element.
pub fn orbits(m: usize, perms: &[Permutation]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for t in perms {
        for i in 0..m {
            let (a, b) = (find(&mut parent, i), find(&mut parent, t.apply(i)));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of = vec![usize::MAX; m];
    for i in 0..m {
        let r = find(&mut parent, i);
        if root_of[r] == usize::MAX {
            root_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_of[r]].push(i);
    }
    groups
}

/// Sorted view of a distribution (the point it folds to).
pub fn fold(p: &Distribution) -> Vec<f64> {
    p.sort_permutation().gather(p.probs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::make_source_set;

    const TABLE1: [f64; 6] = [0.7, 0.15, 0.06, 0.04, 0.03, 0.02];

    fn table3a() -> SourceSet {
        make_source_set(vec![TABLE1.to_vec(), vec![0.15, 0.7, 0.06, 0.04, 0.03, 0.02]]).unwrap()
    }

    #[test]
    fn class_examples() {
        let s = make_source_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(classify(&s).unwrap(), Classification::ClassI);

        let s = make_source_set(vec![TABLE1.to_vec()]).unwrap();
        assert_eq!(classify(&s).unwrap(), Classification::ClassII { ordering: Permutation::identity(6) });

        match classify(&table3a()).unwrap() {
            Classification::ClassIII { folding, cap_nonempty } => {
                assert_eq!(folding, vec![Permutation::identity(6), Permutation::swap(6, 0, 1).unwrap()]);
                assert!(cap_nonempty);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ordering_ties_prefer_identity() {
        let s = make_source_set(vec![vec![0.25, 0.4, 0.25, 0.1]]).unwrap();
        match classify(&s).unwrap() {
            Classification::ClassII { ordering } => assert_eq!(ordering.as_slice(), &[1, 0, 2, 3]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn folding_single_vertex() {
        let s = make_source_set(vec![TABLE1.to_vec()]).unwrap();
        assert_eq!(find_folding_permutations(&s).unwrap(), vec![Permutation::identity(6)]);
    }

    #[test]
    fn folding_segment_matches_enumeration() {
        let s = make_source_set(vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]]).unwrap();
        let bfs = find_folding_permutations(&s).unwrap();
        let all = enumerate_folding_permutations(&s).unwrap();
        assert_eq!(bfs, all);
        // 123, 132 through the tie 2 = 3 at the midpoint, 312, 321: the segment
        // passes through (0.35, 0.3, 0.35) where 1 and 3 tie and 2 sits between.
        let images: Vec<Vec<usize>> = bfs.iter().map(|t| t.to_one_based()).collect();
        assert_eq!(images, vec![vec![1, 2, 3], vec![1, 3, 2], vec![3, 1, 2], vec![3, 2, 1]]);
    }

    #[test]
    fn permutations_are_lexicographic() {
        let p = all_permutations(3);
        assert_eq!(p.len(), 6);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cap_cup_identity_only() {
        let s = make_source_set(vec![TABLE1.to_vec()]).unwrap();
        let f = vec![Permutation::identity(6)];
        let o = cap_cup_oracles(&s, &f);
        let c = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert!((o.max_over_cup(&c).unwrap().unwrap().value - 0.02).abs() < 1e-12);
        assert!((o.max_over_cap(&c).unwrap().unwrap().value - 0.02).abs() < 1e-12);
    }

    #[test]
    fn cap_of_symmetric_pair() {
        let s = make_source_set(vec![vec![0.5, 0.3, 0.2], vec![0.3, 0.5, 0.2]]).unwrap();
        let f = find_folding_permutations(&s).unwrap();
        assert_eq!(f.len(), 2);
        let o = cap_cup_oracles(&s, &f);
        let cap = o.max_over_cap(&[1.0, 0.0, 0.0]).unwrap().unwrap();
        assert!((cap.value - 0.5).abs() < 1e-12);
        let cup = o.max_over_cup(&[1.0, 0.0, 0.0]).unwrap().unwrap();
        assert!((cup.value - 0.5).abs() < 1e-12);
        // both folded pieces are the segment from (0.4, 0.4, 0.2) to (0.5, 0.3, 0.2)
        let low = o.max_over_cap(&[-1.0, 0.0, 0.0]).unwrap().unwrap();
        assert!((low.value + 0.4).abs() < 1e-12);
    }

    #[test]
    fn cap_empty_when_folded_pieces_cycle() {
        // The segment crosses chambers 123 -> 213 -> 231; its three folded
        // pieces form a triangle with no common point.
        let s = make_source_set(vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.5, 0.3]]).unwrap();
        let f = find_folding_permutations(&s).unwrap();
        assert_eq!(f.len(), 3);
        let o = cap_cup_oracles(&s, &f);
        assert!(o.max_over_cap(&[1.0, 0.0, 0.0]).unwrap().is_none());
        assert!(o.max_over_cup(&[1.0, 0.0, 0.0]).unwrap().is_some());
        match classify(&s).unwrap() {
            Classification::ClassIII { cap_nonempty, .. } => assert!(!cap_nonempty),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn orbit_partition() {
        let t = Permutation::swap(6, 0, 1).unwrap();
        let u = Permutation::swap(6, 0, 2).unwrap();
        assert_eq!(orbits(6, &[Permutation::identity(6)]), vec![vec![0], vec![1], vec![2], vec![3], vec![4], vec![5]]);
        assert_eq!(orbits(6, &[t.clone()]), vec![vec![0, 1], vec![2], vec![3], vec![4], vec![5]]);
        assert_eq!(orbits(6, &[t, u]), vec![vec![0, 1, 2], vec![3], vec![4], vec![5]]);
    }
}
