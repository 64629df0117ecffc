//! Domain types: distributions, permutations, source sets, mechanisms and
//! leakage values.
//!
//! Symbols are 0-based everywhere in code. Anything printed for people
//! (permutation cycles, orderings) is 1-based.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::dot;
use crate::{ENTRY_TOL, SUM_TOL};

/// A probability vector over an alphabet of size `M >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates `probs` and renormalizes away round-off.
    ///
    /// Entries may undershoot 0 or overshoot 1 by at most [`ENTRY_TOL`], and
    /// the sum may be off by at most [`SUM_TOL`]; anything worse is rejected.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::NotADistribution(alloc::format!(
                "alphabet size {} is below 2",
                probs.len()
            )));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < -ENTRY_TOL || p > 1.0 + ENTRY_TOL {
                return Err(Error::NotADistribution(alloc::format!("entry {} = {p} is out of [0, 1]", i + 1)));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::NotADistribution(alloc::format!("entries sum to {sum}")));
        }
        let mut probs = probs;
        for p in probs.iter_mut() {
            *p = p.clamp(0.0, 1.0);
        }
        // a sum within round-off of 1 is left alone so that rebuilding from
        // a validated vector is exact
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-14 {
            for p in probs.iter_mut() {
                *p /= sum;
            }
        }
        Ok(Distribution { probs })
    }

    /// The uniform distribution on `m` symbols.
    pub fn uniform(m: usize) -> Result<Self> {
        Distribution::new(vec![1.0 / m as f64; m])
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Largest coordinate-wise difference.
    pub fn linf_distance(&self, other: &Distribution) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Indices sorted by decreasing probability; ties keep index order.
    pub fn sort_permutation(&self) -> Permutation {
        let mut idx: Vec<usize> = (0..self.m()).collect();
        idx.sort_by(|&a, &b| self.probs[b].partial_cmp(&self.probs[a]).unwrap().then(a.cmp(&b)));
        Permutation { map: idx }
    }

    /// Sum of the `k` last coordinates.
    pub fn tail_sum(&self, k: usize) -> f64 {
        self.probs[self.m() - k..].iter().sum()
    }
}

/// A bijection on `{0, ..., M-1}`, stored as `map[i] = T(i)`.
///
/// Acting on a distribution, `T(P)` is the vector `R` with `R[T(i)] = P[i]`.
/// An *ordering* permutation lists symbols by decreasing probability, so
/// `P[T(0)] >= P[T(1)] >= ...`; [`Permutation::gather`] reads a vector in that
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(m: usize) -> Self {
        Permutation { map: (0..m).collect() }
    }

    /// Transposition of the 0-based symbols `a` and `b`.
    pub fn swap(m: usize, a: usize, b: usize) -> Result<Self> {
        if a >= m || b >= m {
            return Err(Error::InvalidPermutation(alloc::format!("swap({a}, {b}) outside 0..{m}")));
        }
        let mut map: Vec<usize> = (0..m).collect();
        map.swap(a, b);
        Ok(Permutation { map })
    }

    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let m = map.len();
        let mut seen = vec![false; m];
        for &j in &map {
            if j >= m || seen[j] {
                return Err(Error::InvalidPermutation(alloc::format!("{map:?} is not a bijection")));
            }
            seen[j] = true;
        }
        Ok(Permutation { map })
    }

    /// Builds from a 1-based image list such as `[2, 1, 3]`.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.iter().any(|&j| j == 0) {
            return Err(Error::InvalidPermutation("1-based images must be positive".to_string()));
        }
        Permutation::from_map(images.iter().map(|j| j - 1).collect())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.map.iter().map(|j| j + 1).collect()
    }

    /// `T(i)`.
    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    /// `T^{-1}(j)`.
    pub fn inverse_apply(&self, j: usize) -> usize {
        self.map.iter().position(|&x| x == j).expect("permutation is a bijection")
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { map: inv }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation { map: other.map.iter().map(|&i| self.map[i]).collect() }
    }

    /// `R[T(i)] = P[i]`.
    pub fn permute(&self, p: &Distribution) -> Result<Distribution> {
        self.check_len(p.m())?;
        Ok(Distribution { probs: self.scatter(p.probs()) })
    }

    /// `out[T(i)] = x[i]`.
    pub fn scatter(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for (i, &v) in x.iter().enumerate() {
            out[self.map[i]] = v;
        }
        out
    }

    /// `out[i] = x[T(i)]`, the inverse of [`Permutation::scatter`].
    pub fn gather(&self, x: &[f64]) -> Vec<f64> {
        self.map.iter().map(|&j| x[j]).collect()
    }

    /// Permutes rows and columns together: `Q'(T(j) | T(i)) = Q(j | i)`.
    pub fn relabel(&self, q: &Mechanism) -> Result<Mechanism> {
        self.check_len(q.m())?;
        let m = q.m();
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                data[self.map[i] * m + self.map[j]] = q.get(i, j);
            }
        }
        Ok(Mechanism { m, data })
    }

    fn check_len(&self, m: usize) -> Result<()> {
        if m != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: m });
        }
        Ok(())
    }
}

/// Cycle notation with 1-based symbols, `id` for the identity.
impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("id");
        }
        let mut seen = vec![false; self.len()];
        for start in 0..self.len() {
            if seen[start] || self.map[start] == start {
                continue;
            }
            f.write_str("(")?;
            let mut i = start;
            let mut first = true;
            while !seen[i] {
                seen[i] = true;
                if !first {
                    f.write_str(" ")?;
                }
                write!(f, "{}", i + 1)?;
                first = false;
                i = self.map[i];
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Convex hull of a nonempty list of distributions on a common alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSet {
    m: usize,
    vertices: Vec<Distribution>,
}

/// Vertices closer than this in L∞ are considered duplicates.
const DEDUP_TOL: f64 = 1e-12;

/// Validates raw probability vectors and drops duplicates, keeping the first
/// occurrence of each.
pub fn make_source_set(vertices: Vec<Vec<f64>>) -> Result<SourceSet> {
    let dists = vertices.into_iter().map(Distribution::new).collect::<Result<Vec<_>>>()?;
    SourceSet::new(dists)
}

impl SourceSet {
    pub fn new(vertices: Vec<Distribution>) -> Result<Self> {
        let first = vertices.first().ok_or(Error::EmptySourceSet)?;
        let m = first.m();
        let mut kept: Vec<Distribution> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if v.m() != m {
                return Err(Error::DimensionMismatch { expected: m, found: v.m() });
            }
            if kept.iter().all(|k| k.linf_distance(&v) > DEDUP_TOL) {
                kept.push(v);
            }
        }
        Ok(SourceSet { m, vertices: kept })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn vertices(&self) -> &[Distribution] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Applies `T` to every vertex (`R[T(i)] = P[i]`).
    pub fn permute(&self, t: &Permutation) -> Result<SourceSet> {
        let vertices = self.vertices.iter().map(|v| t.permute(v)).collect::<Result<Vec<_>>>()?;
        Ok(SourceSet { m: self.m, vertices })
    }

    /// Reads every vertex in the order given by `t` (`R[i] = P[T(i)]`).
    pub fn gather(&self, t: &Permutation) -> Result<SourceSet> {
        self.permute(&t.inverse())
    }

    /// Largest value of the linear functional `c` over the hull.
    pub fn max_linear(&self, c: &[f64]) -> f64 {
        self.vertices.iter().map(|v| dot(v.probs(), c)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Row-stochastic `M x M` matrix with entry `(i, j) = Q(j | i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    m: usize,
    data: Vec<f64>,
}

impl Mechanism {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m < 2 {
            return Err(Error::NotAMechanism(alloc::format!("alphabet size {m} is below 2")));
        }
        let mut data = Vec::with_capacity(m * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: row.len() });
            }
            data.extend(row);
        }
        Mechanism::from_flat(m, data)
    }

    /// Row-major constructor; validates like [`Mechanism::new`].
    pub fn from_flat(m: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != m * m {
            return Err(Error::DimensionMismatch { expected: m * m, found: data.len() });
        }
        for i in 0..m {
            let row = &mut data[i * m..(i + 1) * m];
            for (j, x) in row.iter_mut().enumerate() {
                if !x.is_finite() || *x < -ENTRY_TOL || *x > 1.0 + ENTRY_TOL {
                    return Err(Error::NotAMechanism(alloc::format!(
                        "entry ({}, {}) = {x} is out of [0, 1]",
                        i + 1,
                        j + 1
                    )));
                }
                *x = x.clamp(0.0, 1.0);
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(Error::NotAMechanism(alloc::format!("row {} sums to {sum}", i + 1)));
            }
        }
        Ok(Mechanism { m, data })
    }

    pub fn identity(m: usize) -> Self {
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            data[i * m + i] = 1.0;
        }
        Mechanism { m, data }
    }

    /// Every row equal to the uniform distribution.
    pub fn uniform(m: usize) -> Self {
        Mechanism { m, data: vec![1.0 / m as f64; m * m] }
    }

    /// Every input mapped to the output symbol `target`.
    pub fn constant(m: usize, target: usize) -> Self {
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            data[i * m + target] = 1.0;
        }
        Mechanism { m, data }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `Q(j | i)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.m).map(move |i| self.get(i, j))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.m).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// `D_i = 1 - Q(i | i)`.
    pub fn distortion_vector(&self) -> Vec<f64> {
        (0..self.m).map(|i| 1.0 - self.get(i, i)).collect()
    }

    /// Convex combination `theta * self + (1 - theta) * other`.
    pub fn mix(&self, other: &Mechanism, theta: f64) -> Result<Mechanism> {
        if self.m != other.m {
            return Err(Error::DimensionMismatch { expected: self.m, found: other.m });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
        Ok(Mechanism { m: self.m, data })
    }
}

/// A leakage in nats; differential-privacy leakage can be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeakageValue {
    Finite(f64),
    Infinite,
}

impl LeakageValue {
    /// Clamps round-off below zero; leakage is never negative.
    pub fn finite(x: f64) -> Self {
        if x.is_infinite() {
            LeakageValue::Infinite
        } else {
            LeakageValue::Finite(x.max(0.0))
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            LeakageValue::Finite(x) => x,
            LeakageValue::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, LeakageValue::Finite(_))
    }

    /// Value converted to logarithm base `base` (e.g. 2 for bits).
    pub fn in_base(&self, base: f64) -> f64 {
        self.value() / crate::math::ln(base)
    }
}

impl fmt::Display for LeakageValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LeakageValue::Finite(x) => write!(f, "{x}"),
            LeakageValue::Infinite => f.write_str("inf"),
        }
    }
}

/// `sum_i P_i (1 - Q(i | i))`.
pub fn expected_distortion(p: &Distribution, q: &Mechanism) -> Result<f64> {
    if p.m() != q.m() {
        return Err(Error::DimensionMismatch { expected: q.m(), found: p.m() });
    }
    Ok(p.probs().iter().enumerate().map(|(i, &pi)| pi * (1.0 - q.get(i, i))).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: [f64; 6] = [0.7, 0.15, 0.06, 0.04, 0.03, 0.02];

    #[test]
    fn source_set_validation() {
        let s = make_source_set(vec![vec![0.7, 0.3]]).unwrap();
        assert_eq!((s.len(), s.m()), (1, 2));

        let s = make_source_set(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(s.len(), 1);

        let s = make_source_set(vec![TABLE1.to_vec()]).unwrap();
        assert_eq!(s.m(), 6);

        assert_eq!(
            make_source_set(vec![vec![0.5, 0.5], vec![0.2, 0.3, 0.5]]),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        );
        assert!(matches!(make_source_set(vec![vec![0.6, 0.6]]), Err(Error::NotADistribution(_))));
        assert!(matches!(make_source_set(vec![vec![1.1, -0.1]]), Err(Error::NotADistribution(_))));
        assert_eq!(make_source_set(vec![]), Err(Error::EmptySourceSet));
        assert!(matches!(make_source_set(vec![vec![1.0]]), Err(Error::NotADistribution(_))));
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let d = Distribution::new(vec![0.5 + 4e-10, 0.5]).unwrap();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn permutation_action() {
        let p = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(Permutation::identity(3).permute(&p).unwrap(), p);

        let p = Distribution::new(TABLE1.to_vec()).unwrap();
        let r = Permutation::swap(6, 0, 1).unwrap().permute(&p).unwrap();
        assert_eq!(r.probs(), &[0.15, 0.7, 0.06, 0.04, 0.03, 0.02]);
        let r = Permutation::swap(6, 0, 2).unwrap().permute(&p).unwrap();
        assert_eq!(r.probs(), &[0.06, 0.15, 0.7, 0.04, 0.03, 0.02]);

        assert!(matches!(
            Permutation::identity(3).permute(&Distribution::new(vec![0.5, 0.5]).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn permutation_inverse_and_display() {
        let t = Permutation::from_one_based(&[2, 3, 1]).unwrap();
        for j in 0..3 {
            assert_eq!(t.apply(t.inverse_apply(j)), j);
        }
        assert!(t.compose(&t.inverse()).is_identity());
        assert_eq!(alloc::format!("{t}"), "(1 2 3)");
        assert_eq!(alloc::format!("{}", Permutation::swap(6, 0, 1).unwrap()), "(1 2)");
        assert_eq!(alloc::format!("{}", Permutation::identity(4)), "id");
        assert!(Permutation::from_map(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
    }

    #[test]
    fn distortion_examples() {
        let p = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert_eq!(expected_distortion(&p, &Mechanism::identity(3)).unwrap(), 0.0);

        let q = crate::symmetric_mechanism(3, 0.3).unwrap();
        assert!((expected_distortion(&p, &q).unwrap() - 0.3).abs() < 1e-15);

        let q = Mechanism::new(vec![
            vec![0.6875, 0.3125, 0.0],
            vec![0.3125, 0.6875, 0.0],
            vec![0.3125, 0.6875, 0.0],
        ])
        .unwrap();
        // 0.8 * 0.3125 + 0.2 * 1
        assert!((expected_distortion(&p, &q).unwrap() - 0.45).abs() < 1e-15);
        assert_eq!(q.distortion_vector(), vec![0.3125, 0.3125, 1.0]);
    }

    #[test]
    fn mechanism_validation() {
        assert!(matches!(Mechanism::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]]), Err(Error::NotAMechanism(_))));
        assert!(matches!(Mechanism::new(vec![vec![1.5, -0.5], vec![0.5, 0.5]]), Err(Error::NotAMechanism(_))));
        assert!(matches!(Mechanism::new(vec![vec![1.0, 0.0], vec![0.5]]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn tail_sums_and_sorting() {
        let p = Distribution::new(vec![0.2, 0.5, 0.3]).unwrap();
        assert_eq!(p.sort_permutation().as_slice(), &[1, 2, 0]);
        assert!((p.tail_sum(2) - 0.8).abs() < 1e-15);
        let sorted = p.sort_permutation().gather(p.probs());
        assert_eq!(sorted, vec![0.5, 0.3, 0.2]);
    }
}
