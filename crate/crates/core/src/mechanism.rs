//! Mechanism-level computations: ε-DP of a matrix, `(P, D)`-validity, the
//! symmetric mechanism and the optimal construction with `k` suppressed
//! output symbols.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::ln;
use crate::types::{expected_distortion, LeakageValue, Mechanism, SourceSet};
use crate::VALIDITY_TOL;

/// Entries at or below this are treated as exact zeros by [`eps_dp`].
pub const ZERO_ENTRY: f64 = 1e-15;

/// Smallest ε with `Q(j|a) <= e^ε Q(j|b)` for all inputs `a, b` and outputs `j`.
///
/// A column mixing zero and nonzero entries makes the leakage infinite; an
/// all-zero column constrains nothing.
pub fn eps_dp(q: &Mechanism) -> LeakageValue {
    let mut worst = 0.0f64;
    for j in 0..q.m() {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let mut zeros = 0;
        for x in q.column(j) {
            if x <= ZERO_ENTRY {
                zeros += 1;
            } else {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
        if zeros == q.m() {
            continue;
        }
        if zeros > 0 {
            return LeakageValue::Infinite;
        }
        worst = worst.max(ln(hi / lo));
    }
    LeakageValue::finite(worst)
}

/// Outcome of checking a mechanism against every vertex of a source set.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub valid: bool,
    /// Index of the vertex with the largest expected distortion.
    pub worst_vertex: usize,
    pub worst_distortion: f64,
}

/// Expected distortion is linear in `P`, so the maximum over the hull is
/// attained at a vertex.
pub fn is_valid(q: &Mechanism, source: &SourceSet, d: f64) -> Result<ValidityReport> {
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(alloc::format!("distortion {d} is outside [0, 1]")));
    }
    let mut worst_vertex = 0;
    let mut worst_distortion = f64::NEG_INFINITY;
    for (idx, v) in source.vertices().iter().enumerate() {
        let dist = expected_distortion(v, q)?;
        if dist > worst_distortion {
            worst_distortion = dist;
            worst_vertex = idx;
        }
    }
    Ok(ValidityReport { valid: worst_distortion <= d + VALIDITY_TOL, worst_vertex, worst_distortion })
}

/// `1 - D` on the diagonal and `D / (M - 1)` elsewhere.
pub fn symmetric_mechanism(m: usize, d: f64) -> Result<Mechanism> {
    if m < 2 {
        return Err(Error::Domain(alloc::format!("alphabet size {m} is below 2")));
    }
    if !(0.0..=1.0).contains(&d) {
        return Err(Error::Domain(alloc::format!("distortion {d} is outside [0, 1]")));
    }
    let off = d / (m - 1) as f64;
    let mut data = vec![off; m * m];
    for i in 0..m {
        data[i * m + i] = 1.0 - d;
    }
    Mechanism::from_flat(m, data)
}

/// Builds the mechanism that keeps the first `M - k` output symbols and
/// suppresses the last `k`.
///
/// Within the kept block row `i` puts `1 - d_i` on the diagonal and spreads
/// `d_i` over the other kept columns in proportion to their diagonal mass;
/// the suppressed inputs reuse the last kept row. For ascending `dstar` the
/// resulting leakage is `ln((M-1-k - sum_{i>=2} d_i) / d_1)`.
///
/// `k = M - 1` is the degenerate map-everything-to-symbol-1 mechanism and
/// needs `dstar = [0]`.
pub fn construct_optimal_mechanism(dstar: &[f64], k: usize, m: usize) -> Result<Mechanism> {
    if m < 2 || k >= m {
        return Err(Error::Domain(alloc::format!("need M >= 2 and k < M, got M = {m}, k = {k}")));
    }
    let n = m - k;
    if dstar.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: dstar.len() });
    }
    if dstar.iter().any(|&d| !d.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&d)) {
        return Err(Error::Domain("distortions must lie in [0, 1]".to_string()));
    }
    if dstar.windows(2).any(|w| w[1] < w[0] - 1e-9) {
        return Err(Error::Domain("distortions must be sorted ascending".to_string()));
    }
    let d: Vec<f64> = dstar.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let budget = (m - 1 - k) as f64;
    let total: f64 = d.iter().sum();
    if total > budget + 1e-9 {
        return Err(Error::Domain(alloc::format!("distortions sum to {total} > M - 1 - k = {budget}")));
    }
    if n == 1 {
        if d[0] > 1e-12 {
            return Err(Error::Domain("with k = M - 1 the only valid distortion vector is [0]".to_string()));
        }
        return Ok(Mechanism::constant(m, 0));
    }
    if d[0] <= 0.0 {
        return Err(Error::Domain("smallest distortion must be positive".to_string()));
    }

    let keep: f64 = d.iter().map(|x| 1.0 - x).sum();
    let mut data = vec![0.0; m * m];
    for i in 0..n {
        let others = keep - (1.0 - d[i]);
        for j in 0..n {
            data[i * m + j] = if i == j {
                1.0 - d[i]
            } else if d[i] == 0.0 || others <= 0.0 {
                0.0
            } else {
                d[i] * (1.0 - d[j]) / others
            };
        }
    }
    for i in n..m {
        let (src, dst) = data.split_at_mut(i * m);
        dst[..m].copy_from_slice(&src[(n - 1) * m..n * m]);
    }
    Mechanism::from_flat(m, data)
}

/// Whether every within-column ratio of nonzero entries lies in
/// `{1, c, 1/c}` for a single constant `c` (relative tolerance `tol`).
pub fn is_staircase(q: &Mechanism, tol: f64) -> bool {
    let mut c: Option<f64> = None;
    for j in 0..q.m() {
        let col: Vec<f64> = q.column(j).filter(|&x| x > ZERO_ENTRY).collect();
        for (a, &x) in col.iter().enumerate() {
            for &y in &col[a + 1..] {
                let r = if x >= y { x / y } else { y / x };
                if (r - 1.0).abs() <= tol {
                    continue;
                }
                match c {
                    None => c = Some(r),
                    Some(c) if (r / c - 1.0).abs() <= tol => {}
                    Some(_) => return false,
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{make_source_set, Permutation};

    fn ln22_mechanism() -> Mechanism {
        Mechanism::new(vec![vec![0.6875, 0.3125, 0.0], vec![0.3125, 0.6875, 0.0], vec![0.3125, 0.6875, 0.0]]).unwrap()
    }

    #[test]
    fn eps_examples() {
        assert_eq!(eps_dp(&Mechanism::uniform(4)), LeakageValue::Finite(0.0));
        assert_eq!(eps_dp(&Mechanism::identity(3)), LeakageValue::Infinite);
        let e = eps_dp(&ln22_mechanism()).value();
        assert!((e - 2.2f64.ln()).abs() < 1e-12);
        assert!((e - 0.788457).abs() < 1e-6);
    }

    #[test]
    fn symmetric_examples() {
        let e = eps_dp(&symmetric_mechanism(3, 0.25).unwrap()).value();
        assert!((e - 6f64.ln()).abs() < 1e-12 && (e - 1.791759).abs() < 1e-6);
        for m in 2..8 {
            let d = (m - 1) as f64 / m as f64;
            assert!(eps_dp(&symmetric_mechanism(m, d).unwrap()).value() < 1e-12);
        }
        let e = eps_dp(&symmetric_mechanism(6, 0.3).unwrap()).value();
        assert!((e - (35.0f64 / 3.0).ln()).abs() < 1e-12 && (e - 2.456736).abs() < 1e-6);
        assert!(matches!(symmetric_mechanism(3, 1.5), Err(Error::Domain(_))));
        assert!(matches!(symmetric_mechanism(3, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn validity_examples() {
        let s = make_source_set(vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.1, 0.8]]).unwrap();
        let q = symmetric_mechanism(3, 0.3).unwrap();
        let r = is_valid(&q, &s, 0.3).unwrap();
        assert!(r.valid && (r.worst_distortion - 0.3).abs() < 1e-12);
        assert!(!is_valid(&q, &s, 0.29).unwrap().valid);

        let s = make_source_set(vec![vec![0.5, 0.3, 0.2]]).unwrap();
        let r = is_valid(&ln22_mechanism(), &s, 0.45).unwrap();
        assert!(r.valid && (r.worst_distortion - 0.45).abs() < 1e-12);

        let r = is_valid(&Mechanism::identity(3), &s, 0.0).unwrap();
        assert!(r.valid && r.worst_distortion == 0.0);

        let s2 = make_source_set(vec![vec![0.5, 0.5]]).unwrap();
        assert!(matches!(is_valid(&Mechanism::identity(3), &s2, 0.1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn construction_examples() {
        let q = construct_optimal_mechanism(&[0.3125, 0.3125], 1, 3).unwrap();
        for (a, b) in q.as_flat().iter().zip(ln22_mechanism().as_flat()) {
            assert!((a - b).abs() < 1e-15);
        }

        let d = 0.2;
        let q = construct_optimal_mechanism(&[d, d], 0, 2).unwrap();
        let s = symmetric_mechanism(2, d).unwrap();
        for (a, b) in q.as_flat().iter().zip(s.as_flat()) {
            assert!((a - b).abs() < 1e-15);
        }

        let q = construct_optimal_mechanism(&[0.0], 2, 3).unwrap();
        assert_eq!(q, Mechanism::constant(3, 0));
        assert_eq!(eps_dp(&q), LeakageValue::Finite(0.0));
        assert!(construct_optimal_mechanism(&[0.3], 2, 3).is_err());
    }

    #[test]
    fn construction_leakage_formula() {
        let dstar = [0.1, 0.2, 0.25, 0.4];
        let (m, k) = (6, 2);
        let q = construct_optimal_mechanism(&dstar, k, m).unwrap();
        let n = (m - 1 - k) as f64;
        let expected = ((n - dstar[1..].iter().sum::<f64>()) / dstar[0]).ln();
        assert!((eps_dp(&q).value() - expected).abs() < 1e-9);
        let dv = q.distortion_vector();
        for (i, &di) in dstar.iter().enumerate() {
            assert!((dv[i] - di).abs() < 1e-12);
        }
        assert!(dv[4..].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn construction_preconditions() {
        assert!(matches!(construct_optimal_mechanism(&[0.3, 0.2], 1, 3), Err(Error::Domain(_))));
        assert!(matches!(construct_optimal_mechanism(&[0.0, 0.2], 1, 3), Err(Error::Domain(_))));
        assert!(matches!(construct_optimal_mechanism(&[0.9, 0.9], 1, 3), Err(Error::Domain(_))));
        assert!(matches!(construct_optimal_mechanism(&[0.2], 1, 3), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(construct_optimal_mechanism(&[0.2], 3, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn staircase_examples() {
        assert!(is_staircase(&symmetric_mechanism(4, 0.3).unwrap(), 1e-9));
        assert!(is_staircase(&ln22_mechanism(), 1e-9));
        let q = Mechanism::new(vec![vec![0.5, 0.5, 0.0], vec![0.3, 0.7, 0.0], vec![0.2, 0.8, 0.0]]).unwrap();
        assert!(!is_staircase(&q, 1e-9));
    }

    #[test]
    fn relabel_keeps_leakage() {
        let q = ln22_mechanism();
        let t = Permutation::from_one_based(&[3, 1, 2]).unwrap();
        let r = t.relabel(&q).unwrap();
        assert!((eps_dp(&r).value() - eps_dp(&q).value()).abs() < 1e-15);
    }
}
