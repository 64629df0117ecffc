//! Optimal mutual-information leakage
//! `min_Q max_{P in hull} I(P; Q)` over mechanisms meeting the distortion
//! budget at every vertex.
//!
//! The solver works on the Lagrangian dual. For a distribution `P` and
//! vertex multipliers `s >= 0`,
//!
//! ```text
//! G(P, s) = min_Q I(P; Q) + sum_v s_v (sum_i v_i (1 - Q(i|i)) - D)
//! ```
//!
//! is jointly concave, and `max_{P, s} G` equals the optimal leakage. The
//! inner minimum has a closed form up to a water-filling step on the output
//! marginal. Any `(P, s)` gives a lower bound; any valid mechanism gives an
//! upper bound through a Frank–Wolfe maximization of `I(·; Q)` over the hull,
//! whose duality gap certifies the maximum. The solver alternates between the
//! two until they meet.
//!
//! Witness distributions (initially the vertices) parametrize `P`. Worst-case
//! distributions found on the primal side are added as witnesses; they lie in
//! the hull already but give the dual ascent a direct direction towards them.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::math::{binary_entropy, expm1, golden_max, ln, xlnx};
use crate::mechanism::symmetric_mechanism;
use crate::types::{Distribution, Mechanism, SourceSet};

pub const DEFAULT_TOL: f64 = 1e-4;

const MAX_ROUNDS: usize = 10_000;
const SWEEPS_PER_ROUND: usize = 40;
const FW_ITERS: usize = 4000;
/// Cap on `KL(Q_i || q)` when `q` vanishes where `Q_i` does not.
const KL_CAP: f64 = 1e3;
const GOLDEN_ITERS: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct ItSolution {
    /// `I(worst_distribution; mechanism)` in nats.
    pub leakage: f64,
    /// Certified upper bound minus dual lower bound at termination.
    pub saddle_gap: f64,
    pub lower: f64,
    pub upper: f64,
    pub worst_distribution: Distribution,
    pub mechanism: Mechanism,
    pub rounds: usize,
}

/// `I(P; Q)` in nats.
pub fn mutual_information(p: &Distribution, q: &Mechanism) -> Result<f64> {
    if p.m() != q.m() {
        return Err(Error::DimensionMismatch { expected: q.m(), found: p.m() });
    }
    Ok(mi_flat(p.probs(), q.as_flat()))
}

fn marginal(p: &[f64], q: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut out = vec![0.0; m];
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            for j in 0..m {
                out[j] += pi * q[i * m + j];
            }
        }
    }
    out
}

fn mi_flat(p: &[f64], q: &[f64]) -> f64 {
    let m = p.len();
    let out = marginal(p, q);
    let mut total = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        if pi <= 0.0 {
            continue;
        }
        for j in 0..m {
            let x = q[i * m + j];
            if x > 0.0 {
                total += pi * x * ln(x / out[j]);
            }
        }
    }
    total.max(0.0)
}

/// `KL(Q_i || q)` for every row, capped.
fn row_divergences(q: &[f64], out: &[f64]) -> Vec<f64> {
    let m = out.len();
    (0..m)
        .map(|i| {
            let mut kl = 0.0;
            for j in 0..m {
                let x = q[i * m + j];
                if x > 0.0 {
                    if out[j] <= 0.0 {
                        return KL_CAP;
                    }
                    kl += x * ln(x / out[j]);
                }
            }
            kl.min(KL_CAP)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    crate::math::dot(a, b)
}

/// Closed form when the hull contains the uniform distribution:
/// `ln M - H(D) - D ln(M-1)` below `D = (M-1)/M`, zero above.
pub fn it_class1(m: usize, d: f64) -> Result<ItSolution> {
    if m < 2 {
        return Err(Error::Domain("alphabet size must be at least 2".into()));
    }
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::Domain(alloc::format!("distortion {d} outside (0, 1]")));
    }
    let mf = m as f64;
    let uniform = Distribution::uniform(m)?;
    if d >= (mf - 1.0) / mf {
        return Ok(ItSolution {
            leakage: 0.0,
            saddle_gap: 0.0,
            lower: 0.0,
            upper: 0.0,
            worst_distribution: uniform,
            mechanism: Mechanism::constant(m, 0),
            rounds: 0,
        });
    }
    let value = (ln(mf) - binary_entropy(d) - d * ln(mf - 1.0)).max(0.0);
    Ok(ItSolution {
        leakage: value,
        saddle_gap: 0.0,
        lower: value,
        upper: value,
        worst_distribution: uniform,
        mechanism: symmetric_mechanism(m, d)?,
        rounds: 0,
    })
}

/// Minimizer of `I(P; Q) + sum_i c_i (1 - Q(i|i))` and its value.
struct BestResponse {
    /// Row-major mechanism.
    q: Vec<f64>,
    value: f64,
}

/// Water-filling solution of the inner problem.
///
/// With `d_i = c_i / P_i`, `a_i = exp(-d_i)` and `b_i = 1 - a_i`, the optimal
/// rows are `Q(j|i) ∝ w_j exp(-d_i [j != i])` for an output law `w` that
/// maximizes `sum_i P_i ln(a_i + b_i w_i)` over the simplex, which gives
/// `w_i = max(0, P_i / nu - a_i / b_i)`.
///
/// `fallback` ranks symbols when no cost is active and `w` is arbitrary.
fn best_response(p: &[f64], c: &[f64], fallback: &[f64]) -> BestResponse {
    let m = p.len();
    let mut a = vec![1.0; m];
    let mut b = vec![0.0; m];
    let mut u = vec![0.0; m];
    let mut cand = Vec::new();
    for i in 0..m {
        if p[i] > 0.0 && c[i] > 0.0 {
            let d = c[i] / p[i];
            b[i] = -expm1(-d);
            a[i] = 1.0 - b[i];
            u[i] = a[i] / b[i];
            cand.push(i);
        }
    }
    let threshold = |i: usize| if u[i] > 0.0 { p[i] / u[i] } else { f64::INFINITY };

    let mut w = vec![0.0; m];
    if cand.is_empty() {
        let j = (0..m)
            .max_by(|&x, &y| {
                fallback[x].total_cmp(&fallback[y]).then(p[x].total_cmp(&p[y])).then(y.cmp(&x))
            })
            .unwrap_or(0);
        w[j] = 1.0;
    } else {
        cand.sort_by(|&x, &y| threshold(y).total_cmp(&threshold(x)).then(x.cmp(&y)));
        let (mut sp, mut su) = (0.0, 0.0);
        let mut nu = 0.0;
        let mut active = 0;
        for (r, &i) in cand.iter().enumerate() {
            sp += p[i];
            su += u[i];
            nu = sp / (1.0 + su);
            active = r + 1;
            if r + 1 == cand.len() || nu >= threshold(cand[r + 1]) {
                break;
            }
        }
        for &i in &cand[..active] {
            w[i] = (p[i] / nu - u[i]).max(0.0);
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
    }

    let mut q = vec![0.0; m * m];
    let mut value = 0.0;
    for i in 0..m {
        let row = &mut q[i * m..(i + 1) * m];
        if p[i] <= 0.0 {
            row[i] = 1.0;
        } else if c[i] <= 0.0 {
            row.copy_from_slice(&w);
        } else {
            let z = a[i] + b[i] * w[i];
            for j in 0..m {
                row[j] = if j == i { w[j] / z } else { w[j] * a[i] / z };
            }
            value -= p[i] * ln(z);
        }
    }
    BestResponse { q, value }
}

fn distortion(v: &[f64], q: &[f64]) -> f64 {
    let m = v.len();
    v.iter().enumerate().map(|(i, &vi)| vi * (1.0 - q[i * m + i])).sum::<f64>().max(0.0)
}

fn combine(points: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; points[0].len()];
    for (p, &w) in points.iter().zip(weights) {
        if w > 0.0 {
            for (o, x) in out.iter_mut().zip(p) {
                *o += w * x;
            }
        }
    }
    out
}

/// Dual state: witness weights and vertex multipliers.
struct Dual<'a> {
    vertices: &'a [Vec<f64>],
    column_mass: Vec<f64>,
    d: f64,
    witnesses: Vec<Vec<f64>>,
    lambda: Vec<f64>,
    s: Vec<f64>,
}

impl Dual<'_> {
    fn costs(&self, s: &[f64]) -> Vec<f64> {
        let m = self.column_mass.len();
        let mut c = vec![0.0; m];
        for (v, &sv) in self.vertices.iter().zip(s) {
            if sv > 0.0 {
                for (ci, vi) in c.iter_mut().zip(v) {
                    *ci += sv * vi;
                }
            }
        }
        c
    }

    fn eval(&self, lambda: &[f64], s: &[f64]) -> (f64, BestResponse) {
        let p = combine(&self.witnesses, lambda);
        let br = best_response(&p, &self.costs(s), &self.column_mass);
        let g = br.value - self.d * s.iter().sum::<f64>();
        (g, br)
    }

    fn value(&self) -> f64 {
        self.eval(&self.lambda, &self.s).0
    }

    /// Exact line search on one multiplier; the derivative
    /// `distortion_v(Q) - D` is nonincreasing.
    fn update_multiplier(&mut self, v: usize) {
        let mut s = self.s.clone();
        let slope = |this: &Self, s: &[f64]| {
            let (_, br) = this.eval(&this.lambda, s);
            distortion(&this.vertices[v], &br.q) - this.d
        };
        s[v] = 0.0;
        if slope(self, &s) <= 0.0 {
            self.s[v] = 0.0;
            return;
        }
        let mut lo = 0.0;
        let mut hi = self.s[v].max(1.0);
        loop {
            s[v] = hi;
            if slope(self, &s) <= 0.0 || hi > 1e12 {
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            s[v] = mid;
            if slope(self, &s) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // keep whichever end scores better
        let mut s_lo = self.s.clone();
        s_lo[v] = lo;
        let mut s_hi = self.s.clone();
        s_hi[v] = hi;
        let g_lo = self.eval(&self.lambda, &s_lo).0;
        let g_hi = self.eval(&self.lambda, &s_hi).0;
        self.s[v] = if g_hi >= g_lo { hi } else { lo };
    }

    /// One pairwise step moving weight between the witnesses with the best
    /// and worst first-order gain.
    fn update_weights(&mut self) -> bool {
        if self.witnesses.len() < 2 {
            return false;
        }
        let (_, br) = self.eval(&self.lambda, &self.s);
        let p = combine(&self.witnesses, &self.lambda);
        let out = marginal(&p, &br.q);
        let kl = row_divergences(&br.q, &out);
        let grad: Vec<f64> = self.witnesses.iter().map(|w| dot(w, &kl)).collect();
        let to = (0..grad.len()).max_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(b.cmp(&a))).unwrap();
        let Some(from) = (0..grad.len())
            .filter(|&k| self.lambda[k] > 0.0)
            .min_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(a.cmp(&b)))
        else {
            return false;
        };
        if to == from || grad[to] - grad[from] <= 1e-15 {
            return false;
        }
        let base = self.lambda.clone();
        let cap = base[from];
        let (t, _) = golden_max(
            |t| {
                let mut l = base.clone();
                l[from] -= t;
                l[to] += t;
                self.eval(&l, &self.s).0
            },
            0.0,
            cap,
            GOLDEN_ITERS,
        );
        if t <= 0.0 {
            return false;
        }
        self.lambda[from] = (base[from] - t).max(0.0);
        self.lambda[to] = base[to] + t;
        purge_small(&mut self.lambda);
        true
    }

    /// Leaves the kink at `s = 0` along `s = r·delta`, where `delta` is the
    /// steepest direction there: the minimizer over the simplex of
    /// `max_j sum_v delta_v v_j`.
    fn escape_origin(&mut self) -> Result<()> {
        let n = self.vertices.len();
        let m = self.column_mass.len();
        // variables: delta (n), z; minimize z s.t. sum_v delta_v v_j <= z
        let mut obj = vec![0.0; n + 1];
        obj[n] = 1.0;
        let mut lp = LinearProgram::new(obj);
        lp.set_free(n);
        let mut row = vec![1.0; n + 1];
        row[n] = 0.0;
        lp.add_eq(row, 1.0);
        for j in 0..m {
            let mut row: Vec<f64> = self.vertices.iter().map(|v| v[j]).collect();
            row.push(-1.0);
            lp.add_le(row, 0.0);
        }
        let sol = solve_lp(&lp)?;
        if !sol.is_optimal() {
            return Err(Error::NumericalFailure("escape direction LP failed".into()));
        }
        let delta: Vec<f64> = sol.point[..n].iter().map(|x| x.max(0.0)).collect();
        let at = |this: &Self, r: f64| {
            let s: Vec<f64> = delta.iter().map(|x| r * x).collect();
            this.eval(&this.lambda, &s).0
        };
        let mut hi = 1.0;
        while at(self, 2.0 * hi) > at(self, hi) && hi < 1e12 {
            hi *= 2.0;
        }
        let (r, g) = golden_max(|r| at(self, r), 0.0, 2.0 * hi, GOLDEN_ITERS);
        if g > 0.0 {
            self.s = delta.iter().map(|x| r * x).collect();
        }
        Ok(())
    }

    fn ascend(&mut self, sweeps: usize) -> Result<f64> {
        let mut g = self.value();
        for _ in 0..sweeps {
            if self.s.iter().all(|&x| x == 0.0) {
                self.escape_origin()?;
            }
            for v in 0..self.s.len() {
                self.update_multiplier(v);
            }
            for _ in 0..3 {
                if !self.update_weights() {
                    break;
                }
            }
            let next = self.value();
            let done = next - g <= 1e-15 * (1.0 + g.abs());
            g = next.max(g);
            if done {
                break;
            }
        }
        Ok(g)
    }

    fn mechanism(&self) -> Vec<f64> {
        self.eval(&self.lambda, &self.s).1.q
    }
}

/// `max_{P in hull} I(P; Q)` by pairwise Frank–Wolfe over vertex weights.
/// Returns the maximizer, its value and the certified upper bound
/// `value + gap`.
fn worst_case(vertices: &[Vec<f64>], q: &[f64], weights: &mut Vec<f64>, tol: f64) -> (Vec<f64>, f64, f64) {
    let n = vertices.len();
    let f = |w: &[f64]| mi_flat(&combine(vertices, w), q);
    let mut p = combine(vertices, weights);
    let mut value = f(weights);
    let mut gap = f64::INFINITY;
    for _ in 0..FW_ITERS {
        let out = marginal(&p, q);
        let g = row_divergences(q, &out);
        let scores: Vec<f64> = vertices
            .iter()
            .map(|v| v.iter().zip(&p).zip(&g).filter(|((a, b), _)| a != b).map(|((a, b), gi)| gi * (a - b)).sum())
            .collect();
        let to = (0..n).max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(b.cmp(&a))).unwrap();
        gap = scores[to].max(0.0);
        if gap <= tol || n == 1 {
            break;
        }
        let from = (0..n)
            .filter(|&k| weights[k] > 0.0)
            .min_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)))
            .unwrap();
        let base = weights.clone();
        let next = if from != to {
            let (t, _) = golden_max(
                |t| {
                    let mut w = base.clone();
                    w[from] -= t;
                    w[to] += t;
                    f(&w)
                },
                0.0,
                base[from],
                GOLDEN_ITERS,
            );
            let mut w = base.clone();
            w[from] = (w[from] - t).max(0.0);
            w[to] += t;
            w
        } else {
            let (t, _) = golden_max(
                |t| {
                    let w: Vec<f64> =
                        base.iter().enumerate().map(|(k, x)| (1.0 - t) * x + if k == to { t } else { 0.0 }).collect();
                    f(&w)
                },
                0.0,
                1.0,
                GOLDEN_ITERS,
            );
            base.iter().enumerate().map(|(k, x)| (1.0 - t) * x + if k == to { t } else { 0.0 }).collect()
        };
        let mut next = next;
        purge_small(&mut next);
        let mut v = f(&next);
        if v <= value && from != to {
            // pairwise step stuck: plain step toward the best vertex
            let (t, _) = golden_max(
                |t| {
                    let w: Vec<f64> =
                        base.iter().enumerate().map(|(k, x)| (1.0 - t) * x + if k == to { t } else { 0.0 }).collect();
                    f(&w)
                },
                0.0,
                1.0,
                GOLDEN_ITERS,
            );
            next = base.iter().enumerate().map(|(k, x)| (1.0 - t) * x + if k == to { t } else { 0.0 }).collect();
            purge_small(&mut next);
            v = f(&next);
        }
        if v < value {
            break;
        }
        *weights = next;
        value = v;
        p = combine(vertices, weights);
    }
    if n == 1 {
        gap = 0.0;
    }
    (p, value, value + gap)
}

fn purge_small(w: &mut [f64]) {
    for x in w.iter_mut() {
        if *x < 1e-12 {
            *x = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
}

/// Mechanism with identical rows `w` if one meets the budget on every vertex.
fn zero_leakage_law(vertices: &[Vec<f64>], d: f64) -> Result<Option<Vec<f64>>> {
    let m = vertices[0].len();
    let mut lp = LinearProgram::new(vec![0.0; m]);
    lp.add_eq(vec![1.0; m], 1.0);
    for v in vertices {
        lp.add_ge(v.clone(), 1.0 - d);
    }
    let sol = solve_lp(&lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => {
            let mut w: Vec<f64> = sol.point.iter().map(|x| x.max(0.0)).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            Some(w)
        }
        _ => None,
    })
}

/// Rescales towards the identity so every vertex meets the budget.
fn make_valid(vertices: &[Vec<f64>], q: &[f64], d: f64) -> Vec<f64> {
    let m = vertices[0].len();
    let worst = vertices.iter().map(|v| distortion(v, q)).fold(0.0, f64::max);
    if worst <= d {
        return q.to_vec();
    }
    let keep = d / worst;
    let mut out: Vec<f64> = q.iter().map(|x| x * keep).collect();
    for i in 0..m {
        out[i * m + i] += 1.0 - keep;
    }
    out
}

/// Optimal worst-case mutual information to within `tol` nats.
pub fn it_minmax(source: &SourceSet, d: f64, tol: f64) -> Result<ItSolution> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::Domain(alloc::format!("distortion {d} outside (0, 1]")));
    }
    if !(tol >= 1e-5) || !tol.is_finite() {
        return Err(Error::Domain(alloc::format!("tolerance {tol} below 1e-5")));
    }
    let m = source.m();
    let vertices: Vec<Vec<f64>> = source.vertices().iter().map(|v| v.probs().to_vec()).collect();
    let n = vertices.len();

    if let Some(w) = zero_leakage_law(&vertices, d)? {
        let rows: Vec<Vec<f64>> = (0..m).map(|_| w.clone()).collect();
        return Ok(ItSolution {
            leakage: 0.0,
            saddle_gap: 0.0,
            lower: 0.0,
            upper: 0.0,
            worst_distribution: source.vertices()[0].clone(),
            mechanism: Mechanism::new(rows)?,
            rounds: 0,
        });
    }

    let mut column_mass = vec![0.0; m];
    for v in &vertices {
        for (c, x) in column_mass.iter_mut().zip(v) {
            *c += x;
        }
    }
    let mut dual = Dual {
        vertices: &vertices,
        column_mass,
        d,
        witnesses: vertices.clone(),
        lambda: vec![1.0 / n as f64; n],
        // G has a kink at s = 0 (every cost vanishes and the best response is
        // not unique); away from it G is smooth and coordinate ascent works.
        s: vec![1.0; n],
    };
    let mut fw_weights = vec![1.0 / n as f64; n];
    let mut best_gap = f64::INFINITY;
    let mut stalled = 0;

    for round in 1..=MAX_ROUNDS {
        let lower = dual.ascend(SWEEPS_PER_ROUND)?.max(0.0);
        let q = make_valid(&vertices, &dual.mechanism(), d);
        let (worst, value, upper) = worst_case(&vertices, &q, &mut fw_weights, tol / 4.0);
        let gap = (upper - lower).max(0.0);
        if gap <= tol {
            return Ok(ItSolution {
                leakage: value,
                saddle_gap: gap,
                lower,
                upper,
                worst_distribution: Distribution::new(worst)?,
                mechanism: Mechanism::from_flat(m, q)?,
                rounds: round,
            });
        }
        let witness_max = dual.witnesses.iter().map(|w| mi_flat(w, &q)).fold(0.0, f64::max);
        if value > witness_max + tol / 2.0 {
            dual.witnesses.push(worst);
            dual.lambda.push(0.0);
        }
        if gap < best_gap - 1e-12 {
            best_gap = gap;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 50 {
                return Err(Error::NoConvergence { rounds: round, gap });
            }
        }
    }
    Err(Error::NoConvergence { rounds: MAX_ROUNDS, gap: best_gap })
}

/// Entropy of a distribution in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().map(|&x| xlnx(x)).sum::<f64>()
}
