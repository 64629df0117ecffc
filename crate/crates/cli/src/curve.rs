//! Leakage-distortion curves.

use std::io::Write;

use dpleak_core::{
    classify, it_class1, it_minmax, solve_class1, solve_class2, Class3Solver, Classification, DpSolution,
    LeakageValue, SourceSet,
};
use rayon::prelude::*;

use crate::{CliError, Result};

pub const HEADER: [&str; 6] = ["D", "eps_dp", "eps_dp_lower", "eps_dp_upper", "eps_it", "k_star"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Dp,
    It,
    Both,
}

impl Metric {
    fn dp(self) -> bool {
        matches!(self, Metric::Dp | Metric::Both)
    }

    fn it(self) -> bool {
        matches!(self, Metric::It | Metric::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub d: f64,
    pub eps_dp: Option<LeakageValue>,
    pub eps_dp_lower: Option<LeakageValue>,
    pub eps_dp_upper: Option<LeakageValue>,
    pub eps_it: Option<f64>,
    pub k_star: Option<usize>,
}

/// `dmin, dmin + step, ...` up to `dmax`, rounded to 12 decimals so that
/// grid points land on the decimal values they name.
pub fn grid(dmin: f64, dmax: f64, step: f64) -> Result<Vec<f64>> {
    if !(dmin > 0.0 && dmin < dmax && dmax <= 1.0) {
        return Err(CliError::Usage(format!("need 0 < dmin < dmax <= 1, got dmin = {dmin}, dmax = {dmax}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(CliError::Usage(format!("step must be positive, got {step}")));
    }
    let n = ((dmax - dmin) / step + 1e-9).floor() as usize;
    let mut points: Vec<f64> = (0..=n).map(|i| ((dmin + i as f64 * step) * 1e12).round() / 1e12).collect();
    if dmax - points[n] > 1e-9 {
        points.push(dmax);
    }
    Ok(points)
}

enum Plan {
    ClassI,
    ClassII,
    ClassIII,
}

/// Evaluates every grid point in parallel; rows come back in `D` order.
/// The first solver error aborts the curve.
pub fn compute(source: &SourceSet, points: &[f64], metric: Metric, tol: f64) -> Result<Vec<CurveRow>> {
    let plan = match classify(source)? {
        Classification::ClassI => Plan::ClassI,
        Classification::ClassII { .. } => Plan::ClassII,
        Classification::ClassIII { .. } => Plan::ClassIII,
    };
    let m = source.m();
    let class3 = match plan {
        Plan::ClassIII if metric.dp() => Some(Class3Solver::new(source)?),
        _ => None,
    };
    points
        .par_iter()
        .map_init(
            || class3.clone(),
            |solver, &d| -> Result<CurveRow> {
                let mut row =
                    CurveRow { d, eps_dp: None, eps_dp_lower: None, eps_dp_upper: None, eps_it: None, k_star: None };
                if metric.dp() {
                    match plan {
                        Plan::ClassI => exact(&mut row, solve_class1(m, d)?),
                        Plan::ClassII => exact(&mut row, solve_class2(source, d)?),
                        Plan::ClassIII => {
                            let (lower, upper) = solver.as_mut().expect("solver built for DP curves").solve(d)?;
                            row.eps_dp_lower = Some(lower.leakage);
                            row.eps_dp_upper = Some(upper.leakage);
                        }
                    }
                }
                if metric.it() {
                    let sol = match plan {
                        Plan::ClassI => it_class1(m, d)?,
                        _ => it_minmax(source, d, tol)?,
                    };
                    row.eps_it = Some(sol.leakage);
                }
                Ok(row)
            },
        )
        .collect()
}

fn exact(row: &mut CurveRow, sol: DpSolution) {
    row.eps_dp = Some(sol.leakage);
    row.k_star = sol.chosen_k;
}

fn cell(value: Option<f64>, base: f64) -> String {
    match value {
        None => String::new(),
        Some(v) if v.is_infinite() => "inf".to_string(),
        Some(v) => (v / base.ln()).to_string(),
    }
}

/// Writes the header and one record per row, leakage in logarithm base
/// `base`.
pub fn write_csv<W: Write>(rows: &[CurveRow], base: f64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.d.to_string(),
            cell(r.eps_dp.map(|v| v.value()), base),
            cell(r.eps_dp_lower.map(|v| v.value()), base),
            cell(r.eps_dp_upper.map(|v| v.value()), base),
            cell(r.eps_it, base),
            r.k_star.map(|k| k.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_decimal_points() {
        let g = grid(0.005, 1.0, 0.005).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g[59], 0.3);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(grid(0.05, 0.3, 0.25).unwrap(), vec![0.05, 0.3]);
        assert_eq!(grid(0.1, 0.35, 0.1).unwrap(), vec![0.1, 0.2, 0.3, 0.35]);
    }

    #[test]
    fn grid_rejects_bad_ranges() {
        assert!(grid(0.0, 0.5, 0.1).is_err());
        assert!(grid(0.5, 0.4, 0.1).is_err());
        assert!(grid(0.1, 1.2, 0.1).is_err());
        assert!(grid(0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn cells() {
        assert_eq!(cell(Some(f64::INFINITY), std::f64::consts::E), "inf");
        assert_eq!(cell(None, 2.0), "");
        assert_eq!(cell(Some(2f64.ln()), 2.0), "1");
    }
}
