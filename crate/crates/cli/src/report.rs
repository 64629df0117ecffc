//! Text output of the subcommands, one `key=value` item per line.

use std::fmt::Write;

use dpleak_core::dp::DpSolution;
use dpleak_core::{
    brute_force_dp, classify, eps_dp, is_staircase, is_valid, it_class1, it_minmax, solve_dp, Class3Solver,
    Classification, DpOutcome, ItSolution, Mechanism, SourceSet, Thresholds,
};

use crate::files::mechanism_json;
use crate::Result;

/// Relative tolerance of the staircase test in `verify`.
pub const STAIRCASE_TOL: f64 = 1e-6;

fn list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(","))
}

pub fn classification_line(c: &Classification) -> String {
    match c {
        Classification::ClassI => "ClassI".to_string(),
        Classification::ClassII { ordering } => {
            let items: Vec<String> = ordering.to_one_based().iter().map(|i| i.to_string()).collect();
            format!("ClassII ordering=[{}]", items.join(","))
        }
        Classification::ClassIII { folding, .. } => {
            let items: Vec<String> = folding.iter().map(|t| t.to_string()).collect();
            format!("ClassIII folding={{{}}}", items.join(","))
        }
    }
}

pub fn classify_report(source: &SourceSet) -> Result<String> {
    let c = classify(source)?;
    let mut out = classification_line(&c);
    out.push('\n');
    if let Classification::ClassIII { cap_nonempty, .. } = c {
        writeln!(out, "cap={}", if cap_nonempty { "nonempty" } else { "empty" }).unwrap();
    }
    Ok(out)
}

pub fn thresholds_report(source: &SourceSet) -> Result<String> {
    let mut out = String::new();
    match classify(source)? {
        Classification::ClassI | Classification::ClassII { .. } => {
            let th = Thresholds::of_vertices(&sorted_copy(source)?);
            for (k, v) in th.values().iter().enumerate() {
                writeln!(out, "D({})={v}", k + 1).unwrap();
            }
        }
        Classification::ClassIII { .. } => {
            let solver = Class3Solver::new(source)?;
            let (lo, up) = (solver.lower_thresholds().values(), solver.upper_thresholds().values());
            for k in 0..lo.len() {
                writeln!(out, "D({})=[{},{}]", k + 1, lo[k], up[k]).unwrap();
            }
        }
    }
    Ok(out)
}

/// Each vertex sorted decreasingly; tail sums only depend on the sorted
/// values.
fn sorted_copy(source: &SourceSet) -> Result<SourceSet> {
    let rows = source
        .vertices()
        .iter()
        .map(|v| {
            let mut p = v.probs().to_vec();
            p.sort_by(|a, b| b.total_cmp(a));
            p
        })
        .collect();
    Ok(dpleak_core::make_source_set(rows)?)
}

fn solution_lines(out: &mut String, prefix: &str, sol: &DpSolution) {
    writeln!(out, "{prefix}leakage={}", sol.leakage).unwrap();
    if let Some(k) = sol.chosen_k {
        writeln!(out, "{prefix}k_star={k}").unwrap();
    }
    if let Some(d) = &sol.dstar {
        writeln!(out, "{prefix}dstar={}", list(d)).unwrap();
    }
    if sol.fallback_used {
        writeln!(out, "{prefix}fallback=cap-empty").unwrap();
    }
}

/// Report for `dp-opt` and the mechanism attaining the (upper) value.
pub fn dp_report(source: &SourceSet, d: f64) -> Result<(String, Option<Mechanism>)> {
    let mut out = String::new();
    let mechanism = match solve_dp(source, d)? {
        DpOutcome::Exact(sol) => {
            solution_lines(&mut out, "", &sol);
            sol.mechanism
        }
        DpOutcome::Bounds { lower, upper } => {
            solution_lines(&mut out, "lower_", &lower);
            solution_lines(&mut out, "upper_", &upper);
            upper.mechanism
        }
    };
    if let Some(q) = &mechanism {
        writeln!(out, "mechanism={}", mechanism_json(q)).unwrap();
    }
    Ok((out, mechanism))
}

pub fn it_solution(source: &SourceSet, d: f64, tol: f64) -> Result<ItSolution> {
    Ok(match classify(source)? {
        Classification::ClassI => it_class1(source.m(), d)?,
        _ => it_minmax(source, d, tol)?,
    })
}

pub fn it_report(source: &SourceSet, d: f64, tol: f64) -> Result<(String, Mechanism)> {
    let sol = it_solution(source, d, tol)?;
    let mut out = String::new();
    writeln!(out, "leakage={}", sol.leakage).unwrap();
    writeln!(out, "lower={}", sol.lower).unwrap();
    writeln!(out, "upper={}", sol.upper).unwrap();
    writeln!(out, "saddle_gap={}", sol.saddle_gap).unwrap();
    writeln!(out, "worst_distribution={}", list(sol.worst_distribution.probs())).unwrap();
    writeln!(out, "mechanism={}", mechanism_json(&sol.mechanism)).unwrap();
    Ok((out, sol.mechanism))
}

pub fn verify_report(q: &Mechanism, source: &SourceSet, d: f64) -> Result<String> {
    let v = is_valid(q, source, d)?;
    let mut out = String::new();
    writeln!(out, "eps_dp={}", eps_dp(q)).unwrap();
    writeln!(
        out,
        "valid={} worst_vertex={} worst_distortion={}",
        v.valid,
        v.worst_vertex + 1,
        v.worst_distortion
    )
    .unwrap();
    writeln!(out, "staircase={}", is_staircase(q, STAIRCASE_TOL)).unwrap();
    Ok(out)
}

pub fn oracle_report(source: &SourceSet, d: f64, grid_step: f64) -> Result<String> {
    let r = brute_force_dp(source, d, grid_step)?;
    let mut out = String::new();
    writeln!(out, "leakage={}", r.leakage).unwrap();
    writeln!(out, "grid_leakage={}", r.grid_leakage).unwrap();
    writeln!(out, "candidates={}", r.candidates).unwrap();
    if let Some(q) = &r.mechanism {
        writeln!(out, "mechanism={}", mechanism_json(q)).unwrap();
    }
    Ok(out)
}
