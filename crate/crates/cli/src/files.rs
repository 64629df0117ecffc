//! JSON schemas for source sets and mechanisms.

use std::io;
use std::path::Path;

use dpleak_core::{make_source_set, Mechanism, SourceSet};
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceFile {
    #[serde(rename = "M")]
    pub m: usize,
    pub vertices: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismFile {
    #[serde(rename = "M")]
    pub m: usize,
    pub rows: Vec<Vec<f64>>,
}

fn input_error(path: &str, msg: impl ToString) -> CliError {
    CliError::Input { path: path.to_string(), msg: msg.to_string() }
}

fn check_widths(path: &str, m: usize, field: &str, rows: &[Vec<f64>]) -> Result<()> {
    if rows.is_empty() {
        return Err(input_error(path, format!("field `{field}` is empty")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != m {
            return Err(input_error(path, format!("{field}[{i}] has {} entries, M = {m}", row.len())));
        }
    }
    Ok(())
}

/// `path` only labels diagnostics.
pub fn parse_source(text: &str, path: &str) -> Result<SourceSet> {
    let file: SourceFile = serde_json::from_str(text).map_err(|e| input_error(path, e))?;
    check_widths(path, file.m, "vertices", &file.vertices)?;
    for (i, v) in file.vertices.iter().enumerate() {
        dpleak_core::Distribution::new(v.clone()).map_err(|e| input_error(path, format!("vertices[{i}]: {e}")))?;
    }
    make_source_set(file.vertices).map_err(|e| input_error(path, e))
}

pub fn parse_mechanism(text: &str, path: &str) -> Result<Mechanism> {
    let file: MechanismFile = serde_json::from_str(text).map_err(|e| input_error(path, e))?;
    check_widths(path, file.m, "rows", &file.rows)?;
    if file.rows.len() != file.m {
        return Err(input_error(path, format!("{} rows, M = {}", file.rows.len(), file.m)));
    }
    Mechanism::new(file.rows).map_err(|e| input_error(path, e))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| input_error(&path.display().to_string(), e))
}

pub fn read_source(path: &Path) -> Result<SourceSet> {
    parse_source(&read(path)?, &path.display().to_string())
}

pub fn read_mechanism(path: &Path) -> Result<Mechanism> {
    parse_mechanism(&read(path)?, &path.display().to_string())
}

/// Writes floats with 17 significant digits.
struct Exact;

impl Formatter for Exact {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }
}

/// 17 significant digits, positional notation for moderate exponents.
pub fn format_f64(value: f64) -> String {
    if value == 0.0 {
        return "0.0".to_string();
    }
    let sci = format!("{value:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..16).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, value)
    } else {
        sci
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Exact);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("JSON is UTF-8")
}

pub fn mechanism_json(q: &Mechanism) -> String {
    to_json(&MechanismFile { m: q.m(), rows: q.rows() })
}

pub fn source_json(s: &SourceSet) -> String {
    to_json(&SourceFile { m: s.m(), vertices: s.vertices().iter().map(|v| v.probs().to_vec()).collect() })
}
