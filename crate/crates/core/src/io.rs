//! File formats: generating vectors, shifts and κ tables.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cbc::CbcShiftResult;
use crate::error::{Error, Result};
use crate::kernel::{half_shift_value, HalfShift, RealShift};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses a generating vector: one integer per line, or `index value` pairs
/// with indices `1, 2, 3, ...`. Blank lines and `#` comments are skipped.
///
/// Returns `z_1..z_{s_max}`, each checked against `1..N`. With
/// `reduce_mod_n`, components are taken mod `N` first, which is how vectors
/// published for a larger point count are applied to a smaller one.
pub fn parse_vector(text: &str, n: usize, s_max: usize, reduce_mod_n: bool) -> Result<Vec<usize>> {
    let mut columns = None;
    let mut z = Vec::with_capacity(s_max);
    for (line, content) in data_lines(text) {
        if z.len() == s_max {
            break;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let cols = *columns.get_or_insert(fields.len());
        if fields.len() != cols {
            return Err(parse_err(line, format!("expected {cols} columns, found {}", fields.len())));
        }
        let value = match cols {
            1 => fields[0],
            2 => {
                let idx: usize = fields[0].parse().map_err(|_| parse_err(line, format!("bad index `{}`", fields[0])))?;
                if idx != z.len() + 1 {
                    return Err(parse_err(line, format!("index {idx}, expected {}", z.len() + 1)));
                }
                fields[1]
            }
            c => return Err(parse_err(line, format!("unrecognized layout with {c} columns"))),
        };
        let mut v: u64 = value.parse().map_err(|_| parse_err(line, format!("bad component `{value}`")))?;
        if reduce_mod_n {
            v %= n as u64;
        }
        if v == 0 || v >= n as u64 {
            return Err(parse_err(line, format!("component {v} not in 1..={}", n - 1)));
        }
        z.push(v as usize);
    }
    if z.len() < s_max {
        return Err(Error::DimensionMismatch { expected: s_max, found: z.len() });
    }
    Ok(z)
}

/// Like [`parse_vector`] but takes every row in the file.
pub fn parse_vector_all(text: &str, n: usize, reduce_mod_n: bool) -> Result<Vec<usize>> {
    let rows = data_lines(text).count();
    if rows == 0 {
        return Err(Error::Parse { line: 0, message: "no vector components".into() });
    }
    parse_vector(text, n, rows, reduce_mod_n)
}

pub fn load_vector_file(path: &Path, n: usize, s_max: usize) -> Result<Vec<usize>> {
    parse_vector(&std::fs::read_to_string(path)?, n, s_max, false)
}

pub fn load_vector_file_reduced(path: &Path, n: usize, s_max: usize, reduce_mod_n: bool) -> Result<Vec<usize>> {
    parse_vector(&std::fs::read_to_string(path)?, n, s_max, reduce_mod_n)
}

/// One component per line.
pub fn format_vector(z: &[usize]) -> String {
    z.iter().fold(String::new(), |mut out, v| {
        let _ = writeln!(out, "{v}");
        out
    })
}

/// `sha256:<hex>` of the one-per-line rendering of `z`.
pub fn vector_digest(z: &[usize]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(format_vector(z).as_bytes())))
}

/// `v` in plain decimal with 17 significant digits.
fn decimal17(v: f64) -> String {
    if v == 0.0 {
        return format!("{:.16}", 0.0);
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (16 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Shift file: one `s m delta` line per coordinate, `delta = (2m - 1)/(2N)`.
pub fn format_shift(shift: &HalfShift) -> String {
    let mut out = format!("# n={}\n", shift.n());
    for (j, &m) in shift.indices().iter().enumerate() {
        let _ = writeln!(out, "{} {} {}", j + 1, m, decimal17(half_shift_value::<f64>(m, shift.n())));
    }
    out
}

/// Contents of a shift file.
#[derive(Clone, Debug, PartialEq)]
pub enum ShiftSpec {
    Half(HalfShift),
    Real(RealShift<f64>),
}

impl ShiftSpec {
    pub fn to_real(&self) -> RealShift<f64> {
        match self {
            Self::Half(h) => h.to_real(),
            Self::Real(r) => r.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Half(h) => h.dim(),
            Self::Real(r) => r.dim(),
        }
    }
}

/// Reads `s m delta` lines (indices are authoritative; `delta` must agree)
/// or one real shift component per line.
pub fn parse_shift(text: &str, n: usize) -> Result<ShiftSpec> {
    let mut columns = None;
    let mut indices = Vec::new();
    let mut reals = Vec::new();
    for (line, content) in data_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let cols = *columns.get_or_insert(fields.len());
        if fields.len() != cols {
            return Err(parse_err(line, format!("expected {cols} columns, found {}", fields.len())));
        }
        match cols {
            3 => {
                let s: usize = fields[0].parse().map_err(|_| parse_err(line, "bad dimension"))?;
                if s != indices.len() + 1 {
                    return Err(parse_err(line, format!("dimension {s}, expected {}", indices.len() + 1)));
                }
                let m: usize = fields[1].parse().map_err(|_| parse_err(line, "bad index"))?;
                if m == 0 || m > n {
                    return Err(parse_err(line, format!("index {m} not in 1..={n}")));
                }
                let delta: f64 = fields[2].parse().map_err(|_| parse_err(line, "bad shift value"))?;
                let expect = half_shift_value::<f64>(m, n);
                if (delta - expect).abs() > 1e-12 {
                    return Err(parse_err(line, format!("shift {delta} does not match index {m} for N = {n}")));
                }
                indices.push(m);
            }
            1 => {
                let d: f64 = fields[0].parse().map_err(|_| parse_err(line, "bad shift value"))?;
                if !(0.0..1.0).contains(&d) {
                    return Err(parse_err(line, format!("shift {d} not in [0, 1)")));
                }
                reals.push(d);
            }
            c => return Err(parse_err(line, format!("unrecognized layout with {c} columns"))),
        }
    }
    match columns {
        None => Err(Error::Parse { line: 0, message: "empty shift file".into() }),
        Some(3) => Ok(ShiftSpec::Half(HalfShift::new(n, indices)?)),
        _ => Ok(ShiftSpec::Real(RealShift::new(reals)?)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Tsv,
    Json,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "tsv" => Ok(Self::Tsv),
            "json" => Ok(Self::Json),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub s: usize,
    pub m: usize,
    pub kappa: f64,
    pub kappa0: f64,
}

/// Rows `(s, m*_s, κ(N,s), κ₀(N,s))` with the inputs that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftTable {
    pub n: usize,
    pub weights: String,
    pub z_digest: String,
    pub z: Vec<usize>,
    pub rows: Vec<TableRow>,
}

impl ShiftTable {
    pub fn from_result(result: &CbcShiftResult<f64>, weights: &str) -> Result<Self> {
        if result.records.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        Ok(Self {
            n: result.n,
            weights: weights.to_string(),
            z_digest: vector_digest(&result.z),
            z: result.z.clone(),
            rows: result
                .records
                .iter()
                .map(|r| TableRow { s: r.s, m: r.m, kappa: r.kappa, kappa0: r.kappa0 })
                .collect(),
        })
    }

    pub fn emit(&self, format: TableFormat) -> Result<String> {
        if self.rows.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let sep = match format {
            TableFormat::Json => return Ok(serde_json::to_string_pretty(self)? + "\n"),
            TableFormat::Csv => ",",
            TableFormat::Tsv => "\t",
        };
        let mut out = String::new();
        let _ = writeln!(out, "# n={}", self.n);
        let _ = writeln!(out, "# weights={}", self.weights);
        let _ = writeln!(out, "# z_digest={}", self.z_digest);
        let z: Vec<String> = self.z.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "# z={}", z.join(" "));
        let _ = writeln!(out, "s{sep}m{sep}kappa{sep}kappa0");
        for r in &self.rows {
            let _ = writeln!(out, "{}{sep}{}{sep}{:.6}{sep}{:.6}", r.s, r.m, r.kappa, r.kappa0);
        }
        Ok(out)
    }

    pub fn parse(text: &str, format: TableFormat) -> Result<Self> {
        let sep = match format {
            TableFormat::Json => return Ok(serde_json::from_str(text)?),
            TableFormat::Csv => ',',
            TableFormat::Tsv => '\t',
        };
        let mut table = ShiftTable { n: 0, weights: String::new(), z_digest: String::new(), z: vec![], rows: vec![] };
        let mut header = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim_end();
            if let Some(meta) = line.strip_prefix("# ") {
                let (key, value) = meta.split_once('=').ok_or_else(|| parse_err(line_no, "bad metadata"))?;
                match key {
                    "n" => table.n = value.parse().map_err(|_| parse_err(line_no, "bad n"))?,
                    "weights" => table.weights = value.to_string(),
                    "z_digest" => table.z_digest = value.to_string(),
                    "z" => {
                        table.z = value
                            .split_whitespace()
                            .map(|v| v.parse().map_err(|_| parse_err(line_no, "bad z component")))
                            .collect::<Result<_>>()?
                    }
                    _ => {}
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(sep).collect();
            if !header {
                if fields != ["s", "m", "kappa", "kappa0"] {
                    return Err(parse_err(line_no, "expected header s,m,kappa,kappa0"));
                }
                header = true;
                continue;
            }
            if fields.len() != 4 {
                return Err(parse_err(line_no, "expected 4 fields"));
            }
            let num = |k: usize| fields[k].parse::<f64>().map_err(|_| parse_err(line_no, "bad number"));
            table.rows.push(TableRow {
                s: fields[0].parse().map_err(|_| parse_err(line_no, "bad s"))?,
                m: fields[1].parse().map_err(|_| parse_err(line_no, "bad m"))?,
                kappa: num(2)?,
                kappa0: num(3)?,
            });
        }
        if !header {
            return Err(Error::Parse { line: 0, message: "missing header".into() });
        }
        Ok(table)
    }
}

/// Renders a CBC-for-shift result as a table.
pub fn emit_shift_table(result: &CbcShiftResult<f64>, weights: &str, format: TableFormat) -> Result<String> {
    ShiftTable::from_result(result, weights)?.emit(format)
}
