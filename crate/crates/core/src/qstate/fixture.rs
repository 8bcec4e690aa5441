//! Plain-text fixtures.
//!
//! Matrix file:
//! ```text
//! dims 2 2
//! 0.5,0 0,0 0,0 0,0
//! ...
//! ```
//! CQ file: an optional `registers NAME:SIZE[+bot] ...` header, then one
//! branch per line `assignment | weight | matrix-file`. Assignments are
//! whitespace-separated symbols (`bot` or `⊥` for the error symbol); matrix
//! paths are relative to the CQ file, and `-` stands for the scalar 1.
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::linalg::{CMatrix, C64};

use super::{CQState, DensityOperator, Register, Result, StateError, StateLimits, Symbol, BOT};

fn err(line: usize, message: impl Into<String>) -> StateError {
    StateError::Fixture {
        line,
        message: message.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses a matrix fixture into a (validated) density operator.
pub fn parse_matrix(text: &str) -> Result<DensityOperator> {
    let (dims, m) = parse_raw_matrix(text)?;
    DensityOperator::make(m, &dims, None, false, StateLimits::default())
}

/// Parses a matrix fixture without state validation.
pub fn parse_raw_matrix(text: &str) -> Result<(Vec<usize>, CMatrix)> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| err(1, "empty matrix file"))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("dims") {
        return Err(err(ln, "first line must start with `dims`"));
    }
    let dims: Vec<usize> = parts
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| err(ln, format!("bad dimension `{t}`")))
        })
        .collect::<Result<_>>()?;
    if dims.is_empty() || dims.contains(&0) {
        return Err(err(ln, "dimensions must be positive"));
    }
    let d: usize = dims.iter().product();
    let mut data = Vec::with_capacity(d * d);
    let mut rows = 0;
    for (ln, line) in lines {
        if rows == d {
            return Err(err(ln, "too many rows"));
        }
        let row: Vec<C64> = line
            .split_whitespace()
            .map(|t| parse_entry(t).ok_or_else(|| err(ln, format!("bad entry `{t}`"))))
            .collect::<Result<_>>()?;
        if row.len() != d {
            return Err(err(
                ln,
                format!("expected {d} entries, found {}", row.len()),
            ));
        }
        data.extend(row);
        rows += 1;
    }
    if rows != d {
        return Err(err(ln, format!("expected {d} rows, found {rows}")));
    }
    Ok((dims, CMatrix::from_vec(d, d, data)))
}

fn parse_entry(t: &str) -> Option<C64> {
    let (re, im) = t.split_once(',').unwrap_or((t, "0"));
    Some(C64::new(re.parse().ok()?, im.parse().ok()?))
}

pub fn write_matrix(dims: &[usize], m: &CMatrix) -> String {
    let mut s = String::from("dims");
    for d in dims {
        let _ = write!(s, " {d}");
    }
    s.push('\n');
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols())
            .map(|j| format!("{:e},{:e}", m[(i, j)].re, m[(i, j)].im))
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn read_matrix_file(path: &Path) -> Result<DensityOperator> {
    parse_matrix(
        &fs::read_to_string(path)
            .map_err(|e| StateError::Io(format!("{}: {e}", path.display())))?,
    )
}

/// Parses a CQ fixture; `load` resolves matrix references.
pub fn parse_cq(
    text: &str,
    mut load: impl FnMut(&str) -> Result<DensityOperator>,
) -> Result<CQState> {
    let mut registers: Option<Vec<Register>> = None;
    let mut branches = Vec::new();
    for (ln, line) in content_lines(text) {
        if let Some(rest) = line.strip_prefix("registers") {
            if registers.is_some() || !branches.is_empty() {
                return Err(err(ln, "`registers` header must come first"));
            }
            registers = Some(
                rest.split_whitespace()
                    .map(|t| {
                        parse_register(t).ok_or_else(|| err(ln, format!("bad register `{t}`")))
                    })
                    .collect::<Result<_>>()?,
            );
            continue;
        }
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(ln, "expected `assignment | weight | matrix-file`"));
        }
        let assignment: Vec<Symbol> = fields[0]
            .split_whitespace()
            .map(|t| parse_symbol(t).ok_or_else(|| err(ln, format!("bad symbol `{t}`"))))
            .collect::<Result<_>>()?;
        let weight: f64 = fields[1]
            .parse()
            .map_err(|_| err(ln, format!("bad weight `{}`", fields[1])))?;
        let op = if fields[2] == "-" {
            DensityOperator::scalar(1.0)
        } else {
            load(fields[2]).map_err(|e| match e {
                StateError::Fixture { message, .. } => err(ln, format!("{}: {message}", fields[2])),
                other => other,
            })?
        };
        branches.push((ln, assignment, weight, op));
    }
    let registers = match registers {
        Some(r) => r,
        None => infer_registers(&branches),
    };
    CQState::make(
        registers,
        branches
            .into_iter()
            .map(|(_, a, w, op)| (a, w, op))
            .collect(),
    )
}

/// Reads a CQ fixture, resolving matrix files relative to its directory.
pub fn read_cq_file(path: &Path) -> Result<CQState> {
    let text =
        fs::read_to_string(path).map_err(|e| StateError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_cq(&text, |name| read_matrix_file(&base.join(name)))
}

fn parse_symbol(t: &str) -> Option<Symbol> {
    match t {
        "bot" | "⊥" => Some(BOT),
        _ => t.parse().ok(),
    }
}

fn parse_register(t: &str) -> Option<Register> {
    let (name, size) = t.split_once(':')?;
    let (size, bot) = match size.strip_suffix("+bot") {
        Some(s) => (s, true),
        None => (size, false),
    };
    let size: u64 = size.parse().ok()?;
    Some(if bot {
        Register::with_bot(name, size)
    } else {
        Register::new(name, size)
    })
}

/// Registers `R0, R1, ...` sized by the largest symbol seen.
fn infer_registers(branches: &[(usize, Vec<Symbol>, f64, DensityOperator)]) -> Vec<Register> {
    let n = branches.first().map_or(0, |b| b.1.len());
    (0..n)
        .map(|i| {
            let mut size = 1;
            let mut bot = false;
            for (_, a, _, _) in branches {
                match a.get(i) {
                    Some(&BOT) => bot = true,
                    Some(&s) => size = size.max(s + 1),
                    None => {}
                }
            }
            Register {
                name: format!("R{i}"),
                size,
                allows_bot: bot,
            }
        })
        .collect()
}
