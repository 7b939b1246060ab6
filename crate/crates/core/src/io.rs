//! Text formats for matrices, directions, event logs, schedules, designs,
//! and frequency tables.
//!
//! Every writer is deterministic byte-for-byte; reals are serialized with 17
//! significant digits so that write-then-read reproduces each f64 exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::dynamics::HamiltonianSchedule;
use crate::error::{Error, Result};
use crate::experiment::{
    EventLog, Events, ExperimentConfig, ExperimentKind, PairFrequencies, PAIR_OUTCOMES,
};
use crate::matrix::{C64, ComplexMatrix};
use crate::spin::Direction;

/// 17-significant-digit serialization; round-trips every finite f64 exactly.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format { line, message: format!("expected a real number, got {s:?}") })
}

fn parse_u64(s: &str, line: usize) -> Result<u64> {
    s.trim()
        .parse::<u64>()
        .map_err(|_| Error::Format { line, message: format!("expected an integer, got {s:?}") })
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), message: e.to_string() }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn write_string(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| io_error(path, e))
}

// ---------------------------------------------------------------- matrices

/// `matrix dim=<d>` header, then d lines of d entries `<re>,<im>` separated
/// by single spaces.
pub fn format_matrix(m: &ComplexMatrix) -> String {
    let d = m.dim();
    let mut out = format!("matrix dim={d}\n");
    for i in 0..d {
        for j in 0..d {
            if j > 0 {
                out.push(' ');
            }
            let z = m[(i, j)];
            let _ = write!(out, "{},{}", format_f64(z.re), format_f64(z.im));
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(Error::Format { line: 1, message: "empty matrix file".into() })?;
    let dim_str = header
        .strip_prefix("matrix dim=")
        .ok_or_else(|| Error::Format { line: 1, message: format!("bad header {header:?}") })?;
    let dim = parse_u64(dim_str, 1)? as usize;
    if dim == 0 {
        return Err(Error::Format { line: 1, message: "dimension must be positive".into() });
    }

    let mut m = ComplexMatrix::zeros(dim);
    let mut last_line = 1;
    for i in 0..dim {
        let (idx, row) = lines.next().ok_or(Error::Format {
            line: last_line,
            message: format!("expected {dim} rows, found {i}"),
        })?;
        let line_no = idx + 1;
        last_line = line_no;
        let cells: Vec<&str> = row.split(' ').filter(|c| !c.is_empty()).collect();
        if cells.len() != dim {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected {dim} entries, found {}", cells.len()),
            });
        }
        for (j, cell) in cells.iter().enumerate() {
            let (re, im) = cell.split_once(',').ok_or_else(|| Error::Format {
                line: line_no,
                message: format!("entry {cell:?} is not re,im"),
            })?;
            m[(i, j)] = C64::new(parse_f64(re, line_no)?, parse_f64(im, line_no)?);
        }
    }
    if !m.is_finite() {
        return Err(Error::Format { line: last_line, message: "non-finite entry".into() });
    }
    Ok(m)
}

pub fn write_matrix(path: &Path, m: &ComplexMatrix) -> Result<()> {
    write_string(path, &format_matrix(m))
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    parse_matrix(&read_to_string(path)?)
}

// -------------------------------------------------------------- directions

/// `x,y,z` with 17 significant digits per component.
pub fn format_direction(d: Direction) -> String {
    format!("{},{},{}", format_f64(d.x()), format_f64(d.y()), format_f64(d.z()))
}

pub fn parse_direction(s: &str) -> Result<Direction> {
    parse_direction_at(s, 0)
}

fn parse_direction_at(s: &str, line: usize) -> Result<Direction> {
    let parts: Vec<&str> = s.trim().split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Format { line, message: format!("direction {s:?} is not x,y,z") });
    }
    Direction::new(
        parse_f64(parts[0], line)?,
        parse_f64(parts[1], line)?,
        parse_f64(parts[2], line)?,
    )
}

// -------------------------------------------------------------- event logs

/// Header lines `# kind=`, `# N=`, `# seed=`, `# a=`, optional `# b=`,
/// `# chunk=`, followed by one event per line (`k` or `k l`).
pub fn format_event_log(log: &EventLog) -> String {
    let c = &log.config;
    let mut out = String::new();
    let _ = writeln!(out, "# kind={}", c.kind);
    let _ = writeln!(out, "# N={}", c.n_events);
    let _ = writeln!(out, "# seed={}", c.seed);
    let _ = writeln!(out, "# a={}", format_direction(c.a));
    if let Some(b) = c.b {
        let _ = writeln!(out, "# b={}", format_direction(b));
    }
    let _ = writeln!(out, "# chunk={}", c.chunk);
    match &log.events {
        Events::Single(events) => {
            for k in events {
                let _ = writeln!(out, "{k}");
            }
        }
        Events::Pair(events) => {
            for (k, l) in events {
                let _ = writeln!(out, "{k} {l}");
            }
        }
    }
    out
}

fn parse_outcome(s: &str, line: usize) -> Result<i8> {
    match s {
        "1" | "+1" => Ok(1),
        "0" => Ok(0),
        "-1" => Ok(-1),
        _ => Err(Error::Format { line, message: format!("outcome {s:?} not in {{+1,0,-1}}") }),
    }
}

pub fn parse_event_log(text: &str) -> Result<EventLog> {
    let mut kind = None;
    let mut n = None;
    let mut seed = None;
    let mut a = None;
    let mut b = None;
    let mut chunk = 1u64;
    let mut body_start = 0;

    let lines: Vec<&str> = text.lines().collect();
    for (idx, raw) in lines.iter().enumerate() {
        let line_no = idx + 1;
        let Some(header) = raw.strip_prefix('#') else {
            body_start = idx;
            break;
        };
        body_start = idx + 1;
        let (key, value) = header.trim().split_once('=').ok_or_else(|| Error::Format {
            line: line_no,
            message: format!("header {raw:?} is not key=value"),
        })?;
        match key.trim() {
            "kind" => {
                kind = Some(ExperimentKind::parse(value.trim()).ok_or_else(|| Error::Format {
                    line: line_no,
                    message: format!("unknown kind {value:?}"),
                })?)
            }
            "N" => n = Some(parse_u64(value, line_no)?),
            "seed" => seed = Some(parse_u64(value, line_no)?),
            "a" => a = Some(parse_direction_at(value, line_no)?),
            "b" => b = Some(parse_direction_at(value, line_no)?),
            "chunk" => chunk = parse_u64(value, line_no)?,
            other => {
                return Err(Error::Format {
                    line: line_no,
                    message: format!("unknown header key {other:?}"),
                })
            }
        }
    }

    let missing = |what: &str| Error::Format { line: 1, message: format!("missing header {what}") };
    let kind = kind.ok_or_else(|| missing("kind"))?;
    let n = n.ok_or_else(|| missing("N"))?;
    let seed = seed.ok_or_else(|| missing("seed"))?;
    let a = a.ok_or_else(|| missing("a"))?;
    let config = ExperimentConfig::new(kind, a, b, n, seed)
        .map_err(|e| Error::Format { line: 1, message: e.to_string() })?
        .with_chunk(chunk);

    let body = &lines[body_start..];
    let events = if kind.is_pair() {
        let mut events = Vec::with_capacity(body.len());
        for (idx, raw) in body.iter().enumerate() {
            let line_no = body_start + idx + 1;
            let mut parts = raw.split_whitespace();
            let k = parse_outcome(
                parts.next().ok_or(Error::Format { line: line_no, message: "empty event".into() })?,
                line_no,
            )?;
            let l = parse_outcome(
                parts.next().ok_or(Error::Format {
                    line: line_no,
                    message: "pair event needs two outcomes".into(),
                })?,
                line_no,
            )?;
            if parts.next().is_some() {
                return Err(Error::Format { line: line_no, message: "trailing tokens".into() });
            }
            events.push((k, l));
        }
        Events::Pair(events)
    } else {
        let mut events = Vec::with_capacity(body.len());
        for (idx, raw) in body.iter().enumerate() {
            let line_no = body_start + idx + 1;
            events.push(parse_outcome(raw.trim(), line_no)?);
        }
        Events::Single(events)
    };

    if events.len() as u64 != n {
        return Err(Error::Format {
            line: lines.len(),
            message: format!("header says N={n} but {} events follow", events.len()),
        });
    }
    Ok(EventLog { config, events })
}

pub fn write_event_log(path: &Path, log: &EventLog) -> Result<()> {
    write_string(path, &format_event_log(log))
}

pub fn read_event_log(path: &Path) -> Result<EventLog> {
    parse_event_log(&read_to_string(path)?)
}

// --------------------------------------------------------------- schedules

/// `schedule n=<rows>` header, then rows `λ h1 .. h8`.
pub fn format_schedule(lambdas: &[f64], coefficients: &[[f64; 8]]) -> String {
    let mut out = format!("schedule n={}\n", lambdas.len());
    for (l, h) in lambdas.iter().zip(coefficients) {
        let _ = write!(out, "{}", format_f64(*l));
        for v in h {
            let _ = write!(out, " {}", format_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn parse_schedule(text: &str) -> Result<HamiltonianSchedule> {
    let mut lines = text.lines().enumerate();
    let (_, header) =
        lines.next().ok_or(Error::Format { line: 1, message: "empty schedule file".into() })?;
    let n_str = header
        .strip_prefix("schedule n=")
        .ok_or_else(|| Error::Format { line: 1, message: format!("bad header {header:?}") })?;
    let n = parse_u64(n_str, 1)? as usize;

    let mut lambdas = Vec::with_capacity(n);
    let mut coefficients = Vec::with_capacity(n);
    let mut last_line = 1;
    for i in 0..n {
        let (idx, row) = lines.next().ok_or(Error::Format {
            line: last_line,
            message: format!("expected {n} rows, found {i}"),
        })?;
        let line_no = idx + 1;
        last_line = line_no;
        let cells: Vec<&str> = row.split_whitespace().collect();
        if cells.len() != 9 {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected 9 columns, found {}", cells.len()),
            });
        }
        lambdas.push(parse_f64(cells[0], line_no)?);
        let mut h = [0.0; 8];
        for (slot, cell) in h.iter_mut().zip(&cells[1..]) {
            *slot = parse_f64(cell, line_no)?;
        }
        coefficients.push(h);
    }
    if n == 1 {
        return Ok(HamiltonianSchedule::Constant(coefficients[0]));
    }
    HamiltonianSchedule::tabulated(lambdas, coefficients)
}

pub fn read_schedule(path: &Path) -> Result<HamiltonianSchedule> {
    parse_schedule(&read_to_string(path)?)
}

// ------------------------------------------------------- designs & moments

/// One direction `x,y,z` per line.
pub fn parse_design(text: &str) -> Result<Vec<Direction>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        out.push(parse_direction_at(raw, idx + 1)?);
    }
    if out.is_empty() {
        return Err(Error::Format { line: 1, message: "design file has no directions".into() });
    }
    Ok(out)
}

pub fn read_design(path: &Path) -> Result<Vec<Direction>> {
    parse_design(&read_to_string(path)?)
}

pub fn format_design(directions: &[Direction]) -> String {
    let mut out = String::new();
    for d in directions {
        let _ = writeln!(out, "{}", format_direction(*d));
    }
    out
}

/// One `m1 m2` pair per line, matching the design file line by line.
pub fn parse_moment_lines(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let cells: Vec<&str> = raw.split_whitespace().collect();
        if cells.len() != 2 {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected `m1 m2`, found {} columns", cells.len()),
            });
        }
        out.push((parse_f64(cells[0], line_no)?, parse_f64(cells[1], line_no)?));
    }
    if out.is_empty() {
        return Err(Error::Format { line: 1, message: "moments file is empty".into() });
    }
    Ok(out)
}

pub fn read_moment_lines(path: &Path) -> Result<Vec<(f64, f64)>> {
    parse_moment_lines(&read_to_string(path)?)
}

pub fn format_moment_lines(moments: &[(f64, f64)]) -> String {
    let mut out = String::new();
    for (m1, m2) in moments {
        let _ = writeln!(out, "{} {}", format_f64(*m1), format_f64(*m2));
    }
    out
}

// ------------------------------------------------- pair frequency tables

/// Headers `# a=`, `# b=`, then 9 lines `k l f` in row-major order.
pub fn format_pair_table(a: Direction, b: Direction, table: &PairFrequencies) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# a={}", format_direction(a));
    let _ = writeln!(out, "# b={}", format_direction(b));
    for &(k, l) in PAIR_OUTCOMES.iter() {
        let _ = writeln!(out, "{k} {l} {}", format_f64(table.get(k, l)));
    }
    out
}

pub fn parse_pair_table(text: &str) -> Result<(Direction, Direction, PairFrequencies)> {
    let mut a = None;
    let mut b = None;
    let mut values = [f64::NAN; 9];
    let mut seen = [false; 9];
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(header) = raw.strip_prefix('#') {
            let (key, value) = header.trim().split_once('=').ok_or_else(|| Error::Format {
                line: line_no,
                message: format!("header {raw:?} is not key=value"),
            })?;
            match key.trim() {
                "a" => a = Some(parse_direction_at(value, line_no)?),
                "b" => b = Some(parse_direction_at(value, line_no)?),
                other => {
                    return Err(Error::Format {
                        line: line_no,
                        message: format!("unknown header key {other:?}"),
                    })
                }
            }
            continue;
        }
        let cells: Vec<&str> = raw.split_whitespace().collect();
        if cells.len() != 3 {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected `k l f`, found {} columns", cells.len()),
            });
        }
        let k = parse_outcome(cells[0], line_no)?;
        let l = parse_outcome(cells[1], line_no)?;
        let idx9 = crate::experiment::pair_index(k, l);
        if seen[idx9] {
            return Err(Error::Format { line: line_no, message: format!("duplicate entry ({k},{l})") });
        }
        seen[idx9] = true;
        values[idx9] = parse_f64(cells[2], line_no)?;
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::Format { line: 1, message: "table is missing entries".into() });
    }
    let a = a.ok_or(Error::Format { line: 1, message: "missing header a".into() })?;
    let b = b.ok_or(Error::Format { line: 1, message: "missing header b".into() })?;
    Ok((a, b, PairFrequencies::from_values(values)?))
}

pub fn read_pair_table(path: &Path) -> Result<(Direction, Direction, PairFrequencies)> {
    parse_pair_table(&read_to_string(path)?)
}
