//! Rendering of frequency tables, moment sets, and run reports.
//!
//! Every numeric is serialized with 17 significant digits and all sections
//! are emitted in a fixed order, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use sgsim_core::error::Error as CoreError;
use sgsim_core::experiment::{FrequencyTable, MomentSet, OUTCOMES, PAIR_OUTCOMES};
use sgsim_core::io::{self, format_f64};

pub fn render_frequencies(table: &FrequencyTable) -> String {
    let mut out = String::new();
    match table {
        FrequencyTable::Single(t) => {
            for k in OUTCOMES {
                let _ = writeln!(out, "{k} {}", format_f64(t.get(k)));
            }
        }
        FrequencyTable::Pair(t) => {
            for &(k, l) in PAIR_OUTCOMES.iter() {
                let _ = writeln!(out, "{k} {l} {}", format_f64(t.get(k, l)));
            }
        }
    }
    out
}

pub fn render_moments(moments: &MomentSet) -> String {
    let mut out = String::new();
    match moments {
        MomentSet::Single(m) => {
            let _ = writeln!(out, "m1 {}", format_f64(m.m1));
            let _ = writeln!(out, "m2 {}", format_f64(m.m2));
        }
        MomentSet::Pair(m) => {
            for p in 0..3 {
                for q in 0..3 {
                    let _ = writeln!(out, "m{p}{q} {}", format_f64(m.get(p, q)));
                }
            }
        }
    }
    out
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

/// Frequencies, moments, and the provenance needed to reproduce the run.
pub fn run_report(input: &Path) -> Result<String, CoreError> {
    let bytes = std::fs::read(input)
        .map_err(|e| CoreError::Io { path: input.display().to_string(), message: e.to_string() })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CoreError::Format { line: 1, message: "log is not utf-8".into() })?;
    let log = io::parse_event_log(&text)?;
    let frequencies = sgsim_core::experiment::relative_frequencies(&log)?;
    let moments = sgsim_core::experiment::moments_from_events(&log)?;

    let c = &log.config;
    let mut out = String::from("report\n");
    let _ = writeln!(out, "input={}", input.display());
    let _ = writeln!(out, "sha256={}", sha256_hex(&bytes));
    let _ = writeln!(out, "kind={}", c.kind);
    let _ = writeln!(out, "N={}", c.n_events);
    let _ = writeln!(out, "seed={}", c.seed);
    let _ = writeln!(out, "a={}", io::format_direction(c.a));
    if let Some(b) = c.b {
        let _ = writeln!(out, "b={}", io::format_direction(b));
    }
    let _ = writeln!(out, "chunk={}", c.chunk);
    out.push('\n');
    out.push_str("[frequencies]\n");
    out.push_str(&render_frequencies(&frequencies));
    out.push('\n');
    out.push_str("[moments]\n");
    out.push_str(&render_moments(&moments));
    Ok(out)
}
