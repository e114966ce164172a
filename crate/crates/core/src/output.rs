//! Tabular output for sweep rows.

use std::io::Write;

use crate::analysis::{Column, SweepRow};
use crate::error::{Error, Result};

/// C's `%.17g`: 17 significant digits, trailing zeros dropped, exponent
/// form outside `1e-4 <= |x| < 1e17`.
pub fn format_g17(x: f64) -> String {
    const PRECISION: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PRECISION).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(row: &SweepRow, c: Column) -> String {
    let opt = |v: Option<f64>| v.map(format_g17).unwrap_or_default();
    match c {
        Column::M => row.m.to_string(),
        Column::N => row.n.to_string(),
        Column::Alpha => format_g17(row.alpha),
        Column::PAnalytic => format_g17(row.p_analytic),
        Column::PSimulated => opt(row.p_simulated),
        Column::AbsError => opt(row.abs_error),
        Column::MinFidelity => opt(row.min_fidelity),
        Column::RuntimeMs => format_g17(row.runtime_ms),
    }
}

/// CSV with the selected columns in schema order, LF line endings. Skipped
/// rows leave their simulated fields empty.
pub fn write_csv<W: Write>(out: &mut W, rows: &[SweepRow], columns: &[Column]) -> Result<()> {
    let cols: Vec<Column> = Column::ALL.into_iter().filter(|c| columns.contains(c)).collect();
    let io = |e: std::io::Error| Error::Io(e.to_string());
    let header: Vec<&str> = cols.iter().map(|c| c.name()).collect();
    out.write_all(header.join(",").as_bytes()).map_err(io)?;
    out.write_all(b"\n").map_err(io)?;
    for row in rows {
        let line: Vec<String> = cols.iter().map(|&c| cell(row, c)).collect();
        out.write_all(line.join(",").as_bytes()).map_err(io)?;
        out.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

pub fn to_csv(rows: &[SweepRow], columns: &[Column]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows, columns).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// JSON array of row objects.
pub fn to_json(rows: &[SweepRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

pub fn from_json(s: &str) -> Result<Vec<SweepRow>> {
    serde_json::from_str(s).map_err(|e| Error::InvalidParams(format!("bad sweep JSON: {e}")))
}
