//! Ledger time series as CSV with the fixed header [`LedgerRow::HEADER`].
//! Floats are written in the shortest form that parses back to the same
//! bits; missing values of rejected rows are `NaN`.

use std::path::Path;

use nsch_core::sim::{Flags, LedgerRow};

use crate::error::{Result, SimError};

pub fn render(rows: &[LedgerRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let header: Vec<&str> = LedgerRow::HEADER.split(',').collect();
    w.write_record(&header).expect("writing to memory");
    for r in rows {
        let mut rec: Vec<String> = r.numeric_columns().iter().map(|x| format!("{x:e}")).collect();
        rec.push(r.flags.to_string());
        w.write_record(&rec).expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

pub fn write_timeseries(path: &Path, rows: &[LedgerRow]) -> Result<()> {
    std::fs::write(path, render(rows)).map_err(|e| SimError::io(path, e))
}

pub fn parse(bytes: &[u8]) -> std::result::Result<Vec<LedgerRow>, String> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = r.headers().map_err(|e| e.to_string())?;
    if header.iter().collect::<Vec<_>>().join(",") != LedgerRow::HEADER {
        return Err(format!("header must be {:?}", LedgerRow::HEADER));
    }
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = k + 2;
        let mut x = [0.0; 12];
        for (xi, field) in x.iter_mut().zip(rec.iter()) {
            *xi = field.parse().map_err(|_| format!("line {line}: not a number: {field:?}"))?;
        }
        let flags: Flags = rec[12].parse().map_err(|e| format!("line {line}: {e}"))?;
        rows.push(LedgerRow::from_columns(x, flags));
    }
    Ok(rows)
}

pub fn read_timeseries(path: &Path) -> Result<Vec<LedgerRow>> {
    let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
    parse(&bytes).map_err(|m| SimError::parse(path, m))
}

/// One failed check, with the 1-based data row it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub row: usize,
    pub message: String,
}

/// Re-checks the ledger inequalities on a parsed time series.
///
/// Accepted rows must be finite with non-negative dissipation, a positive
/// separation margin, increasing time and `slack >= -tol_energy (1 + |E|)`,
/// where `E` is the energy before the step (the previous accepted row, or
/// `E_tot + dissipation` for the first). Every other row must carry a
/// rejection reason.
pub fn check_rows(rows: &[LedgerRow], tol_energy: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut fail = |row: usize, message: String| out.push(Violation { row, message });
    let mut prev: Option<&LedgerRow> = None;
    for (k, r) in rows.iter().enumerate() {
        let row = k + 1;
        if !r.flags.is_accepted() {
            if !r.flags.is_rejected() {
                fail(row, format!("row is neither accepted nor rejected ({})", r.flags));
            }
            if !(r.h > 0.0) {
                fail(row, format!("non-positive step {}", r.h));
            }
            continue;
        }
        if r.flags.is_rejected() {
            fail(row, format!("row is both accepted and rejected ({})", r.flags));
        }
        if let Some(bad) = r.numeric_columns().iter().position(|x| !x.is_finite()) {
            let name = LedgerRow::HEADER.split(',').nth(bad).unwrap_or("?");
            fail(row, format!("{name} is not finite"));
            continue;
        }
        let e_before = prev.map_or(r.e_tot + r.diss_visc + r.diss_ch + r.slack.max(0.0), |p| p.e_tot);
        let bound = tol_energy * (1.0 + e_before.abs());
        if r.slack < -bound {
            fail(row, format!("slack {:e} below -{bound:e}", r.slack));
        }
        if r.diss_visc < 0.0 || r.diss_ch < 0.0 {
            fail(row, format!("negative dissipation ({:e}, {:e})", r.diss_visc, r.diss_ch));
        }
        if r.e_kin < 0.0 || r.e_grad < 0.0 {
            fail(row, "negative kinetic or gradient energy".into());
        }
        if !(r.sep_margin > 0.0) {
            fail(row, format!("separation margin {:e} is not positive", r.sep_margin));
        }
        if !(r.h > 0.0) {
            fail(row, format!("non-positive step {}", r.h));
        }
        if let Some(p) = prev {
            if !(r.t > p.t) {
                fail(row, format!("time {} does not advance past {}", r.t, p.t));
            }
        }
        prev = Some(r);
    }
    out
}
