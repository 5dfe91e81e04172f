//! Result tables as CSV with six significant digits.

use std::path::Path;

use crate::error::Result;
use crate::experiments::ResultTable;

/// `%.6g`-style formatting, locale independent.
pub fn fmt_sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Header, one row per repetition, then `mean` and `std` rows per key group
/// when the table asks for them.
pub fn table_records(table: &ResultTable) -> Vec<Vec<String>> {
    let mut out = Vec::with_capacity(table.rows.len() + 1);
    let mut header = table.key_columns.clone();
    header.push("rep".into());
    header.extend(table.metric_columns.iter().cloned());
    out.push(header);
    for row in &table.rows {
        let mut rec = row.keys.clone();
        rec.push(row.rep.to_string());
        rec.extend(row.metrics.iter().map(|&v| fmt_sig6(v)));
        out.push(rec);
    }
    if table.summarize {
        for (keys, stats) in table.summaries() {
            for (label, pick) in [("mean", 0), ("std", 1)] {
                let mut rec = keys.clone();
                rec.push(label.into());
                rec.extend(stats.iter().map(|s| fmt_sig6(if pick == 0 { s.0 } else { s.1 })));
                out.push(rec);
            }
        }
    }
    out
}

pub fn write_table(table: &ResultTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for rec in table_records(table) {
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
