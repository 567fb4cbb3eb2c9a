use std::io::Write;

use crate::error::Result;

/// 17 significant digits with a `.` decimal separator; enough to round-trip.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

/// Writes a header and rows with RFC 4180 quoting.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line.
pub fn write_json_lines<W: Write, T: serde::Serialize>(mut out: W, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
