//! Plain-text serialization helpers shared by the library and the CLI.

use std::io::{self, Write};

/// 17 significant digits, '.' decimal separator, independent of locale.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // Avoid "-0" for negative zero so equal curves serialize identically.
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

/// Write a CSV table with an optional block of `# key=value` comment lines.
pub fn write_csv<W: Write>(
    mut out: W,
    comments: &[(String, String)],
    header: &[String],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> io::Result<()> {
    for (k, v) in comments {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Row-major nested vectors, the JSON layout used for matrices.
pub fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub(crate) fn serialize_matrix<S: serde::Serializer>(
    m: &nalgebra::DMatrix<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&matrix_rows(m), s)
}
