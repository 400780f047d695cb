//! Number formatting and small file helpers shared by the CSV writers.

use std::path::Path;

use crate::error::Result;

/// Round-trippable scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `rows` under `header` as CSV, one `fmt17` value per column.
pub fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = String::with_capacity(4096);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.into_iter().map(fmt17).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parses a CSV written by [`write_csv`] into its header and numeric rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| crate::Error::Data(format!("{} is empty", path.display())))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| crate::Error::Data(format!("{} row {}: {e}", path.display(), k + 1)))?;
        if row.len() != header.len() {
            return Err(crate::Error::Data(format!("{} row {} has {} columns", path.display(), k + 1, row.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
