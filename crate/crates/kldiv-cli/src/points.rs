//! Point-cloud CSV format: header `x1,...,xd`, one row of d reals per point.

use kldiv::SampleSet;
use std::io::Write;
use std::path::Path;

pub fn write_points_csv<W: Write>(mut w: W, set: &SampleSet) -> std::io::Result<()> {
    let header: Vec<String> = (1..=set.dim()).map(|i| format!("x{i}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for point in set.iter_points() {
        let row: Vec<String> = point.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a point-cloud CSV; error strings carry 1-based line numbers.
pub fn read_points_csv(path: &Path) -> Result<SampleSet, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| format!("{}: empty file", path.display()))?;
    let dim = header.split(',').count();
    let expected: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    if header.trim() != expected.join(",") {
        return Err(format!(
            "{}: line 1: expected header 'x1,...,x{dim}', got '{header}'",
            path.display()
        ));
    }
    let mut points = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim {
            return Err(format!(
                "{}: line {}: expected {dim} fields, got {}",
                path.display(),
                idx + 1,
                fields.len()
            ));
        }
        let mut point = Vec::with_capacity(dim);
        for field in fields {
            let v: f64 = field.trim().parse().map_err(|_| {
                format!(
                    "{}: line {}: '{field}' is not a real number",
                    path.display(),
                    idx + 1
                )
            })?;
            point.push(v);
        }
        points.push(point);
    }
    SampleSet::new(points).map_err(|e| format!("{}: {e}", path.display()))
}
