//! Initial particle layouts: rectilinear lattices and point files.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Lattice points `gpos + goffset + k * gip_dist`, `k = 0..=floor(gsize / gip_dist)`
/// per axis. The first axis varies fastest.
pub fn generate_grid(gpos: &[f64], gsize: &[f64], goffset: &[f64], gip_dist: &[f64]) -> Result<Vec<Tensor>> {
    let d = gpos.len();
    if gsize.len() != d || goffset.len() != d || gip_dist.len() != d {
        return Err(Error::assembly(format!(
            "grid entries disagree in dimension (gpos {d}, gsize {}, goffset {}, gip_dist {})",
            gsize.len(),
            goffset.len(),
            gip_dist.len()
        )));
    }
    let mut counts = Vec::with_capacity(d);
    for axis in 0..d {
        let spacing = gip_dist[axis];
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::assembly(format!("gip_dist must be positive (axis {axis})")));
        }
        if !(gsize[axis] >= 0.0 && gsize[axis].is_finite()) {
            return Err(Error::assembly(format!("gsize must be non-negative (axis {axis})")));
        }
        let ratio = gsize[axis] / spacing;
        counts.push((ratio + 1e-9 * ratio.max(1.0)).floor() as usize + 1);
    }
    let total: usize = counts.iter().product();
    if total == 0 {
        return Err(Error::assembly("grid is empty"));
    }
    let mut out = Vec::with_capacity(total);
    let mut index = vec![0usize; d];
    for _ in 0..total {
        let coords: Vec<f64> = (0..d)
            .map(|a| gpos[a] + goffset[a] + index[a] as f64 * gip_dist[a])
            .collect();
        out.push(Tensor::vector(&coords));
        for a in 0..d {
            index[a] += 1;
            if index[a] < counts[a] {
                break;
            }
            index[a] = 0;
        }
    }
    Ok(out)
}

/// Whitespace-separated coordinates, one particle per line. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_points(text: &str, dimension: usize, source: &str) -> Result<Vec<Tensor>> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    Error::parse(format!("{source}:{}: `{tok}` is not a number", line_no + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dimension {
            return Err(Error::parse(format!(
                "{source}:{}: expected {dimension} coordinates, found {}",
                line_no + 1,
                values.len()
            )));
        }
        out.push(Tensor::vector(&values));
    }
    if out.is_empty() {
        return Err(Error::parse(format!("{source}: no particles")));
    }
    Ok(out)
}

pub fn read_points_file(path: &Path, dimension: usize) -> Result<Vec<Tensor>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_points(&text, dimension, &path.display().to_string())
}
