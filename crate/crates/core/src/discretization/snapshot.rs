//! Plot-ready CSV dumps of node functions and JSON grid metadata.

use std::io::Write;

use super::grid::Grid;
use crate::error::{check_len, Result};

/// Writes `node,x,y,value` rows. Floats use 17 significant digits.
pub fn write_field_csv<W: Write>(out: &mut W, grid: &Grid, values: &[f64]) -> Result<()> {
    check_len(grid.len(), values.len())?;
    writeln!(out, "node,x,y,value")?;
    for (i, (p, v)) in grid.coords().iter().zip(values).enumerate() {
        writeln!(out, "{i},{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*v))?;
    }
    Ok(())
}

pub fn write_metadata_json<W: Write>(out: &mut W, grid: &Grid) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, &grid.metadata())?;
    writeln!(out)?;
    Ok(())
}

/// 17 significant digits, the round-trip width for `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
