//! Planar grids over `[-1, 1]^2` for plotting two-element set functions.

use std::io::Write;

use crate::error::{Error, Result};
use crate::sets::f_star_sorted;

use super::bound::SumDecomposition;
use super::lse::lse_max_slice;

pub enum ContourTarget<'a> {
    Max,
    LseMax(f64),
    FStar,
    Model(&'a dyn SumDecomposition),
}

impl ContourTarget<'_> {
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        Ok(match self {
            ContourTarget::Max => x.max(y),
            ContourTarget::LseMax(a) => lse_max_slice(&[x, y], *a)?,
            ContourTarget::FStar => f_star_sorted(&[x.max(y), x.min(y)]),
            ContourTarget::Model(m) => m.eval(&[x, y]),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourGrid {
    pub resolution: usize,
    /// `(x, y, value)`, `x` in the outer loop.
    pub rows: Vec<[f64; 3]>,
}

/// Coordinate `i` of a corner-anchored grid with `resolution` points per axis.
pub fn grid_coord(i: usize, resolution: usize) -> f64 {
    if i + 1 == resolution {
        1.0
    } else {
        -1.0 + 2.0 * i as f64 / (resolution - 1) as f64
    }
}

/// Evaluates `target` on a `resolution x resolution` grid including the
/// corners of the square.
pub fn emit_contour_grid(
    target: &ContourTarget<'_>,
    m: usize,
    resolution: usize,
) -> Result<ContourGrid> {
    if m != 2 {
        return Err(Error::UnsupportedDim(format!(
            "contour grids need M = 2, got {m}"
        )));
    }
    if resolution < 2 {
        return Err(Error::config("contour resolution must be at least 2"));
    }
    let mut rows = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        let x = grid_coord(i, resolution);
        for j in 0..resolution {
            let y = grid_coord(j, resolution);
            rows.push([x, y, target.eval(x, y)?]);
        }
    }
    Ok(ContourGrid { resolution, rows })
}

impl ContourGrid {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.resolution + j][2]
    }

    /// CSV with header `x,y,value` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "value"])?;
        for r in &self.rows {
            w.write_record(r.iter().map(|v| format!("{v:.16e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is ascii"))
    }
}
