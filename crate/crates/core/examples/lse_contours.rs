//! The smooth maximum `log(sum e^(a x_i)) / a` and its contour grids.
//!
//! Writes `max.csv`, `lse_2.csv` and `lse_6.csv` into the directory given as
//! the first argument (default: the system temp directory).

use std::fs::File;
use std::path::PathBuf;

use setlab::approx::{emit_contour_grid, lse_max, ContourTarget};
use setlab::sets::SetInput;

fn main() -> setlab::Result<()> {
    let x = SetInput::new(vec![0.0, 1.0])?;
    for a in [1.0, 2.0, 6.0, 50.0] {
        let v = lse_max(&x, a)?;
        println!(
            "a = {a:>4}: lse_max = {v:.6}, gap to max = {:.6}, bound log(2)/a = {:.6}",
            v - 1.0,
            2f64.ln() / a
        );
    }

    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    for (name, target) in [
        ("max", ContourTarget::Max),
        ("lse_2", ContourTarget::LseMax(2.0)),
        ("lse_6", ContourTarget::LseMax(6.0)),
    ] {
        let grid = emit_contour_grid(&target, 2, 101)?;
        let path = dir.join(format!("{name}.csv"));
        grid.write_csv(File::create(&path)?)?;
        let worst = grid
            .rows
            .iter()
            .map(|r| r[2] - r[0].max(r[1]))
            .fold(0.0, f64::max);
        println!("{}: largest excess over max {worst:.4}", path.display());
    }
    Ok(())
}
