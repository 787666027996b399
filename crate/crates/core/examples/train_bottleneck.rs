//! Train Deep Sets on `f*` with a latent bottleneck `N = M - 1`, then certify
//! that the trained encoder forces an error of about 1.
//!
//! Usage: `train_bottleneck [epochs]` (default 60; the acceptance run uses 300).

use setlab::approx::{error_lower_bound, find_collision, SearchBudget};
use setlab::nnet::{train, Task, TrainConfig};

fn main() -> setlab::Result<()> {
    let epochs = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(60);
    for n in [2, 3] {
        let cfg = TrainConfig {
            epochs,
            batch_size: 16,
            step_size: 0.1,
            tie_probability: 0.3,
            boundary_probability: 0.1,
            ..TrainConfig::new(Task::FStar, 3, n, 1)
        };
        let (model, metrics) = train(&cfg)?;
        println!(
            "N = {n}: final loss {:.4}, max error on the {}-point grid {:.3}",
            metrics.final_loss, metrics.grid_points, metrics.grid_max_error
        );
        if n == 2 {
            let phi = model.export_phi();
            let cert = find_collision(&phi, 3, 1e-9, &SearchBudget::default(), 1)?;
            let bound = error_lower_bound(&model, &cert)?;
            println!(
                "  collision x+ = {:?}, x- = {:?}",
                cert.x_plus, cert.x_minus
            );
            println!(
                "  model error at one of them >= {:.4} (slack {:.1e})",
                bound.bound, bound.slack
            );
        }
    }
    Ok(())
}
