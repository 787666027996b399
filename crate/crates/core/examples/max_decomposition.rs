//! Coordinate-wise max pooling through `R^N`, `N < M`, cannot represent the sum:
//! two sets with equal pooled encodings but different sums.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use setlab::approx::PhiSpec;
use setlab::janossy::max_decomp_counterexample;

fn main() -> setlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let phi = PhiSpec::random_piecewise_linear(2, 6, &mut rng)?;
    let c = max_decomp_counterexample(&phi, 3)?;
    println!("x       = {:?}", c.x);
    println!("x~      = {:?}", c.x_tilde);
    println!(
        "max phi = {:?}\n        = {:?}",
        c.report.pooled, c.report.pooled_tilde
    );
    println!("sums    = {} vs {}", c.report.sum, c.report.sum_tilde);
    Ok(())
}
