//! Janossy pooling: averaging a function of ordered k-tuples, exactly, by
//! sorting, or over sampled permutations.

use setlab::janossy::{
    janossy_pool, permutation_moments, sampled_pool, sampled_variance, tuple_count, PoolingConfig,
};
use setlab::sets::SetInput;

fn main() -> setlab::Result<()> {
    let x = SetInput::new(vec![0.9, -0.3, 0.4, -0.8])?;
    let phi = |t: &[f64]| vec![t[0] * t[t.len() - 1], t[0]];
    let rho = |z: &[f64]| z[0] + z[1];
    for k in 1..=4 {
        println!(
            "k = {k}: {} tuples, pooled {:.6}",
            tuple_count(4, k),
            janossy_pool(&x, k, phi, rho)?
        );
    }

    let g = |t: &[f64]| 3.0 * t[0] - 2.0 * t[1] * t[2] + t[3] * t[3] * t[0];
    for cfg in [
        PoolingConfig::Sorted,
        PoolingConfig::KAry { k: 4 },
        PoolingConfig::Sampled { p: 6, seed: 1 },
    ] {
        println!("{cfg:?}: {:.6}", cfg.pool(&x, g)?);
    }

    // Variance of the sampled estimator without replacement.
    let (mean, sigma2) = permutation_moments(&x, g)?;
    println!("full mean {mean:.6}, permutation variance {sigma2:.6}");
    for p in [1, 2, 6, 12, 24] {
        let trials: Vec<f64> = (0..4000)
            .map(|s| sampled_pool(&x, g, p, s))
            .collect::<setlab::Result<_>>()?;
        let m = trials.iter().sum::<f64>() / trials.len() as f64;
        let var = trials.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (trials.len() - 1) as f64;
        println!(
            "p = {p:>2}: empirical {var:.5}, predicted {:.5}",
            sampled_variance(24, p as u64, sigma2)
        );
    }
    Ok(())
}
