//! Worst-case error of a sum-decomposition on a collision certificate.
//!
//! If `Phi(x+) = Phi(x-)` then `rho(Phi(x+)) = rho(Phi(x-))`, so the model
//! misses at least one of `f*(x+) = 1`, `f*(x-) = -1` by half the gap. With an
//! approximate collision the model outputs may differ by up to
//! `L * |Phi(x+) - Phi(x-)|`, where `L` is the Lipschitz constant of `rho`
//! near the collision; the estimate of `L` here is sampled, not certified.

use std::borrow::Cow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sets::f_star_sorted;

use super::collision::CollisionCertificate;
use super::phi::PhiSpec;

/// A set function of the form `rho(sum_i phi(x_i))`.
pub trait SumDecomposition {
    fn encoder(&self) -> Cow<'_, PhiSpec>;

    fn rho(&self, latent: &[f64]) -> f64;

    fn latent(&self, x: &[f64]) -> Vec<f64> {
        self.encoder().encode_set(x)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.rho(&self.latent(x))
    }
}

/// A sum-decomposition assembled from an encoder spec and a closure for `rho`.
pub struct Decomposition<F> {
    pub phi: PhiSpec,
    pub rho: F,
}

impl<F: Fn(&[f64]) -> f64> Decomposition<F> {
    pub fn new(phi: PhiSpec, rho: F) -> Self {
        Self { phi, rho }
    }
}

impl<F: Fn(&[f64]) -> f64> SumDecomposition for Decomposition<F> {
    fn encoder(&self) -> Cow<'_, PhiSpec> {
        Cow::Borrowed(&self.phi)
    }

    fn rho(&self, latent: &[f64]) -> f64 {
        (self.rho)(latent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBound {
    /// `max(|model(x+) - 1|, |model(x-) + 1|)`.
    pub bound: f64,
    pub error_plus: f64,
    pub error_minus: f64,
    pub half_gap: f64,
    /// Sampled Lipschitz constant of `rho` (sup norm on the latent side).
    pub rho_lipschitz: f64,
    /// `rho_lipschitz * phi_residual / 2`; the theory gives
    /// `bound >= half_gap - slack` when the estimate holds.
    pub slack: f64,
}

const LIPSCHITZ_SAMPLES: usize = 256;

/// Largest observed `|rho(c + h d) - rho(c)| / (h |d|_inf)` over random
/// directions `d` around `center`, at a few radii.
pub fn sampled_lipschitz<M: SumDecomposition + ?Sized>(
    model: &M,
    center: &[f64],
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = model.rho(center);
    let scale = 1.0 + center.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut best = 0.0f64;
    let mut probe = center.to_vec();
    for radius in [1e-6, 1e-4, 1e-2] {
        let h = radius * scale;
        for _ in 0..LIPSCHITZ_SAMPLES / 3 {
            let mut norm = 0.0f64;
            for (p, c) in probe.iter_mut().zip(center) {
                let d: f64 = rng.gen_range(-1.0..=1.0);
                norm = norm.max(d.abs());
                *p = c + h * d;
            }
            if norm == 0.0 {
                continue;
            }
            let slope = (model.rho(&probe) - base).abs() / (h * norm);
            if slope.is_finite() {
                best = best.max(slope);
            }
        }
    }
    best
}

/// Evaluates the model on the certified pair.
pub fn error_lower_bound<M: SumDecomposition + ?Sized>(
    model: &M,
    cert: &CollisionCertificate,
) -> Result<ErrorBound> {
    let phi = model.encoder();
    if phi.hash() != cert.phi_hash {
        return Err(Error::CertMismatch(
            "certificate was produced for a different encoder".into(),
        ));
    }
    let plus = model.eval(&cert.x_plus);
    let minus = model.eval(&cert.x_minus);
    let error_plus = (plus - f_star_sorted(&cert.x_plus)).abs();
    let error_minus = (minus - f_star_sorted(&cert.x_minus)).abs();
    let center = model.latent(&cert.x_plus);
    let rho_lipschitz = sampled_lipschitz(model, &center, cert.seed);
    Ok(ErrorBound {
        bound: error_plus.max(error_minus),
        error_plus,
        error_minus,
        half_gap: 0.5 * cert.f_gap,
        rho_lipschitz,
        slack: 0.5 * rho_lipschitz * cert.phi_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::collision::{find_collision, SearchBudget};

    fn linear() -> PhiSpec {
        PhiSpec::polynomial(vec![vec![1.0, 1.0]]).unwrap()
    }

    #[test]
    fn constant_models() {
        let phi = linear();
        let cert = find_collision(&phi, 2, 1e-9, &SearchBudget::default(), 0).unwrap();

        let zero = Decomposition::new(phi.clone(), |_: &[f64]| 0.0);
        let b = error_lower_bound(&zero, &cert).unwrap();
        assert_eq!((b.bound, b.error_plus, b.error_minus), (1.0, 1.0, 1.0));
        assert_eq!(b.slack, 0.0);

        let one = Decomposition::new(phi, |_: &[f64]| 1.0);
        let b = error_lower_bound(&one, &cert).unwrap();
        assert_eq!((b.bound, b.error_plus, b.error_minus), (2.0, 0.0, 2.0));
    }

    #[test]
    fn any_rho_misses_by_half_gap() {
        let phi = linear();
        let cert = find_collision(&phi, 2, 1e-9, &SearchBudget::default(), 0).unwrap();
        let model = Decomposition::new(phi, |z: &[f64]| (3.0 * z[0]).sin());
        let b = error_lower_bound(&model, &cert).unwrap();
        assert!(b.bound >= b.half_gap - b.slack);
        assert!((b.rho_lipschitz - 3.0 * (3.0 * 2.0f64).cos().abs()).abs() < 0.2);
    }

    #[test]
    fn mismatch() {
        let cert = find_collision(&linear(), 2, 1e-9, &SearchBudget::default(), 0).unwrap();
        let other = Decomposition::new(
            PhiSpec::polynomial(vec![vec![0.0, 2.0]]).unwrap(),
            |_: &[f64]| 0.0,
        );
        assert!(matches!(
            error_lower_bound(&other, &cert),
            Err(Error::CertMismatch(_))
        ));
    }
}
