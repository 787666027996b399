//! Registry of invariant checks run by `setlab verify`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::approx::{
    self, find_collision, gamma, left_shift, nu, PhiSpec, SearchBudget, ShiftedPhi,
};
use crate::error::{Error, Result};
use crate::janossy;
use crate::nnet::{self, gradient_check, Activation, DeepSetsModel, Mlp, Task, TrainConfig};
use crate::sets::{canonicalize, f_star, SetInput, SimplexPoint};
use crate::sumdec::{self, VarSizeCodec};

pub const REPORT_SCHEMA: &str = "setlab.report/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    Sumdec,
    Approx,
    Janossy,
    Nnet,
}

impl Suite {
    fn includes(self, group: Suite) -> bool {
        self == Suite::All || self == group
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Sumdec => "sumdec",
            Suite::Approx => "approx",
            Suite::Janossy => "janossy",
            Suite::Nnet => "nnet",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

/// How the residual is compared with the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Pass when `residual <= tolerance`.
    Upper,
    /// Pass when `residual >= tolerance`.
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The result the check exercises.
    pub anchor: String,
    pub status: Status,
    pub residual: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub wall_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub suite: Suite,
    pub seed: u64,
    pub config_hash: String,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }
}

type CheckFn = fn(&mut ChaCha8Rng) -> Result<f64>;

pub struct Check {
    pub group: Suite,
    pub name: &'static str,
    pub anchor: &'static str,
    pub tolerance: f64,
    pub bound: Bound,
    run: CheckFn,
}

const fn check(
    group: Suite,
    name: &'static str,
    anchor: &'static str,
    tolerance: f64,
    bound: Bound,
    run: CheckFn,
) -> Check {
    Check {
        group,
        name,
        anchor,
        tolerance,
        bound,
        run,
    }
}

/// Every registered check, in report order.
pub fn registry() -> Vec<Check> {
    use Bound::*;
    use Suite::*;
    vec![
        check(
            Sumdec,
            "power_sum_roundtrip",
            "continuous sum-decomposition via R^M",
            1e-6,
            Upper,
            power_sum_roundtrip,
        ),
        check(
            Sumdec,
            "power_sum_injectivity",
            "injectivity of the power-sum encoder",
            1e-9,
            Lower,
            power_sum_injectivity,
        ),
        check(
            Sumdec,
            "power_sum_permutation_invariance",
            "sum-decomposition is permutation invariant",
            0.0,
            Upper,
            encode_invariance,
        ),
        check(
            Sumdec,
            "varsize_roundtrip",
            "sets containing at most M elements",
            1e-6,
            Upper,
            varsize_roundtrip,
        ),
        check(
            Sumdec,
            "exact_eval_max_grid",
            "rho = f o Phi^-1",
            1e-6,
            Upper,
            exact_eval_max_grid,
        ),
        check(
            Approx,
            "lse_max_bound",
            "max <= lse_a <= max + log M / a",
            1e-12,
            Upper,
            lse_bound,
        ),
        check(
            Approx,
            "lse_max_saturation",
            "upper bound attained at equal inputs",
            1e-12,
            Upper,
            lse_saturation,
        ),
        check(
            Approx,
            "nu_codomain",
            "nu maps the cube into the ordered simplex",
            0.0,
            Upper,
            nu_codomain,
        ),
        check(
            Approx,
            "nu_interleaving",
            "nu(x)_j >= nu(-x)_(j+1)",
            0.0,
            Upper,
            nu_interleaving,
        ),
        check(
            Approx,
            "nu_borsuk_antisymmetry",
            "Gamma o nu is odd on the cube surface",
            1e-9,
            Upper,
            nu_antisymmetry,
        ),
        check(
            Approx,
            "nu_vertical_constancy",
            "Gamma o nu is constant along surface verticals",
            1e-9,
            Upper,
            nu_verticals,
        ),
        check(
            Approx,
            "gamma_left_shift",
            "Gamma(alpha(x)) = -Gamma(x)",
            1e-12,
            Upper,
            left_shift_symmetry,
        ),
        check(
            Approx,
            "nu_continuity_probe",
            "nu is continuous",
            1e4,
            Upper,
            nu_continuity,
        ),
        check(
            Approx,
            "collision_certificates",
            "encoders into R^(M-1) collide on opposing faces",
            1e-6,
            Upper,
            collisions,
        ),
        check(
            Janossy,
            "ktuple_counts",
            "P(M, k) = M! / (M - k)!",
            0.0,
            Upper,
            ktuple_counts,
        ),
        check(
            Janossy,
            "kary_consistency",
            "k-ary pooling of a first-element encoder is 1-ary pooling",
            0.0,
            Upper,
            kary_consistency,
        ),
        check(
            Janossy,
            "pooling_permutation_invariance",
            "Janossy pooling is permutation invariant",
            1e-12,
            Upper,
            pooling_invariance,
        ),
        check(
            Janossy,
            "sampled_pool_variance",
            "(M! - p) / (M! - 1) sigma^2 / p",
            3.0,
            Upper,
            sampled_variance,
        ),
        check(
            Janossy,
            "max_decomposition_counterexample",
            "summation is not max-decomposable via R^N",
            1e-6,
            Lower,
            max_counterexamples,
        ),
        check(
            Nnet,
            "gradient_oracle",
            "reverse mode matches central differences",
            1e-4,
            Upper,
            gradient_oracle,
        ),
        check(
            Nnet,
            "deepsets_permutation_invariance",
            "rho(sum phi(x_i)) is permutation invariant",
            0.0,
            Upper,
            deepsets_invariance,
        ),
        check(
            Nnet,
            "encoder_export",
            "exported encoder reproduces Gamma",
            1e-12,
            Upper,
            encoder_export,
        ),
        check(
            Nnet,
            "train_reproducibility",
            "training is deterministic given the seed",
            0.0,
            Upper,
            train_reproducibility,
        ),
    ]
}

/// Runs every check of `suite`. `tol_override` replaces each tolerance.
pub fn run_suite(suite: Suite, seed: u64, tol_override: Option<f64>) -> SuiteReport {
    let config_hash = hex::encode(Sha256::digest(
        serde_json::json!({"suite": suite, "seed": seed, "tol": tol_override})
            .to_string()
            .as_bytes(),
    ));
    let mut checks = Vec::new();
    let mut summary = Summary::default();
    for (idx, c) in registry()
        .into_iter()
        .enumerate()
        .filter(|(_, c)| suite.includes(c.group))
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64 + 1);
        let tolerance = tol_override.unwrap_or(c.tolerance);
        let start = Instant::now();
        let outcome = (c.run)(&mut rng);
        let wall_time = start.elapsed().as_secs_f64();
        let (status, residual, detail) = match outcome {
            Ok(r) => {
                let ok = match c.bound {
                    Bound::Upper => r <= tolerance,
                    Bound::Lower => r >= tolerance,
                };
                (if ok { Status::Pass } else { Status::Fail }, r, None)
            }
            Err(e) => (Status::Fail, f64::NAN, Some(e.to_string())),
        };
        summary.total += 1;
        match status {
            Status::Pass => summary.passed += 1,
            Status::Fail => summary.failed += 1,
            Status::Skip => summary.skipped += 1,
        }
        checks.push(CheckRecord {
            name: c.name.into(),
            anchor: c.anchor.into(),
            status,
            residual,
            tolerance,
            seed,
            wall_time,
            detail,
        });
    }
    SuiteReport {
        schema: REPORT_SCHEMA.into(),
        suite,
        seed,
        config_hash,
        checks,
        summary,
    }
}

fn uniform_set<R: Rng>(rng: &mut R, m: usize) -> SetInput {
    SetInput::new((0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .expect("samples lie in [-1, 1]")
}

fn uniform_cube<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// A point on the surface of `[-1, 1]^n`: one random coordinate pinned to +-1.
pub fn surface_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut x = uniform_cube(rng, n);
    let i = rng.gen_range(0..n);
    x[i] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    x
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Five encoders `[-1, 1] -> R^n` used by the `nu` and `Gamma` checks:
/// shifted powers, a fine and a coarse random piecewise-linear map, a random
/// polynomial and a random tanh network.
pub fn test_encoders<R: Rng>(n: usize, rng: &mut R) -> Vec<PhiSpec> {
    let powers = (1..=n)
        .map(|q| {
            let mut row = vec![0.0; q + 1];
            // (x + 1)^q by binomial coefficients
            let mut c = 1.0;
            for (k, slot) in row.iter_mut().enumerate() {
                *slot = c;
                c = c * (q - k) as f64 / (k + 1) as f64;
            }
            row
        })
        .collect();
    let poly = (0..n)
        .map(|_| (0..5).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    let net =
        Mlp::random(&[1, 8, n], Activation::Tanh, Activation::Identity, rng).expect("valid sizes");
    vec![
        PhiSpec::polynomial(powers).expect("valid rows"),
        PhiSpec::random_piecewise_linear(n, 12, rng).expect("valid knots"),
        PhiSpec::random_piecewise_linear(n, 3, rng).expect("valid knots"),
        PhiSpec::polynomial(poly).expect("valid rows"),
        PhiSpec::mlp(net).expect("scalar input"),
    ]
}

fn power_sum_roundtrip(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for m in 1..=8 {
        for _ in 0..500 {
            let x = uniform_set(rng, m);
            let back = sumdec::power_sum_decode(&sumdec::power_sum_encode(&x)?, m)?;
            worst = worst.max(max_abs_diff(back.coords(), canonicalize(&x).coords()));
        }
    }
    Ok(worst)
}

fn power_sum_injectivity(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut smallest = f64::INFINITY;
    for m in 1..=6 {
        for _ in 0..500 {
            let a = canonicalize(&uniform_set(rng, m));
            let b = canonicalize(&uniform_set(rng, m));
            if max_abs_diff(a.coords(), b.coords()) < 1e-3 {
                continue;
            }
            let ea = sumdec::power_sum_encode(&SetInput::new(a.coords().to_vec())?)?;
            let eb = sumdec::power_sum_encode(&SetInput::new(b.coords().to_vec())?)?;
            smallest = smallest.min(max_abs_diff(ea.coords(), eb.coords()));
        }
    }
    Ok(smallest)
}

fn encode_invariance(rng: &mut ChaCha8Rng) -> Result<f64> {
    use rand::seq::SliceRandom;
    let mut worst = 0.0f64;
    for m in 2..=8 {
        for _ in 0..200 {
            let x = uniform_set(rng, m);
            let mut shuffled = x.values().to_vec();
            shuffled.shuffle(rng);
            let a = sumdec::power_sum_encode(&x)?;
            let b = sumdec::power_sum_encode(&SetInput::new(shuffled)?)?;
            worst = worst.max(max_abs_diff(a.coords(), b.coords()));
        }
    }
    Ok(worst)
}

fn varsize_roundtrip(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for m_max in 1..=6 {
        let codec = VarSizeCodec::new(m_max)?;
        for size in 0..=m_max {
            for _ in 0..100 {
                let x: Vec<f64> = uniform_cube(rng, size);
                let back = sumdec::varsize_decode(&sumdec::varsize_encode(&x, &codec)?, &codec)?;
                if back.dim() != size {
                    return Err(Error::InfeasibleLatent(format!(
                        "decoded {} elements, expected {size}",
                        back.dim()
                    )));
                }
                let mut sorted = x.clone();
                sorted.sort_by(|a, b| b.total_cmp(a));
                worst = worst.max(max_abs_diff(back.coords(), &sorted));
            }
        }
    }
    Ok(worst)
}

fn exact_eval_max_grid(_rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    let res = 51;
    for m in 1..=3 {
        for point in nnet::canonical_grid(m, res) {
            let x = SetInput::new(point.clone())?;
            let v = sumdec::exact_eval(|z: &SimplexPoint| z.coords()[0], &x)?;
            worst = worst.max((v - point[0]).abs());
        }
    }
    Ok(worst)
}

fn lse_bound(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let m = rng.gen_range(1..=8);
        let a = rng.gen_range(0.5..=50.0);
        let x = uniform_set(rng, m);
        let top = x.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = approx::lse_max(&x, a)?;
        worst = worst.max(top - v).max(v - (top + (m as f64).ln() / a));
    }
    Ok(worst.max(0.0))
}

fn lse_saturation(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let m = rng.gen_range(1..=8);
        let a = rng.gen_range(0.5..=50.0);
        let t = rng.gen_range(-1.0..=1.0);
        let v = approx::lse_max(&SetInput::new(vec![t; m])?, a)?;
        worst = worst.max((v - t - (m as f64).ln() / a).abs());
    }
    Ok(worst)
}

fn nu_codomain(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        for _ in 0..2000 {
            let z = nu(&uniform_cube(rng, n))?;
            let c = z.coords();
            let violation = c
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(c[0] - 1.0, f64::max)
                .max(-1.0 - c[n - 1]);
            worst = worst.max(violation);
        }
    }
    Ok(worst.max(0.0))
}

fn nu_interleaving(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 2..=6 {
        for _ in 0..2000 {
            let x = uniform_cube(rng, n);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let a = nu(&x)?;
            let b = nu(&neg)?;
            for j in 0..n - 1 {
                worst = worst.max(b.coords()[j + 1] - a.coords()[j]);
            }
        }
    }
    Ok(worst.max(0.0))
}

fn nu_antisymmetry(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        for phi in test_encoders(n, rng) {
            let g = ShiftedPhi::new(&phi);
            for _ in 0..200 {
                let x = surface_point(rng, n);
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                let a = g.gamma(nu(&x)?.coords());
                let b = g.gamma(nu(&neg)?.coords());
                worst = worst.max(
                    a.iter()
                        .zip(&b)
                        .map(|(p, q)| (p + q).abs())
                        .fold(0.0, f64::max),
                );
            }
        }
    }
    Ok(worst)
}

fn nu_verticals(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 2..=6 {
        for phi in test_encoders(n, rng) {
            let g = ShiftedPhi::new(&phi);
            for _ in 0..40 {
                let mut x = surface_point(rng, n - 1);
                x.push(-1.0);
                let base = g.gamma(nu(&x)?.coords());
                for k in 0..=8 {
                    x[n - 1] = -1.0 + 2.0 * k as f64 / 8.0;
                    worst = worst.max(max_abs_diff(&g.gamma(nu(&x)?.coords()), &base));
                }
            }
        }
    }
    Ok(worst)
}

fn left_shift_symmetry(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        for phi in test_encoders(n, rng) {
            for _ in 0..100 {
                let mut c = uniform_cube(rng, n);
                c[0] = 1.0;
                c.sort_by(|a, b| b.total_cmp(a));
                let x = SimplexPoint::new(c)?;
                let a = gamma(&x, &phi)?;
                let b = gamma(&left_shift(&x)?, &phi)?;
                worst = worst.max(
                    a.coords()
                        .iter()
                        .zip(b.coords())
                        .map(|(p, q)| (p + q).abs())
                        .fold(0.0, f64::max),
                );
            }
        }
    }
    Ok(worst)
}

/// Largest observed `|nu(x) - nu(y)|_inf / |x - y|_inf` over close pairs.
pub fn nu_slope_estimate<R: Rng>(rng: &mut R, n: usize, pairs: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x = uniform_cube(rng, n);
        let delta = rng.gen_range(1e-9..=1e-6);
        let y: Vec<f64> = x
            .iter()
            .map(|v| (v + rng.gen_range(-delta..=delta)).clamp(-1.0, 1.0))
            .collect();
        let dx = max_abs_diff(&x, &y);
        if dx == 0.0 {
            continue;
        }
        worst = worst.max(max_abs_diff(nu(&x)?.coords(), nu(&y)?.coords()) / dx);
    }
    Ok(worst)
}

fn nu_continuity(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        worst = worst.max(nu_slope_estimate(rng, n, 1000)?);
    }
    Ok(worst)
}

fn collisions(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for m in 2..=4 {
        for _ in 0..3 {
            let phi = PhiSpec::random_piecewise_linear(m - 1, 8, rng)?;
            let cert = find_collision(&phi, m, 1e-9, &SearchBudget::default(), rng.gen())?;
            cert.verify(&phi)?;
            if f_star(&SetInput::new(cert.x_plus.clone())?) != 1.0
                || f_star(&SetInput::new(cert.x_minus.clone())?) != -1.0
            {
                return Err(Error::CertMismatch("face values are not +-1".into()));
            }
            worst = worst.max(cert.phi_residual);
        }
    }
    Ok(worst)
}

fn ktuple_counts(_rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut mismatches = 0usize;
    for m in 1..=7 {
        for k in 1..=m {
            let e = janossy::enumerate_ktuples(m, k)?;
            let mut seen: Vec<Vec<usize>> = e.tuples().map(<[usize]>::to_vec).collect();
            let sorted = seen.windows(2).all(|w| w[0] < w[1]);
            seen.dedup();
            if e.len() as u64 != janossy::tuple_count(m, k) || seen.len() != e.len() || !sorted {
                mismatches += 1;
            }
        }
    }
    Ok(mismatches as f64)
}

fn kary_consistency(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let m = rng.gen_range(3..=6);
        let x = uniform_set(rng, m);
        let w: f64 = rng.gen_range(-2.0..=2.0);
        let phi = move |t: &[f64]| vec![(w * t[0]).tanh(), t[0] * t[0]];
        let rho = |z: &[f64]| z[0] - 0.5 * z[1];
        let base = janossy::janossy_pool(&x, 1, phi, rho)?;
        for k in 2..=3 {
            worst = worst.max((janossy::janossy_pool(&x, k, phi, rho)? - base).abs());
        }
    }
    Ok(worst)
}

fn pooling_invariance(rng: &mut ChaCha8Rng) -> Result<f64> {
    use rand::seq::SliceRandom;
    let g = |t: &[f64]| {
        t.iter()
            .enumerate()
            .map(|(i, v)| (i as f64 + 1.0) * v * v)
            .sum::<f64>()
            + t[0] * t[t.len() - 1]
    };
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let m = rng.gen_range(2..=6);
        let x = uniform_set(rng, m);
        let k = rng.gen_range(1..=m);
        let base = janossy::janossy_pool(&x, k, |t| vec![g(t)], |z| z[0])?;
        let sorted = janossy::sorted_eval(&x, g);
        for _ in 0..10 {
            let mut p = x.values().to_vec();
            p.shuffle(rng);
            let y = SetInput::new(p)?;
            worst =
                worst.max((janossy::janossy_pool(&y, k, |t| vec![g(t)], |z| z[0])? - base).abs());
            worst = worst.max((janossy::sorted_eval(&y, g) - sorted).abs());
        }
    }
    Ok(worst)
}

/// Largest `|empirical - predicted| / SE` of the sampled-pooling variance over
/// `p in {1, 2, 6, 12, 24}` for a fixed `M = 4` input, together with the
/// variance at `p = 24`.
pub fn sampled_variance_zscores(
    seed: u64,
    trials: usize,
) -> Result<(Vec<(usize, f64, f64, f64)>, f64)> {
    let x = SetInput::new(vec![0.9, -0.3, 0.4, -0.8])?;
    let g = |t: &[f64]| 3.0 * t[0] - 2.0 * t[1] * t[2] + t[3] * t[3] * t[0];
    let (_, sigma2) = janossy::permutation_moments(&x, g)?;
    let mut rows = Vec::new();
    let mut var_full = f64::NAN;
    for p in [1usize, 2, 6, 12, 24] {
        let values: Vec<f64> = (0..trials)
            .map(|t| {
                janossy::sampled_pool(
                    &x,
                    g,
                    p,
                    seed.wrapping_mul(1_000_003).wrapping_add(t as u64),
                )
            })
            .collect::<Result<_>>()?;
        let n = values.len() as f64;
        let mean = crate::exact::exact_mean(&values);
        let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = dev.iter().sum::<f64>() / (n - 1.0);
        let predicted = janossy::sampled_variance(24, p as u64, sigma2);
        // standard error of the sample variance from the fourth central moment
        let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        let se = ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n)
            .max(0.0)
            .sqrt();
        let z = if se == 0.0 {
            if var == predicted {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (var - predicted).abs() / se
        };
        if p == 24 {
            var_full = var;
        }
        rows.push((p, var, predicted, z));
    }
    Ok((rows, var_full))
}

fn sampled_variance(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (rows, var_full) = sampled_variance_zscores(rng.gen(), 2000)?;
    if var_full != 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(rows.iter().map(|r| r.3).fold(0.0, f64::max))
}

fn max_counterexamples(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut smallest = f64::INFINITY;
    for _ in 0..20 {
        let m = rng.gen_range(2..=5);
        let n = rng.gen_range(1..m);
        let phi = PhiSpec::random_piecewise_linear(n, 6, rng)?;
        let c = janossy::max_decomp_counterexample(&phi, m)?;
        if c.report
            .pooled
            .iter()
            .zip(&c.report.pooled_tilde)
            .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Ok(0.0);
        }
        smallest = smallest.min((c.report.sum - c.report.sum_tilde).abs());
    }
    Ok(smallest)
}

fn random_sizes<R: Rng>(rng: &mut R) -> Vec<usize> {
    let depth = rng.gen_range(1..=3);
    let mut sizes = vec![rng.gen_range(1..=4)];
    for _ in 0..depth {
        sizes.push(rng.gen_range(1..=6));
    }
    sizes
}

fn gradient_oracle(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let sizes = random_sizes(rng);
        let net = Mlp::random(&sizes, Activation::Tanh, Activation::Tanh, rng)?;
        let input = uniform_cube(rng, sizes[0]);
        let target = uniform_cube(rng, *sizes.last().unwrap());
        worst = worst.max(gradient_check(&net, &input, &target, 1e-5)?);
    }
    Ok(worst)
}

fn deepsets_invariance(rng: &mut ChaCha8Rng) -> Result<f64> {
    use rand::seq::SliceRandom;
    let model = DeepSetsModel::random(3, &[8], &[8], Activation::Tanh, rng)?;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let m = rng.gen_range(1..=6);
        let x = uniform_cube(rng, m);
        let base = model.eval_slice(&x);
        let mut p = x.clone();
        for _ in 0..5 {
            p.shuffle(rng);
            worst = worst.max((model.eval_slice(&p) - base).abs());
        }
    }
    Ok(worst)
}

fn encoder_export(rng: &mut ChaCha8Rng) -> Result<f64> {
    let model = DeepSetsModel::random(2, &[6], &[6], Activation::Tanh, rng)?;
    let phi = PhiSpec::from_json(&model.export_phi().to_json()?)?;
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let mut z = uniform_cube(rng, 2);
        z.sort_by(|a, b| b.total_cmp(a));
        let via_export = gamma(&SimplexPoint::new(z.clone())?, &phi)?;
        let base = model.phi().forward(&[-1.0])?;
        let top = model.phi().forward(&[1.0])?;
        let direct: Vec<f64> = (0..2)
            .map(|q| {
                let t = |v: f64| model.phi().forward(&[v]).map(|o| o[q] - base[q]);
                Ok(-t(z[0])? + t(z[1])? + 0.5 * (top[q] - base[q]))
            })
            .collect::<Result<_>>()?;
        worst = worst.max(max_abs_diff(via_export.coords(), &direct));
    }
    Ok(worst)
}

fn train_reproducibility(rng: &mut ChaCha8Rng) -> Result<f64> {
    let cfg = TrainConfig {
        epochs: 2,
        samples: 64,
        batch_size: 16,
        phi_hidden: vec![4],
        rho_hidden: vec![4],
        eval_resolution: 5,
        ..TrainConfig::new(Task::FStar, 3, 2, rng.gen())
    };
    let (a, _) = nnet::train(&cfg)?;
    let (b, _) = nnet::train(&cfg)?;
    Ok(max_abs_diff(&a.params(), &b.params()))
}
