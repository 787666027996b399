//! Polynomial machinery for inverting power sums: Newton's identities and
//! simultaneous root finding with the Aberth–Ehrlich iteration.
//!
//! Coefficients are carried in double-double so that close and repeated
//! roots can be resolved beyond what `f64` coefficients determine.

use num_complex::Complex64;
use twofloat::TwoFloat;

/// Elementary symmetric polynomials `e_0 = 1, e_1, ..., e_M` from power sums
/// `p_1, ..., p_M` via `k e_k = sum_{i=1..k} (-1)^(i-1) e_{k-i} p_i`, in
/// double-double arithmetic.
pub fn elementary_from_power_sums(p: &[TwoFloat]) -> Vec<TwoFloat> {
    let m = p.len();
    let mut e = vec![TwoFloat::from(0.0); m + 1];
    e[0] = TwoFloat::from(1.0);
    for k in 1..=m {
        let mut acc = TwoFloat::from(0.0);
        for i in 1..=k {
            let term = e[k - i] * p[i - 1];
            if i % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        e[k] = acc / k as f64;
    }
    e
}

/// Coefficients, lowest degree first, of the monic polynomial
/// `prod (t - r_i) = t^M - e_1 t^(M-1) + e_2 t^(M-2) - ...`.
pub fn monic_from_elementary(e: &[TwoFloat]) -> Vec<TwoFloat> {
    let m = e.len() - 1;
    let mut c = vec![TwoFloat::from(0.0); m + 1];
    for (k, &ek) in e.iter().enumerate() {
        c[m - k] = if k % 2 == 0 { ek } else { -ek };
    }
    c
}

/// Divides by `(t - root)`. Returns the quotient and the remainder `P(root)`.
pub fn deflate(coeffs: &[TwoFloat], root: f64) -> (Vec<TwoFloat>, TwoFloat) {
    let d = coeffs.len() - 1;
    if d == 0 {
        return (Vec::new(), coeffs[0]);
    }
    let mut q = vec![TwoFloat::from(0.0); d];
    q[d - 1] = coeffs[d];
    for i in (1..d).rev() {
        q[i - 1] = coeffs[i] + q[i] * root;
    }
    let rem = coeffs[0] + q[0] * root;
    (q, rem)
}

fn horner_dd(coeffs: &[TwoFloat], x: f64) -> (TwoFloat, TwoFloat) {
    let mut p = TwoFloat::from(0.0);
    let mut dp = TwoFloat::from(0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Aberth–Ehrlich sweeps restricted to the real line, with the polynomial
/// evaluated in double-double. Returns whether the iteration settled.
pub fn refine_real_roots(coeffs: &[TwoFloat], x: &mut [f64], max_iterations: usize) -> bool {
    let d = x.len();
    for _ in 0..max_iterations {
        let mut max_step: f64 = 0.0;
        for k in 0..d {
            let (p, dp) = horner_dd(coeffs, x[k]);
            if p.hi() == 0.0 {
                continue;
            }
            let ratio = f64::from(p / dp);
            let repulsion: f64 = (0..d)
                .filter(|&j| j != k && x[j] != x[k])
                .map(|j| 1.0 / (x[k] - x[j]))
                .sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if !step.is_finite() {
                return false;
            }
            x[k] -= step;
            max_step = max_step.max(step.abs() / (1.0 + x[k].abs()));
        }
        if max_step <= 4.0 * f64::EPSILON {
            return true;
        }
    }
    false
}

/// Replaces groups of roots that are numerically one multiple root by copies
/// of a common real value.
///
/// A `k`-fold root is a simple root of `P^(k-1)`, so for `k` from largest to
/// smallest the real roots of `P^(k-1)` are polished as candidates `c`. One
/// is accepted when the Taylor coefficients `P^(j)(c) / j!`, `j < k`, vanish
/// to the accuracy a multiple root at a rounded `c` allows, and the `k`
/// unmerged roots nearest to `c` then become `c`. Only groups that fit within
/// `reach` are considered. Returns each merged value with its multiplicity.
/// Distinct roots further apart than about `1e-13` never pass this test.
pub fn merge_multiple_roots(
    coeffs: &[TwoFloat],
    roots: &mut [Complex64],
    reach: f64,
) -> Vec<(f64, usize)> {
    let d = roots.len();
    let mut merged = vec![false; d];
    let mut groups = Vec::new();
    let unmerged_by_distance = |roots: &[Complex64], merged: &[bool], z: Complex64| {
        let mut idx: Vec<usize> = (0..d).filter(|&j| !merged[j]).collect();
        idx.sort_by(|&a, &b| (roots[a] - z).norm().total_cmp(&(roots[b] - z).norm()));
        idx
    };
    for k in (2..=d).rev() {
        let bunched = (0..d).any(|i| {
            let near = unmerged_by_distance(roots, &merged, roots[i]);
            !merged[i] && near.len() >= k && (roots[near[k - 1]] - roots[i]).norm() <= reach
        });
        if !bunched {
            continue;
        }
        let deriv = derivative_dd(coeffs, k - 1);
        let hi: Vec<f64> = deriv.iter().map(|a| a.hi()).collect();
        for cand in aberth_roots(&hi, AberthConfig::default()) {
            if cand.im.abs() > reach {
                continue;
            }
            let Some(c) = multiple_root_at(coeffs, cand.re, k) else {
                continue;
            };
            let centre = Complex64::new(c, 0.0);
            let around = unmerged_by_distance(roots, &merged, centre);
            if around.len() < k {
                continue;
            }
            // A root merged earlier that sits closer than the new group means
            // c belongs to that earlier root.
            let spread = (roots[around[k - 1]] - centre).norm();
            if spread > reach || (0..d).any(|j| merged[j] && (roots[j] - centre).norm() <= spread) {
                continue;
            }
            for &j in &around[..k] {
                roots[j] = centre;
                merged[j] = true;
            }
            groups.push((c, k));
        }
    }
    groups
}

/// Coefficients of the `m`-th derivative.
fn derivative_dd(coeffs: &[TwoFloat], m: usize) -> Vec<TwoFloat> {
    (m..coeffs.len())
        .map(|n| coeffs[n] * ((n - m + 1)..=n).map(|f| f as f64).product::<f64>())
        .collect()
}

/// Locates a `k`-fold root near `guess` as the simple root of `P^(k-1)` and
/// checks it against the lower derivatives. Newton must converge: it only
/// crawls towards a root of higher multiplicity.
fn multiple_root_at(coeffs: &[TwoFloat], guess: f64, k: usize) -> Option<f64> {
    let mut c = guess;
    let mut shifted = taylor_shift_dd(coeffs, c);
    let mut converged = false;
    for _ in 0..30 {
        let step = f64::from(shifted[k - 1] / (shifted[k] * k as f64));
        if !step.is_finite() {
            return None;
        }
        c -= step;
        shifted = taylor_shift_dd(coeffs, c);
        if step.abs() <= 4.0 * f64::EPSILON * c.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    let scale: f64 = coeffs
        .iter()
        .enumerate()
        .map(|(n, a)| a.hi().abs() * c.abs().max(1.0).powi(n as i32))
        .sum();
    let ok = converged
        && (0..k)
            .all(|j| shifted[j].hi().abs() <= 1e-14_f64.powi((k - j) as i32).max(1e-27) * scale);
    ok.then_some(c)
}

fn taylor_shift_dd(coeffs: &[TwoFloat], shift: f64) -> Vec<TwoFloat> {
    let mut c = coeffs.to_vec();
    let d = c.len() - 1;
    for i in 0..d {
        for j in (i..d).rev() {
            let next = c[j + 1];
            c[j] += next * shift;
        }
    }
    c
}

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

#[derive(Debug, Clone, Copy)]
pub struct AberthConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for AberthConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-13,
        }
    }
}

/// All complex roots of the polynomial with the given coefficients (lowest
/// degree first, nonzero leading coefficient), followed by one Newton polish
/// step per root.
pub fn aberth_roots(coeffs: &[f64], cfg: AberthConfig) -> Vec<Complex64> {
    let d = coeffs.len().saturating_sub(1);
    if d == 0 {
        return Vec::new();
    }
    let lead = coeffs[d];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    if d == 1 {
        return vec![Complex64::new(-monic[0], 0.0)];
    }

    // Start on a circle around the root centroid. The radius is the Cauchy
    // bound of the polynomial shifted to that centroid.
    let center = -monic[d - 1] / d as f64;
    let radius = {
        let shifted = taylor_shift(&monic, center);
        1.0e-3
            + shifted[..d]
                .iter()
                .map(|c| c.abs())
                .fold(0.0, f64::max)
                .min(1e6)
    };
    let mut z: Vec<Complex64> = (0..d)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / d as f64 + 0.4;
            Complex64::new(center, 0.0) + Complex64::from_polar(radius, theta)
        })
        .collect();

    let mut done = vec![false; d];
    for _ in 0..cfg.max_iterations {
        let mut max_step: f64 = 0.0;
        for k in 0..d {
            if done[k] {
                continue;
            }
            let (p, dp) = horner(&monic, z[k]);
            if p.norm() == 0.0 {
                done[k] = true;
                continue;
            }
            let ratio = p / dp;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..d {
                if j != k {
                    let diff = z[k] - z[j];
                    if diff.norm() > 0.0 {
                        repulsion += diff.inv();
                    }
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                continue;
            }
            z[k] -= step;
            let rel = step.norm() / (1.0 + z[k].norm());
            max_step = max_step.max(rel);
            if rel <= cfg.tolerance {
                done[k] = true;
            }
        }
        if max_step <= cfg.tolerance || done.iter().all(|&d| d) {
            break;
        }
    }

    for r in z.iter_mut() {
        let (p, dp) = horner(&monic, *r);
        if dp.norm() > 0.0 {
            let cand = *r - p / dp;
            let (pc, _) = horner(&monic, cand);
            if pc.norm() <= p.norm() && cand.re.is_finite() && cand.im.is_finite() {
                *r = cand;
            }
        }
    }
    z
}

/// Coefficients of `P(t + shift)`.
fn taylor_shift(coeffs: &[f64], shift: f64) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    let d = c.len() - 1;
    for i in 0..d {
        for j in (i..d).rev() {
            c[j] += shift * c[j + 1];
        }
    }
    c
}
