//! Janossy pooling: averaging a permutation-sensitive function over
//! orderings, over all distinct `k`-tuples, over a random sample of
//! permutations, or over the single sorted ordering. Also the max-pooling
//! counterexample: with a latent space smaller than the set, coordinate-wise
//! max pooling cannot tell some sets with different sums apart.
//!
//! All averages are computed with an exactly rounded sum, so results do not
//! depend on enumeration order and repeated tuples cancel exactly.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approx::PhiSpec;
use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::sets::{canonicalize, SetInput};

pub const MAX_TUPLE_SET: usize = 10;
pub const MAX_TUPLES: u64 = 10_000_000;
pub const MAX_SAMPLED_SET: usize = 8;

/// `P(M, k) = M! / (M - k)!`, saturating at `u64::MAX`.
pub fn tuple_count(m: usize, k: usize) -> u64 {
    if k > m {
        return 0;
    }
    ((m - k + 1)..=m).fold(1u64, |acc, v| acc.saturating_mul(v as u64))
}

pub fn factorial(m: usize) -> u64 {
    tuple_count(m, m)
}

fn check_tuple_size(m: usize, k: usize) -> Result<u64> {
    if k == 0 || k > m {
        return Err(Error::size(format!(
            "tuple length k = {k} must lie in 1..={m}"
        )));
    }
    if m > MAX_TUPLE_SET {
        return Err(Error::size(format!(
            "set size {m} exceeds the tuple enumeration limit {MAX_TUPLE_SET}"
        )));
    }
    let count = tuple_count(m, k);
    if count > MAX_TUPLES {
        return Err(Error::size(format!(
            "P({m}, {k}) = {count} exceeds {MAX_TUPLES}"
        )));
    }
    Ok(count)
}

/// Calls `f` on every `k`-tuple of distinct indices from `0..m`, in
/// lexicographic order.
fn for_each_ktuple<F: FnMut(&[usize])>(m: usize, k: usize, mut f: F) {
    let mut tuple = Vec::with_capacity(k);
    let mut used = vec![false; m];
    fn rec<F: FnMut(&[usize])>(
        m: usize,
        k: usize,
        tuple: &mut Vec<usize>,
        used: &mut [bool],
        f: &mut F,
    ) {
        if tuple.len() == k {
            f(tuple);
            return;
        }
        for i in 0..m {
            if !used[i] {
                used[i] = true;
                tuple.push(i);
                rec(m, k, tuple, used, f);
                tuple.pop();
                used[i] = false;
            }
        }
    }
    rec(m, k, &mut tuple, &mut used, &mut f);
}

/// All `k`-tuples of distinct indices from `0..M`, lexicographic, stored flat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleEnumeration {
    m: usize,
    k: usize,
    flat: Vec<usize>,
}

impl TupleEnumeration {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn tuples(&self) -> std::slice::ChunksExact<'_, usize> {
        self.flat.chunks_exact(self.k)
    }
}

pub fn enumerate_ktuples(m: usize, k: usize) -> Result<TupleEnumeration> {
    let count = check_tuple_size(m, k)?;
    let mut flat = Vec::with_capacity(count as usize * k);
    for_each_ktuple(m, k, |t| flat.extend_from_slice(t));
    Ok(TupleEnumeration { m, k, flat })
}

/// `rho((1 / P(M, k)) sum_t phi(x_t))` over all `k`-tuples `t` of distinct
/// elements.
pub fn janossy_pool<P, R>(x: &SetInput, k: usize, phi: P, rho: R) -> Result<f64>
where
    P: Fn(&[f64]) -> Vec<f64>,
    R: Fn(&[f64]) -> f64,
{
    let m = x.len();
    let count = check_tuple_size(m, k)?;
    let values = x.values();
    let mut sums: Vec<ExactSum> = Vec::new();
    let mut tuple = vec![0.0; k];
    let mut width = None;
    let mut mismatch = false;
    for_each_ktuple(m, k, |t| {
        for (slot, &i) in tuple.iter_mut().zip(t) {
            *slot = values[i];
        }
        let out = phi(&tuple);
        match width {
            None => {
                width = Some(out.len());
                sums = vec![ExactSum::new(); out.len()];
            }
            Some(w) if w != out.len() => mismatch = true,
            _ => {}
        }
        for (s, v) in sums.iter_mut().zip(out) {
            s.add(v);
        }
    });
    if mismatch {
        return Err(Error::shape(
            "tuple encoder returned vectors of different lengths",
        ));
    }
    let pooled: Vec<f64> = sums.iter().map(|s| s.mean(count as usize)).collect();
    Ok(rho(&pooled))
}

/// Permutation of `0..m` with lexicographic rank `rank`, via its Lehmer code.
pub fn unrank_permutation(m: usize, mut rank: u64) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..m).collect();
    let mut out = Vec::with_capacity(m);
    for i in (0..m).rev() {
        let f = factorial(i);
        let digit = (rank / f) as usize;
        rank %= f;
        out.push(pool.remove(digit));
    }
    out
}

/// Mean of `g` over `p` orderings of `x` drawn uniformly without replacement.
/// Ranks `0..M!` are shuffled with a partial Fisher–Yates pass seeded by
/// `seed`; the first `p` ranks are unranked into permutations.
pub fn sampled_pool<G: Fn(&[f64]) -> f64>(x: &SetInput, g: G, p: usize, seed: u64) -> Result<f64> {
    let m = x.len();
    if m > MAX_SAMPLED_SET {
        return Err(Error::size(format!(
            "sampled pooling supports M <= {MAX_SAMPLED_SET}, got {m}"
        )));
    }
    let total = factorial(m) as usize;
    if p == 0 || p > total {
        return Err(Error::size(format!(
            "sample count p = {p} must lie in 1..={total}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ranks: Vec<u64> = (0..total as u64).collect();
    let (chosen, _) = ranks.partial_shuffle(&mut rng, p);
    let values = x.values();
    let mut sum = ExactSum::new();
    let mut ordered = vec![0.0; m];
    for &rank in chosen.iter() {
        for (slot, i) in ordered.iter_mut().zip(unrank_permutation(m, rank)) {
            *slot = values[i];
        }
        sum.add(g(&ordered));
    }
    Ok(sum.mean(p))
}

/// `g` applied to the descending ordering of `x`.
pub fn sorted_eval<G: Fn(&[f64]) -> f64>(x: &SetInput, g: G) -> f64 {
    g(canonicalize(x).coords())
}

/// Exact mean and population variance of `g` over all `M!` orderings.
pub fn permutation_moments<G: Fn(&[f64]) -> f64>(x: &SetInput, g: G) -> Result<(f64, f64)> {
    let m = x.len();
    if m > MAX_SAMPLED_SET {
        return Err(Error::size(format!(
            "full permutation enumeration supports M <= {MAX_SAMPLED_SET}"
        )));
    }
    let values = x.values();
    let mut outputs = Vec::with_capacity(factorial(m) as usize);
    let mut ordered = vec![0.0; m];
    for_each_ktuple(m, m, |t| {
        for (slot, &i) in ordered.iter_mut().zip(t) {
            *slot = values[i];
        }
        outputs.push(g(&ordered));
    });
    let mut s = ExactSum::new();
    outputs.iter().for_each(|&v| s.add(v));
    let mean = s.mean(outputs.len());
    let mut sq = ExactSum::new();
    outputs
        .iter()
        .for_each(|&v| sq.add((v - mean) * (v - mean)));
    Ok((mean, sq.mean(outputs.len())))
}

/// Variance of the mean of `p` draws without replacement from `total`
/// equally likely outputs with population variance `sigma2`:
/// `(total - p) / (total - 1) * sigma2 / p`.
pub fn sampled_variance(total: u64, p: u64, sigma2: f64) -> f64 {
    if total <= 1 || p >= total {
        return 0.0;
    }
    (total - p) as f64 / (total - 1) as f64 * sigma2 / p as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PoolingConfig {
    KAry { k: usize },
    Sampled { p: usize, seed: u64 },
    Sorted,
}

impl PoolingConfig {
    /// Pools a scalar function of ordered tuples; `k`-ary mode applies `g`
    /// to `k`-tuples, the others to full orderings.
    pub fn pool<G: Fn(&[f64]) -> f64>(&self, x: &SetInput, g: G) -> Result<f64> {
        match *self {
            PoolingConfig::KAry { k } => janossy_pool(x, k, |t| vec![g(t)], |z| z[0]),
            PoolingConfig::Sampled { p, seed } => sampled_pool(x, g, p, seed),
            PoolingConfig::Sorted => Ok(sorted_eval(x, g)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxDecompReport {
    /// `mu[n]`: index of an element attaining the maximum in latent coordinate `n`.
    pub mu: Vec<usize>,
    /// An index not in `mu`; this element is replaced by `x[mu[0]]`.
    pub untouched: usize,
    pub pooled: Vec<f64>,
    pub pooled_tilde: Vec<f64>,
    pub sum: f64,
    pub sum_tilde: f64,
    pub resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxDecompCounterexample {
    pub x: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub report: MaxDecompReport,
}

fn max_pool(phi: &PhiSpec, x: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; phi.dim()];
    for &v in x {
        for (o, e) in out.iter_mut().zip(phi.eval(v)) {
            *o = o.max(e);
        }
    }
    out
}

fn counterexample_from(
    phi: &PhiSpec,
    x: Vec<f64>,
    resamples: usize,
) -> Option<MaxDecompCounterexample> {
    let m = x.len();
    let encoded: Vec<Vec<f64>> = x.iter().map(|&v| phi.eval(v)).collect();
    if encoded.iter().flatten().any(|v| !v.is_finite()) {
        return None;
    }
    let mu: Vec<usize> = (0..phi.dim())
        .map(|n| {
            (0..m).fold(0, |best, i| {
                if encoded[i][n] > encoded[best][n] {
                    i
                } else {
                    best
                }
            })
        })
        .collect();
    let untouched = (0..m).find(|i| !mu.contains(i))?;
    let mut x_tilde = x.clone();
    x_tilde[untouched] = x[mu[0]];
    let pooled = max_pool(phi, &x);
    let pooled_tilde = max_pool(phi, &x_tilde);
    let sum = crate::exact::exact_sum(x.iter().copied());
    let sum_tilde = crate::exact::exact_sum(x_tilde.iter().copied());
    if pooled != pooled_tilde || (sum - sum_tilde).abs() < 1e-6 {
        return None;
    }
    Some(MaxDecompCounterexample {
        x,
        x_tilde,
        report: MaxDecompReport {
            mu,
            untouched,
            pooled,
            pooled_tilde,
            sum,
            sum_tilde,
            resamples,
        },
    })
}

/// Builds two sets with different sums whose coordinate-wise max-pooled
/// encodings under `phi` are identical. Needs `phi.dim() < m`.
///
/// The probes are `m` equally spaced points of `[-1, 1]`; if `phi` is not
/// finite on them, they are redrawn at random up to 100 times.
pub fn max_decomp_counterexample(phi: &PhiSpec, m: usize) -> Result<MaxDecompCounterexample> {
    if phi.dim() >= m {
        return Err(Error::config(format!(
            "latent dimension N = {} must be below M = {m}",
            phi.dim()
        )));
    }
    let probes: Vec<f64> = (0..m)
        .map(|i| {
            if m == 1 {
                0.0
            } else {
                -1.0 + 2.0 * i as f64 / (m - 1) as f64
            }
        })
        .collect();
    if let Some(c) = counterexample_from(phi, probes, 0) {
        return Ok(c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
    for attempt in 1..=100 {
        let mut probes: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        probes.sort_by(f64::total_cmp);
        if probes.windows(2).any(|w| w[1] - w[0] < 1e-3) {
            continue;
        }
        if let Some(c) = counterexample_from(phi, probes, attempt) {
            return Ok(c);
        }
    }
    Err(Error::ProbeDegenerate(
        "no finite, distinct probe set found after 100 resamples".into(),
    ))
}

/// As [`max_decomp_counterexample`] with caller-chosen distinct probes.
pub fn max_decomp_counterexample_with(
    phi: &PhiSpec,
    probes: &[f64],
) -> Result<MaxDecompCounterexample> {
    let m = probes.len();
    if phi.dim() >= m {
        return Err(Error::config(format!(
            "latent dimension N = {} must be below M = {m}",
            phi.dim()
        )));
    }
    let mut sorted = probes.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("probe points must be distinct"));
    }
    counterexample_from(phi, probes.to_vec(), 0)
        .ok_or_else(|| Error::ProbeDegenerate("probe set collapses under the encoder".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[f64]) -> SetInput {
        SetInput::new(v.to_vec()).unwrap()
    }

    #[test]
    fn tuple_counts() {
        let e = enumerate_ktuples(4, 2).unwrap();
        assert_eq!(e.len(), 12);
        let listed: Vec<Vec<usize>> = e.tuples().map(|t| t.to_vec()).collect();
        assert_eq!(listed[0], vec![0, 1]);
        assert_eq!(listed[3], vec![1, 0]);
        assert_eq!(listed[11], vec![3, 2]);
        assert_eq!(enumerate_ktuples(3, 3).unwrap().len(), 6);
        assert_eq!(enumerate_ktuples(5, 1).unwrap().len(), 5);
        assert!(matches!(enumerate_ktuples(3, 4), Err(Error::Size(_))));
        assert!(matches!(enumerate_ktuples(11, 2), Err(Error::Size(_))));
        assert_eq!(tuple_count(10, 10), 3_628_800);
    }

    #[test]
    fn pooling_examples() {
        let x = set(&[1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let v = janossy_pool(&x, 1, |t| t.to_vec(), |z| z[0]).unwrap();
        assert_eq!(v, 2.0 / 3.0);

        let x = set(&[0.1, 0.2, 0.3]);
        let v = janossy_pool(&x, 2, |t| vec![t[0] * t[1]], |z| z[0]).unwrap();
        assert!((v - 0.036666666666666667).abs() < 1e-15);

        let g = |t: &[f64]| t[0] - 2.0 * t[1] + 3.0 * t[0] * t[2];
        let full = janossy_pool(&x, 3, |t| vec![g(t)], |z| z[0]).unwrap();
        let sampled = sampled_pool(&x, g, 6, 9).unwrap();
        assert_eq!(full, sampled);
        assert_eq!(full, permutation_moments(&x, g).unwrap().0);
    }

    #[test]
    fn first_element_tuples_match_singletons() {
        let x = set(&[0.3, -0.71, 0.9, 0.05, -0.2]);
        let phi1 = |t: &[f64]| vec![t[0].sin(), t[0] * t[0]];
        let rho = |z: &[f64]| z[0] + 3.0 * z[1];
        let base = janossy_pool(&x, 1, phi1, rho).unwrap();
        for k in 2..=4 {
            assert_eq!(janossy_pool(&x, k, phi1, rho).unwrap(), base);
        }
    }

    #[test]
    fn sampling() {
        let x = set(&[0.1, 0.5, -0.4]);
        let inv = |t: &[f64]| crate::exact::exact_sum(t.iter().copied());
        for seed in 0..5 {
            assert_eq!(sampled_pool(&x, inv, 1, seed).unwrap(), inv(x.values()));
        }
        assert!(matches!(sampled_pool(&x, inv, 7, 0), Err(Error::Size(_))));
        assert!(matches!(
            sampled_pool(&set(&[0.0; 9]), inv, 1, 0),
            Err(Error::Size(_))
        ));
        assert_eq!(sampled_variance(6, 2, 1.0), 0.4);
        assert_eq!(sampled_variance(24, 24, 3.0), 0.0);
    }

    #[test]
    fn unranking_is_lexicographic() {
        let perms: Vec<Vec<usize>> = (0..6).map(|r| unrank_permutation(3, r)).collect();
        assert_eq!(
            perms,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
    }

    #[test]
    fn sorted() {
        let x = set(&[0.2, 0.9, 0.4]);
        assert_eq!(sorted_eval(&x, |t| t[0]), 0.9);
        assert_eq!(
            sorted_eval(&x, |t| t[0] - t[1] + t[2]),
            crate::sets::f_star(&x)
        );
        assert_eq!(sorted_eval(&x, |_| 4.5), 4.5);
    }

    #[test]
    fn max_pool_counterexamples() {
        let id = PhiSpec::polynomial(vec![vec![0.0, 1.0]]).unwrap();
        let c = max_decomp_counterexample_with(&id, &[0.0, 1.0]).unwrap();
        assert_eq!(c.x_tilde, vec![1.0, 1.0]);
        assert_eq!(c.report.pooled, vec![1.0]);
        assert_eq!((c.report.sum, c.report.sum_tilde), (1.0, 2.0));

        let sq = PhiSpec::polynomial(vec![vec![0.0, 1.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let c = max_decomp_counterexample_with(&sq, &[-0.5, 0.0, 1.0]).unwrap();
        assert_eq!(c.report.mu, vec![2, 2]);
        assert_eq!(c.report.untouched, 0);
        assert_eq!(c.x_tilde, vec![1.0, 0.0, 1.0]);

        let constant = PhiSpec::polynomial(vec![vec![0.25]]).unwrap();
        let c = max_decomp_counterexample(&constant, 2).unwrap();
        assert_ne!(c.report.sum, c.report.sum_tilde);
        assert!(matches!(
            max_decomp_counterexample(&sq, 2),
            Err(Error::Config(_))
        ));
    }
}
