//! Exact sum-decomposition through power sums.
//!
//! The encoder `x -> (sum x_i, sum x_i^2, ..., sum x_i^M)` is injective on
//! multisets of size `M`, and its inverse is continuous: Newton's identities
//! recover the elementary symmetric polynomials, whose monic polynomial has
//! the multiset as its roots. Any set function `f` is then represented exactly
//! as `rho = f o decode` applied to the encoding.
//!
//! Encodings carry each coordinate as an unevaluated sum `hi + lo` of two
//! doubles. Only `hi` is serialized; the tail lets the decoder separate
//! elements closer together than double precision power sums can.
//!
//! Sets of varying size up to `M_max` share one latent space by shifting each
//! element's features by the features of a filler value outside `[-1, 1]`,
//! so absent elements contribute nothing.

use serde::{Deserialize, Serialize};

use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::roots::{
    aberth_roots, deflate, elementary_from_power_sums, merge_multiple_roots, monic_from_elementary,
    refine_real_roots, AberthConfig,
};
use crate::sets::{clamp_unit, sort_descending, SetInput, SimplexPoint};

/// Largest set size accepted by the power-sum codec. Power sums become badly
/// conditioned beyond this.
pub const MAX_POWER_SUM_SIZE: usize = 12;

/// Roots whose imaginary part or box violation stays below this are
/// projected back onto `[-1, 1]`.
pub const ROOT_TOL: f64 = 1e-6;

/// Recovered roots this close to the filler are treated as padding.
pub const FILLER_MATCH_TOL: f64 = 1e-4;

/// Near-real roots are pushed onto the real line and refined there when their
/// imaginary part stays below this.
const REAL_PROJECTION_TOL: f64 = 1e-3;

/// Refined roots this close together are checked for a common multiple root.
const REFINED_REACH: f64 = 1e-3;
const REFINE_ITERATIONS: usize = 100;

/// A point in the latent space of a sum-decomposition.
///
/// Coordinate `i` stands for `coords[i] + tail[i]`; the tail is empty unless
/// an encoder filled it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LatentVec {
    coords: Vec<f64>,
    tail: Vec<f64>,
}

impl LatentVec {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::domain(format!(
                "latent coordinate {bad} is not finite"
            )));
        }
        Ok(Self {
            coords,
            tail: Vec::new(),
        })
    }

    pub fn with_tail(coords: Vec<f64>, tail: Vec<f64>) -> Result<Self> {
        if tail.len() != coords.len() {
            return Err(Error::shape(format!(
                "tail has length {}, expected {}",
                tail.len(),
                coords.len()
            )));
        }
        if tail.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("latent tail is not finite"));
        }
        let mut v = Self::new(coords)?;
        v.tail = tail;
        Ok(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Low-order parts of the coordinates; empty when absent.
    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    fn double_double(&self) -> Vec<TwoFloat> {
        self.coords
            .iter()
            .enumerate()
            .map(|(i, &c)| TwoFloat::new_add(c, self.tail.get(i).copied().unwrap_or(0.0)))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl TryFrom<Vec<f64>> for LatentVec {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        LatentVec::new(coords)
    }
}

impl From<LatentVec> for Vec<f64> {
    fn from(v: LatentVec) -> Self {
        v.coords
    }
}

fn check_size(m: usize) -> Result<()> {
    if m > MAX_POWER_SUM_SIZE {
        return Err(Error::size(format!(
            "set size {m} exceeds the power-sum cap {MAX_POWER_SUM_SIZE}"
        )));
    }
    Ok(())
}

/// Power sums `p_q = sum_i (x_i^q - k^q)` for `q = 1..=dim`, with powers in
/// double-double and an exact sum, returned as `hi + lo`. The result does not
/// depend on the input order.
fn power_sums(values: &[f64], dim: usize, filler: Option<f64>) -> Result<LatentVec> {
    let mut hi = Vec::with_capacity(dim);
    let mut lo = Vec::with_capacity(dim);
    for q in 1..=dim as i32 {
        let mut acc = ExactSum::new();
        for &x in values {
            let t = TwoFloat::from(x).powi(q);
            acc.add(t.hi());
            acc.add(t.lo());
            if let Some(k) = filler {
                let o = TwoFloat::from(k).powi(q);
                acc.add(-o.hi());
                acc.add(-o.lo());
            }
        }
        let (h, l) = acc.value_pair();
        hi.push(h);
        lo.push(l);
    }
    LatentVec::with_tail(hi, lo)
}

pub fn power_sum_encode(x: &SetInput) -> Result<LatentVec> {
    check_size(x.len())?;
    power_sums(x.values(), x.len(), None)
}

/// Recovers the multiset whose power sums are `p`.
pub fn power_sum_decode(p: &LatentVec, m: usize) -> Result<SimplexPoint> {
    check_size(m)?;
    if p.dim() != m {
        return Err(Error::shape(format!(
            "latent has dimension {}, expected {m}",
            p.dim()
        )));
    }
    if m == 0 {
        return Ok(SimplexPoint::from_sorted_unchecked(Vec::new()));
    }
    let coeffs = monic_from_elementary(&elementary_from_power_sums(&p.double_double()));
    let roots = into_box(polynomial_roots(&coeffs))?;
    Ok(SimplexPoint::from_sorted_unchecked(roots))
}

/// Roots of a monic polynomial: Aberth–Ehrlich in `f64`, then a real
/// refinement against the double-double coefficients when every root is
/// close to the real line. Repeated roots, which the refinement cannot
/// settle, are merged, divided out, and the quotient is solved again.
fn polynomial_roots(coeffs: &[TwoFloat]) -> Vec<Complex64> {
    if coeffs.len() <= 1 {
        return Vec::new();
    }
    let hi: Vec<f64> = coeffs.iter().map(|c| c.hi()).collect();
    let mut roots = aberth_roots(&hi, AberthConfig::default());
    let mut groups = None;
    if roots.iter().all(|r| r.im.abs() <= REAL_PROJECTION_TOL) {
        // A conjugate pair a +- bi starts as the real pair a +- b.
        let mut x: Vec<f64> = roots.iter().map(|r| r.re + r.im).collect();
        if refine_real_roots(coeffs, &mut x, REFINE_ITERATIONS) {
            // High multiplicities only resolve to about (1e-32)^(1/k).
            roots = x.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
            groups = Some(merge_multiple_roots(coeffs, &mut roots, REFINED_REACH));
        }
    }
    let groups = groups.unwrap_or_else(|| merge_multiple_roots(coeffs, &mut roots, 1.0));
    if groups.is_empty() || groups.iter().map(|g| g.1).sum::<usize>() == roots.len() {
        return roots;
    }
    let mut quotient = coeffs.to_vec();
    let mut out = Vec::with_capacity(roots.len());
    for &(c, k) in &groups {
        for _ in 0..k {
            quotient = deflate(&quotient, c).0;
            out.push(Complex64::new(c, 0.0));
        }
    }
    out.extend(polynomial_roots(&quotient));
    out
}

fn into_box(roots: Vec<Complex64>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(roots.len());
    for r in roots {
        if r.im.abs() > ROOT_TOL {
            return Err(Error::InfeasibleLatent(format!(
                "root {r} has imaginary part above {ROOT_TOL:e}"
            )));
        }
        if r.re > 1.0 + ROOT_TOL || r.re < -1.0 - ROOT_TOL || !r.re.is_finite() {
            return Err(Error::InfeasibleLatent(format!(
                "root {} lies outside [-1, 1]",
                r.re
            )));
        }
        out.push(r.re.clamp(-1.0, 1.0));
    }
    Ok(sort_descending(&out))
}

/// Evaluates `target` through the latent space: `target(decode(encode(x)))`.
pub fn exact_eval<F>(target: F, x: &SetInput) -> Result<f64>
where
    F: Fn(&SimplexPoint) -> f64,
{
    let latent = power_sum_encode(x)?;
    let decoded = power_sum_decode(&latent, x.len())?;
    Ok(target(&decoded))
}

/// Codec for multisets of any size up to `m_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VarSizeCodecRaw")]
pub struct VarSizeCodec {
    m_max: usize,
    filler: f64,
}

#[derive(Deserialize)]
struct VarSizeCodecRaw {
    m_max: usize,
    #[serde(default = "default_filler")]
    filler: f64,
}

fn default_filler() -> f64 {
    VarSizeCodec::DEFAULT_FILLER
}

impl TryFrom<VarSizeCodecRaw> for VarSizeCodec {
    type Error = Error;

    fn try_from(raw: VarSizeCodecRaw) -> Result<Self> {
        VarSizeCodec::with_filler(raw.m_max, raw.filler)
    }
}

impl VarSizeCodec {
    pub const DEFAULT_FILLER: f64 = 2.0;
    /// Minimum distance between the filler and the element domain.
    pub const FILLER_MARGIN: f64 = 0.5;

    pub fn new(m_max: usize) -> Result<Self> {
        Self::with_filler(m_max, Self::DEFAULT_FILLER)
    }

    pub fn with_filler(m_max: usize, filler: f64) -> Result<Self> {
        check_size(m_max)?;
        if !filler.is_finite() || filler.abs() < 1.0 + Self::FILLER_MARGIN {
            return Err(Error::config(format!(
                "filler {filler} must lie outside [-1, 1] by at least {}",
                Self::FILLER_MARGIN
            )));
        }
        Ok(Self { m_max, filler })
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn filler(&self) -> f64 {
        self.filler
    }
}

/// Encodes a multiset of at most `m_max` elements as
/// `p_q = sum_i (x_i^q - k^q)`; the empty set maps to zero.
pub fn varsize_encode(x: &[f64], codec: &VarSizeCodec) -> Result<LatentVec> {
    if x.len() > codec.m_max {
        return Err(Error::size(format!(
            "{} elements exceed m_max = {}",
            x.len(),
            codec.m_max
        )));
    }
    let values = x
        .iter()
        .copied()
        .map(clamp_unit)
        .collect::<Result<Vec<_>>>()?;
    power_sums(&values, codec.m_max, Some(codec.filler))
}

/// Inverts [`varsize_encode`].
///
/// The encoding is first turned into the power sums of the set padded with
/// fillers to `m_max` elements. The filler factors `(t - k)` of the padded
/// polynomial are then divided out while the division is exact; what is left
/// has exactly the genuine elements as roots.
pub fn varsize_decode(p: &LatentVec, codec: &VarSizeCodec) -> Result<SimplexPoint> {
    let m = codec.m_max;
    if p.dim() != m {
        return Err(Error::shape(format!(
            "latent has dimension {}, expected {m}",
            p.dim()
        )));
    }
    if m == 0 {
        return Ok(SimplexPoint::from_sorted_unchecked(Vec::new()));
    }
    let k = codec.filler;
    let padded: Vec<TwoFloat> = p
        .double_double()
        .into_iter()
        .enumerate()
        .map(|(i, pq)| pq + TwoFloat::from(k).powi(i as i32 + 1) * m as f64)
        .collect();
    let mut coeffs = monic_from_elementary(&elementary_from_power_sums(&padded));

    while coeffs.len() > 1 {
        let scale: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.hi().abs() * k.abs().powi(i as i32))
            .sum();
        let (q, rem) = deflate(&coeffs, k);
        if rem.hi().abs() > 1e-9 * scale {
            break;
        }
        coeffs = q;
    }

    let kept = polynomial_roots(&coeffs)
        .into_iter()
        .filter(|r| (r.re - k).abs() > FILLER_MATCH_TOL || r.im.abs() > ROOT_TOL)
        .collect();
    Ok(SimplexPoint::from_sorted_unchecked(into_box(kept)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(v: &[f64]) -> SetInput {
        SetInput::new(v.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn encode_examples() {
        assert_eq!(
            power_sum_encode(&set(&[0.0, 1.0])).unwrap().coords(),
            &[1.0, 1.0]
        );
        assert_eq!(
            power_sum_encode(&set(&[1.0, 1.0])).unwrap().coords(),
            &[2.0, 2.0]
        );
        assert_eq!(
            power_sum_encode(&set(&[0.5, 0.5, 0.5])).unwrap().coords(),
            &[1.5, 0.75, 0.375]
        );
    }

    #[test]
    fn decode_examples() {
        let d =
            |p: &[f64]| power_sum_decode(&LatentVec::new(p.to_vec()).unwrap(), p.len()).unwrap();
        assert!(close(d(&[1.0, 1.0]).coords(), &[1.0, 0.0], 1e-12));
        assert!(close(d(&[2.0, 2.0]).coords(), &[1.0, 1.0], 1e-6));
        assert!(close(d(&[0.0, 0.0]).coords(), &[0.0, 0.0], 1e-6));
    }

    #[test]
    fn decode_rejects_infeasible() {
        // p = (0, -1): e1 = 0, e2 = 1/2 -> t^2 + 1/2, imaginary roots
        let p = LatentVec::new(vec![0.0, -1.0]).unwrap();
        assert!(matches!(
            power_sum_decode(&p, 2),
            Err(Error::InfeasibleLatent(_))
        ));
        // {3}: outside the box
        let p = LatentVec::new(vec![3.0]).unwrap();
        assert!(matches!(
            power_sum_decode(&p, 1),
            Err(Error::InfeasibleLatent(_))
        ));
        let p = LatentVec::new(vec![1.0]).unwrap();
        assert!(matches!(power_sum_decode(&p, 2), Err(Error::Shape(_))));
    }

    #[test]
    fn size_cap() {
        let x = set(&[0.1; 13]);
        assert!(matches!(power_sum_encode(&x), Err(Error::Size(_))));
    }

    #[test]
    fn exact_eval_examples() {
        let x = set(&[0.2, 0.9, 0.4]);
        let max = exact_eval(|z| z.coords()[0], &x).unwrap();
        assert!((max - 0.9).abs() < 1e-6);
        let second = exact_eval(|z| z.coords()[1], &x).unwrap();
        assert!((second - 0.4).abs() < 1e-6);
        for t in [-0.8, 0.0, 0.35] {
            let v = exact_eval(|z| crate::sets::f_star_sorted(z.coords()), &set(&[t, t])).unwrap();
            assert!((v + 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn varsize_examples() {
        let codec = VarSizeCodec::new(3).unwrap();
        assert_eq!(
            varsize_encode(&[], &codec).unwrap().coords(),
            &[0.0, 0.0, 0.0]
        );
        assert_eq!(
            varsize_encode(&[0.5], &codec).unwrap().coords(),
            &[-1.5, -3.75, -7.875]
        );
        assert_eq!(
            varsize_encode(&[0.0, 1.0], &codec).unwrap().coords(),
            &[-3.0, -7.0, -15.0]
        );
        assert!(matches!(
            varsize_encode(&[0.0; 4], &codec),
            Err(Error::Size(_))
        ));

        let rt = |x: &[f64]| varsize_decode(&varsize_encode(x, &codec).unwrap(), &codec).unwrap();
        assert!(close(rt(&[0.5]).coords(), &[0.5], 1e-9));
        assert!(rt(&[]).coords().is_empty());
        assert!(close(rt(&[0.0, 1.0]).coords(), &[1.0, 0.0], 1e-9));
    }

    #[test]
    fn codec_validation() {
        assert!(VarSizeCodec::with_filler(3, 1.2).is_err());
        assert!(VarSizeCodec::with_filler(3, -1.6).is_ok());
        let c: VarSizeCodec = serde_json::from_str(r#"{"m_max": 4}"#).unwrap();
        assert_eq!(c.filler(), 2.0);
        assert!(serde_json::from_str::<VarSizeCodec>(r#"{"m_max": 4, "filler": 0.5}"#).is_err());
    }

    #[test]
    fn round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 1..=8 {
            for _ in 0..300 {
                let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                let x = set(&v);
                let back = power_sum_decode(&power_sum_encode(&x).unwrap(), m).unwrap();
                assert!(
                    close(back.coords(), &x.sorted(), 1e-6),
                    "{v:?} -> {:?}",
                    back.coords()
                );
            }
        }
    }
}
