//! A continuous map `nu_n` from the cube `I_n = [-1, 1]^n` onto the ordered
//! simplex that turns antipodal symmetry on the cube's surface into the
//! left-shift symmetry of `Gamma_n`. `Gamma_n o nu_n` is then odd on the
//! surface of the cube and must vanish somewhere inside it.
//!
//! The construction is recursive in `n`, with `nu_1(x) = x`:
//!
//! * top face (`x_n = 1`): `nu_n(x) = (1, nu_{n-1}(xbar))`
//! * bottom face (`x_n = -1`): `nu_n(x) = (nu_{n-1}(-xbar), -1)`
//! * in between, along the vertical through `xbar`, the segment from the top
//!   point to the bottom point is cut into `n` equal sections and `nu_n` is
//!   piecewise linear between `n + 1` endpoint values. Endpoint `i` takes the
//!   top value `y+_j` in coordinates `j > i`, the bottom value `y-_j` in
//!   coordinates `j < i`, and `median(y+_j, y-_{j-1}, y-_j)` on the diagonal
//!   (`y+_1` when `i = j = 1`).
//!
//! `xbar` is `x` without its last coordinate. Both `nu_{n-1}(xbar)` and
//! `nu_{n-1}(-xbar)` are needed, and at every level the pair for `x` and
//! `-x` only depends on the pair one level down, so the whole recursion costs
//! `O(n^2)`.

use crate::error::{Error, Result};
use crate::sets::{clamp_unit, SimplexPoint};

fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

/// Value of endpoint `i` (1-based) in coordinate `j` (1-based).
fn endpoint(top: &[f64], bottom: &[f64], i: usize, j: usize) -> f64 {
    use std::cmp::Ordering::*;
    match i.cmp(&j) {
        Less => top[j - 1],
        Greater => bottom[j - 1],
        Equal if j == 1 => top[0],
        Equal => median3(top[j - 1], bottom[j - 2], bottom[j - 1]),
    }
}

/// Interpolates along a vertical at height `t` in `[-1, 1]`, where `t = 1`
/// is the top face.
fn interpolate(top: &[f64], bottom: &[f64], t: f64) -> Vec<f64> {
    let n = top.len();
    let s = ((1.0 - t) * 0.5 * n as f64).clamp(0.0, n as f64);
    let section = (s.floor() as usize).min(n - 1);
    let frac = s - section as f64;
    let (lo, hi) = (section + 1, section + 2);
    let mut out: Vec<f64> = (1..=n)
        .map(|j| {
            let a = endpoint(top, bottom, lo, j);
            let b = endpoint(top, bottom, hi, j);
            if a == b {
                a
            } else {
                (1.0 - frac) * a + frac * b
            }
        })
        .collect();
    // Rounding in the blend may break the ordering by an ulp.
    for j in 1..n {
        if out[j] > out[j - 1] {
            out[j] = out[j - 1];
        }
    }
    out
}

/// `(nu_n(x), nu_n(-x))` for `x` already in the cube.
pub(crate) fn nu_pair(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert!(!x.is_empty());
    let mut pos = vec![x[0]];
    let mut neg = vec![-x[0]];
    for &t in &x[1..] {
        let top_pos: Vec<f64> = std::iter::once(1.0).chain(pos.iter().copied()).collect();
        let bottom_pos: Vec<f64> = neg.iter().copied().chain(std::iter::once(-1.0)).collect();
        let top_neg: Vec<f64> = std::iter::once(1.0).chain(neg.iter().copied()).collect();
        let bottom_neg: Vec<f64> = pos.iter().copied().chain(std::iter::once(-1.0)).collect();
        pos = interpolate(&top_pos, &bottom_pos, t);
        neg = interpolate(&top_neg, &bottom_neg, -t);
    }
    (pos, neg)
}

pub(crate) fn nu_unchecked(x: &[f64]) -> Vec<f64> {
    nu_pair(x).0
}

/// `nu_n(x)` for `x` in `[-1, 1]^n`.
pub fn nu(x: &[f64]) -> Result<SimplexPoint> {
    if x.is_empty() {
        return Err(Error::size("nu needs n >= 1"));
    }
    let x: Vec<f64> = x.iter().copied().map(clamp_unit).collect::<Result<_>>()?;
    SimplexPoint::new(nu_unchecked(&x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(nu(&[0.3]).unwrap().coords(), &[0.3]);
        assert_eq!(nu(&[0.0, 1.0]).unwrap().coords(), &[1.0, 0.0]);
        assert_eq!(nu(&[0.0, -1.0]).unwrap().coords(), &[0.0, -1.0]);
        assert_eq!(nu(&[0.0, 0.0]).unwrap().coords(), &[0.0, 0.0]);
        assert!(matches!(nu(&[0.0, 1.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn faces_follow_recursion() {
        let xbar = [0.4, -0.7, 0.2];
        let lower = nu(&xbar).unwrap();
        let neg: Vec<f64> = xbar.iter().map(|v| -v).collect();
        let lower_neg = nu(&neg).unwrap();

        let mut top = xbar.to_vec();
        top.push(1.0);
        let mut expect = vec![1.0];
        expect.extend_from_slice(lower.coords());
        assert_eq!(nu(&top).unwrap().coords(), expect.as_slice());

        let mut bottom = xbar.to_vec();
        bottom.push(-1.0);
        let mut expect = lower_neg.coords().to_vec();
        expect.push(-1.0);
        assert_eq!(nu(&bottom).unwrap().coords(), expect.as_slice());
    }

    #[test]
    fn median_rule() {
        assert_eq!(median3(1.0, 3.0, 2.0), 2.0);
        assert_eq!(median3(2.0, 2.0, -1.0), 2.0);
        assert_eq!(median3(-1.0, 5.0, 5.0), 5.0);
    }

    #[test]
    fn pair_matches_direct() {
        let x = [0.1, -0.6, 0.9, -0.2, 0.35];
        let (p, n) = nu_pair(&x);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(p, nu(&x).unwrap().into_coords());
        assert_eq!(n, nu(&neg).unwrap().into_coords());
    }
}
