//! The alternating-sum map whose zeros certify collisions between the two
//! opposing faces.
//!
//! With `phi~(x) = phi(x) - phi(-1)`,
//! `Gamma_N(z) = sum_{i=1..N} (-1)^i phi~(z_i) + phi~(1) / 2` on the ordered
//! simplex. A zero `z` lifts to face points `x+`, `x-` with equal encodings.

use crate::error::{Error, Result};
use crate::exact::Compensated;
use crate::sets::{SimplexPoint, MEMBERSHIP_TOL};
use crate::sumdec::LatentVec;

use super::phi::PhiSpec;

/// An encoder with the `phi(-1)` shift folded in.
#[derive(Debug, Clone)]
pub struct ShiftedPhi<'a> {
    phi: &'a PhiSpec,
    base: Vec<f64>,
    half_top: Vec<f64>,
}

impl<'a> ShiftedPhi<'a> {
    pub fn new(phi: &'a PhiSpec) -> Self {
        let base = phi.eval(-1.0);
        let half_top = phi
            .eval(1.0)
            .iter()
            .zip(&base)
            .map(|(t, b)| 0.5 * (t - b))
            .collect();
        Self {
            phi,
            base,
            half_top,
        }
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn phi(&self) -> &PhiSpec {
        self.phi
    }

    /// `Gamma` at `z`, which must have `dim()` coordinates; membership in
    /// the simplex is the caller's responsibility.
    pub fn gamma_into(&self, z: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let mut acc = vec![Compensated::new(); n];
        let mut buf = vec![0.0; n];
        for (i, &zi) in z.iter().enumerate() {
            self.phi.eval_into(zi, &mut buf);
            let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
            for q in 0..n {
                acc[q].add(sign * (buf[q] - self.base[q]));
            }
        }
        for q in 0..n {
            acc[q].add(self.half_top[q]);
            out[q] = acc[q].value();
        }
    }

    pub fn gamma(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gamma_into(z, &mut out);
        out
    }
}

pub fn gamma(z: &SimplexPoint, phi: &PhiSpec) -> Result<LatentVec> {
    if z.dim() != phi.dim() {
        return Err(Error::shape(format!(
            "simplex point has dimension {}, encoder N = {}",
            z.dim(),
            phi.dim()
        )));
    }
    LatentVec::new(ShiftedPhi::new(phi).gamma(z.coords()))
}

/// Left shift from the face `x_1 = 1` to the face `x_N = -1`: drops the
/// leading 1 and appends -1.
pub fn left_shift(x: &SimplexPoint) -> Result<SimplexPoint> {
    let c = x.coords();
    if c.is_empty() || (c[0] - 1.0).abs() > MEMBERSHIP_TOL {
        return Err(Error::domain(
            "left shift is only defined where the first coordinate is 1",
        ));
    }
    let mut out = c[1..].to_vec();
    out.push(-1.0);
    SimplexPoint::new(out)
}
