//! Set inputs, the ordered simplex and the two opposing faces separated by
//! the hard target [`f_star`].
//!
//! Sets are stored as ordered vectors. Permutation invariance is enforced at
//! the API boundary by sorting into descending order, so every point of the
//! ordered simplex `1 >= x_1 >= ... >= x_n >= -1` stands for one multiset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactSum;

/// Absolute tolerance for domain, simplex and face membership.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Clamp `v` into `[-1, 1]` if it lies within tolerance, otherwise reject it.
pub(crate) fn clamp_unit(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::domain(format!("non-finite entry {v}")));
    }
    if v > 1.0 + MEMBERSHIP_TOL || v < -1.0 - MEMBERSHIP_TOL {
        return Err(Error::domain(format!("entry {v} outside [-1, 1]")));
    }
    Ok(v.clamp(-1.0, 1.0))
}

/// An unordered multiset of `M` reals in `[-1, 1]`, stored as a vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SetInput {
    values: Vec<f64>,
}

impl SetInput {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::size("a set input needs at least one element"));
        }
        let values = values.into_iter().map(clamp_unit).collect::<Result<_>>()?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries in descending order.
    pub fn sorted(&self) -> Vec<f64> {
        sort_descending(&self.values)
    }
}

impl TryFrom<Vec<f64>> for SetInput {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        SetInput::new(values)
    }
}

impl From<SetInput> for Vec<f64> {
    fn from(x: SetInput) -> Self {
        x.values
    }
}

pub(crate) fn sort_descending(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// A point of the ordered simplex: coordinates in `[-1, 1]`, descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    /// Validates membership. Coordinates that break the ordering or the unit
    /// box by at most [`MEMBERSHIP_TOL`] are snapped back in.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let mut coords = coords
            .into_iter()
            .map(clamp_unit)
            .collect::<Result<Vec<_>>>()?;
        for i in 1..coords.len() {
            let (prev, cur) = (coords[i - 1], coords[i]);
            if cur > prev + MEMBERSHIP_TOL {
                return Err(Error::domain(format!(
                    "coordinates not descending at position {i}: {prev} < {cur}"
                )));
            }
            if cur > prev {
                coords[i] = prev;
            }
        }
        Ok(Self { coords })
    }

    /// Builds a point from coordinates already known to be in the simplex.
    pub(crate) fn from_sorted_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.windows(2).all(|w| w[0] >= w[1]));
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn is_member(coords: &[f64], tol: f64) -> bool {
        coords
            .iter()
            .all(|&c| c.is_finite() && c <= 1.0 + tol && c >= -1.0 - tol)
            && coords.windows(2).all(|w| w[1] <= w[0] + tol)
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(coords)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.coords
    }
}

/// Which of the two opposing faces a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Face {
    /// `1 = x_1 >= x_2 = x_3 >= ...`, where `f_star` is `+1`.
    Plus,
    /// `1 >= x_1 = x_2 >= x_3 = ...`, where `f_star` is `-1`.
    Minus,
}

impl Face {
    pub fn sign(self) -> f64 {
        match self {
            Face::Plus => 1.0,
            Face::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacePoint {
    base: SimplexPoint,
    face: Face,
}

impl FacePoint {
    pub fn new(base: SimplexPoint, face: Face) -> Result<Self> {
        if !on_face(base.coords(), face, MEMBERSHIP_TOL) {
            return Err(Error::domain(format!(
                "{:?} does not lie on face {face:?}",
                base.coords()
            )));
        }
        Ok(Self { base, face })
    }

    pub fn base(&self) -> &SimplexPoint {
        &self.base
    }

    pub fn face(&self) -> Face {
        self.face
    }

    pub fn coords(&self) -> &[f64] {
        self.base.coords()
    }
}

/// Checks the equality pattern of a face.
///
/// Pad the point as `(1, x_1, ..., x_M, -1)` and index the padding `0` and
/// `M + 1`. The plus face forces `x_{2k} = x_{2k+1}`; the minus face forces
/// `x_{2k+1} = x_{2k+2}`.
pub fn on_face(coords: &[f64], face: Face, tol: f64) -> bool {
    if !SimplexPoint::is_member(coords, tol) {
        return false;
    }
    let m = coords.len();
    let padded = |i: usize| -> f64 {
        if i == 0 {
            1.0
        } else if i == m + 1 {
            -1.0
        } else {
            coords[i - 1]
        }
    };
    let start = match face {
        Face::Plus => 0,
        Face::Minus => 1,
    };
    (start..=m)
        .step_by(2)
        .all(|i| (padded(i) - padded(i + 1)).abs() <= tol)
}

/// Sort into the ordered simplex.
pub fn canonicalize(x: &SetInput) -> SimplexPoint {
    SimplexPoint::from_sorted_unchecked(x.sorted())
}

/// Alternating weight `(-1)^(i+1)` for the 1-based position `i`.
fn alternating_weight(position: usize) -> f64 {
    if position % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// The hard target: `w . sort(x) + b` with `w_i = (-1)^(i+1)` and `b = -1`
/// for even `M`, `0` for odd `M`.
///
/// The alternating sum is evaluated exactly, so the value on either face is
/// exactly `+1` or `-1`.
pub fn f_star(x: &SetInput) -> f64 {
    f_star_sorted(&x.sorted())
}

/// [`f_star`] on coordinates that are already sorted descending.
pub fn f_star_sorted(sorted: &[f64]) -> f64 {
    let mut acc = ExactSum::new();
    for (i, &v) in sorted.iter().enumerate() {
        acc.add(alternating_weight(i + 1) * v);
    }
    if sorted.len() % 2 == 0 {
        acc.add(-1.0);
    }
    acc.value()
}

/// Lifts `z` in the `N`-simplex to a pair of points on the plus and minus
/// faces of the `(N + 1)`-simplex.
///
/// The plus point copies the even-indexed coordinates of `z`, the minus point
/// the odd-indexed ones; the face equalities fill in the rest.
pub fn build_face_pair(z: &SimplexPoint) -> Result<(FacePoint, FacePoint)> {
    let n = z.dim();
    if n == 0 {
        return Err(Error::size("face pair needs N >= 1"));
    }
    let m = n + 1;
    let zc = z.coords();
    let take = |i: usize| if i <= n { zc[i - 1] } else { -1.0 };

    let mut plus = vec![0.0; m];
    let mut minus = vec![0.0; m];
    for i in 1..=m {
        plus[i - 1] = if i == 1 {
            1.0
        } else if i % 2 == 0 {
            take(i)
        } else {
            plus[i - 2]
        };
        minus[i - 1] = if i % 2 == 1 { take(i) } else { minus[i - 2] };
    }
    let plus = FacePoint::new(SimplexPoint::new(plus)?, Face::Plus)?;
    let minus = FacePoint::new(SimplexPoint::new(minus)?, Face::Minus)?;
    Ok((plus, minus))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[f64]) -> SetInput {
        SetInput::new(v.to_vec()).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(
            canonicalize(&set(&[0.2, 0.9, 0.4])).coords(),
            &[0.9, 0.4, 0.2]
        );
        assert_eq!(
            canonicalize(&set(&[1.0, 1.0, 1.0])).coords(),
            &[1.0, 1.0, 1.0]
        );
        assert_eq!(canonicalize(&set(&[-1.0, 1.0])).coords(), &[1.0, -1.0]);
    }

    #[test]
    fn domain_checks() {
        assert!(matches!(SetInput::new(vec![1.5]), Err(Error::Domain(_))));
        assert!(matches!(
            SetInput::new(vec![f64::NAN]),
            Err(Error::Domain(_))
        ));
        let snapped = SetInput::new(vec![1.0 + 1e-13, -1.0 - 1e-13]).unwrap();
        assert_eq!(snapped.values(), &[1.0, -1.0]);
        assert!(SimplexPoint::new(vec![0.1, 0.2]).is_err());
        assert_eq!(
            SimplexPoint::new(vec![0.1, 0.1 + 1e-13]).unwrap().coords(),
            &[0.1, 0.1]
        );
    }

    #[test]
    fn f_star_examples() {
        assert_eq!(f_star(&set(&[1.0, -1.0])), 1.0);
        for t in [-1.0, -0.3, 0.0, 0.77, 1.0] {
            assert_eq!(f_star(&set(&[t, t])), -1.0);
            assert_eq!(f_star(&set(&[1.0, t, t])), 1.0);
        }
    }

    #[test]
    fn f_star_m2_closed_form() {
        for i in 0..=20 {
            for j in 0..=20 {
                let (a, b) = (-1.0 + 0.1 * i as f64, -1.0 + 0.1 * j as f64);
                let v = f_star(&set(&[a, b]));
                assert!((v - ((a - b).abs() - 1.0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn face_pair_examples() {
        let (p, m) = build_face_pair(&SimplexPoint::new(vec![0.0]).unwrap()).unwrap();
        assert_eq!(p.coords(), &[1.0, -1.0]);
        assert_eq!(m.coords(), &[0.0, 0.0]);

        let (p, m) = build_face_pair(&SimplexPoint::new(vec![0.5, -0.5]).unwrap()).unwrap();
        assert_eq!(p.coords(), &[1.0, -0.5, -0.5]);
        assert_eq!(m.coords(), &[0.5, 0.5, -1.0]);

        let (p, m) = build_face_pair(&SimplexPoint::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(p.coords(), &[1.0, -1.0]);
        assert_eq!(m.coords(), &[1.0, 1.0]);
    }

    #[test]
    fn face_membership() {
        assert!(on_face(&[1.0, 0.3, 0.3], Face::Plus, 0.0));
        assert!(!on_face(&[1.0, 0.3, 0.3], Face::Minus, 0.0));
        assert!(on_face(&[0.3, 0.3, -1.0], Face::Minus, 0.0));
        assert!(on_face(&[1.0, 0.2, 0.2, -1.0], Face::Plus, 0.0));
        assert!(on_face(&[0.6, 0.6, 0.2, 0.2], Face::Minus, 0.0));
        assert!(FacePoint::new(SimplexPoint::new(vec![0.9, 0.1]).unwrap(), Face::Plus).is_err());
    }
}
