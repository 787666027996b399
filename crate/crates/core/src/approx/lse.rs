use crate::error::{Error, Result};
use crate::sets::SetInput;

/// Smooth maximum `(1/a) log(sum_i exp(a x_i))`, evaluated with the max-shift
/// trick. Satisfies `max(x) <= lse_max(x, a) <= max(x) + log(M) / a` exactly
/// in floating point: the shifted terms are at most 1 and include a 1.
pub fn lse_max(x: &SetInput, a: f64) -> Result<f64> {
    lse_max_slice(x.values(), a)
}

pub(crate) fn lse_max_slice(values: &[f64], a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!(
            "sharpness a = {a} must be positive and finite"
        )));
    }
    if values.is_empty() {
        return Err(Error::size("smooth maximum of an empty set"));
    }
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = values.iter().map(|&v| (a * (v - top)).exp()).sum();
    Ok(top + sum.ln() / a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[f64]) -> SetInput {
        SetInput::new(v.to_vec()).unwrap()
    }

    #[test]
    fn examples() {
        let v = lse_max(&set(&[0.0, 0.0, 0.0]), 10.0).unwrap();
        assert_eq!(v, 3f64.ln() / 10.0);
        assert!((v - 0.1098612).abs() < 1e-7);
        for a in [0.1, 1.0, 37.0] {
            assert_eq!(lse_max(&set(&[1.0]), a).unwrap(), 1.0);
        }
        let v = lse_max(&set(&[0.0, 1.0]), 2.0).unwrap();
        assert!((v - 0.5 * (1.0 + 2f64.exp()).ln()).abs() < 1e-15);
        assert!((v - 1.063464).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_sharpness() {
        assert!(lse_max(&set(&[0.0]), 0.0).is_err());
        assert!(lse_max(&set(&[0.0]), -1.0).is_err());
        assert!(lse_max(&set(&[0.0]), f64::NAN).is_err());
    }
}
