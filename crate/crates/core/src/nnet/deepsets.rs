use std::borrow::Cow;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approx::{PhiSpec, SumDecomposition};
use crate::error::{Error, Result};
use crate::exact::Compensated;
use crate::sets::{sort_descending, SetInput};

use super::mlp::{Activation, Layer, Mlp};

/// `f(x) = rho(sum_i phi(x_i))` with both maps given by networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeepSetsRaw", into = "DeepSetsRaw")]
pub struct DeepSetsModel {
    phi: Mlp,
    rho: Mlp,
}

#[derive(Serialize, Deserialize)]
struct DeepSetsRaw {
    phi: Mlp,
    rho: Mlp,
}

impl TryFrom<DeepSetsRaw> for DeepSetsModel {
    type Error = Error;

    fn try_from(raw: DeepSetsRaw) -> Result<Self> {
        DeepSetsModel::new(raw.phi, raw.rho)
    }
}

impl From<DeepSetsModel> for DeepSetsRaw {
    fn from(m: DeepSetsModel) -> Self {
        DeepSetsRaw {
            phi: m.phi,
            rho: m.rho,
        }
    }
}

impl DeepSetsModel {
    pub fn new(phi: Mlp, rho: Mlp) -> Result<Self> {
        if phi.input_dim() != 1 {
            return Err(Error::shape(format!(
                "encoder must take scalars, takes {}",
                phi.input_dim()
            )));
        }
        if rho.input_dim() != phi.output_dim() || rho.output_dim() != 1 {
            return Err(Error::shape(format!(
                "decoder maps {} -> {}, expected {} -> 1",
                rho.input_dim(),
                rho.output_dim(),
                phi.output_dim()
            )));
        }
        Ok(Self { phi, rho })
    }

    /// Random model with `phi: 1 -> phi_hidden -> N` and `rho: N -> rho_hidden -> 1`.
    pub fn random<R: Rng + ?Sized>(
        latent_dim: usize,
        phi_hidden: &[usize],
        rho_hidden: &[usize],
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let phi_sizes: Vec<usize> = std::iter::once(1)
            .chain(phi_hidden.iter().copied())
            .chain([latent_dim])
            .collect();
        let rho_sizes: Vec<usize> = std::iter::once(latent_dim)
            .chain(rho_hidden.iter().copied())
            .chain([1])
            .collect();
        let phi = Mlp::random(&phi_sizes, activation, Activation::Identity, rng)?;
        let rho = Mlp::random(&rho_sizes, activation, Activation::Identity, rng)?;
        Self::new(phi, rho)
    }

    /// The log-sum-exp decomposition `phi(x) = e^(a x)`, `rho(z) = log(z) / a`.
    pub fn log_sum_exp(a: f64) -> Result<Self> {
        let layer = |w: f64, activation| Layer {
            inputs: 1,
            outputs: 1,
            weights: vec![w],
            bias: vec![0.0],
            activation,
        };
        let phi = Mlp::new(vec![layer(a, Activation::Exp)])?;
        let rho = Mlp::new(vec![
            layer(1.0, Activation::Ln),
            layer(1.0 / a, Activation::Identity),
        ])?;
        Self::new(phi, rho)
    }

    pub fn phi(&self) -> &Mlp {
        &self.phi
    }

    pub fn rho(&self) -> &Mlp {
        &self.rho
    }

    pub fn latent_dim(&self) -> usize {
        self.phi.output_dim()
    }

    pub fn n_params(&self) -> usize {
        self.phi.n_params() + self.rho.n_params()
    }

    /// Encoder parameters followed by decoder parameters.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.phi.params();
        p.extend(self.rho.params());
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::shape(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let (a, b) = params.split_at(self.phi.n_params());
        self.phi.set_params(a)?;
        self.rho.set_params(b)
    }

    pub fn axpy(&mut self, scale: f64, delta: &[f64]) -> Result<()> {
        if delta.len() != self.n_params() {
            return Err(Error::shape("update has wrong length"));
        }
        let (a, b) = delta.split_at(self.phi.n_params());
        self.phi.axpy(scale, a)?;
        self.rho.axpy(scale, b)
    }

    /// `sum_i phi(x_i)` over the descending ordering with compensated sums.
    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![Compensated::new(); self.latent_dim()];
        for v in sort_descending(x) {
            for (a, e) in acc.iter_mut().zip(self.phi.forward_unchecked(&[v])) {
                a.add(e);
            }
        }
        acc.iter().map(Compensated::value).collect()
    }

    pub fn eval_slice(&self, x: &[f64]) -> f64 {
        self.rho.forward_unchecked(&self.encode(x))[0]
    }

    /// Encoder exported as an MLP encoder spec.
    pub fn export_phi(&self) -> PhiSpec {
        PhiSpec::mlp(self.phi.clone()).expect("encoder maps scalars")
    }

    /// Squared error `(f(x) - target)^2` for one set; adds `scale` times its
    /// parameter gradient into `grad`.
    pub fn squared_error_grad(
        &self,
        x: &[f64],
        target: f64,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        if grad.len() != self.n_params() {
            return Err(Error::shape("gradient buffer has wrong length"));
        }
        let sorted = sort_descending(x);
        let traces = sorted
            .iter()
            .map(|&v| self.phi.forward_traced(&[v]))
            .collect::<Result<Vec<_>>>()?;
        let mut acc = vec![Compensated::new(); self.latent_dim()];
        for t in &traces {
            for (a, &e) in acc.iter_mut().zip(t.output()) {
                a.add(e);
            }
        }
        let latent: Vec<f64> = acc.iter().map(Compensated::value).collect();
        let rho_trace = self.rho.forward_traced(&latent)?;
        let residual = rho_trace.output()[0] - target;
        let (g_phi, g_rho) = grad.split_at_mut(self.phi.n_params());
        let d_latent = self
            .rho
            .backward(&rho_trace, &[scale * 2.0 * residual], g_rho)?;
        for t in &traces {
            self.phi.backward(t, &d_latent, g_phi)?;
        }
        Ok(residual * residual)
    }
}

impl SumDecomposition for DeepSetsModel {
    fn encoder(&self) -> Cow<'_, PhiSpec> {
        Cow::Owned(self.export_phi())
    }

    fn rho(&self, latent: &[f64]) -> f64 {
        self.rho.forward_unchecked(latent)[0]
    }

    fn latent(&self, x: &[f64]) -> Vec<f64> {
        self.encode(x)
    }
}

/// `rho(sum_i phi(x_i))`.
pub fn deepsets_eval(model: &DeepSetsModel, x: &SetInput) -> f64 {
    model.eval_slice(x.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::lse_max;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity() -> Mlp {
        Mlp::new(vec![Layer {
            inputs: 1,
            outputs: 1,
            weights: vec![1.0],
            bias: vec![0.0],
            activation: Activation::Identity,
        }])
        .unwrap()
    }

    #[test]
    fn sum_model() {
        let m = DeepSetsModel::new(identity(), identity()).unwrap();
        let x = SetInput::new(vec![0.25, -0.5, 0.75]).unwrap();
        assert_eq!(deepsets_eval(&m, &x), 0.5);
    }

    #[test]
    fn log_sum_exp_model() {
        let m = DeepSetsModel::log_sum_exp(4.0).unwrap();
        let x = SetInput::new(vec![0.1, -0.3, 0.6]).unwrap();
        assert!((deepsets_eval(&m, &x) - lse_max(&x, 4.0).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn zero_decoder() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = DeepSetsModel::random(2, &[5], &[4], Activation::Tanh, &mut rng).unwrap();
        let mut p = m.params();
        let start = m.phi().n_params();
        p[start..].iter_mut().for_each(|v| *v = 0.0);
        m.set_params(&p).unwrap();
        for x in [[0.1, 0.2], [-1.0, 1.0]] {
            assert_eq!(m.eval_slice(&x), 0.0);
        }
    }

    #[test]
    fn gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = DeepSetsModel::random(2, &[6], &[5], Activation::Tanh, &mut rng).unwrap();
        let x = [0.3, -0.8, 0.1];
        let mut g = vec![0.0; m.n_params()];
        m.squared_error_grad(&x, 0.4, 1.0, &mut g).unwrap();
        let p = m.params();
        for i in (0..p.len()).step_by(3) {
            let h = 1e-5;
            let mut probe = m.clone();
            let mut q = p.clone();
            q[i] += h;
            probe.set_params(&q).unwrap();
            let up = (probe.eval_slice(&x) - 0.4).powi(2);
            q[i] -= 2.0 * h;
            probe.set_params(&q).unwrap();
            let down = (probe.eval_slice(&x) - 0.4).powi(2);
            let fd = (up - down) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() <= 1e-6 * (1.0 + fd.abs()),
                "{i}: {fd} vs {}",
                g[i]
            );
        }
    }

    #[test]
    fn export_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = DeepSetsModel::random(3, &[4], &[4], Activation::Tanh, &mut rng).unwrap();
        let x = [0.5, -0.25, 0.125, 0.9];
        assert_eq!(m.export_phi().encode_set(&x), m.encode(&x));
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<DeepSetsModel>(&json).unwrap(), m);
    }

    #[test]
    fn shape_checked() {
        let two = Mlp::new(vec![Layer {
            inputs: 1,
            outputs: 2,
            weights: vec![1.0, 1.0],
            bias: vec![0.0; 2],
            activation: Activation::Identity,
        }])
        .unwrap();
        assert!(matches!(
            DeepSetsModel::new(two, identity()),
            Err(Error::Shape(_))
        ));
    }
}
