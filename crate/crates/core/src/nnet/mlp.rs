use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
    /// `e^x`; with [`Activation::Ln`] this builds the log-sum-exp decomposition.
    Exp,
    Ln,
}

impl Activation {
    #[inline]
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
            Activation::Exp => v.exp(),
            Activation::Ln => v.ln(),
        }
    }

    /// Derivative in terms of the pre-activation `v` and output `a`. The relu
    /// subgradient at the kink is 0.
    #[inline]
    fn derivative(self, v: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
            Activation::Exp => a,
            Activation::Ln => 1.0 / v,
        }
    }
}

/// One affine layer followed by an activation. `weights` is row-major with
/// `outputs` rows of `inputs` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn validate(&self) -> Result<()> {
        if self.inputs == 0 || self.outputs == 0 {
            return Err(Error::shape("layer with zero width"));
        }
        if self.weights.len() != self.inputs * self.outputs {
            return Err(Error::shape(format!(
                "layer {}x{} has {} weights",
                self.outputs,
                self.inputs,
                self.weights.len()
            )));
        }
        if self.bias.len() != self.outputs {
            return Err(Error::shape(format!(
                "layer with {} outputs has {} biases",
                self.outputs,
                self.bias.len()
            )));
        }
        if self
            .weights
            .iter()
            .chain(&self.bias)
            .any(|w| !w.is_finite())
        {
            return Err(Error::shape("non-finite parameter"));
        }
        Ok(())
    }

    #[inline]
    fn affine(&self, input: &[f64], out: &mut [f64]) {
        for (o, (row, b)) in out
            .iter_mut()
            .zip(self.weights.chunks_exact(self.inputs).zip(&self.bias))
        {
            *o = row.iter().zip(input).fold(*b, |acc, (w, x)| acc + w * x);
        }
    }
}

/// Feedforward network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpRaw", into = "MlpRaw")]
pub struct Mlp {
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct MlpRaw {
    layers: Vec<Layer>,
}

impl TryFrom<MlpRaw> for Mlp {
    type Error = Error;

    fn try_from(raw: MlpRaw) -> Result<Self> {
        Mlp::new(raw.layers)
    }
}

impl From<Mlp> for MlpRaw {
    fn from(m: Mlp) -> Self {
        MlpRaw { layers: m.layers }
    }
}

/// Activations recorded by [`Mlp::forward_traced`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardTrace {
    /// `values[0]` is the input, `values[l + 1]` the output of layer `l`.
    values: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.values.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Mlp {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::shape("network without layers"));
        }
        for l in &layers {
            l.validate()?;
        }
        for w in layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::shape(format!(
                    "layer output width {} does not feed next input width {}",
                    w[0].outputs, w[1].inputs
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Uniform `(-r, r)` initialisation with `r = 1 / sqrt(fan_in)`.
    ///
    /// `sizes` lists the widths from input to output; `hidden` is used for
    /// every layer but the last, which uses `output`.
    pub fn random<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::shape("need at least input and output width"));
        }
        let n_layers = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (inputs, outputs) = (w[0], w[1]);
                let r = 1.0 / (inputs.max(1) as f64).sqrt();
                let weights = (0..inputs * outputs)
                    .map(|_| rng.gen_range(-r..r))
                    .collect();
                let bias = (0..outputs).map(|_| rng.gen_range(-r..r)).collect();
                let activation = if i + 1 == n_layers { output } else { hidden };
                Layer {
                    inputs,
                    outputs,
                    weights,
                    bias,
                    activation,
                }
            })
            .collect();
        Mlp::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Layer::n_params).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::shape(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// Adds `scale * delta` to the parameters.
    pub fn axpy(&mut self, scale: f64, delta: &[f64]) -> Result<()> {
        if delta.len() != self.n_params() {
            return Err(Error::shape("parameter update has wrong length"));
        }
        let mut it = delta.iter();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *w += scale * it.next().copied().unwrap_or(0.0);
            }
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.forward_unchecked(input))
    }

    pub(crate) fn forward_unchecked(&self, input: &[f64]) -> Vec<f64> {
        let mut cur = input.to_vec();
        for l in &self.layers {
            let mut next = vec![0.0; l.outputs];
            l.affine(&cur, &mut next);
            for v in &mut next {
                *v = l.activation.apply(*v);
            }
            cur = next;
        }
        cur
    }

    pub fn forward_traced(&self, input: &[f64]) -> Result<ForwardTrace> {
        self.check_input(input)?;
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        values.push(input.to_vec());
        for l in &self.layers {
            let mut z = vec![0.0; l.outputs];
            l.affine(values.last().unwrap(), &mut z);
            let a = z.iter().map(|&v| l.activation.apply(v)).collect();
            pre.push(z);
            values.push(a);
        }
        Ok(ForwardTrace { values, pre })
    }

    /// Reverse-mode pass. Accumulates `d loss / d params` into `grad` (same
    /// layout as [`Mlp::params`]) and returns `d loss / d input`.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        grad_output: &[f64],
        grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        if grad_output.len() != self.output_dim() {
            return Err(Error::shape("output gradient has wrong length"));
        }
        if grad.len() != self.n_params() {
            return Err(Error::shape("gradient buffer has wrong length"));
        }
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.n_params();
        }

        let mut upstream = grad_output.to_vec();
        for (li, l) in self.layers.iter().enumerate().rev() {
            let input = &trace.values[li];
            let out = &trace.values[li + 1];
            let pre = &trace.pre[li];
            let delta: Vec<f64> = upstream
                .iter()
                .zip(pre.iter().zip(out))
                .map(|(g, (&z, &a))| g * l.activation.derivative(z, a))
                .collect();

            let base = offsets[li];
            let (gw, gb) = grad[base..base + l.n_params()].split_at_mut(l.weights.len());
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &mut gw[o * l.inputs..(o + 1) * l.inputs];
                for (g, &x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
                gb[o] += d;
            }

            let mut down = vec![0.0; l.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                for (g, &w) in down.iter_mut().zip(row) {
                    *g += d * w;
                }
            }
            upstream = down;
        }
        Ok(upstream)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::shape(format!(
                "input has length {}, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }
}

/// Compares the reverse-mode gradient of `sum_q (net(input)_q - target_q)^2`
/// with central differences of step `h`. Returns
/// `|g - g_fd|_2 / max(|g|_2, |g_fd|_2)`, or 0 when both vanish.
pub fn gradient_check(net: &Mlp, input: &[f64], target: &[f64], h: f64) -> Result<f64> {
    if target.len() != net.output_dim() {
        return Err(Error::shape("target has wrong length"));
    }
    let loss = |n: &Mlp| -> f64 {
        n.forward_unchecked(input)
            .iter()
            .zip(target)
            .map(|(o, t)| (o - t) * (o - t))
            .sum()
    };
    let trace = net.forward_traced(input)?;
    let grad_out: Vec<f64> = trace
        .output()
        .iter()
        .zip(target)
        .map(|(o, t)| 2.0 * (o - t))
        .collect();
    let mut grad = vec![0.0; net.n_params()];
    net.backward(&trace, &grad_out, &mut grad)?;

    let params = net.params();
    let mut probe = net.clone();
    let mut shifted = params.clone();
    let mut diff = 0.0;
    let mut norm_g = 0.0;
    let mut norm_fd = 0.0;
    for i in 0..params.len() {
        shifted[i] = params[i] + h;
        probe.set_params(&shifted)?;
        let up = loss(&probe);
        shifted[i] = params[i] - h;
        probe.set_params(&shifted)?;
        let down = loss(&probe);
        shifted[i] = params[i];
        let fd = (up - down) / (2.0 * h);
        diff += (grad[i] - fd) * (grad[i] - fd);
        norm_g += grad[i] * grad[i];
        norm_fd += fd * fd;
    }
    let scale = norm_g.max(norm_fd).sqrt();
    Ok(if scale == 0.0 {
        0.0
    } else {
        diff.sqrt() / scale
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear(weights: Vec<f64>, bias: Vec<f64>, inputs: usize, activation: Activation) -> Mlp {
        let outputs = bias.len();
        Mlp::new(vec![Layer {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        }])
        .unwrap()
    }

    #[test]
    fn forward_examples() {
        let zero = linear(vec![0.0; 6], vec![1.0, -2.0], 3, Activation::Identity);
        assert_eq!(zero.forward(&[0.3, 0.1, 0.9]).unwrap(), vec![1.0, -2.0]);

        let lin = linear(
            vec![1.0, 2.0, 3.0, 4.0],
            vec![0.5, -0.5],
            2,
            Activation::Identity,
        );
        assert_eq!(lin.forward(&[1.0, -1.0]).unwrap(), vec![-0.5, -1.5]);

        let t = linear(vec![0.7, -0.2], vec![0.0], 2, Activation::Tanh);
        assert_eq!(t.forward(&[0.0, 0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn shape_errors() {
        let lin = linear(vec![1.0, 2.0], vec![0.0], 2, Activation::Identity);
        assert!(matches!(lin.forward(&[1.0]), Err(Error::Shape(_))));
        let bad = Layer {
            inputs: 2,
            outputs: 1,
            weights: vec![1.0],
            bias: vec![0.0],
            activation: Activation::Tanh,
        };
        assert!(Mlp::new(vec![bad]).is_err());
        let a = Layer {
            inputs: 1,
            outputs: 2,
            weights: vec![1.0; 2],
            bias: vec![0.0; 2],
            activation: Activation::Tanh,
        };
        let b = Layer {
            inputs: 3,
            outputs: 1,
            weights: vec![1.0; 3],
            bias: vec![0.0],
            activation: Activation::Tanh,
        };
        assert!(Mlp::new(vec![a, b]).is_err());
    }

    #[test]
    fn linear_squared_loss_gradient() {
        // loss = (w.x + b - y)^2, d/dw = 2 (pred - y) x
        let net = linear(vec![0.5, -1.0], vec![0.25], 2, Activation::Identity);
        let x = [0.3, 0.8];
        let y = 1.0;
        let trace = net.forward_traced(&x).unwrap();
        let pred = trace.output()[0];
        let mut grad = vec![0.0; net.n_params()];
        net.backward(&trace, &[2.0 * (pred - y)], &mut grad)
            .unwrap();
        let r = 2.0 * (pred - y);
        assert_eq!(grad, vec![r * 0.3, r * 0.8, r]);
    }

    #[test]
    fn params_round_trip_and_serde() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net =
            Mlp::random(&[1, 4, 3], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let p = net.params();
        net.set_params(&p).unwrap();
        assert_eq!(net.params(), p);
        let json = serde_json::to_string(&net).unwrap();
        let back: Mlp = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
        assert_eq!(net.layer_sizes(), vec![1, 4, 3]);
    }

    #[test]
    fn tanh_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = Mlp::random(&[3, 5, 4, 2], Activation::Tanh, Activation::Tanh, &mut rng).unwrap();
        let err = gradient_check(&net, &[0.2, -0.7, 0.4], &[0.1, -0.3], 1e-5).unwrap();
        assert!(err < 1e-6, "{err}");
        let constant = Mlp::new(vec![Layer {
            inputs: 1,
            outputs: 1,
            weights: vec![0.0],
            bias: vec![0.5],
            activation: Activation::Identity,
        }])
        .unwrap();
        assert!(gradient_check(&constant, &[0.3], &[0.1], 1e-5).unwrap() < 1e-9);
    }
}
