//! Serialized per-element encoders `phi: [-1, 1] -> R^N`.
//!
//! ```json
//! {"kind": "piecewise_linear", "N": 1, "params": [[[-1, 0], [1, 2]]]}
//! {"kind": "polynomial", "N": 2, "params": [[1, 1], [1, 2, 1]]}
//! {"kind": "mlp", "N": 2, "params": {"layers": [...]}}
//! ```
//!
//! Piecewise-linear params hold one knot list `[abscissa, value]` per output
//! dimension; polynomial params hold one coefficient row per output
//! dimension, lowest degree first.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exact::Compensated;
use crate::nnet::Mlp;
use crate::sets::sort_descending;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum PhiMap {
    PiecewiseLinear(Vec<Vec<[f64; 2]>>),
    Polynomial(Vec<Vec<f64>>),
    Mlp(Mlp),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhiSpecRaw", into = "PhiSpecRaw")]
pub struct PhiSpec {
    dim: usize,
    map: PhiMap,
}

pub const PHI_SCHEMA: &str = "setlab.phi/v1";

fn phi_schema() -> String {
    PHI_SCHEMA.into()
}

#[derive(Serialize, Deserialize)]
struct PhiSpecRaw {
    #[serde(default = "phi_schema")]
    schema: String,
    #[serde(flatten)]
    map: PhiMap,
    #[serde(rename = "N")]
    dim: usize,
}

impl TryFrom<PhiSpecRaw> for PhiSpec {
    type Error = Error;

    fn try_from(raw: PhiSpecRaw) -> Result<Self> {
        PhiSpec::new(raw.dim, raw.map)
    }
}

impl From<PhiSpec> for PhiSpecRaw {
    fn from(p: PhiSpec) -> Self {
        PhiSpecRaw {
            schema: phi_schema(),
            map: p.map,
            dim: p.dim,
        }
    }
}

impl PhiSpec {
    pub fn new(dim: usize, map: PhiMap) -> Result<Self> {
        if dim == 0 {
            return Err(Error::config("encoder output dimension must be positive"));
        }
        match &map {
            PhiMap::PiecewiseLinear(rows) => {
                if rows.len() != dim {
                    return Err(Error::config(format!(
                        "{} knot lists for N = {dim}",
                        rows.len()
                    )));
                }
                for (q, knots) in rows.iter().enumerate() {
                    if knots.len() < 2 {
                        return Err(Error::config(format!(
                            "output {q} needs at least two knots"
                        )));
                    }
                    if knots.iter().flatten().any(|v| !v.is_finite()) {
                        return Err(Error::config(format!("output {q} has non-finite knots")));
                    }
                    if knots.windows(2).any(|w| w[1][0] <= w[0][0]) {
                        return Err(Error::config(format!(
                            "output {q}: knot abscissae must be strictly increasing"
                        )));
                    }
                    if knots[0][0] > -1.0 || knots[knots.len() - 1][0] < 1.0 {
                        return Err(Error::config(format!(
                            "output {q}: knots must cover [-1, 1]"
                        )));
                    }
                }
            }
            PhiMap::Polynomial(rows) => {
                if rows.len() != dim {
                    return Err(Error::config(format!(
                        "{} coefficient rows for N = {dim}",
                        rows.len()
                    )));
                }
                if rows
                    .iter()
                    .any(|r| r.is_empty() || r.iter().any(|c| !c.is_finite()))
                {
                    return Err(Error::config(
                        "coefficient rows must be non-empty and finite",
                    ));
                }
            }
            PhiMap::Mlp(net) => {
                if net.input_dim() != 1 || net.output_dim() != dim {
                    return Err(Error::config(format!(
                        "mlp maps R^{} -> R^{}, expected R^1 -> R^{dim}",
                        net.input_dim(),
                        net.output_dim()
                    )));
                }
            }
        }
        Ok(Self { dim, map })
    }

    pub fn piecewise_linear(knots: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        Self::new(knots.len(), PhiMap::PiecewiseLinear(knots))
    }

    pub fn polynomial(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.len(), PhiMap::Polynomial(rows))
    }

    pub fn mlp(net: Mlp) -> Result<Self> {
        Self::new(net.output_dim(), PhiMap::Mlp(net))
    }

    /// Random piecewise-linear encoder with `knots` equally spaced abscissae
    /// on `[-1, 1]` and values uniform in `[-1, 1]`.
    pub fn random_piecewise_linear<R: Rng + ?Sized>(
        dim: usize,
        knots: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let knots = knots.max(2);
        let rows = (0..dim)
            .map(|_| {
                (0..knots)
                    .map(|i| {
                        let x = if i + 1 == knots {
                            1.0
                        } else {
                            -1.0 + 2.0 * i as f64 / (knots - 1) as f64
                        };
                        [x, rng.gen_range(-1.0..=1.0)]
                    })
                    .collect()
            })
            .collect();
        Self::piecewise_linear(rows)
    }

    /// The planar semicircle `x -> (cos(pi (x + 1) / 2), sin(pi (x + 1) / 2))`
    /// sampled at `knots` points and joined linearly.
    pub fn semicircle(knots: usize) -> Result<Self> {
        let knots = knots.max(2);
        let xs: Vec<f64> = (0..knots)
            .map(|i| {
                if i + 1 == knots {
                    1.0
                } else {
                    -1.0 + 2.0 * i as f64 / (knots - 1) as f64
                }
            })
            .collect();
        let angle = |x: f64| std::f64::consts::FRAC_PI_2 * (x + 1.0);
        let rows = vec![
            xs.iter().map(|&x| [x, angle(x).cos()]).collect(),
            xs.iter().map(|&x| [x, angle(x).sin()]).collect(),
        ];
        Self::piecewise_linear(rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn map(&self) -> &PhiMap {
        &self.map
    }

    pub fn kind(&self) -> &'static str {
        match self.map {
            PhiMap::PiecewiseLinear(_) => "piecewise_linear",
            PhiMap::Polynomial(_) => "polynomial",
            PhiMap::Mlp(_) => "mlp",
        }
    }

    /// Writes `phi(x)` into `out`. `x` is clamped into `[-1, 1]`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        let x = x.clamp(-1.0, 1.0);
        match &self.map {
            PhiMap::PiecewiseLinear(rows) => {
                for (o, knots) in out.iter_mut().zip(rows) {
                    *o = interp_knots(knots, x);
                }
            }
            PhiMap::Polynomial(rows) => {
                for (o, coeffs) in out.iter_mut().zip(rows) {
                    *o = coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
                }
            }
            PhiMap::Mlp(net) => {
                out.copy_from_slice(&net.forward_unchecked(&[x]));
            }
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    /// `Phi(x) = sum_i phi(x_i)`, summed over descending-sorted elements with
    /// compensated accumulation so the result is order independent.
    pub fn encode_set(&self, x: &[f64]) -> Vec<f64> {
        let sorted = sort_descending(x);
        let mut acc = vec![Compensated::new(); self.dim];
        let mut buf = vec![0.0; self.dim];
        for &v in &sorted {
            self.eval_into(v, &mut buf);
            for (a, &b) in acc.iter_mut().zip(&buf) {
                a.add(b);
            }
        }
        acc.iter().map(Compensated::value).collect()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("encoder spec serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Largest `|phi(x) - phi(-1)|` over a fine probe grid and the knots.
    pub fn shifted_scale(&self) -> f64 {
        let base = self.eval(-1.0);
        let mut probes: Vec<f64> = (0..=256).map(|i| -1.0 + 2.0 * i as f64 / 256.0).collect();
        if let PhiMap::PiecewiseLinear(rows) = &self.map {
            probes.extend(
                rows.iter()
                    .flatten()
                    .map(|k| k[0])
                    .filter(|x| x.abs() <= 1.0),
            );
        }
        let mut buf = vec![0.0; self.dim];
        probes
            .into_iter()
            .map(|x| {
                self.eval_into(x, &mut buf);
                buf.iter()
                    .zip(&base)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// True when `phi` is provably constant: all knot values or all non-constant
    /// coefficients coincide. MLP encoders are never reported constant.
    pub fn is_constant(&self) -> bool {
        match &self.map {
            PhiMap::PiecewiseLinear(rows) => rows.iter().all(|k| k.iter().all(|p| p[1] == k[0][1])),
            PhiMap::Polynomial(rows) => rows.iter().all(|r| r.iter().skip(1).all(|&c| c == 0.0)),
            PhiMap::Mlp(_) => false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn interp_knots(knots: &[[f64; 2]], x: f64) -> f64 {
    let idx = knots.partition_point(|k| k[0] <= x);
    if idx == 0 {
        return knots[0][1];
    }
    if idx == knots.len() {
        return knots[knots.len() - 1][1];
    }
    let [x0, y0] = knots[idx - 1];
    let [x1, y1] = knots[idx];
    if x == x0 {
        return y0;
    }
    let t = (x - x0) / (x1 - x0);
    (1.0 - t) * y0 + t * y1
}
