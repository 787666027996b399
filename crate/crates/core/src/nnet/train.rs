//! Deterministic mini-batch gradient descent for Deep Sets models.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sets::{f_star_sorted, sort_descending};

use super::deepsets::DeepSetsModel;
use super::mlp::Activation;

pub const CHECKPOINT_SCHEMA: &str = "setlab.checkpoint/v1";
pub const METRICS_SCHEMA: &str = "setlab.metrics/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    FStar,
    Max,
}

impl Task {
    /// Target value on a descending-sorted set.
    pub fn target(self, sorted: &[f64]) -> f64 {
        match self {
            Task::FStar => f_star_sorted(sorted),
            Task::Max => sorted[0],
        }
    }
}

fn default_hidden() -> Vec<usize> {
    vec![32, 32]
}

fn default_activation() -> Activation {
    Activation::Tanh
}

fn default_resolution() -> usize {
    61
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub task: Task,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub seed: u64,
    /// Size of the fixed training set drawn uniformly from `[-1, 1]^M`.
    pub samples: usize,
    #[serde(default = "default_hidden")]
    pub phi_hidden: Vec<usize>,
    #[serde(default = "default_hidden")]
    pub rho_hidden: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    /// Anneal the step size to zero with a half cosine over the run.
    #[serde(default)]
    pub cosine_decay: bool,
    /// Probability of merging each adjacent pair of a sorted training sample,
    /// which puts training mass on the faces and vertices of the simplex.
    #[serde(default)]
    pub tie_probability: f64,
    /// Probability of snapping each raw coordinate to the nearer of -1 and 1.
    #[serde(default)]
    pub boundary_probability: f64,
    /// Points per axis of the evaluation grid on the ordered simplex.
    #[serde(default = "default_resolution")]
    pub eval_resolution: usize,
}

impl TrainConfig {
    pub fn new(task: Task, m: usize, n: usize, seed: u64) -> Self {
        Self {
            task,
            m,
            n,
            epochs: 400,
            batch_size: 64,
            step_size: 0.05,
            seed,
            samples: 4096,
            phi_hidden: default_hidden(),
            rho_hidden: default_hidden(),
            activation: default_activation(),
            cosine_decay: true,
            tie_probability: 0.0,
            boundary_probability: 0.0,
            eval_resolution: default_resolution(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("M", self.m),
            ("N", self.n),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("samples", self.samples),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::config(format!("{name} must be positive")));
            }
        }
        if self
            .phi_hidden
            .iter()
            .chain(&self.rho_hidden)
            .any(|&w| w == 0)
        {
            return Err(Error::config("hidden widths must be positive"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::config("step_size must be positive"));
        }
        for (name, p) in [
            ("tie_probability", self.tie_probability),
            ("boundary_probability", self.boundary_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.eval_resolution < 2 {
            return Err(Error::config("eval_resolution must be at least 2"));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(
            serde_json::to_vec(self).expect("config serializes"),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetrics {
    pub schema: String,
    pub config_hash: String,
    pub seed: u64,
    /// Mean squared error over the training set, once per epoch.
    pub loss_curve: Vec<f64>,
    pub final_loss: f64,
    /// Largest `|model - target|` on the canonical evaluation grid.
    pub grid_max_error: f64,
    pub grid_rmse: f64,
    pub grid_points: usize,
    /// Initialisation radius `1 / sqrt(fan_in)` per layer, encoder then decoder.
    pub init_radii: Vec<f64>,
}

/// Descending points of a corner-anchored grid with `resolution` values per
/// axis, in lexicographic order of grid indices.
pub fn canonical_grid(m: usize, resolution: usize) -> Vec<Vec<f64>> {
    let coord = |i: usize| {
        if i + 1 == resolution {
            1.0
        } else {
            -1.0 + 2.0 * i as f64 / (resolution - 1) as f64
        }
    };
    let mut out = Vec::new();
    let mut idx = vec![resolution - 1; m];
    'outer: loop {
        out.push(idx.iter().map(|&i| coord(i)).collect());
        // next descending index tuple, counting down from the last coordinate
        let mut pos = m;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            if idx[pos] > 0 {
                idx[pos] -= 1;
                for j in pos + 1..m {
                    idx[j] = resolution - 1;
                }
                for j in pos + 1..m {
                    idx[j] = idx[j].min(idx[j - 1]);
                }
                break;
            }
        }
    }
    out
}

/// Max and root-mean-square error of `model` against `task` on the grid.
pub fn grid_error(
    model: &DeepSetsModel,
    task: Task,
    m: usize,
    resolution: usize,
) -> (f64, f64, usize) {
    let grid = canonical_grid(m, resolution);
    let errors: Vec<f64> = grid
        .par_iter()
        .map(|x| (model.eval_slice(x) - task.target(x)).abs())
        .collect();
    let max = errors.iter().copied().fold(0.0, f64::max);
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt();
    (max, rmse, grid.len())
}

const REDUCTION_CHUNKS: usize = 8;

/// Batch gradient with a fixed reduction tree, so the result is independent
/// of thread count.
fn batch_gradient(model: &DeepSetsModel, batch: &[(Vec<f64>, f64)]) -> Result<(f64, Vec<f64>)> {
    let chunk = batch.len().div_ceil(REDUCTION_CHUNKS).max(1);
    let scale = 1.0 / batch.len() as f64;
    let partials: Vec<Result<(f64, Vec<f64>)>> = batch
        .par_chunks(chunk)
        .map(|part| {
            let mut g = vec![0.0; model.n_params()];
            let mut loss = 0.0;
            for (x, y) in part {
                loss += model.squared_error_grad(x, *y, scale, &mut g)?;
            }
            Ok((loss, g))
        })
        .collect();
    let mut grad = vec![0.0; model.n_params()];
    let mut loss = 0.0;
    for p in partials {
        let (l, g) = p?;
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    Ok((loss * scale, grad))
}

fn dataset_loss(model: &DeepSetsModel, data: &[(Vec<f64>, f64)]) -> f64 {
    let parts: Vec<f64> = data
        .par_chunks(256)
        .map(|c| {
            c.iter()
                .map(|(x, y)| (model.eval_slice(x) - y).powi(2))
                .sum::<f64>()
        })
        .collect();
    parts.iter().sum::<f64>() / data.len() as f64
}

/// Trains a Deep Sets model on the configured task. Deterministic given the
/// config.
pub fn train(config: &TrainConfig) -> Result<(DeepSetsModel, TrainMetrics)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = DeepSetsModel::random(
        config.n,
        &config.phi_hidden,
        &config.rho_hidden,
        config.activation,
        &mut rng,
    )?;
    let init_radii = model
        .phi()
        .layers()
        .iter()
        .chain(model.rho().layers())
        .map(|l| 1.0 / (l.inputs as f64).sqrt())
        .collect();

    let data: Vec<(Vec<f64>, f64)> = (0..config.samples)
        .map(|_| {
            let raw: Vec<f64> = (0..config.m)
                .map(|_| {
                    let v: f64 = rng.gen_range(-1.0..=1.0);
                    if config.boundary_probability > 0.0
                        && rng.gen_bool(config.boundary_probability)
                    {
                        v.signum()
                    } else {
                        v
                    }
                })
                .collect();
            let mut sorted = sort_descending(&raw);
            if config.tie_probability > 0.0 {
                for j in 1..sorted.len() {
                    if rng.gen_bool(config.tie_probability) {
                        sorted[j] = sorted[j - 1];
                    }
                }
            }
            let y = config.task.target(&sorted);
            (sorted, y)
        })
        .collect();

    let mut order: Vec<usize> = (0..data.len()).collect();
    let total_steps = config.epochs * data.len().div_ceil(config.batch_size);
    let mut step = 0usize;
    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut batch = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for idx in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(idx.iter().map(|&i| data[i].clone()));
            let (loss, grad) = batch_gradient(&model, &batch)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence(format!(
                    "non-finite loss at epoch {epoch}"
                )));
            }
            let lr = if config.cosine_decay {
                config.step_size
                    * 0.5
                    * (1.0 + (std::f64::consts::PI * step as f64 / total_steps as f64).cos())
            } else {
                config.step_size
            };
            model.axpy(-lr, &grad)?;
            step += 1;
        }
        let epoch_loss = dataset_loss(&model, &data);
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence(format!(
                "non-finite loss at epoch {epoch}"
            )));
        }
        loss_curve.push(epoch_loss);
    }

    let (grid_max_error, grid_rmse, grid_points) =
        grid_error(&model, config.task, config.m, config.eval_resolution);
    let metrics = TrainMetrics {
        schema: METRICS_SCHEMA.into(),
        config_hash: config.hash(),
        seed: config.seed,
        final_loss: *loss_curve.last().expect("at least one epoch"),
        loss_curve,
        grid_max_error,
        grid_rmse,
        grid_points,
        init_radii,
    };
    Ok((model, metrics))
}

/// Model checkpoint file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub schema: String,
    pub seed: u64,
    pub config_hash: String,
    pub phi_layer_sizes: Vec<usize>,
    pub rho_layer_sizes: Vec<usize>,
    pub model: DeepSetsModel,
}

impl Checkpoint {
    pub fn new(model: DeepSetsModel, config: &TrainConfig) -> Self {
        Self {
            schema: CHECKPOINT_SCHEMA.into(),
            seed: config.seed,
            config_hash: config.hash(),
            phi_layer_sizes: model.phi().layer_sizes(),
            rho_layer_sizes: model.rho().layer_sizes(),
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.phi_layer_sizes != c.model.phi().layer_sizes()
            || c.rho_layer_sizes != c.model.rho().layer_sizes()
        {
            return Err(Error::shape(
                "checkpoint layer sizes disagree with its weights",
            ));
        }
        Ok(c)
    }

    /// Hex SHA-256 of the serialized checkpoint.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(
            serde_json::to_vec(self).expect("checkpoint serializes"),
        ))
    }
}
