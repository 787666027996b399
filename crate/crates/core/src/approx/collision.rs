//! Collision search: finds `x+` on the plus face and `x-` on the minus face
//! with `Phi(x+) = Phi(x-)` for an encoder into `R^(M-1)`.
//!
//! A zero `z` of `Gamma_N` lifts to such a pair. `Gamma_N o nu_N` is odd on
//! the boundary of the cube, so a zero exists; the search minimises
//! `|Gamma_N(nu_N(x))|^2` over the cube from quasi-random starts and the face
//! centres with Nelder–Mead, then polishes `z = nu_N(x)` on the simplex with
//! damped Gauss–Newton steps and coordinate-wise golden-section sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sets::{build_face_pair, f_star_sorted, on_face, Face, SimplexPoint, MEMBERSHIP_TOL};

use super::gamma::ShiftedPhi;
use super::nu::nu_unchecked;
use super::phi::PhiSpec;
use super::search::{golden_section, nelder_mead, solve_dense, NelderMeadConfig, ShiftedHalton};

pub const CERTIFICATE_SCHEMA: &str = "setlab.certificate/v1";

/// How much work the collision search may do.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBudget {
    /// Quasi-random starts per round; the `2N` face centres come on top.
    pub starts: usize,
    /// Function evaluations per Nelder–Mead run.
    pub nm_max_evals: usize,
    /// Gauss–Newton iterations per polish round.
    pub polish_iterations: usize,
    /// Extra rounds, each doubling `starts`, before giving up.
    pub escalations: usize,
    /// Starts evaluated together; the search stops after the first batch that
    /// produces a certificate.
    pub batch: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            starts: 24,
            nm_max_evals: 800,
            polish_iterations: 60,
            escalations: 6,
            batch: 8,
        }
    }
}

impl SearchBudget {
    /// Budget scaled by a single integer, as used by the `--budget` flag.
    pub fn with_starts(starts: usize) -> Self {
        Self {
            starts: starts.max(1),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub start: usize,
    pub z: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub starts: usize,
    pub nm_evaluations: usize,
    pub polish_iterations: usize,
    pub rounds: usize,
    pub best_residual: f64,
    pub best_start: Option<usize>,
    /// Every start that reached the tolerance, in start order.
    pub candidates: Vec<Candidate>,
    pub shortcut: Option<String>,
}

/// A verified pair of face points with (numerically) equal encodings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionCertificate {
    pub schema: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub z_star: Vec<f64>,
    pub x_plus: Vec<f64>,
    pub x_minus: Vec<f64>,
    /// `max_q |Phi(x+)_q - Phi(x-)_q|`.
    pub phi_residual: f64,
    pub f_gap: f64,
    pub tolerance: f64,
    pub phi_hash: String,
    pub seed: u64,
    pub config_hash: String,
    pub search_trace: SearchTrace,
}

impl CollisionCertificate {
    /// Re-checks every claim of the certificate against `phi`.
    pub fn verify(&self, phi: &PhiSpec) -> Result<()> {
        if phi.hash() != self.phi_hash {
            return Err(Error::CertMismatch("encoder hash differs".into()));
        }
        if self.n != phi.dim() || self.m != self.n + 1 {
            return Err(Error::CertMismatch(format!(
                "M = {}, N = {} do not fit the encoder",
                self.m, self.n
            )));
        }
        if !on_face(&self.x_plus, Face::Plus, MEMBERSHIP_TOL)
            || !on_face(&self.x_minus, Face::Minus, MEMBERSHIP_TOL)
        {
            return Err(Error::CertMismatch(
                "points are not on the opposing faces".into(),
            ));
        }
        let gap = f_star_sorted(&self.x_plus) - f_star_sorted(&self.x_minus);
        if gap != 2.0 || self.f_gap != 2.0 {
            return Err(Error::CertMismatch(format!("target gap {gap} is not 2")));
        }
        let residual = encoding_residual(phi, &self.x_plus, &self.x_minus);
        if residual > self.tolerance {
            return Err(Error::CertMismatch(format!(
                "residual {residual:e} above tolerance {:e}",
                self.tolerance
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn encoding_residual(phi: &PhiSpec, a: &[f64], b: &[f64]) -> f64 {
    phi.encode_set(a)
        .iter()
        .zip(phi.encode_set(b))
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

/// Declared tolerance for `phi`: `tol_zero * (1 + scale)`, where the scale is
/// the largest shifted encoder value.
pub fn declared_tolerance(phi: &PhiSpec, tol_zero: f64) -> f64 {
    tol_zero * (1.0 + phi.shifted_scale())
}

fn config_hash(
    phi_hash: &str,
    m: usize,
    tol_zero: f64,
    budget: &SearchBudget,
    seed: u64,
) -> String {
    let cfg = serde_json::json!({
        "phi_hash": phi_hash,
        "M": m,
        "tol_zero": tol_zero,
        "budget": budget,
        "seed": seed,
    });
    hex::encode(Sha256::digest(cfg.to_string().as_bytes()))
}

struct Problem<'a> {
    shifted: ShiftedPhi<'a>,
    n: usize,
}

impl Problem<'_> {
    fn gamma_sq_on_cube(&self, x: &[f64]) -> f64 {
        let mut penalty = 0.0;
        let clamped: Vec<f64> = x
            .iter()
            .map(|&v| {
                let c = v.clamp(-1.0, 1.0);
                penalty += (v - c) * (v - c);
                c
            })
            .collect();
        let z = nu_unchecked(&clamped);
        norm_sq(&self.shifted.gamma(&z)) + penalty
    }

    fn residual_inf(&self, z: &[f64]) -> f64 {
        self.shifted
            .gamma(z)
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Damped Gauss–Newton on the simplex with a finite-difference Jacobian.
    fn polish(&self, z: &mut Vec<f64>, iterations: usize, target: f64) -> usize {
        let n = self.n;
        let mut r = self.shifted.gamma(z);
        let mut cost = norm_sq(&r);
        let mut damping = 1e-6;
        let mut used = 0;
        for _ in 0..iterations {
            if r.iter().all(|v| v.abs() <= target) {
                break;
            }
            used += 1;
            let jac = self.jacobian(z);
            // normal equations (J^T J + lambda I) step = -J^T r
            let mut jtj = vec![0.0; n * n];
            let mut jtr = vec![0.0; n];
            for a in 0..n {
                for b in 0..n {
                    jtj[a * n + b] = (0..n).map(|q| jac[q * n + a] * jac[q * n + b]).sum();
                }
                jtr[a] = -(0..n).map(|q| jac[q * n + a] * r[q]).sum::<f64>();
            }
            let mut improved = false;
            for _ in 0..8 {
                let mut sys = jtj.clone();
                for a in 0..n {
                    sys[a * n + a] += damping * (1.0 + jtj[a * n + a]);
                }
                let Some(step) = solve_dense(sys, jtr.clone()) else {
                    damping *= 10.0;
                    continue;
                };
                let cand = project_to_simplex(
                    &z.iter().zip(&step).map(|(a, s)| a + s).collect::<Vec<_>>(),
                );
                let rc = self.shifted.gamma(&cand);
                let cc = norm_sq(&rc);
                if cc < cost {
                    *z = cand;
                    r = rc;
                    cost = cc;
                    damping = (damping / 10.0).max(1e-15);
                    improved = true;
                    break;
                }
                damping *= 10.0;
            }
            if !improved {
                break;
            }
        }
        used
    }

    fn jacobian(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut jac = vec![0.0; n * n];
        for i in 0..n {
            let h = 1e-7;
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[i] = (z[i] + h).min(1.0);
            zm[i] = (z[i] - h).max(-1.0);
            let width = zp[i] - zm[i];
            let gp = self.shifted.gamma(&zp);
            let gm = self.shifted.gamma(&zm);
            for q in 0..n {
                jac[q * n + i] = (gp[q] - gm[q]) / width;
            }
        }
        jac
    }

    /// One sweep of golden-section line searches, one coordinate at a time,
    /// each within the bounds that keep `z` ordered.
    fn coordinate_sweep(&self, z: &mut [f64], width: f64) {
        for i in 0..self.n {
            let hi = if i == 0 { 1.0 } else { z[i - 1] };
            let lo = if i + 1 == self.n { -1.0 } else { z[i + 1] };
            let a = (z[i] - width).max(lo);
            let b = (z[i] + width).min(hi);
            if b <= a {
                continue;
            }
            let base = norm_sq(&self.shifted.gamma(z));
            let mut probe = z.to_vec();
            let (best, value) = golden_section(
                |t| {
                    probe[i] = t;
                    norm_sq(&self.shifted.gamma(&probe))
                },
                a,
                b,
                60,
            );
            if value < base {
                z[i] = best;
            }
        }
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn project_to_simplex(z: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = z.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

struct StartOutcome {
    z: Vec<f64>,
    residual: f64,
    nm_evals: usize,
    polish: usize,
}

fn run_start(
    problem: &Problem<'_>,
    start: &[f64],
    rng: &mut ChaCha8Rng,
    budget: &SearchBudget,
    target: f64,
) -> StartOutcome {
    let n = problem.n;
    let steps: Vec<f64> = (0..n)
        .map(|i| {
            let s = rng.gen_range(0.15..0.35);
            if start[i] > 0.5 {
                -s
            } else {
                s
            }
        })
        .collect();
    let cfg = NelderMeadConfig {
        max_evals: budget.nm_max_evals,
        f_target: target * target,
        x_tol: 1e-12,
    };
    let min = nelder_mead(|x| problem.gamma_sq_on_cube(x), start, &steps, cfg);
    let clamped: Vec<f64> = min.x.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
    let mut z = nu_unchecked(&clamped);

    // Polish all the way down; the tolerance only decides certification.
    let mut polish = problem.polish(&mut z, budget.polish_iterations, 0.0);
    let mut width = 1e-2;
    for _ in 0..4 {
        if problem.residual_inf(&z) <= target {
            break;
        }
        problem.coordinate_sweep(&mut z, width);
        polish += problem.polish(&mut z, budget.polish_iterations, 0.0);
        width *= 0.1;
    }
    let residual = problem.residual_inf(&z);
    StartOutcome {
        z,
        residual,
        nm_evals: min.evals,
        polish,
    }
}

/// Searches for a collision certificate.
///
/// `m` must equal `phi.dim() + 1`. The certificate's residual is at most
/// [`declared_tolerance`]`(phi, tol_zero)`. Each start draws from its own
/// random stream derived from `(seed, start index)`, and the winner is the
/// lowest residual with ties going to the earlier start, so the result does
/// not depend on thread scheduling.
pub fn find_collision(
    phi: &PhiSpec,
    m: usize,
    tol_zero: f64,
    budget: &SearchBudget,
    seed: u64,
) -> Result<CollisionCertificate> {
    let n = phi.dim();
    if m != n + 1 {
        return Err(Error::config(format!(
            "set size M = {m} must be encoder dimension N + 1 = {}",
            n + 1
        )));
    }
    if n > 16 {
        return Err(Error::UnsupportedDim(format!(
            "collision search supports N <= 16, got {n}"
        )));
    }
    if !(tol_zero > 0.0) {
        return Err(Error::config("tolerance must be positive"));
    }
    let tolerance = declared_tolerance(phi, tol_zero);
    let phi_hash = phi.hash();
    let config_hash = config_hash(&phi_hash, m, tol_zero, budget, seed);
    let mut trace = SearchTrace {
        best_residual: f64::INFINITY,
        ..SearchTrace::default()
    };

    let certify = |z: Vec<f64>, trace: SearchTrace| -> Result<Option<CollisionCertificate>> {
        let point = SimplexPoint::new(z)?;
        let (plus, minus) = build_face_pair(&point)?;
        let residual = encoding_residual(phi, plus.coords(), minus.coords());
        if residual > tolerance {
            return Ok(None);
        }
        let f_gap = f_star_sorted(plus.coords()) - f_star_sorted(minus.coords());
        Ok(Some(CollisionCertificate {
            schema: CERTIFICATE_SCHEMA.into(),
            m,
            n,
            z_star: point.into_coords(),
            x_plus: plus.coords().to_vec(),
            x_minus: minus.coords().to_vec(),
            phi_residual: residual,
            f_gap,
            tolerance,
            phi_hash: phi_hash.clone(),
            seed,
            config_hash: config_hash.clone(),
            search_trace: trace,
        }))
    };

    if phi.is_constant() || phi.shifted_scale() == 0.0 {
        let mut t = trace.clone();
        t.shortcut = Some("constant encoder: every face pair collides".into());
        t.best_residual = 0.0;
        if let Some(cert) = certify(vec![-1.0; n], t)? {
            return Ok(cert);
        }
    }

    let problem = Problem {
        shifted: ShiftedPhi::new(phi),
        n,
    };
    // |Phi(x+) - Phi(x-)| = 2 |Gamma(z)|, with some headroom for rounding.
    let target = 0.25 * tolerance;

    let mut shift_rng = ChaCha8Rng::seed_from_u64(seed);
    let halton = ShiftedHalton::new((0..n).map(|_| shift_rng.gen::<f64>()).collect());
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut c = vec![0.0; n];
            c[i] = s;
            starts.push(c);
        }
    }
    let mut next_halton = 1u64;
    let mut round_size = budget.starts;
    let mut evaluated = 0usize;
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    for round in 0..=budget.escalations {
        trace.rounds = round + 1;
        for _ in 0..round_size {
            starts.push(
                halton
                    .point(next_halton)
                    .iter()
                    .map(|u| 2.0 * u - 1.0)
                    .collect(),
            );
            next_halton += 1;
        }
        while evaluated < starts.len() {
            let end = (evaluated + budget.batch.max(1)).min(starts.len());
            let outcomes: Vec<StartOutcome> = (evaluated..end)
                .into_par_iter()
                .map(|idx| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(idx as u64 + 1);
                    run_start(&problem, &starts[idx], &mut rng, budget, target)
                })
                .collect();
            for (offset, out) in outcomes.into_iter().enumerate() {
                let idx = evaluated + offset;
                trace.starts += 1;
                trace.nm_evaluations += out.nm_evals;
                trace.polish_iterations += out.polish;
                if out.residual <= target {
                    trace.candidates.push(Candidate {
                        start: idx,
                        z: out.z.clone(),
                        residual: 2.0 * out.residual,
                    });
                }
                if best.as_ref().map_or(true, |b| out.residual < b.0) {
                    best = Some((out.residual, idx, out.z));
                }
            }
            evaluated = end;
            if let Some((res, idx, z)) = best.as_ref() {
                trace.best_residual = 2.0 * res;
                trace.best_start = Some(*idx);
                if *res <= target {
                    if let Some(cert) = certify(z.clone(), trace.clone())? {
                        return Ok(cert);
                    }
                }
            }
        }
        round_size *= 2;
    }

    if let Some((_, _, z)) = best.as_ref() {
        if let Some(cert) = certify(z.clone(), trace.clone())? {
            return Ok(cert);
        }
    }
    Err(Error::SearchExhausted {
        best_residual: trace.best_residual,
        trace: Box::new(trace),
    })
}
