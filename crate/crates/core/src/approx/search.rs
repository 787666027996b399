//! Derivative-free minimisation pieces used by the collision search.

/// Randomly shifted Halton sequence on `[0, 1)^d` (Cranley–Patterson
/// rotation of the radical-inverse points).
#[derive(Debug, Clone)]
pub struct ShiftedHalton {
    shift: Vec<f64>,
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    out
}

impl ShiftedHalton {
    pub fn new(shift: Vec<f64>) -> Self {
        assert!(
            shift.len() <= PRIMES.len(),
            "Halton sequence supports at most {} dimensions",
            PRIMES.len()
        );
        Self { shift }
    }

    /// Point `index` (starting at 1 to skip the origin).
    pub fn point(&self, index: u64) -> Vec<f64> {
        self.shift
            .iter()
            .zip(PRIMES)
            .map(|(s, p)| {
                let v = radical_inverse(index, p) + s;
                v - v.floor()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadConfig {
    pub max_evals: usize,
    /// Stop once the best value drops below this.
    pub f_target: f64,
    /// Stop once the simplex diameter drops below this.
    pub x_tol: f64,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

/// Nelder–Mead with the standard coefficients (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2).
pub fn nelder_mead<F>(f: F, start: &[f64], steps: &[f64], cfg: NelderMeadConfig) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let d = start.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((start.to_vec(), eval(start)));
    for i in 0..d {
        let mut p = start.to_vec();
        p[i] += steps[i];
        let v = eval(&p);
        simplex.push((p, v));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| {
                p.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if best <= cfg.f_target || diameter <= cfg.x_tol || evals.get() >= cfg.max_evals {
            break;
        }

        let mut centroid = vec![0.0; d];
        for (p, _) in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / d as f64;
            }
        }
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = along(2.0);
            let fe = eval(&expanded);
            simplex[d] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let c = along(0.5);
            let v = eval(&c);
            (c, v)
        } else {
            let c = along(-0.5);
            let v = eval(&c);
            (c, v)
        };
        if fc < worst.1.min(fr) {
            simplex[d] = (contracted, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for entry in simplex.iter_mut().skip(1) {
            let p: Vec<f64> = anchor
                .iter()
                .zip(&entry.0)
                .map(|(a, x)| a + 0.5 * (x - a))
                .collect();
            let v = eval(&p);
            *entry = (p, v);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        evals: evals.get(),
    }
}

/// Solves `a x = b` for a small dense system by Gaussian elimination with
/// partial pivoting. `a` is row-major `n x n`. Returns `None` if singular.
pub fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot =
            (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        for row in col + 1..n {
            let factor = a[row * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Golden-section minimisation of a 1-D function on `[lo, hi]`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    iters: usize,
) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_first_points() {
        let h = ShiftedHalton::new(vec![0.0, 0.0]);
        assert_eq!(h.point(1), vec![0.5, 1.0 / 3.0]);
        assert_eq!(h.point(2), vec![0.25, 2.0 / 3.0]);
        let s = ShiftedHalton::new(vec![0.75, 0.0]);
        assert_eq!(s.point(1)[0], 0.25);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let cfg = NelderMeadConfig {
            max_evals: 5000,
            f_target: 1e-20,
            x_tol: 1e-14,
        };
        let m = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], cfg);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5,
            "{m:?}"
        );
    }

    #[test]
    fn dense_solve() {
        let x = solve_dense(vec![0.0, 2.0, 1.0, 1.0], vec![4.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        assert!(solve_dense(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn golden() {
        let (x, _) = golden_section(|x| (x - 0.3).powi(2), -1.0, 1.0, 80);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
