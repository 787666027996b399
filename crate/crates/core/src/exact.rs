//! Summation helpers.
//!
//! Two flavours are used throughout the crate: a compensated (Kahan–Babuška)
//! accumulator for hot loops, and an exact partials-based sum whose result is
//! the correctly rounded value of the real sum. The exact variant makes pooled
//! averages independent of summation order, so permutation invariance holds
//! bit-for-bit rather than up to rounding.

/// Compensated accumulator (Neumaier's variant of Kahan summation).
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Compensated::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Non-overlapping partial sums whose exact total equals the exact sum of
/// every value pushed so far (Shewchuk's algorithm).
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
    non_finite: f64,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        if !x.is_finite() {
            self.non_finite += x;
            return;
        }
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// Correctly rounded value of the exact sum.
    pub fn value(&self) -> f64 {
        if self.non_finite != 0.0 || self.non_finite.is_nan() {
            return self.non_finite;
        }
        round_partials(&self.partials)
    }

    /// The exact sum as `hi + lo`, where `hi` is the correctly rounded value
    /// and `lo` the correctly rounded remainder.
    pub fn value_pair(&self) -> (f64, f64) {
        let hi = self.value();
        if !hi.is_finite() {
            return (hi, 0.0);
        }
        let mut rest = self.clone();
        rest.add(-hi);
        (hi, rest.value())
    }

    /// Correctly rounded value of `sum / n`.
    ///
    /// Two sums with the same exact real quotient produce the same bits, which
    /// is what lets a k-ary pooled mean agree exactly with the unary one.
    pub fn mean(&self, n: usize) -> f64 {
        if n == 0 {
            return f64::NAN;
        }
        let total = self.value();
        if !total.is_finite() {
            return total / n as f64;
        }
        let nf = n as f64;
        let guess = total / nf;
        if guess == 0.0 && total == 0.0 {
            return 0.0;
        }
        let mut best = guess;
        let mut best_err = f64::INFINITY;
        for c in [guess.next_down(), guess, guess.next_up()] {
            let err = self.residual(c, nf).abs();
            let better = err < best_err
                || (err == best_err && c.to_bits() & 1 == 0 && best.to_bits() & 1 == 1);
            if better {
                best = c;
                best_err = err;
            }
        }
        best
    }

    /// Correctly rounded `sum - c * n`, computed without intermediate error.
    fn residual(&self, c: f64, n: f64) -> f64 {
        let hi = c * n;
        let lo = c.mul_add(n, -hi);
        let mut acc = self.clone();
        acc.add(-hi);
        acc.add(-lo);
        acc.value()
    }
}

fn round_partials(partials: &[f64]) -> f64 {
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // Half-way case: the tail decides the direction of rounding.
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        let yr = x - hi;
        if y == yr {
            hi = x;
        }
    }
    hi
}

pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = ExactSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

pub fn exact_mean(values: &[f64]) -> f64 {
    let mut acc = ExactSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.mean(values.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sum_cancels() {
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum([0.1; 10]), 1.0);
        assert_eq!(exact_sum(std::iter::empty()), 0.0);
    }

    #[test]
    fn compensated_beats_naive() {
        let v = vec![0.1; 1000];
        assert!((compensated_sum(v.iter().copied()) - 100.0).abs() < 1e-13);
    }

    #[test]
    fn mean_is_repetition_invariant() {
        let vals = [0.1, 0.7, -0.3333333333333333, 0.2];
        let once = exact_mean(&vals);
        let mut rep = Vec::new();
        for _ in 0..6 {
            rep.extend_from_slice(&vals);
        }
        rep.reverse();
        assert_eq!(once.to_bits(), exact_mean(&rep).to_bits());
    }

    #[test]
    fn pair_keeps_the_tail() {
        let mut acc = ExactSum::new();
        for v in [1.0, 1e-20, -3e-25] {
            acc.add(v);
        }
        let (hi, lo) = acc.value_pair();
        assert_eq!(hi, 1.0);
        assert_eq!(lo, 1e-20 - 3e-25);
    }

    #[test]
    fn mean_of_third() {
        assert_eq!(exact_mean(&[1.0, 0.0, 0.0]), 1.0 / 3.0);
        assert_eq!(exact_mean(&[2.0, 2.0, 2.0]), 2.0);
    }
}
