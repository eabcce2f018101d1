//! Small numeric helpers shared by the modules: compensated summation,
//! integer-snapping floors and exact binomial arithmetic.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Relative slack used by every certified inequality check.
pub const SLACK: f64 = 1e-9;

/// `lhs <= rhs` up to [`SLACK`], scaled by the magnitude of `rhs`.
pub fn leq_slack(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + SLACK * rhs.abs().max(1.0)
}

/// Neumaier (improved Kahan) accumulator. Terms must be added in a fixed
/// order for results to be reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum in iteration order.
pub fn sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Accumulator::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Floor of a nonnegative formula value, snapping values that sit within a
/// relative 1e-12 below an integer up to that integer. Decimal inputs such as
/// `eps = 0.1` are not representable, so `2.0 / 0.1`-style quotients can land
/// a few ulps under the integer the formula means.
pub fn floor_snap(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * r.abs().max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

/// Ceiling counterpart of [`floor_snap`].
pub fn ceil_snap(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * r.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(p, &is)| is.then_some(p as u64))
        .collect()
}

fn product_tree(mut xs: Vec<BigUint>) -> BigUint {
    if xs.is_empty() {
        return BigUint::one();
    }
    while xs.len() > 1 {
        let mut next = Vec::with_capacity(xs.len().div_ceil(2));
        let mut it = xs.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a * b),
                None => next.push(a),
            }
        }
        xs = next;
    }
    xs.pop().unwrap()
}

/// Exact binomial coefficient `C(n, k)` via Legendre prime exponents and a
/// balanced product tree. Returns zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    if k == 0 {
        return BigUint::one();
    }
    if k < 64 {
        let mut c = BigUint::one();
        for i in 0..k {
            c *= n - i;
            c /= i + 1;
        }
        return c;
    }
    let legendre = |x: u64, p: u64| {
        let mut e = 0;
        let mut q = x;
        while q > 0 {
            q /= p;
            e += q;
        }
        e
    };
    let mut factors = Vec::new();
    let mut word = BigUint::one();
    let mut word_small: u64 = 1;
    for p in primes_up_to(n) {
        let e = legendre(n, p) - legendre(k, p) - legendre(n - k, p);
        for _ in 0..e {
            match word_small.checked_mul(p) {
                Some(w) => word_small = w,
                None => {
                    factors.push(BigUint::from(word_small));
                    word_small = p;
                }
            }
        }
    }
    word *= word_small;
    factors.push(word);
    product_tree(factors)
}

/// Exact `ceil(log2(x))` for `x >= 1`.
pub fn ceil_log2_big(x: &BigUint) -> u64 {
    debug_assert!(!x.is_zero());
    if x.is_one() {
        return 0;
    }
    (x - 1u32).bits()
}

/// `log2(x)` in floating point for a big integer (`-inf` for zero).
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.to_f64().unwrap().log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap();
    top.log2() + shift as f64
}

/// `log2 C(n, k)` in floating point.
pub fn log2_binomial_f64(n: u64, k: u64) -> f64 {
    use statrs::function::factorial::ln_factorial;
    if k > n {
        return f64::NEG_INFINITY;
    }
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)) / std::f64::consts::LN_2
}

/// Exact `ceil(log2 C(n, k))`. A floating point estimate decides whenever it
/// is clearly away from an integer; otherwise the exact binomial is built.
pub fn ceil_log2_binomial(n: u64, k: u64) -> u64 {
    assert!(k <= n, "ceil_log2_binomial requires k <= n");
    if n <= 4096 {
        return ceil_log2_big(&binomial(n, k));
    }
    let est = log2_binomial_f64(n, k);
    let frac = est - est.floor();
    if frac > 1e-6 && frac < 1.0 - 1e-6 {
        est.ceil() as u64
    } else {
        ceil_log2_big(&binomial(n, k))
    }
}

/// `gcd`-based least common multiple; panics on overflow.
pub fn lcm(a: u64, b: u64) -> u64 {
    num_integer::lcm(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_binomial(n: u64, k: u64) -> BigUint {
        // Pascal's triangle row
        let mut row = vec![BigUint::one()];
        for _ in 0..n {
            let mut next = vec![BigUint::one(); row.len() + 1];
            for i in 1..row.len() {
                next[i] = &row[i - 1] + &row[i];
            }
            row = next;
        }
        row.get(k as usize).cloned().unwrap_or_default()
    }

    #[test]
    fn binomial_matches_pascal() {
        for n in 0..160u64 {
            let row: Vec<_> = (0..=n).map(|k| naive_binomial(n, k)).collect();
            for k in 0..=n {
                assert_eq!(binomial(n, k), row[k as usize], "C({n},{k})");
            }
        }
        assert_eq!(binomial(16, 8), BigUint::from(12870u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
    }

    #[test]
    fn ceil_log2_small_cases() {
        assert_eq!(ceil_log2_binomial(1, 0), 0);
        assert_eq!(ceil_log2_binomial(2, 1), 1);
        assert_eq!(ceil_log2_binomial(3, 1), 2);
        assert_eq!(ceil_log2_binomial(16, 8), 14);
    }

    #[test]
    fn ceil_log2_float_path_agrees_with_exact() {
        for &(n, k) in &[(5000u64, 2500u64), (6401, 3200), (9000, 17), (8192, 1), (8192, 8191)] {
            let exact = ceil_log2_big(&binomial(n, k));
            assert_eq!(ceil_log2_binomial(n, k), exact, "({n},{k})");
        }
    }

    #[test]
    fn log2_big_is_close() {
        let c = binomial(3000, 1500);
        let est = log2_binomial_f64(3000, 1500);
        assert!((log2_big(&c) - est).abs() < 1e-6);
    }

    #[test]
    fn floor_snap_handles_decimal_noise() {
        assert_eq!(floor_snap(2.0 / 0.1), 20);
        assert_eq!(floor_snap(19.999_999_999_999_996), 20);
        assert_eq!(floor_snap(12.5), 12);
        assert_eq!(floor_snap(0.625), 0);
        assert_eq!(ceil_snap(40.000_000_000_000_01), 40);
        assert_eq!(ceil_snap(7.2), 8);
    }

    #[test]
    fn accumulator_compensates() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum(xs), 2.0);
    }
}
