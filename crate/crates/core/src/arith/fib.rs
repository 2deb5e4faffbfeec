use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::Serialize;

use super::ArithError;

/// Fibonacci numbers `F_1..F_N` as big integers, extended on demand.
#[derive(Debug, Clone)]
pub struct FibCache {
    // values[0] = F_0 = 0, values[n] = F_n
    values: Vec<BigUint>,
}

impl Default for FibCache {
    fn default() -> Self {
        Self::new()
    }
}

impl FibCache {
    pub fn new() -> Self {
        FibCache { values: vec![BigUint::zero(), BigUint::one(), BigUint::one()] }
    }

    pub fn with_len(n: usize) -> Self {
        let mut c = Self::new();
        c.extend_to(n);
        c
    }

    fn extend_to(&mut self, n: usize) {
        while self.values.len() <= n {
            let k = self.values.len();
            let next = &self.values[k - 1] + &self.values[k - 2];
            self.values.push(next);
        }
    }

    /// `F_n`, extending the cache as needed. `F_0 = 0` is accepted.
    pub fn fib(&mut self, n: usize) -> &BigUint {
        self.extend_to(n);
        &self.values[n]
    }

    /// `F_n` if already cached.
    pub fn get(&self, n: usize) -> Option<&BigUint> {
        self.values.get(n)
    }

    /// Largest cached index.
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `F_n` as a signed integer; negative indices follow `F_{-n} = (-1)^{n+1} F_n`.
    pub fn fib_signed(&mut self, n: i64) -> BigInt {
        let f = BigInt::from(self.fib(n.unsigned_abs() as usize).clone());
        if n < 0 && n % 2 == 0 {
            -f
        } else {
            f
        }
    }

    /// Overwrites `F_n` without restoring the recurrence. Negative-control hook.
    #[doc(hidden)]
    pub fn corrupt(&mut self, n: usize) {
        self.extend_to(n);
        self.values[n] += 1u32;
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FibIdentityReport {
    pub max_index: usize,
    pub recurrence_checked: usize,
    pub eqfib_checked: usize,
    pub vajda_checked: usize,
    pub partial_sums_checked: usize,
    pub first_failure: Option<String>,
}

impl FibIdentityReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Checks, in exact arithmetic and for all indices up to `max_index`:
/// the recurrence, `F_{2n} = Σ_{j≤n} F_{2j-1}`, Vajda's identity
/// `F_{N+i}F_{N+j} - F_N F_{N+i+j} = (-1)^N F_i F_j`, and
/// `Σ_{l≤n} F_l = F_{n+2} - 1`.
pub fn check_fib_identities(max_index: usize) -> FibIdentityReport {
    let cache = FibCache::with_len(max_index);
    check_fib_identities_with(&cache, max_index)
}

pub fn check_fib_identities_with(cache: &FibCache, max_index: usize) -> FibIdentityReport {
    assert!(max_index >= 3, "identity range needs max_index >= 3");
    assert!(cache.len() >= max_index, "cache shorter than max_index");
    let f: Vec<BigInt> = (0..=max_index).map(|k| BigInt::from(cache.get(k).unwrap().clone())).collect();
    let mut report = FibIdentityReport {
        max_index,
        recurrence_checked: 0,
        eqfib_checked: 0,
        vajda_checked: 0,
        partial_sums_checked: 0,
        first_failure: None,
    };
    let fail = |report: &mut FibIdentityReport, msg: String| {
        if report.first_failure.is_none() {
            report.first_failure = Some(msg);
        }
    };

    if !f[1].is_one() || !f[2].is_one() {
        fail(&mut report, "base case F_1 = F_2 = 1".into());
    }
    for n in 3..=max_index {
        report.recurrence_checked += 1;
        if f[n] != &f[n - 1] + &f[n - 2] {
            fail(&mut report, format!("recurrence at n = {n}"));
        }
    }

    let mut odd_sum = BigInt::zero();
    for n in 1..=max_index / 2 {
        odd_sum += &f[2 * n - 1];
        report.eqfib_checked += 1;
        if f[2 * n] != odd_sum {
            fail(&mut report, format!("F_2n = sum of odd-index terms at n = {n}"));
        }
    }

    let mut partial = BigInt::zero();
    for n in 1..=max_index.saturating_sub(2) {
        partial += &f[n];
        report.partial_sums_checked += 1;
        if partial != &f[n + 2] - 1 {
            fail(&mut report, format!("partial sum at n = {n}"));
        }
    }

    for big_n in 1..=max_index {
        let sign_pos = big_n % 2 == 0;
        for i in 1..=max_index - big_n {
            for j in 1..=max_index - big_n - i {
                let lhs = &f[big_n + i] * &f[big_n + j] - &f[big_n] * &f[big_n + i + j];
                let rhs = &f[i] * &f[j];
                report.vajda_checked += 1;
                let ok = if sign_pos { lhs == rhs } else { lhs == -rhs };
                if !ok {
                    fail(&mut report, format!("Vajda at N = {big_n}, i = {i}, j = {j}"));
                }
            }
        }
    }
    report
}

/// Checks `Σ_{l≤n} F_l = F_{n+2} - 1` for `n ≤ max_n`; returns the first failing `n`.
pub fn check_partial_sums(max_n: usize) -> Option<usize> {
    let mut cache = FibCache::with_len(max_n + 2);
    let mut partial = BigUint::zero();
    for n in 1..=max_n {
        partial += cache.fib(n).clone();
        if &partial + 1u32 != *cache.fib(n + 2) {
            return Some(n);
        }
    }
    None
}

/// The exponent sequence `a_1..a_N` of `a_n = n - Σ_{j<n} a_{n-j} F_{2j+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ASeq {
    values: Vec<i64>,
}

impl ASeq {
    /// `a_n` for `1 ≤ n ≤ len`.
    pub fn get(&self, n: usize) -> i64 {
        assert!(n >= 1 && n <= self.values.len(), "a_n index out of range");
        self.values[n - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn closed_form(n: usize) -> i64 {
        let n = n as i64;
        1 - n * (n - 1) / 2
    }
}

/// Computes `a_1..a_N` from the defining recursion and asserts the closed
/// form `1 - n(n-1)/2` on every entry.
///
/// The convolution with `G_j = F_{2j+1}` is carried incrementally: since
/// `G_j = 3G_{j-1} - G_{j-2}` with `G_0 = G_{-1} = 1`, the sums
/// `W_n = Σ_{j=0}^{n-1} a_{n-j} G_j` obey
/// `W_{n+1} = a_{n+1} + 3W_n - a_n - W_{n-1}`.
pub fn a_seq(n_max: usize) -> Result<ASeq, ArithError> {
    if n_max == 0 {
        return Err(ArithError::ZeroIndex);
    }
    let mut values = Vec::with_capacity(n_max);
    // W_{n-1}, W_n and a_n for the current n
    let (mut w_prev, mut w_cur, mut a_cur) = (0i128, 1i128, 1i128);
    values.push(1i64);
    for n in 1..n_max {
        // U_{n+1} = Σ_{j=1}^{n} a_{n+1-j} G_j
        let u_next = 3 * w_cur - a_cur - w_prev;
        let a_next = (n as i128 + 1) - u_next;
        let w_next = a_next + u_next;
        w_prev = w_cur;
        w_cur = w_next;
        a_cur = a_next;
        values.push(a_next as i64);
    }
    for (k, &v) in values.iter().enumerate() {
        let closed = ASeq::closed_form(k + 1);
        if v != closed {
            return Err(ArithError::ClosedFormMismatch { n: k + 1, recursive: v, closed });
        }
    }
    Ok(ASeq { values })
}

/// The defining convolution evaluated term by term in big integers.
pub fn a_seq_by_convolution(n_max: usize) -> Vec<BigInt> {
    let mut cache = FibCache::with_len(2 * n_max + 1);
    let mut a: Vec<BigInt> = vec![BigInt::zero(); n_max + 1];
    if n_max >= 1 {
        a[1] = BigInt::one();
    }
    for n in 2..=n_max {
        let mut s = BigInt::zero();
        for j in 1..n {
            s += &a[n - j] * BigInt::from(cache.fib(2 * j + 1).clone());
        }
        a[n] = BigInt::from(n) - s;
    }
    a.remove(0);
    a
}

/// Checks `b_n = Σ_{j<n} a_{n-j} F_{2j} = n(n-1)/2` for `n ≤ n_max`; returns the first failing `n`.
pub fn check_b_identity(n_max: usize) -> Option<usize> {
    let a = a_seq_by_convolution(n_max);
    let mut cache = FibCache::with_len(2 * n_max);
    for n in 1..=n_max {
        let mut b = BigInt::zero();
        for j in 1..n {
            b += &a[n - j - 1] * BigInt::from(cache.fib(2 * j).clone());
        }
        if b != BigInt::from(n * (n - 1) / 2) {
            return Some(n);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fib_values() {
        let mut c = FibCache::new();
        assert_eq!(*c.fib(1), BigUint::from(1u32));
        assert_eq!(*c.fib(2), BigUint::from(1u32));
        // unrolled by hand: 1 1 2 3 5 8 13 21 34 55
        assert_eq!(*c.fib(10), BigUint::from(55u32));
        assert_eq!(c.fib_signed(-1), BigInt::from(1));
        assert_eq!(c.fib_signed(-2), BigInt::from(-1));
    }

    #[test]
    fn small_identity_cases() {
        let mut c = FibCache::new();
        assert_eq!(c.fib(4).clone(), c.fib(1).clone() + c.fib(3).clone());
        let lhs = BigInt::from(c.fib(3).clone()).pow(2) - BigInt::from(c.fib(2).clone() * c.fib(4).clone());
        assert_eq!(lhs, BigInt::from(1));
    }

    #[test]
    fn identities_pass_small_ranges() {
        assert!(check_fib_identities(3).passed());
        assert!(check_fib_identities(40).passed());
    }

    #[test]
    fn corrupted_cache_is_detected() {
        let mut c = FibCache::with_len(20);
        c.corrupt(11);
        let r = check_fib_identities_with(&c, 20);
        assert!(!r.passed());
    }

    #[test]
    fn partial_sums() {
        assert_eq!(check_partial_sums(500), None);
    }

    #[test]
    fn a_seq_examples() {
        let a = a_seq(4).unwrap();
        assert_eq!(a.get(1), 1);
        // 4 - (a_3 F_3 + a_2 F_5 + a_1 F_7) = 4 - (-4 + 0 + 13)
        assert_eq!(a.get(4), -5);
        assert_eq!(ASeq::closed_form(4), -5);
    }

    #[test]
    fn recursion_matches_convolution() {
        let a = a_seq(60).unwrap();
        let conv = a_seq_by_convolution(60);
        for n in 1..=60 {
            assert_eq!(BigInt::from(a.get(n)), conv[n - 1]);
        }
        assert_eq!(check_b_identity(60), None);
    }

    proptest! {
        #[test]
        fn cache_respects_recurrence(n in 3usize..400) {
            let mut c = FibCache::new();
            let f = c.fib(n).clone();
            prop_assert_eq!(f, c.fib(n - 1).clone() + c.fib(n - 2).clone());
        }
    }
}
