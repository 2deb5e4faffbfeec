//! Log-domain complex scalars, Fibonacci machinery and exact exponent ledgers.
//!
//! Weights in the orbit formulas carry Fibonacci exponents, so their
//! magnitudes routinely leave the `f64` range. Every scalar is kept as a
//! natural-log magnitude plus a phase in `(-π, π]`.

mod fib;
mod monomial;
mod phase;

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fib::{
    a_seq, a_seq_by_convolution, check_b_identity, check_fib_identities,
    check_fib_identities_with, check_partial_sums, ASeq, FibCache, FibIdentityReport,
};
pub use monomial::{AtomId, AtomTable, Monomial};
pub use phase::{normalize_phase, rational_pi, reduce_rational_phase};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArithError {
    #[error("undefined root: reciprocal of exact zero")]
    UndefinedRoot,
    #[error("root index must be positive")]
    ZeroRootIndex,
    #[error("closed form mismatch at n = {n}: recursion gave {recursive}, closed form {closed}")]
    ClosedFormMismatch { n: usize, recursive: i64, closed: i64 },
    #[error("index must be >= 1")]
    ZeroIndex,
}

/// Complex scalar `exp(log_mag) * exp(i * phase)`.
///
/// `log_mag == -inf` encodes exact zero, whose phase is always `0`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogComplex {
    log_mag: f64,
    phase: f64,
}

/// Cancellation threshold for [`LogComplex`] addition: sums whose relative
/// magnitude falls below this are exact zero.
pub const CANCELLATION_TOL: f64 = 1e-15;

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex { log_mag: f64::NEG_INFINITY, phase: 0.0 };
    pub const ONE: LogComplex = LogComplex { log_mag: 0.0, phase: 0.0 };

    pub fn new(log_mag: f64, phase: f64) -> Self {
        if log_mag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        assert!(!log_mag.is_nan(), "NaN log magnitude");
        LogComplex { log_mag, phase: normalize_phase(phase) }
    }

    pub fn from_real(x: f64) -> Self {
        Self::from_parts(x, 0.0)
    }

    pub fn from_parts(re: f64, im: f64) -> Self {
        if re == 0.0 && im == 0.0 {
            return Self::ZERO;
        }
        Self::new(re.hypot(im).ln(), im.atan2(re))
    }

    /// `2^e` for an integer exponent.
    pub fn pow2(e: i64) -> Self {
        Self::new(e as f64 * std::f64::consts::LN_2, 0.0)
    }

    pub fn to_parts(self) -> (f64, f64) {
        if self.is_zero() {
            return (0.0, 0.0);
        }
        let m = self.log_mag.exp();
        (m * self.phase.cos(), m * self.phase.sin())
    }

    pub fn log_mag(self) -> f64 {
        self.log_mag
    }

    pub fn phase(self) -> f64 {
        self.phase
    }

    pub fn is_zero(self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn abs(self) -> LogComplex {
        LogComplex { log_mag: self.log_mag, phase: 0.0 }
    }

    pub fn conj(self) -> LogComplex {
        Self::new(self.log_mag, -self.phase)
    }

    pub fn recip(self) -> Result<LogComplex, ArithError> {
        if self.is_zero() {
            return Err(ArithError::UndefinedRoot);
        }
        Ok(Self::new(-self.log_mag, -self.phase))
    }

    pub fn powi(self, e: i64) -> LogComplex {
        self.pow_big(&BigInt::from(e))
    }

    /// Raises to a big-integer power. The phase is reduced modulo `2π`
    /// exactly, treating the stored phase as the exact rational it is.
    pub fn pow_big(self, e: &BigInt) -> LogComplex {
        if e.is_zero() {
            return Self::ONE;
        }
        if self.is_zero() {
            // negative powers of zero are not representable
            assert!(e > &BigInt::zero(), "negative power of exact zero");
            return Self::ZERO;
        }
        let ef = e.to_f64().unwrap_or(f64::INFINITY);
        let log_mag = if self.log_mag == 0.0 { 0.0 } else { self.log_mag * ef };
        let phase = if self.phase == 0.0 {
            0.0
        } else {
            let exact = BigRational::from_float(self.phase).expect("finite phase")
                * BigRational::from_integer(e.clone());
            reduce_rational_phase(&exact).0
        };
        LogComplex { log_mag, phase }
    }

    pub fn pow_biguint(self, e: &BigUint) -> LogComplex {
        self.pow_big(&BigInt::from(e.clone()))
    }

    /// Principal `n`-th root: magnitude `|a|^{1/n}`, argument `arg(a)/n`.
    pub fn root(self, n: u64) -> Result<LogComplex, ArithError> {
        if n == 0 {
            return Err(ArithError::ZeroRootIndex);
        }
        if self.is_zero() {
            return Ok(Self::ZERO);
        }
        Ok(LogComplex { log_mag: self.log_mag / n as f64, phase: self.phase / n as f64 })
    }

    /// Principal root with a big index, e.g. a Fibonacci number.
    pub fn root_big(self, n: &BigUint) -> Result<LogComplex, ArithError> {
        if n.is_zero() {
            return Err(ArithError::ZeroRootIndex);
        }
        if self.is_zero() {
            return Ok(Self::ZERO);
        }
        let nf = n.to_f64().unwrap_or(f64::INFINITY);
        Ok(LogComplex { log_mag: self.log_mag / nf, phase: self.phase / nf })
    }

    pub fn scale(self, factor: f64) -> LogComplex {
        self * LogComplex::from_real(factor)
    }

    /// Relative distance `|a - b| / max(|a|, |b|)` (zero if both are zero).
    pub fn rel_diff(self, other: LogComplex) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 0.0;
        }
        if self.is_zero() || other.is_zero() {
            return 1.0;
        }
        let (big, small) = if self.log_mag >= other.log_mag { (self, other) } else { (other, self) };
        let rho = (small.log_mag - big.log_mag).exp();
        let d = small.phase - big.phase;
        // |1 - rho e^{id}|
        (1.0 - 2.0 * rho * d.cos() + rho * rho).max(0.0).sqrt()
    }

    pub fn sum<I: IntoIterator<Item = LogComplex>>(items: I) -> LogComplex {
        items.into_iter().fold(Self::ZERO, |acc, x| acc + x)
    }
}

impl Default for LogComplex {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for LogComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "0")
        } else {
            write!(f, "exp({:.6e})∠{:.6}", self.log_mag, self.phase)
        }
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;
    fn mul(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        LogComplex::new(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }
}

impl Div for LogComplex {
    type Output = LogComplex;
    /// Panics on division by exact zero; use [`LogComplex::recip`] to handle it.
    fn div(self, rhs: LogComplex) -> LogComplex {
        self * rhs.recip().expect("division by exact zero")
    }
}

impl Neg for LogComplex {
    type Output = LogComplex;
    fn neg(self) -> LogComplex {
        if self.is_zero() {
            return self;
        }
        LogComplex::new(self.log_mag, self.phase + PI)
    }
}

impl Add for LogComplex {
    type Output = LogComplex;
    fn add(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.log_mag >= rhs.log_mag { (self, rhs) } else { (rhs, self) };
        let delta = small.log_mag - big.log_mag;
        let rho = delta.exp();
        if rho == 0.0 {
            return big;
        }
        let d = small.phase - big.phase;
        let im = rho * d.sin();
        // 1 + rho cos d = (1 - rho) + 2 rho sin²((d - π)/2), a sum of two
        // nonnegative terms, so near-cancellation keeps full relative precision
        let half = 0.5 * normalize_phase(d - PI);
        let re = -delta.exp_m1() + 2.0 * rho * half.sin() * half.sin();
        let r = re.hypot(im);
        if r <= CANCELLATION_TOL {
            return Self::ZERO;
        }
        LogComplex::new(big.log_mag + r.ln(), big.phase + im.atan2(re))
    }
}

impl Sub for LogComplex {
    type Output = LogComplex;
    fn sub(self, rhs: LogComplex) -> LogComplex {
        self + (-rhs)
    }
}

/// `ln(exp(a_1) + ... + exp(a_n))` over real logs; `-inf` entries are zeros.
pub fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let s: f64 = logs.iter().map(|&l| (l - max).exp()).sum();
    max + s.ln()
}

const LN_FACT_TABLE: usize = 1 << 16;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        // Neumaier-compensated running sum of ln k
        let mut t = Vec::with_capacity(LN_FACT_TABLE);
        t.push(0.0);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for k in 1..LN_FACT_TABLE {
            let x = (k as f64).ln();
            let s = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - s) + x;
            } else {
                comp += (x - s) + sum;
            }
            sum = s;
            t.push(sum + comp);
        }
        t
    })
}

/// `ln n!`, tabulated below 65536 and from the Stirling series above.
pub fn ln_factorial(n: usize) -> f64 {
    if n < LN_FACT_TABLE {
        return ln_factorial_table()[n];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + inv / 12.0 - inv * inv2 / 360.0
        + inv * inv2 * inv2 / 1260.0
}
