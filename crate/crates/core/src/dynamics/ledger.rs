//! Weight ledgers `c_n`, `d_n` and closed-form orbit states.
//!
//! Two operator families have closed forms:
//!
//! * shift in slot 0 (arity 2): `x_n = L^{⌈n/2⌉}(x or y) · c_n d_n`, with the
//!   merge `z_n = ℓ(L^{⌊n/2⌋} v)`, `v = y` for odd `n` and `x` for even `n`,
//!   and `c_n = c_{n-1} c_{n-2} z_n`;
//! * shift in the last slot (arity m): `x_n = L^n(x_0) · κ_n` with
//!   `κ_n = κ_{n-1} Π_{i=n-m}^{n-2} κ_i^{[i≥1]} s_i`, where `s_i = ℓ(x_i)`
//!   for the initial vectors and `s_i = ℓ(L^i x_0)` for `i ≥ 0`.
//!
//! Merge values split into a raw part (feeding `c`) and a positive weight
//! (feeding `d`), so `κ_n = c_n d_n`.

use num_bigint::BigUint;
use serde::Serialize;

use super::{DynError, MultilinearSpec};
use crate::arith::{FibCache, LogComplex};
use crate::spaces::{eval_functional, SeqVector, WeightSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorFamily {
    ShiftFirst,
    ShiftLast { m: usize },
}

impl OperatorFamily {
    pub fn of(spec: &MultilinearSpec) -> Result<Self, DynError> {
        if spec.symmetrized {
            return Err(DynError::UnsupportedForm(format!("{} (symmetrized)", spec.name)));
        }
        if spec.shift_slot == spec.arity - 1 {
            Ok(OperatorFamily::ShiftLast { m: spec.arity })
        } else if spec.shift_slot == 0 && spec.arity == 2 {
            Ok(OperatorFamily::ShiftFirst)
        } else {
            Err(DynError::UnsupportedForm(spec.describe()))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightLedger {
    pub family: OperatorFamily,
    /// `c_1..c_N`.
    pub log_c: Vec<LogComplex>,
    /// `d_1..d_N`.
    pub log_d: Vec<LogComplex>,
    /// Raw merge scalars; entry `k` has index `merge_offset + k`
    /// (`z_1, z_2, …` for arity 2, `s_{1-m}, s_{2-m}, …` otherwise).
    pub merge_source: Vec<LogComplex>,
    pub merge_log_weights: Vec<f64>,
    pub merge_offset: i64,
    /// First `n` with `c_n` exactly zero.
    pub zero_at: Option<usize>,
    /// First `n` the truncation could not supply.
    pub exhausted_at: Option<usize>,
}

impl WeightLedger {
    pub fn len(&self) -> usize {
        self.log_c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_c.is_empty()
    }

    pub fn c(&self, n: usize) -> LogComplex {
        self.log_c[n - 1]
    }

    pub fn d(&self, n: usize) -> LogComplex {
        self.log_d[n - 1]
    }

    /// `c_n d_n`, the full scalar in front of the closed-form state.
    pub fn kappa(&self, n: usize) -> LogComplex {
        self.c(n) * self.d(n)
    }

    /// Merge entry with index `index` (in the family's own numbering) as (raw, log weight).
    pub fn merge(&self, index: i64) -> (LogComplex, f64) {
        let k = (index - self.merge_offset) as usize;
        (self.merge_source[k], self.merge_log_weights[k])
    }

    /// The factor `z_i` entering `c_i = c_{i-1} c_{i-2} z_i` (arity 2). For the
    /// last-slot family this is `s_{i-2}`.
    pub fn z(&self, i: usize) -> (LogComplex, f64) {
        (self.merge_source[i - 1], self.merge_log_weights[i - 1])
    }

    fn arity_two(&self) -> bool {
        matches!(self.family, OperatorFamily::ShiftFirst | OperatorFamily::ShiftLast { m: 2 })
    }

    /// `c_n = z_1^{F_n} z_2^{F_{n-1}} ⋯ z_n^{F_1}` evaluated term by term
    /// with big-integer exponents (arity 2 only).
    pub fn direct_c(&self, n: usize, fib: &mut FibCache) -> Option<LogComplex> {
        if !self.arity_two() || n > self.len() {
            return None;
        }
        let mut acc = LogComplex::ONE;
        for i in 1..=n {
            let (z, _) = self.z(i);
            acc = acc * z.pow_biguint(fib.fib(n + 1 - i));
        }
        Some(acc)
    }

    /// `d_n` as the product of merge weights with Fibonacci exponents (arity 2 only).
    pub fn direct_d(&self, n: usize, fib: &mut FibCache) -> Option<LogComplex> {
        if !self.arity_two() || n > self.len() {
            return None;
        }
        let lm: f64 = (1..=n)
            .map(|i| {
                let (_, lw) = self.z(i);
                lw * fib_f64(fib.fib(n + 1 - i))
            })
            .sum();
        Some(LogComplex::new(lm, 0.0))
    }
}

fn fib_f64(f: &BigUint) -> f64 {
    num_traits::ToPrimitive::to_f64(f).unwrap_or(f64::INFINITY)
}

/// `d_n = ω_1^{F_{n+1}-1} ω_2^{F_{n-1}-1} ω_3^{F_{n-3}-1} ⋯` up to `ω_{⌊n/2⌋}`,
/// the closed form of the shift-first weight ledger.
pub fn d_closed_form(w: &WeightSeq, n: usize, fib: &mut FibCache) -> LogComplex {
    let lm: f64 = (1..=n / 2)
        .map(|j| w.log_weight(j) * (fib_f64(fib.fib(n + 3 - 2 * j)) - 1.0))
        .sum();
    LogComplex::new(lm, 0.0)
}

/// Builds `c_n`, `d_n` for `n ≤ n_max` from the two-term (or m-term)
/// recursions in log domain. Merge values are read directly off the
/// initial vectors, not off an iterated orbit.
pub fn ledger(spec: &MultilinearSpec, init: &[SeqVector], n_max: usize) -> Result<WeightLedger, DynError> {
    spec.check_args(init)?;
    let family = OperatorFamily::of(spec)?;
    let mut merge_source = Vec::new();
    let mut merge_log_weights = Vec::new();
    let mut log_c: Vec<LogComplex> = Vec::with_capacity(n_max);
    let mut log_d: Vec<LogComplex> = Vec::with_capacity(n_max);
    let mut exhausted_at = None;

    match family {
        OperatorFamily::ShiftFirst => {
            let (x, y) = (&init[0], &init[1]);
            for n in 1..=n_max {
                let v = if n % 2 == 1 { y } else { x };
                let Some((raw, lw)) = spec.linear.merge_value(v, n / 2) else {
                    exhausted_at = Some(n);
                    break;
                };
                merge_source.push(raw);
                merge_log_weights.push(lw);
                let (c1, c2) = prev2(&log_c, n);
                let (d1, d2) = prev2(&log_d, n);
                log_c.push(c1 * c2 * raw);
                log_d.push(d1 * d2 * LogComplex::new(lw, 0.0));
            }
            finish(family, log_c, log_d, merge_source, merge_log_weights, 1, exhausted_at)
        }
        OperatorFamily::ShiftLast { m } => {
            let x0 = &init[m - 1];
            let offset = 1 - m as i64;
            for t in offset..0 {
                merge_source.push(eval_functional(&init[(t - offset) as usize]));
                merge_log_weights.push(0.0);
            }
            for n in 1..=n_max {
                // s_{n-2} is the newest merge entry needed at step n
                let t = n as i64 - 2;
                if t >= 0 {
                    let Some((raw, lw)) = spec.linear.merge_value(x0, t as usize) else {
                        exhausted_at = Some(n);
                        break;
                    };
                    merge_source.push(raw);
                    merge_log_weights.push(lw);
                }
                let mut c = if n >= 2 { log_c[n - 2] } else { LogComplex::ONE };
                let mut d = if n >= 2 { log_d[n - 2] } else { LogComplex::ONE };
                for i in (n as i64 - m as i64)..=(n as i64 - 2) {
                    let k = (i - offset) as usize;
                    c = c * merge_source[k];
                    d = d * LogComplex::new(merge_log_weights[k], 0.0);
                    if i >= 1 {
                        c = c * log_c[i as usize - 1];
                        d = d * log_d[i as usize - 1];
                    }
                }
                log_c.push(c);
                log_d.push(d);
            }
            finish(family, log_c, log_d, merge_source, merge_log_weights, offset, exhausted_at)
        }
    }
}

fn prev2(v: &[LogComplex], n: usize) -> (LogComplex, LogComplex) {
    let get = |k: usize| if k >= 1 { v[k - 1] } else { LogComplex::ONE };
    (get(n.saturating_sub(1)), get(n.saturating_sub(2)))
}

fn finish(
    family: OperatorFamily,
    log_c: Vec<LogComplex>,
    log_d: Vec<LogComplex>,
    merge_source: Vec<LogComplex>,
    merge_log_weights: Vec<f64>,
    merge_offset: i64,
    exhausted_at: Option<usize>,
) -> Result<WeightLedger, DynError> {
    let zero_at = log_c.iter().position(|c| c.is_zero()).map(|p| p + 1);
    Ok(WeightLedger { family, log_c, log_d, merge_source, merge_log_weights, merge_offset, zero_at, exhausted_at })
}

/// The closed-form state `x_n` assembled from the ledger and a direct power
/// of the linear part.
pub fn closed_form_state(
    spec: &MultilinearSpec,
    init: &[SeqVector],
    ledger: &WeightLedger,
    n: usize,
) -> Result<SeqVector, DynError> {
    let family = OperatorFamily::of(spec)?;
    if n == 0 || n > ledger.len() {
        return Err(DynError::WindowExhausted { step: n });
    }
    let (base, p) = match family {
        OperatorFamily::ShiftFirst => {
            if n % 2 == 1 {
                (&init[0], n.div_ceil(2))
            } else {
                (&init[1], n / 2)
            }
        }
        OperatorFamily::ShiftLast { m } => (&init[m - 1], n),
    };
    let image = spec.linear.power(base, p)?.ok_or(DynError::WindowExhausted { step: n })?;
    Ok(image.scale(ledger.kappa(n)))
}
