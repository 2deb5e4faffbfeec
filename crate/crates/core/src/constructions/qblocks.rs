//! Block construction of an entire `Q` with `c_n(1, Q) = 1` at the block
//! ends for `M(f, g) = f(0) g'`.
//!
//! With `q_i = Q^{(i)}(0)` the weights are `c_n = Π_{i≤n-2} q_i^{F_{n-1-i}}`.
//! Block `b` starts at `A = n_{b-1} + 1` (`n_0 = -1`) and holds `α_b` at `A`,
//! the values `t!·a_{t,b}` of `p_b` at `A+1 ..= A+b+1`, ones up to `n_b - 1`
//! and `β_b` at `n_b`. Since `c_A = c_{A+1} = 1`, locally
//! `c_{A+m}(Q) = c_m(h)` with `h = Q^{(A)}`, and `c_{n_b+1} = c_{n_b+2} = 1`
//! become two monomial equations in `α_b`, `β_b`.

use num_bigint::BigInt;
use serde::Serialize;

use super::{Certificate, ConstructionError, DenseTestSeq};
use crate::arith::{ln_factorial, AtomTable, FibCache, LogComplex, Monomial};
use crate::dynamics::{ledger, MultilinearSpec};
use crate::spaces::{SeqVector, SpaceTag};

const UNIT_TOL: f64 = 1e-8;

/// How far past the minimal gap the search for `n_b` may go.
const GAP_SEARCH: usize = 400;

const PHI: f64 = 1.618_033_988_749_895;

/// `C = sup_j j^φ / 2^j`, which bounds `j^{(F_{k+1}-1)/F_k} / 2^j` for all `k`.
pub fn inductive_constant() -> f64 {
    (1..=200).map(|j: i32| PHI * f64::from(j).ln() - f64::from(j) * std::f64::consts::LN_2).fold(f64::NEG_INFINITY, f64::max).exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct QBlock {
    pub b: usize,
    /// `n_b`, the position of `β_b`.
    pub n: usize,
    /// `n_b - A`, the local exponent index.
    pub k: usize,
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub log_alpha: f64,
    pub log_beta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QBlocks {
    /// Taylor coefficients `q_i / i!`.
    #[serde(skip)]
    pub q: SeqVector,
    pub n: Vec<usize>,
    pub blocks: Vec<QBlock>,
    pub constant: f64,
    pub certificates: Vec<Certificate>,
}

impl QBlocks {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(Certificate::passed)
    }

    /// `Q^{(i)}(0)`.
    pub fn derivative_at_zero(&self, i: usize) -> LogComplex {
        let c = self.q.get(i + 1);
        if c.is_zero() {
            c
        } else {
            LogComplex::new(c.log_mag() + ln_factorial(i), c.phase())
        }
    }
}

fn big(fib: &mut FibCache, n: usize) -> BigInt {
    BigInt::from(fib.fib(n).clone())
}

/// Solves `α^{F_k} Π_{i=1}^{k-1} h_i^{F_{k-i}} = 1` on the principal branch
/// and `β = (α^{F_{k+1}} Π_{i=1}^{k-1} h_i^{F_{k+1-i}})^{-1}`. `h[i-1] = h_i`.
fn solve_block(h: &[LogComplex], fib: &mut FibCache) -> Result<(LogComplex, LogComplex), ConstructionError> {
    let k = h.len() + 1;
    let mut table = AtomTable::new();
    let mut first = Monomial::one();
    let mut second = Monomial::one();
    for (t, v) in h.iter().enumerate() {
        let i = t + 1;
        if v.is_zero() {
            return Err(ConstructionError::RootOfZero(format!("h_{i} = 0")));
        }
        if *v == LogComplex::ONE {
            continue;
        }
        let id = table.add(format!("h{i}"), *v);
        first.mul_assign(&Monomial::atom(id).pow_int(&big(fib, k - i)));
        second.mul_assign(&Monomial::atom(id).pow_int(&big(fib, k + 1 - i)));
    }
    let alpha = first
        .recip()
        .principal_root(&big(fib, k), &table)
        .map_err(|e| ConstructionError::RootOfZero(e.to_string()))?;
    let beta = alpha.pow_int(&big(fib, k + 1)).mul(&second).recip();
    Ok((alpha.eval(&table)?, beta.eval(&table)?))
}

/// Builds `Q_1, …, Q_K`. Block 1 ends at `n_1 = 3`; for `b ≥ 2`, `n_b` is
/// the smallest value `≥ n_{b-1} + b + 3` with `|α_b| ≤ C 2^{n_{b-1}+1}` and
/// `|β_b| ≤ C 2^{n_b}`.
pub fn hc_q_blocks(dense: &DenseTestSeq, blocks: usize) -> Result<QBlocks, ConstructionError> {
    if blocks == 0 {
        return Err(ConstructionError::InvalidParameter("K must be at least 1".into()));
    }
    let constant = inductive_constant();
    let ln2 = std::f64::consts::LN_2;
    let mut fib = FibCache::new();
    let mut q: Vec<LogComplex> = Vec::new();
    let mut ends = Vec::with_capacity(blocks);
    let mut records = Vec::with_capacity(blocks);
    let mut certificates = Vec::new();
    for b in 1..=blocks {
        let a_pos = q.len();
        let p: Vec<LogComplex> = dense
            .poly(b)
            .iter()
            .enumerate()
            .map(|(t, a)| LogComplex::new(a.log_mag() + ln_factorial(t), a.phase()))
            .collect();
        let min_n = a_pos + b + 2;
        let max_n = if b == 1 { min_n } else { min_n + GAP_SEARCH };
        let mut chosen = None;
        for n in min_n..=max_n {
            let k = n - a_pos;
            let mut h = p.clone();
            h.resize(k - 1, LogComplex::ONE);
            let (alpha, beta) = solve_block(&h, &mut fib)?;
            if b == 1 {
                chosen = Some((n, k, h, alpha, beta));
                break;
            }
            let alpha_bound = constant.ln() + a_pos as f64 * ln2;
            let beta_bound = constant.ln() + n as f64 * ln2;
            if alpha.log_mag() <= alpha_bound && beta.log_mag() <= beta_bound {
                certificates.push(Certificate::new("alpha_bound", b, alpha.log_mag(), alpha_bound));
                certificates.push(Certificate::new("beta_bound", b, beta.log_mag(), beta_bound));
                chosen = Some((n, k, h, alpha, beta));
                break;
            }
        }
        let Some((n, k, h, alpha, beta)) = chosen else {
            return Err(ConstructionError::SearchOverflow { j: b, cap: max_n });
        };
        q.push(alpha);
        q.extend(h);
        q.push(beta);
        debug_assert_eq!(q.len(), n + 1);
        ends.push(n);
        records.push(QBlock {
            b,
            n,
            k,
            alpha: alpha.to_parts(),
            beta: beta.to_parts(),
            log_alpha: alpha.log_mag(),
            log_beta: beta.log_mag(),
        });
    }
    let coeffs = q
        .iter()
        .enumerate()
        .map(|(i, v)| LogComplex::new(v.log_mag() - ln_factorial(i), v.phase()))
        .collect();
    let q = SeqVector::new(coeffs, SpaceTag::Hc(1))?;

    // independent route: the floating weight ledger of (1, Q)
    let one = SeqVector::from_reals(&[1.0], SpaceTag::Hc(1))?;
    let last = *ends.last().expect("at least one block");
    let led = ledger(&MultilinearSpec::m_fg_prime(), &[one, q.clone()], last + 2)?;
    for (j, &n) in ends.iter().enumerate() {
        for (name, idx) in [("c_unit_first", n + 1), ("c_unit_second", n + 2)] {
            let c = led.c(idx);
            certificates.push(Certificate::new(name, j + 1, c.log_mag().abs() + c.phase().abs(), UNIT_TOL));
        }
    }
    Ok(QBlocks { q, n: ends, blocks: records, constant, certificates })
}
