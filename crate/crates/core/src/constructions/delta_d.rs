//! The pair `(f, g)` for `N(f, g) = g(0) Df` with `c_{2n}(f, g) = 1`, and
//! the `D`-hypercyclic `g = Σ_n I^{k_n}(P_n)`.

use serde::Serialize;

use super::{Certificate, ConstructionError, DenseTestSeq};
use crate::arith::{ln_factorial, AtomId, AtomTable, LogComplex, Monomial};
use crate::dynamics::{ledger, LinearPart, MultilinearSpec};
use crate::spaces::{norm, SeqVector, SpaceTag};

/// Largest `2n` also checked through the floating ledger.
const FLOAT_LEDGER_LIMIT: usize = 20;

const C2N_TOL: f64 = 1e-9;
const B_MATCH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct DeltaDPair {
    #[serde(skip)]
    pub f: SeqVector,
    /// `c_{2n}` from exact exponents (`c2n_exact`), the float coefficients of
    /// `f` against their exponent form (`b_match`), and the floating ledger
    /// for small `n` (`c2n_float`).
    pub certificates: Vec<Certificate>,
    /// `n` such that `c_{2n}` was certified for all `1 ≤ n ≤ n_max`.
    pub n_max: usize,
}

impl DeltaDPair {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(Certificate::passed)
    }
}

fn dev_from_one(v: LogComplex) -> f64 {
    v.log_mag().abs() + v.phase().abs()
}

/// Given Taylor coefficients of `g ~ Σ a_n z^n / n!`, builds
/// `f ~ Σ b_n z^n / n!` with `b_n = Π_{i<n} a_i^{-1}` and certifies
/// `c_{2n}(f, g) = 1` for `n ≤ len(g)`.
///
/// The merge sequence is `(a_0, b_1, a_1, b_2, …)`.
pub fn delta_d_pair(g: &SeqVector) -> Result<DeltaDPair, ConstructionError> {
    let len = g.len();
    if len == 0 {
        return Err(ConstructionError::InvalidParameter("empty coefficient vector".into()));
    }
    let space = if g.space().is_hc() { g.space() } else { SpaceTag::Hc(1) };
    let g = g.clone().with_space(space);
    let a: Vec<LogComplex> = (0..len)
        .map(|n| {
            let c = g.get(n + 1);
            if c.is_zero() {
                Err(ConstructionError::ZeroCoordinate(n))
            } else {
                Ok(LogComplex::new(c.log_mag() + ln_factorial(n), c.phase()))
            }
        })
        .collect::<Result<_, _>>()?;

    let mut f_coords = Vec::with_capacity(len + 1);
    let mut b = LogComplex::ONE;
    for n in 0..=len {
        if n > 0 {
            b = b / a[n - 1];
        }
        f_coords.push(LogComplex::new(b.log_mag() - ln_factorial(n), b.phase()));
    }
    let f = SeqVector::new(f_coords, space)?;

    let mut table = AtomTable::new();
    let atoms: Vec<AtomId> = a.iter().enumerate().map(|(i, v)| table.add(format!("a{i}"), *v)).collect();
    let mut b_mono = vec![Monomial::one()];
    for n in 1..=len {
        b_mono.push(b_mono[n - 1].mul(&Monomial::atom(atoms[n - 1]).recip()));
    }

    let mut certificates = Vec::new();
    for (n, m) in b_mono.iter().enumerate() {
        let fv = f.get(n + 1);
        let from_f = LogComplex::new(fv.log_mag() + ln_factorial(n), fv.phase());
        certificates.push(Certificate::new("b_match", n, m.eval(&table)?.rel_diff(from_f), B_MATCH_TOL));
    }

    let (mut c_prev, mut c_cur) = (Monomial::one(), Monomial::one());
    for i in 1..=2 * len {
        let z = if i % 2 == 1 { Monomial::atom(atoms[(i - 1) / 2]) } else { b_mono[i / 2].clone() };
        let next = c_cur.mul(&c_prev).mul(&z);
        c_prev = std::mem::replace(&mut c_cur, next);
        if i % 2 == 0 {
            let measured = if c_cur.is_exactly_one() { 0.0 } else { dev_from_one(c_cur.eval(&table)?).max(f64::MIN_POSITIVE) };
            let measured = if measured.is_nan() { f64::INFINITY } else { measured };
            certificates.push(Certificate::new("c2n_exact", i / 2, measured, C2N_TOL));
        }
    }

    let float_steps = FLOAT_LEDGER_LIMIT.min(2 * len);
    let led = ledger(&MultilinearSpec::n_delta_d(), &[f.clone(), g.clone()], float_steps)?;
    for n in (2..=led.len()).step_by(2) {
        certificates.push(Certificate::new("c2n_float", n / 2, dev_from_one(led.c(n)), C2N_TOL));
    }
    Ok(DeltaDPair { f, certificates, n_max: len })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniversalG {
    #[serde(skip)]
    pub g: SeqVector,
    pub blocks: usize,
    /// `k_n = n(n-1)/2`.
    pub offsets: Vec<usize>,
}

impl UniversalG {
    /// `P_n` as monomial coefficients `α_{n,j}/j!`, `j = 1..=n`.
    fn poly(&self, dense: &DenseTestSeq, n: usize) -> Vec<LogComplex> {
        let p = dense.poly(n);
        let mut out = vec![LogComplex::ZERO];
        out.extend((1..=n).map(|j| LogComplex::new(p[j].log_mag() - ln_factorial(j), p[j].phase())));
        out
    }

    /// `ln ‖D^{k_n} g − P_n‖_k` with `‖h‖_k = sup_j |h_j| k^j / j!` on the
    /// monomial coefficients of the built truncation. The constant term
    /// `α_{n-1,n-1}`, left over from `D^{n-1} P_{n-1}`, is included.
    pub fn residual(&self, dense: &DenseTestSeq, n: usize, k: usize) -> Result<f64, ConstructionError> {
        if n == 0 || n > self.blocks {
            return Err(ConstructionError::InvalidParameter(format!("block {n} outside 1..={}", self.blocks)));
        }
        let dg = LinearPart::Derivative
            .power(&self.g, self.offsets[n - 1])?
            .ok_or_else(|| ConstructionError::InvalidParameter("truncation too short".into()))?;
        let p = SeqVector::new(self.poly(dense, n), SpaceTag::Hc(k))?;
        let diff = dg.with_space(SpaceTag::Hc(k)).sub(&p);
        Ok(norm(&diff))
    }
}

/// `g = Σ_{n ≤ blocks} I^{k_n}(P_n)` with `P_n = Σ_{j=1}^n α_{n,j} z^j / j!`
/// taken from `dense.poly(n)` (constant terms ignored), `I` the primitive
/// vanishing at 0, and `g(0) = 1` so that `g` can seed [`delta_d_pair`].
/// Derivative orders `k_n + 1 ..= k_n + n` carry `α_{n,·}` and partition `ℕ`.
pub fn universal_g(dense: &DenseTestSeq, blocks: usize) -> Result<UniversalG, ConstructionError> {
    if blocks == 0 {
        return Err(ConstructionError::InvalidParameter("at least one block".into()));
    }
    let offsets: Vec<usize> = (1..=blocks).map(|n| n * (n - 1) / 2).collect();
    let top = offsets[blocks - 1] + blocks;
    let mut coords = vec![LogComplex::ZERO; top + 1];
    coords[0] = LogComplex::ONE;
    for n in 1..=blocks {
        let p = dense.poly(n);
        for j in 1..=n {
            let d = offsets[n - 1] + j;
            coords[d] = LogComplex::new(p[j].log_mag() - ln_factorial(d), p[j].phase());
        }
    }
    Ok(UniversalG { g: SeqVector::new(coords, SpaceTag::Hc(1))?, blocks, offsets })
}
