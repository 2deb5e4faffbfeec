//! The companion vector `x` that turns the weights of `e_1'(y) B_ω(x)` into
//! `2^n n!^2`, and the control map `Φ`.

use num_bigint::BigInt;
use serde::Serialize;

use super::ConstructionError;
use crate::arith::{a_seq, ln_factorial, ASeq, AtomId, AtomTable, LogComplex, Monomial};
use crate::dynamics::{ledger, MultilinearSpec};
use crate::spaces::{SeqVector, SpaceTag, WeightSeq};

/// `[x]_{i+1} = 2^{a_i} ω_i^{-1} Π_{j≤i} y_j^{-1} ω_j^{-1}` with `x_1 = 0`.
pub fn companion_x(y: &SeqVector, w: &WeightSeq, a: &ASeq) -> Result<SeqVector, ConstructionError> {
    let n = y.len();
    if a.len() + 1 < n {
        return Err(ConstructionError::InvalidParameter(format!("a_n known up to {}, need {}", a.len(), n - 1)));
    }
    let ln2 = std::f64::consts::LN_2;
    let mut coords = Vec::with_capacity(n);
    coords.push(LogComplex::ZERO);
    let mut prod = LogComplex::ONE;
    for i in 1..n {
        let yi = y.get(i);
        if yi.is_zero() {
            return Err(ConstructionError::ZeroCoordinate(i));
        }
        prod = prod * yi * LogComplex::new(w.log_weight(i), 0.0);
        let scale = LogComplex::new(a.get(i) as f64 * ln2 - w.log_weight(i), 0.0);
        coords.push(scale / prod);
    }
    Ok(SeqVector::new(coords, y.space())?)
}

/// `[Φ(y)]_i = 2^{a_i} i^2 i!^2 Π_{l≤i} |y_l|^{-1}` for `i ≤ len(y)`.
pub fn phi_map(y: &SeqVector, a: &ASeq) -> Result<SeqVector, ConstructionError> {
    if a.len() < y.len() {
        return Err(ConstructionError::InvalidParameter(format!("a_n known up to {}, need {}", a.len(), y.len())));
    }
    let ln2 = std::f64::consts::LN_2;
    let mut acc = 0.0;
    let mut coords = Vec::with_capacity(y.len());
    for i in 1..=y.len() {
        let yi = y.get(i);
        if yi.is_zero() {
            return Err(ConstructionError::ZeroCoordinate(i));
        }
        acc -= yi.log_mag();
        let l = a.get(i) as f64 * ln2 + 2.0 * (i as f64).ln() + 2.0 * ln_factorial(i) + acc;
        coords.push(LogComplex::new(l, 0.0));
    }
    Ok(SeqVector::new(coords, SpaceTag::L1)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightIdentityEntry {
    pub n: usize,
    /// `ln |c_{2n} d_{2n}|` from the exact-exponent recursion.
    pub log_kappa: f64,
    /// `n ln 2 - ln(ω_1 ⋯ ω_n)`, which is `n ln 2 + 2 ln n!` for `ω_i = 1/i²`.
    pub expected: f64,
    pub rel_err: f64,
    /// The exponent ledger of `c_{2n} d_{2n} ω_1 ⋯ ω_n / 2^n` is exactly empty.
    pub exact: bool,
    /// The same quantity from the floating log-domain ledger (small `n` only).
    pub float_log: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightIdentityReport {
    pub entries: Vec<WeightIdentityEntry>,
    pub max_rel_err: f64,
    /// Largest relative deviation between the float companion coordinates and
    /// their exact-exponent values.
    pub max_coordinate_dev: f64,
    pub max_float_rel_err: f64,
}

impl WeightIdentityReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.entries.iter().all(|e| e.exact) && self.max_rel_err <= tol && self.max_float_rel_err <= tol
    }
}

/// Largest `2n` for which the floating ledger is also evaluated; beyond this
/// `F_{2n}·ε` swamps the answer.
pub const FLOAT_LEDGER_LIMIT: usize = 24;

/// Checks `c_{2n}(x, y) d_{2n}(ω) = 2^n / (ω_1 ⋯ ω_n)` for `n ≤ n_max` with
/// `x` the companion of `y`; for `ω_i = 1/i²` the right side is `2^n n!^2`.
///
/// The ledger recursion `c_n = c_{n-1} c_{n-2} z_n`, `d_n = d_{n-1} d_{n-2} W(⌊n/2⌋)`
/// is run on exact exponent vectors over the atoms `2, ω_j, y_j`, then
/// evaluated; for `2n ≤` [`FLOAT_LEDGER_LIMIT`] the floating ledger on the
/// numeric `x` is compared too.
pub fn weight_identity(y: &SeqVector, w: &WeightSeq, n_max: usize) -> Result<WeightIdentityReport, ConstructionError> {
    if y.len() < n_max + 1 {
        return Err(ConstructionError::InvalidParameter(format!("y needs at least {} coordinates", n_max + 1)));
    }
    let a = a_seq(n_max.max(1))?;
    let x = companion_x(&y.resized(n_max + 1), w, &a)?;

    let mut table = AtomTable::new();
    let two = table.add("2", LogComplex::new(std::f64::consts::LN_2, 0.0));
    let omega: Vec<AtomId> =
        (1..=n_max).map(|j| table.add(format!("w{j}"), LogComplex::new(w.log_weight(j), 0.0))).collect();
    let ys: Vec<AtomId> = (1..=n_max).map(|j| table.add(format!("y{j}"), y.get(j))).collect();

    // x_{i+1} and prefix weights W(k) as exact monomials
    let mut x_mono = vec![Monomial::one(); n_max + 2];
    let mut running = Monomial::one();
    let mut max_coordinate_dev: f64 = 0.0;
    for i in 1..=n_max {
        running.mul_assign(&Monomial::atom(ys[i - 1]).mul(&Monomial::atom(omega[i - 1])));
        let m = Monomial::atom_int(two, a.get(i))
            .mul(&Monomial::atom(omega[i - 1]).recip())
            .mul(&running.recip());
        let v = m.eval(&table)?;
        let dev = v.rel_diff(x.get(i + 1));
        max_coordinate_dev = max_coordinate_dev.max(dev);
        x_mono[i + 1] = m;
    }
    let mut prefix_w = vec![Monomial::one(); n_max + 1];
    for k in 1..=n_max {
        prefix_w[k] = prefix_w[k - 1].mul(&Monomial::atom(omega[k - 1]));
    }

    let float_n = (FLOAT_LEDGER_LIMIT / 2).min(n_max);
    let float_ledger = if float_n > 0 {
        Some(ledger(&MultilinearSpec::m_l1(w.clone()), &[x.clone(), y.clone()], 2 * float_n)?)
    } else {
        None
    };

    let (mut c_prev, mut c_cur) = (Monomial::one(), Monomial::one());
    let (mut d_prev, mut d_cur) = (Monomial::one(), Monomial::one());
    let mut entries = Vec::with_capacity(n_max);
    let mut max_rel_err: f64 = 0.0;
    let mut max_float_rel_err: f64 = 0.0;
    for n in 1..=2 * n_max {
        let z = if n % 2 == 1 { Monomial::atom(ys[(n - 1) / 2]) } else { x_mono[n / 2 + 1].clone() };
        let c_next = c_cur.mul(&c_prev).mul(&z);
        let d_next = d_cur.mul(&d_prev).mul(&prefix_w[n / 2]);
        c_prev = std::mem::replace(&mut c_cur, c_next);
        d_prev = std::mem::replace(&mut d_cur, d_next);
        if n % 2 == 1 {
            continue;
        }
        let k = n / 2;
        let kappa = c_cur.mul(&d_cur);
        let log_kappa = kappa.log_mag(&table)?;
        let expected = k as f64 * std::f64::consts::LN_2 - w.log_prefix(k);
        let rel_err = (log_kappa - expected).abs() / expected.abs().max(1.0);
        // c_{2n} d_{2n} · 2^{-n} · ω_1 ⋯ ω_n must be exactly 1
        let residual = kappa.mul(&Monomial::atom_pow(two, (-BigInt::from(k)).into())).mul(&prefix_w[k]);
        let float_log = float_ledger.as_ref().filter(|_| k <= float_n).map(|l| l.kappa(n).log_mag());
        if let Some(fl) = float_log {
            max_float_rel_err = max_float_rel_err.max((fl - expected).abs() / expected.abs().max(1.0));
        }
        max_rel_err = max_rel_err.max(rel_err);
        entries.push(WeightIdentityEntry { n: k, log_kappa, expected, rel_err, exact: residual.is_exactly_one(), float_log });
    }
    Ok(WeightIdentityReport { entries, max_rel_err, max_coordinate_dev, max_float_rel_err })
}
