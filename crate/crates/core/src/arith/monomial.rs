//! Exact exponent bookkeeping for products of named scalars.
//!
//! A [`Monomial`] is `Π atom^e` with big-rational exponents. Fibonacci
//! cancellations (`F_{2n} - Σ F_{2j-1} = 0`) are then exact instead of
//! being drowned by `f64` rounding amplified by `F_n`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{reduce_rational_phase, ArithError, LogComplex};

pub type AtomId = u32;

/// Named scalar values referenced by monomials. Atom `0` is the full turn
/// `e^{2πi}`, whose exponent records principal-branch windings.
#[derive(Debug, Clone)]
pub struct AtomTable {
    names: Vec<String>,
    values: Vec<LogComplex>,
}

impl Default for AtomTable {
    fn default() -> Self {
        Self::new()
    }
}

impl AtomTable {
    pub const TURN: AtomId = 0;

    pub fn new() -> Self {
        AtomTable { names: vec!["turn".into()], values: vec![LogComplex::ONE] }
    }

    pub fn add(&mut self, name: impl Into<String>, value: LogComplex) -> AtomId {
        self.names.push(name.into());
        self.values.push(value);
        (self.values.len() - 1) as AtomId
    }

    pub fn value(&self, id: AtomId) -> LogComplex {
        self.values[id as usize]
    }

    pub fn name(&self, id: AtomId) -> &str {
        &self.names[id as usize]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Monomial {
    exps: BTreeMap<AtomId, BigRational>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn atom(id: AtomId) -> Self {
        Self::atom_pow(id, BigRational::one())
    }

    pub fn atom_pow(id: AtomId, e: BigRational) -> Self {
        let mut m = Self::one();
        m.add_exp(id, &e);
        m
    }

    pub fn atom_int(id: AtomId, e: i64) -> Self {
        Self::atom_pow(id, BigRational::from_integer(BigInt::from(e)))
    }

    fn add_exp(&mut self, id: AtomId, e: &BigRational) {
        if e.is_zero() {
            return;
        }
        let entry = self.exps.entry(id).or_insert_with(BigRational::zero);
        *entry += e;
        if entry.is_zero() {
            self.exps.remove(&id);
        }
    }

    pub fn exponent(&self, id: AtomId) -> BigRational {
        self.exps.get(&id).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn exponents(&self) -> impl Iterator<Item = (AtomId, &BigRational)> {
        self.exps.iter().map(|(k, v)| (*k, v))
    }

    /// True when every exponent, the turn included, is exactly zero.
    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    /// True when every non-turn exponent is zero and the turn exponent is an
    /// integer, i.e. the value is exactly `1`.
    pub fn is_exactly_one(&self) -> bool {
        self.exps.iter().all(|(k, v)| *k == AtomTable::TURN && v.is_integer())
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut r = self.clone();
        for (k, v) in &other.exps {
            r.add_exp(*k, v);
        }
        r
    }

    pub fn mul_assign(&mut self, other: &Monomial) {
        for (k, v) in &other.exps {
            self.add_exp(*k, v);
        }
    }

    pub fn pow(&self, e: &BigRational) -> Monomial {
        if e.is_zero() {
            return Self::one();
        }
        Monomial { exps: self.exps.iter().map(|(k, v)| (*k, v * e)).collect() }
    }

    pub fn pow_int(&self, e: &BigInt) -> Monomial {
        self.pow(&BigRational::from_integer(e.clone()))
    }

    pub fn recip(&self) -> Monomial {
        self.pow(&-BigRational::one())
    }

    /// Drops whole turns, which leave the value unchanged.
    pub fn canonical_turn(&self) -> Monomial {
        let mut r = self.clone();
        if let Some(t) = r.exps.get(&AtomTable::TURN).cloned() {
            let frac = &t - t.floor();
            r.exps.remove(&AtomTable::TURN);
            r.add_exp(AtomTable::TURN, &frac);
        }
        r
    }

    /// The exact total angle `Σ e_a · arg(a) + 2π·e_turn` as a rational,
    /// together with the exact phase contributed by the turn atom.
    fn exact_angle(&self, table: &AtomTable) -> BigRational {
        let mut angle = BigRational::zero();
        for (k, e) in &self.exps {
            if *k == AtomTable::TURN {
                let two_pi = super::rational_pi() * BigRational::from_integer(BigInt::from(2));
                angle += e * two_pi;
            } else {
                let ph = table.value(*k).phase();
                if ph == std::f64::consts::PI {
                    // negative reals sit on the branch cut; use the exact π
                    angle += e * super::rational_pi();
                } else if ph != 0.0 {
                    angle += e * BigRational::from_float(ph).expect("finite phase");
                }
            }
        }
        angle
    }

    /// Natural-log magnitude `Σ e_a · ln|a|` (`-inf` if a zero atom has a positive exponent).
    pub fn log_mag(&self, table: &AtomTable) -> Result<f64, ArithError> {
        let mut lm = 0.0;
        for (k, e) in &self.exps {
            if *k == AtomTable::TURN {
                continue;
            }
            let v = table.value(*k);
            if v.is_zero() {
                if e.is_negative() {
                    return Err(ArithError::UndefinedRoot);
                }
                return Ok(f64::NEG_INFINITY);
            }
            lm += e.to_f64().unwrap_or(f64::NAN) * v.log_mag();
        }
        Ok(lm)
    }

    pub fn eval(&self, table: &AtomTable) -> Result<LogComplex, ArithError> {
        let lm = self.log_mag(table)?;
        if lm == f64::NEG_INFINITY {
            return Ok(LogComplex::ZERO);
        }
        let (phase, _) = reduce_rational_phase(&self.exact_angle(table));
        Ok(LogComplex::new(lm, phase))
    }

    /// Principal `n`-th root of the value: exponents divided by `n`, with the
    /// turn exponent corrected so the argument is `arg(value)/n`.
    pub fn principal_root(&self, n: &BigInt, table: &AtomTable) -> Result<Monomial, ArithError> {
        if n.is_zero() || n.is_negative() {
            return Err(ArithError::ZeroRootIndex);
        }
        if self.log_mag(table)? == f64::NEG_INFINITY {
            return Err(ArithError::UndefinedRoot);
        }
        let (_, q) = reduce_rational_phase(&self.exact_angle(table));
        let mut unwound = self.clone();
        unwound.add_exp(AtomTable::TURN, &BigRational::from_integer(-q));
        Ok(unwound.pow(&BigRational::new(BigInt::one(), n.clone())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cancellation_is_exact() {
        let mut t = AtomTable::new();
        let y = t.add("y", LogComplex::new(0.3, 1.1));
        let big = BigInt::from(10).pow(50);
        let m = Monomial::atom(y).pow_int(&big).mul(&Monomial::atom(y).pow_int(&-big));
        assert!(m.is_one());
        assert_eq!(m.eval(&t).unwrap(), LogComplex::ONE);
    }

    #[test]
    fn principal_root_of_minus_one() {
        let mut t = AtomTable::new();
        let a = t.add("a", LogComplex::new(0.0, PI));
        let r = Monomial::atom(a).principal_root(&BigInt::from(2), &t).unwrap();
        let v = r.eval(&t).unwrap();
        assert!(v.log_mag().abs() < 1e-15);
        assert!((v.phase() - PI / 2.0).abs() < 1e-15);
        let inv = Monomial::atom(a).recip().principal_root(&BigInt::from(2), &t).unwrap().eval(&t).unwrap();
        assert!((inv.phase() - PI / 2.0).abs() < 1e-15);
        // cube of a phase-2 atom wraps; its cube root must come back to the principal branch
        let b = t.add("b", LogComplex::new(0.0, 2.0));
        let cubed = Monomial::atom(b).pow_int(&BigInt::from(3));
        let root = cubed.principal_root(&BigInt::from(3), &t).unwrap().eval(&t).unwrap();
        let expected = (6.0 - 2.0 * PI) / 3.0;
        assert!((root.phase() - expected).abs() < 1e-14);
    }

    #[test]
    fn zero_atom() {
        let mut t = AtomTable::new();
        let z = t.add("z", LogComplex::ZERO);
        assert!(Monomial::atom(z).eval(&t).unwrap().is_zero());
        assert!(Monomial::atom(z).recip().eval(&t).is_err());
    }

    #[test]
    fn whole_turns_are_one() {
        let m = Monomial::atom_int(AtomTable::TURN, 5);
        assert!(m.is_exactly_one());
        assert!(m.canonical_turn().is_one());
    }
}
