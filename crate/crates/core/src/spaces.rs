//! Truncated sequence spaces, their norms, and the linear parts
//! (weighted backward shift, its right inverse, differentiation and
//! translation) from which the multilinear operators are assembled.
//!
//! Index origin is 1: `get(1)` is the first coordinate. For `HC` vectors
//! `get(j)` is the monomial coefficient of `z^{j-1}`.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{ln_factorial, log_sum_exp, LogComplex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("degenerate length: a vector of length {0} cannot be shifted")]
    DegenerateLength(usize),
    #[error("wrong space: expected {expected}, found {found}")]
    WrongSpace { expected: String, found: String },
    #[error("invalid space parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("degree {0} exceeds the translation cap of {TRANSLATE_DEGREE_CAP}")]
    DegreeCap(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Largest polynomial degree accepted by [`translate`].
pub const TRANSLATE_DEGREE_CAP: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceTag {
    L1,
    Lp(f64),
    C0,
    /// `ℂ^ℕ` with seminorm `max_{j≤k} |a_j|`.
    Cn(usize),
    /// Entire functions with seminorm `sup_j |a_j| k^j / j!`.
    Hc(usize),
}

impl SpaceTag {
    pub fn validate(self) -> Result<Self, SpaceError> {
        match self {
            SpaceTag::Lp(p) if !(p >= 1.0 && p.is_finite()) => {
                Err(SpaceError::InvalidParameter(format!("LP needs p >= 1, got {p}")))
            }
            SpaceTag::Cn(0) | SpaceTag::Hc(0) => {
                Err(SpaceError::InvalidParameter("seminorm index must be >= 1".into()))
            }
            t => Ok(t),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceTag::L1 => "L1",
            SpaceTag::Lp(_) => "LP",
            SpaceTag::C0 => "C0",
            SpaceTag::Cn(_) => "CN",
            SpaceTag::Hc(_) => "HC",
        }
    }

    pub fn is_hc(self) -> bool {
        matches!(self, SpaceTag::Hc(_))
    }

    fn param_json(self) -> Option<serde_json::Value> {
        match self {
            SpaceTag::Lp(p) => Some(p.into()),
            SpaceTag::Cn(k) | SpaceTag::Hc(k) => Some(k.into()),
            _ => None,
        }
    }

    fn from_json(name: &str, param: Option<&serde_json::Value>) -> Result<Self, SpaceError> {
        let int_param = || -> Result<usize, SpaceError> {
            param
                .and_then(|v| v.as_u64())
                .map(|k| k as usize)
                .ok_or_else(|| SpaceError::Parse(format!("space {name} needs an integer param")))
        };
        let tag = match name {
            "L1" => SpaceTag::L1,
            "C0" => SpaceTag::C0,
            "LP" => SpaceTag::Lp(
                param
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| SpaceError::Parse("space LP needs a numeric param".into()))?,
            ),
            "CN" => SpaceTag::Cn(int_param()?),
            "HC" => SpaceTag::Hc(int_param()?),
            other => return Err(SpaceError::Parse(format!("unknown space {other:?}"))),
        };
        tag.validate()
    }
}

impl fmt::Display for SpaceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceTag::Lp(p) => write!(f, "LP({p})"),
            SpaceTag::Cn(k) => write!(f, "CN({k})"),
            SpaceTag::Hc(k) => write!(f, "HC({k})"),
            t => write!(f, "{}", t.name()),
        }
    }
}

/// Truncated element of a tagged space. Coordinates past the end are zero.
#[derive(Clone)]
pub struct SeqVector {
    coords: Vec<LogComplex>,
    space: SpaceTag,
    // rounding residues left by a forward shift, consumed by the next backward shift
    residue: Option<Vec<f64>>,
}

impl PartialEq for SeqVector {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.space == other.space
    }
}

impl fmt::Debug for SeqVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SeqVector[{}]{:?}", self.space, self.coords)
    }
}

impl SeqVector {
    pub fn new(coords: Vec<LogComplex>, space: SpaceTag) -> Result<Self, SpaceError> {
        if coords.is_empty() {
            return Err(SpaceError::DegenerateLength(0));
        }
        Ok(SeqVector { coords, space: space.validate()?, residue: None })
    }

    pub fn from_reals(values: &[f64], space: SpaceTag) -> Result<Self, SpaceError> {
        Self::new(values.iter().map(|&x| LogComplex::from_real(x)).collect(), space)
    }

    pub fn from_complex(values: &[(f64, f64)], space: SpaceTag) -> Result<Self, SpaceError> {
        Self::new(values.iter().map(|&(re, im)| LogComplex::from_parts(re, im)).collect(), space)
    }

    pub fn zeros(len: usize, space: SpaceTag) -> Self {
        Self::new(vec![LogComplex::ZERO; len.max(1)], space).expect("valid zero vector")
    }

    /// The basis vector `e_k` truncated to `len` coordinates.
    pub fn unit(k: usize, len: usize, space: SpaceTag) -> Self {
        assert!(k >= 1 && k <= len, "basis index out of range");
        let mut v = Self::zeros(len, space);
        v.coords[k - 1] = LogComplex::ONE;
        v
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn space(&self) -> SpaceTag {
        self.space
    }

    pub fn with_space(mut self, space: SpaceTag) -> Self {
        self.space = space;
        self
    }

    /// 1-indexed coordinate; zero past the truncation.
    pub fn get(&self, i: usize) -> LogComplex {
        assert!(i >= 1, "index origin is 1");
        self.coords.get(i - 1).copied().unwrap_or(LogComplex::ZERO)
    }

    pub fn set(&mut self, i: usize, value: LogComplex) {
        assert!(i >= 1, "index origin is 1");
        if i > self.coords.len() {
            self.coords.resize(i, LogComplex::ZERO);
        }
        self.coords[i - 1] = value;
        self.residue = None;
    }

    pub fn coords(&self) -> &[LogComplex] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// Index of the last nonzero coordinate (0 for the zero vector).
    pub fn support_end(&self) -> usize {
        self.coords.iter().rposition(|c| !c.is_zero()).map_or(0, |p| p + 1)
    }

    pub fn resized(&self, len: usize) -> SeqVector {
        let mut coords = self.coords.clone();
        coords.resize(len.max(1), LogComplex::ZERO);
        SeqVector { coords, space: self.space, residue: None }
    }

    pub fn scale(&self, s: LogComplex) -> SeqVector {
        SeqVector {
            coords: self.coords.iter().map(|&c| c * s).collect(),
            space: self.space,
            residue: None,
        }
    }

    /// Coordinate-wise sum; the shorter vector is zero-padded.
    pub fn add(&self, other: &SeqVector) -> SeqVector {
        let n = self.len().max(other.len());
        SeqVector {
            coords: (1..=n).map(|i| self.get(i) + other.get(i)).collect(),
            space: self.space,
            residue: None,
        }
    }

    pub fn sub(&self, other: &SeqVector) -> SeqVector {
        self.add(&other.scale(LogComplex::from_real(-1.0)))
    }

    /// Log of the space norm (or seminorm) of `self - other`.
    pub fn log_dist(&self, other: &SeqVector) -> f64 {
        norm(&self.sub(other))
    }

    pub fn to_complex(&self) -> Vec<(f64, f64)> {
        self.coords.iter().map(|c| c.to_parts()).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let coords: Vec<serde_json::Value> = self
            .coords
            .iter()
            .map(|c| {
                if c.is_zero() {
                    serde_json::json!([0.0, 0.0])
                } else {
                    serde_json::json!({"log": c.log_mag(), "phase": c.phase()})
                }
            })
            .collect();
        let mut obj = serde_json::json!({"space": self.space.name(), "coords": coords});
        if let Some(p) = self.space.param_json() {
            obj["param"] = p;
        }
        obj
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self, SpaceError> {
        let (space, raw) = parse_header(value)?;
        let coords = raw
            .into_iter()
            .map(|c| match c {
                CoordJson::Pair([re, im]) => {
                    if re.abs() > 1e300 || im.abs() > 1e300 {
                        return Err(SpaceError::Parse("use the log form for huge coordinates".into()));
                    }
                    Ok(LogComplex::from_parts(re, im))
                }
                CoordJson::Log { log, phase } => Ok(LogComplex::new(log, phase)),
                CoordJson::Rational { num, den } => {
                    let q = parse_rational(&num, &den)?;
                    Ok(rational_to_logc(&q))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        SeqVector::new(coords, space)
    }

    pub fn from_json_str(s: &str) -> Result<Self, SpaceError> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| SpaceError::Parse(e.to_string()))?;
        Self::from_json(&v)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum CoordJson {
    Pair([f64; 2]),
    Log { log: f64, phase: f64 },
    Rational { num: String, den: String },
}

fn parse_header(value: &serde_json::Value) -> Result<(SpaceTag, Vec<CoordJson>), SpaceError> {
    let name = value
        .get("space")
        .and_then(|s| s.as_str())
        .ok_or_else(|| SpaceError::Parse("missing \"space\"".into()))?;
    let space = SpaceTag::from_json(name, value.get("param"))?;
    let coords = value.get("coords").ok_or_else(|| SpaceError::Parse("missing \"coords\"".into()))?;
    let raw: Vec<CoordJson> =
        serde_json::from_value(coords.clone()).map_err(|e| SpaceError::Parse(e.to_string()))?;
    if raw.is_empty() {
        return Err(SpaceError::Parse("empty coords".into()));
    }
    Ok((space, raw))
}

fn parse_rational(num: &str, den: &str) -> Result<BigRational, SpaceError> {
    let n: BigInt = num.trim().parse().map_err(|_| SpaceError::Parse(format!("bad numerator {num:?}")))?;
    let d: BigInt = den.trim().parse().map_err(|_| SpaceError::Parse(format!("bad denominator {den:?}")))?;
    if d.is_zero() {
        return Err(SpaceError::Parse("zero denominator".into()));
    }
    Ok(BigRational::new(n, d))
}

/// Natural log of a positive big integer.
pub fn ln_biguint(n: &BigUint) -> f64 {
    if let Some(f) = n.to_f64().filter(|f| f.is_finite()) {
        return f.ln();
    }
    let bits = n.bits();
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap();
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn rational_to_logc(q: &BigRational) -> LogComplex {
    if q.is_zero() {
        return LogComplex::ZERO;
    }
    let (n, d) = (q.numer(), q.denom());
    let ln = ln_biguint(n.magnitude()) - ln_biguint(d.magnitude());
    let phase = if (n < &BigInt::zero()) != (d < &BigInt::zero()) { std::f64::consts::PI } else { 0.0 };
    LogComplex::new(ln, phase)
}

/// Exact real-rational vector for steering computations.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalVector {
    pub coords: Vec<BigRational>,
}

impl RationalVector {
    pub fn new(coords: Vec<BigRational>) -> Self {
        RationalVector { coords }
    }

    pub fn from_ints(values: &[i64]) -> Self {
        RationalVector { coords: values.iter().map(|&v| BigRational::from_integer(v.into())).collect() }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> BigRational {
        self.coords.get(i - 1).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn to_logc(&self, space: SpaceTag) -> Result<SeqVector, SpaceError> {
        SeqVector::new(self.coords.iter().map(rational_to_logc).collect(), space)
    }

    pub fn to_json(&self, space: SpaceTag) -> serde_json::Value {
        let coords: Vec<_> = self
            .coords
            .iter()
            .map(|q| serde_json::json!({"num": q.numer().to_string(), "den": q.denom().to_string()}))
            .collect();
        let mut obj = serde_json::json!({"space": space.name(), "coords": coords});
        if let Some(p) = space.param_json() {
            obj["param"] = p;
        }
        obj
    }

    /// Reads a vector whose coordinates are rationals or real pairs with integer values.
    pub fn from_json(value: &serde_json::Value) -> Result<(Self, SpaceTag), SpaceError> {
        let (space, raw) = parse_header(value)?;
        let coords = raw
            .into_iter()
            .map(|c| match c {
                CoordJson::Rational { num, den } => parse_rational(&num, &den),
                CoordJson::Pair([re, im]) if im == 0.0 => BigRational::from_float(re)
                    .ok_or_else(|| SpaceError::Parse("non-finite coordinate".into())),
                _ => Err(SpaceError::Parse("rational mode needs real coordinates".into())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((RationalVector { coords }, space))
    }
}

/// How the weights `ω_i` are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum WeightGen {
    Constant(f64),
    /// `ω_i = 1/i²`.
    InverseSquare,
    /// `ω_i = i`.
    Linear,
    Explicit(Vec<f64>),
}

/// Positive weight sequence `ω_1, ω_2, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSeq {
    gen: WeightGen,
}

impl WeightSeq {
    pub fn new(gen: WeightGen) -> Result<Self, SpaceError> {
        match &gen {
            WeightGen::Constant(c) if !(*c > 0.0 && c.is_finite()) => {
                return Err(SpaceError::InvalidWeight(format!("constant weight {c}")))
            }
            WeightGen::Explicit(v) => {
                if let Some(bad) = v.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
                    return Err(SpaceError::InvalidWeight(format!("explicit weight {bad}")));
                }
            }
            _ => {}
        }
        Ok(WeightSeq { gen })
    }

    pub fn unit() -> Self {
        WeightSeq { gen: WeightGen::Constant(1.0) }
    }

    pub fn inverse_square() -> Self {
        WeightSeq { gen: WeightGen::InverseSquare }
    }

    pub fn linear() -> Self {
        WeightSeq { gen: WeightGen::Linear }
    }

    pub fn gen(&self) -> &WeightGen {
        &self.gen
    }

    /// `ω_i` (1-indexed). Explicit sequences repeat their last value past the end.
    pub fn weight(&self, i: usize) -> f64 {
        assert!(i >= 1, "weights are 1-indexed");
        match &self.gen {
            WeightGen::Constant(c) => *c,
            WeightGen::InverseSquare => 1.0 / (i as f64 * i as f64),
            WeightGen::Linear => i as f64,
            WeightGen::Explicit(v) => v[(i - 1).min(v.len() - 1)],
        }
    }

    /// `ln ω_i`.
    pub fn log_weight(&self, i: usize) -> f64 {
        match &self.gen {
            WeightGen::InverseSquare => -2.0 * (i as f64).ln(),
            WeightGen::Linear => (i as f64).ln(),
            _ => self.weight(i).ln(),
        }
    }

    /// `ln(ω_1 ⋯ ω_k)`.
    pub fn log_prefix(&self, k: usize) -> f64 {
        match &self.gen {
            WeightGen::Constant(c) => k as f64 * c.ln(),
            WeightGen::InverseSquare => -2.0 * ln_factorial(k),
            WeightGen::Linear => ln_factorial(k),
            WeightGen::Explicit(_) => (1..=k).map(|i| self.log_weight(i)).sum(),
        }
    }

    /// `sup_i ω_i`.
    pub fn sup(&self) -> f64 {
        match &self.gen {
            WeightGen::Constant(c) => *c,
            WeightGen::InverseSquare => 1.0,
            WeightGen::Linear => f64::INFINITY,
            WeightGen::Explicit(v) => v.iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Log of the norm or seminorm selected by the vector's tag.
pub fn norm(v: &SeqVector) -> f64 {
    let logs = v.coords.iter().map(|c| c.log_mag());
    match v.space {
        SpaceTag::L1 => log_sum_exp(&logs.collect::<Vec<_>>()),
        SpaceTag::Lp(p) => {
            let scaled: Vec<f64> = logs.map(|l| p * l).collect();
            log_sum_exp(&scaled) / p
        }
        SpaceTag::C0 => logs.fold(f64::NEG_INFINITY, f64::max),
        SpaceTag::Cn(k) => logs.take(k).fold(f64::NEG_INFINITY, f64::max),
        SpaceTag::Hc(k) => {
            let lk = (k as f64).ln();
            v.coords
                .iter()
                .enumerate()
                .map(|(j, c)| c.log_mag() + j as f64 * lk - ln_factorial(j))
                .fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

/// `[B_ω v]_i = ω_i v_{i+1}`; the result has one coordinate fewer.
pub fn backward_shift(v: &SeqVector, w: &WeightSeq) -> Result<SeqVector, SpaceError> {
    if v.len() < 2 {
        return Err(SpaceError::DegenerateLength(v.len()));
    }
    let coords = (1..v.len())
        .map(|i| {
            let c = v.coords[i];
            if c.is_zero() {
                return c;
            }
            let lw = w.log_weight(i);
            let lm = match &v.residue {
                Some(res) => {
                    let (t, f) = two_sum(c.log_mag(), lw);
                    t + (f + res[i])
                }
                None => c.log_mag() + lw,
            };
            LogComplex::new(lm, c.phase())
        })
        .collect();
    Ok(SeqVector { coords, space: v.space, residue: None })
}

/// The right inverse `S_ω` of `B_ω`: `[S_ω v]_1 = 0`, `[S_ω v]_{i+1} = v_i / ω_i`.
///
/// The rounding residue of each division is kept so that a following
/// [`backward_shift`] returns `v` bit for bit.
pub fn forward_shift(v: &SeqVector, w: &WeightSeq) -> SeqVector {
    let mut coords = Vec::with_capacity(v.len() + 1);
    let mut residue = Vec::with_capacity(v.len() + 1);
    coords.push(LogComplex::ZERO);
    residue.push(0.0);
    for (k, c) in v.coords.iter().enumerate() {
        if c.is_zero() {
            coords.push(LogComplex::ZERO);
            residue.push(0.0);
            continue;
        }
        let (s, e) = two_sum(c.log_mag(), -w.log_weight(k + 1));
        coords.push(LogComplex::new(s, c.phase()));
        residue.push(e);
    }
    SeqVector { coords, space: v.space, residue: Some(residue) }
}

/// `S_ω^n v`, computed directly: `[S^n v]_{i+n} = v_i / (ω_i ⋯ ω_{i+n-1})`.
pub fn forward_shift_pow(v: &SeqVector, w: &WeightSeq, n: usize) -> SeqVector {
    let mut coords = vec![LogComplex::ZERO; n];
    for (k, c) in v.coords.iter().enumerate() {
        let i = k + 1;
        let lw = w.log_prefix(i + n - 1) - w.log_prefix(i - 1);
        coords.push(if c.is_zero() { *c } else { LogComplex::new(c.log_mag() - lw, c.phase()) });
    }
    SeqVector { coords, space: v.space, residue: None }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

fn require_hc(v: &SeqVector) -> Result<(), SpaceError> {
    if v.space.is_hc() {
        Ok(())
    } else {
        Err(SpaceError::WrongSpace { expected: "HC".into(), found: v.space.to_string() })
    }
}

/// Monomial coefficients of `f'`: the backward shift with `ω_j = j`.
pub fn derivative(v: &SeqVector) -> Result<SeqVector, SpaceError> {
    require_hc(v)?;
    backward_shift(v, &WeightSeq::linear())
}

fn ln_binomial_table() -> &'static Vec<Vec<f64>> {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(TRANSLATE_DEGREE_CAP + 1);
        let mut row = vec![BigUint::one()];
        for _ in 0..=TRANSLATE_DEGREE_CAP {
            rows.push(row.iter().map(ln_biguint).collect());
            let mut next = Vec::with_capacity(row.len() + 1);
            next.push(BigUint::one());
            for k in 1..row.len() {
                next.push(&row[k - 1] + &row[k]);
            }
            next.push(BigUint::one());
            row = next;
        }
        rows
    })
}

/// `ln C(l, j)` for `j ≤ l ≤` [`TRANSLATE_DEGREE_CAP`].
pub fn ln_binomial(l: usize, j: usize) -> f64 {
    ln_binomial_table()[l][j]
}

/// Coefficients of `f(z + 1)`: `b_j = Σ_{l≥j} C(l, j) a_l`.
pub fn translate(v: &SeqVector) -> Result<SeqVector, SpaceError> {
    translate_by(v, 1)
}

/// Coefficients of `f(z + p)`: `b_j = Σ_{l≥j} C(l, j) p^{l-j} a_l`.
pub fn translate_by(v: &SeqVector, p: u64) -> Result<SeqVector, SpaceError> {
    require_hc(v)?;
    let deg = v.len() - 1;
    if deg > TRANSLATE_DEGREE_CAP {
        return Err(SpaceError::DegreeCap(deg));
    }
    if p == 0 {
        return Ok(v.resized(v.len()));
    }
    let lp = (p as f64).ln();
    // coefficients above the true degree stay zero
    let top = v.support_end().max(1) - 1;
    let coords = (0..=deg)
        .map(|j| {
            if j > top {
                return LogComplex::ZERO;
            }
            LogComplex::sum((j..=top).filter(|&l| !v.coords[l].is_zero()).map(|l| {
                let c = v.coords[l];
                LogComplex::new(c.log_mag() + ln_binomial(l, j) + (l - j) as f64 * lp, c.phase())
            }))
        })
        .collect();
    Ok(SeqVector { coords, space: v.space, residue: None })
}

/// `e_1'(v)` on sequences, `f(0)` on Taylor coefficients: the first coordinate.
pub fn eval_functional(v: &SeqVector) -> LogComplex {
    v.get(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn reals(v: &SeqVector) -> Vec<f64> {
        v.to_complex().iter().map(|c| c.0).collect()
    }

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol * w.abs().max(1.0), "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn norm_examples() {
        let v = SeqVector::from_reals(&[1.0, -2.0, 0.5], SpaceTag::L1).unwrap();
        assert!((norm(&v) - 3.5f64.ln()).abs() < 1e-15);
        let f = SeqVector::from_reals(&[0.0, 0.0, 1.0], SpaceTag::Hc(2)).unwrap();
        assert!((norm(&f) - LN_2).abs() < 1e-15);
        assert_eq!(norm(&SeqVector::zeros(4, SpaceTag::L1)), f64::NEG_INFINITY);
        let c = SeqVector::from_reals(&[1.0, -5.0, 7.0], SpaceTag::Cn(2)).unwrap();
        assert!((norm(&c) - 5f64.ln()).abs() < 1e-15);
        let l2 = SeqVector::from_reals(&[3.0, 4.0], SpaceTag::Lp(2.0)).unwrap();
        assert!((norm(&l2) - 5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn backward_shift_examples() {
        let w = WeightSeq::inverse_square();
        let v = SeqVector::from_reals(&[0.0, 1.0, 2.0, 3.0], SpaceTag::L1).unwrap();
        assert_close(&reals(&backward_shift(&v, &w).unwrap()), &[1.0, 0.5, 1.0 / 3.0], 1e-15);
        let e1 = SeqVector::unit(1, 4, SpaceTag::L1);
        assert!(backward_shift(&e1, &w).unwrap().is_zero());
        let a = SeqVector::from_reals(&[4.0, 5.0, 6.0], SpaceTag::L1).unwrap();
        assert_close(&reals(&backward_shift(&a, &WeightSeq::unit()).unwrap()), &[5.0, 6.0], 1e-15);
        assert_eq!(
            backward_shift(&SeqVector::unit(1, 1, SpaceTag::L1), &w),
            Err(SpaceError::DegenerateLength(1))
        );
    }

    #[test]
    fn forward_shift_examples() {
        let e1 = SeqVector::unit(1, 1, SpaceTag::L1);
        assert_eq!(forward_shift(&e1, &WeightSeq::unit()), SeqVector::unit(2, 2, SpaceTag::L1));
        let v = SeqVector::from_reals(&[1.0, 1.0], SpaceTag::L1).unwrap();
        let s = forward_shift(&v, &WeightSeq::inverse_square());
        assert!(s.get(1).is_zero());
        assert_close(&reals(&s), &[0.0, 1.0, 4.0], 1e-15);
    }

    #[test]
    fn forward_shift_power_matches_iteration() {
        let w = WeightSeq::inverse_square();
        let v = SeqVector::from_reals(&[1.0, -2.0, 0.25], SpaceTag::L1).unwrap();
        let mut it = v.clone();
        for _ in 0..5 {
            it = forward_shift(&it, &w);
        }
        let direct = forward_shift_pow(&v, &w, 5);
        assert_eq!(it.len(), direct.len());
        for i in 1..=direct.len() {
            assert!(it.get(i).rel_diff(direct.get(i)) < 1e-13);
        }
    }

    #[test]
    fn derivative_examples() {
        let f = SeqVector::from_reals(&[0.0, 0.0, 1.0], SpaceTag::Hc(1)).unwrap();
        assert_close(&reals(&derivative(&f).unwrap()), &[0.0, 2.0], 1e-15);
        let c = SeqVector::from_reals(&[3.0, 0.0], SpaceTag::Hc(1)).unwrap();
        assert!(derivative(&c).unwrap().is_zero());
        // term-by-term: d/dz Σ_{j≤5} z^j/j! = Σ_{j≤4} z^j/j!
        let fact = [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0, 1.0 / 120.0];
        let e = SeqVector::from_reals(&fact, SpaceTag::Hc(1)).unwrap();
        assert_close(&reals(&derivative(&e).unwrap()), &fact[..5], 1e-15);
        let l1 = SeqVector::from_reals(&[1.0, 2.0], SpaceTag::L1).unwrap();
        assert!(matches!(derivative(&l1), Err(SpaceError::WrongSpace { .. })));
    }

    #[test]
    fn translate_examples() {
        let z = SeqVector::from_reals(&[0.0, 1.0], SpaceTag::Hc(1)).unwrap();
        assert_close(&reals(&translate(&z).unwrap()), &[1.0, 1.0], 1e-15);
        let z2 = SeqVector::from_reals(&[0.0, 0.0, 1.0], SpaceTag::Hc(1)).unwrap();
        assert_close(&reals(&translate(&z2).unwrap()), &[1.0, 2.0, 1.0], 1e-15);
        let c = SeqVector::from_reals(&[7.0], SpaceTag::Hc(1)).unwrap();
        assert_close(&reals(&translate(&c).unwrap()), &[7.0], 1e-15);
        let big = SeqVector::zeros(TRANSLATE_DEGREE_CAP + 2, SpaceTag::Hc(1));
        assert_eq!(translate(&big), Err(SpaceError::DegreeCap(TRANSLATE_DEGREE_CAP + 1)));
    }

    #[test]
    fn functional_examples() {
        let v = SeqVector::from_reals(&[3.0, 7.0, 1.0], SpaceTag::L1).unwrap();
        assert_eq!(eval_functional(&v), LogComplex::from_real(3.0));
        assert!(eval_functional(&SeqVector::zeros(3, SpaceTag::L1)).is_zero());
        let f = SeqVector::from_reals(&[2.0, 1.0], SpaceTag::Hc(1)).unwrap();
        assert_eq!(eval_functional(&f), LogComplex::from_real(2.0));
    }

    #[test]
    fn json_round_trip() {
        let v = SeqVector::new(
            vec![LogComplex::new(1234.5, 0.25), LogComplex::ZERO, LogComplex::from_real(-2.0)],
            SpaceTag::Hc(3),
        )
        .unwrap();
        let back = SeqVector::from_json(&v.to_json()).unwrap();
        assert_eq!(back, v);
        let parsed = SeqVector::from_json_str(
            r#"{"space":"L1","coords":[[1,0],{"log":0.0,"phase":1.0},{"num":"-3","den":"4"}]}"#,
        )
        .unwrap();
        assert!((parsed.get(3).to_parts().0 + 0.75).abs() < 1e-15);
        assert!(SeqVector::from_json_str(r#"{"space":"LP","param":0.5,"coords":[[1,0]]}"#).is_err());
        assert!(SeqVector::from_json_str(r#"{"space":"L1","coords":[[1e301,0]]}"#).is_err());
    }

    #[test]
    fn rational_json_round_trip() {
        let r = RationalVector::new(vec![BigRational::new(7.into(), 3.into()), BigRational::zero()]);
        let (back, space) = RationalVector::from_json(&r.to_json(SpaceTag::Cn(2))).unwrap();
        assert_eq!(back, r);
        assert_eq!(space, SpaceTag::Cn(2));
    }

    fn coords(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<LogComplex>> {
        prop::collection::vec(
            prop_oneof![
                1 => Just(LogComplex::ZERO),
                8 => (-300.0f64..300.0, -3.14f64..3.14).prop_map(|(l, p)| LogComplex::new(l, p)),
            ],
            n,
        )
    }

    fn weights() -> impl Strategy<Value = WeightSeq> {
        prop_oneof![
            Just(WeightSeq::inverse_square()),
            Just(WeightSeq::linear()),
            (1e-3f64..1e3).prop_map(|c| WeightSeq::new(WeightGen::Constant(c)).unwrap()),
            prop::collection::vec(1e-8f64..1e8, 1..40)
                .prop_map(|v| WeightSeq::new(WeightGen::Explicit(v)).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn shift_right_inverse_is_bit_exact(c in coords(1..60), w in weights()) {
            let v = SeqVector::new(c, SpaceTag::L1).unwrap();
            let back = backward_shift(&forward_shift(&v, &w), &w).unwrap();
            for (a, b) in back.coords().iter().zip(v.coords()) {
                prop_assert_eq!(a.log_mag().to_bits(), b.log_mag().to_bits());
                prop_assert_eq!(a.phase().to_bits(), b.phase().to_bits());
            }
        }

        #[test]
        fn norm_is_homogeneous(c in coords(1..40), l in -50.0f64..50.0, p in -3.0f64..3.0, tag in 0usize..5) {
            let space = [SpaceTag::L1, SpaceTag::Lp(2.5), SpaceTag::C0, SpaceTag::Cn(7), SpaceTag::Hc(3)][tag];
            let v = SeqVector::new(c, space).unwrap();
            let lam = LogComplex::new(l, p);
            let n0 = norm(&v);
            prop_assume!(n0.is_finite());
            let n1 = norm(&v.scale(lam));
            let scale = n1.abs().max(n0.abs()).max(l.abs()).max(1.0);
            prop_assert!((n1 - (l + n0)).abs() <= 4.0 * f64::EPSILON * scale);
        }

        #[test]
        fn derivative_is_linear_weight_shift(c in coords(2..40)) {
            let v = SeqVector::new(c, SpaceTag::Hc(2)).unwrap();
            prop_assert_eq!(derivative(&v).unwrap(), backward_shift(&v, &WeightSeq::linear()).unwrap());
        }

        #[test]
        fn translate_twice_is_translate_by_two(c in prop::collection::vec(-1.0f64..1.0, 1..31)) {
            let f = SeqVector::from_reals(&c, SpaceTag::Hc(1)).unwrap();
            let twice = translate(&translate(&f).unwrap()).unwrap();
            // oracle: Horner evaluation of f(z+2) in exact rationals
            let q: Vec<BigRational> = c.iter().map(|x| BigRational::from_float(*x).unwrap()).collect();
            let mut acc: Vec<BigRational> = vec![BigRational::zero(); q.len()];
            for a in q.iter().rev() {
                // acc <- acc·(z+2) + a
                let mut next = vec![BigRational::zero(); q.len()];
                for (k, ak) in acc.iter().enumerate() {
                    next[k] += ak * BigRational::from_integer(2.into());
                    if k + 1 < next.len() { next[k + 1] += ak; }
                }
                next[0] += a;
                acc = next;
            }
            let scale = acc.iter().map(|x| x.to_f64().unwrap().abs()).fold(0.0, f64::max).max(1e-300);
            for (k, e) in acc.iter().enumerate() {
                let (re, _) = twice.get(k + 1).to_parts();
                // relative to the largest coefficient: cancellation makes small ones meaningless
                prop_assert!((re - e.to_f64().unwrap()).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn translate_is_linear(a in prop::collection::vec(-1.0f64..1.0, 1..20), b in prop::collection::vec(-1.0f64..1.0, 1..20)) {
            let n = a.len().max(b.len());
            let fa = SeqVector::from_reals(&a, SpaceTag::Hc(1)).unwrap().resized(n);
            let fb = SeqVector::from_reals(&b, SpaceTag::Hc(1)).unwrap().resized(n);
            let lhs = translate(&fa.add(&fb)).unwrap();
            let rhs = translate(&fa).unwrap().add(&translate(&fb).unwrap());
            // condition scale: the translate of |a| + |b|
            let abs: Vec<f64> = (0..n).map(|i| a.get(i).map_or(0.0, |x| x.abs()) + b.get(i).map_or(0.0, |x| x.abs())).collect();
            let cond = translate(&SeqVector::from_reals(&abs, SpaceTag::Hc(1)).unwrap()).unwrap();
            let scale = norm(&cond.with_space(SpaceTag::C0)).exp().max(1.0);
            for i in 1..=n {
                let (x, _) = lhs.get(i).to_parts();
                let (y, _) = rhs.get(i).to_parts();
                prop_assert!((x - y).abs() <= 1e-12 * scale);
            }
        }
    }
}
