//! Orbit engines for the two multilinear orbit notions, weight ledgers,
//! closed-form states and asymptotic classification.

mod classify;
mod gk;
mod ledger;
mod trace;

use serde::Serialize;
use thiserror::Error;

use crate::arith::{ln_factorial, LogComplex};
use crate::spaces::{
    backward_shift, derivative, eval_functional, translate, translate_by, SeqVector, SpaceError,
    WeightSeq,
};

pub use classify::{
    classify_norms, classify_orbit, collapse_log_k, iterate_polynomial, verify_weight_collapse,
    Classification, CollapseEntry, CollapseReport, PolynomialOrbit, CONVERGENCE_RUN,
};
pub use gk::{gk_tree, OrbitTreeGK, DEFAULT_LEVEL_CAP};
pub use ledger::{closed_form_state, d_closed_form, ledger, OperatorFamily, WeightLedger};
pub use trace::{write_trace, TRACE_COORD_LIMIT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynError {
    #[error("truncation window exhausted at step {step}")]
    WindowExhausted { step: usize },
    #[error("operator expects {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("no closed form for {0}")]
    UnsupportedForm(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// The linear operator applied in the shift slot.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearPart {
    BackwardShift(WeightSeq),
    Derivative,
    Translate,
}

impl LinearPart {
    pub fn apply(&self, v: &SeqVector) -> Result<SeqVector, SpaceError> {
        match self {
            LinearPart::BackwardShift(w) => backward_shift(v, w),
            LinearPart::Derivative => derivative(v),
            LinearPart::Translate => translate(v),
        }
    }

    /// `L^p v` from its coordinate formula rather than by iteration.
    /// `None` when the truncation cannot represent the result.
    pub fn power(&self, v: &SeqVector, p: usize) -> Result<Option<SeqVector>, SpaceError> {
        match self {
            LinearPart::Translate => translate_by(v, p as u64).map(Some),
            _ if p == 0 => Ok(Some(v.clone())),
            _ if p >= v.len() => Ok(None),
            LinearPart::BackwardShift(w) => {
                // [B^p v]_i = ω_i ⋯ ω_{i+p-1} v_{i+p}
                let coords = (1..=v.len() - p)
                    .map(|i| {
                        let c = v.get(i + p);
                        let lw = w.log_prefix(i + p - 1) - w.log_prefix(i - 1);
                        if c.is_zero() {
                            c
                        } else {
                            LogComplex::new(c.log_mag() + lw, c.phase())
                        }
                    })
                    .collect();
                SeqVector::new(coords, v.space()).map(Some)
            }
            LinearPart::Derivative => {
                // coefficient of z^j in f^{(p)} is a_{j+p} (j+p)!/j!
                let coords = (0..v.len() - p)
                    .map(|j| {
                        let c = v.get(j + p + 1);
                        if c.is_zero() {
                            c
                        } else {
                            let lf = ln_factorial(j + p) - ln_factorial(j);
                            LogComplex::new(c.log_mag() + lf, c.phase())
                        }
                    })
                    .collect();
                SeqVector::new(coords, v.space()).map(Some)
            }
        }
    }

    /// `ℓ(L^k v)` split into a raw value and the log of a positive weight
    /// factor: `(v_{k+1}, ln W(k))` for the shift, `(k!·v_{k+1}, 0)` for the
    /// derivative, `(f(k), 0)` for translation.
    pub fn merge_value(&self, v: &SeqVector, k: usize) -> Option<(LogComplex, f64)> {
        match self {
            LinearPart::BackwardShift(w) => {
                (k < v.len()).then(|| (v.get(k + 1), w.log_prefix(k)))
            }
            LinearPart::Derivative => (k < v.len()).then(|| {
                let c = v.get(k + 1);
                let raw = if c.is_zero() { c } else { LogComplex::new(c.log_mag() + ln_factorial(k), c.phase()) };
                (raw, 0.0)
            }),
            LinearPart::Translate => Some((eval_poly_at(v, k as f64), 0.0)),
        }
    }

    fn expects_hc(&self) -> bool {
        !matches!(self, LinearPart::BackwardShift(_))
    }

    fn describe(&self) -> String {
        match self {
            LinearPart::BackwardShift(w) => format!("B_w({:?})", w.gen()),
            LinearPart::Derivative => "D".into(),
            LinearPart::Translate => "f(z+1)".into(),
        }
    }
}

/// `Σ_l a_l t^l` for a coefficient vector `a`.
pub fn eval_poly_at(v: &SeqVector, t: f64) -> LogComplex {
    if t == 0.0 {
        return v.get(1);
    }
    let lt = t.ln();
    LogComplex::sum(v.coords().iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(l, c)| {
        LogComplex::new(c.log_mag() + l as f64 * lt, c.phase())
    }))
}

/// An m-linear operator `Π_{i∈F} ℓ(x_i) · L(x_s)` with `ℓ` the first-coordinate
/// functional, optionally averaged over the two slot assignments (arity 2).
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearSpec {
    pub name: String,
    pub arity: usize,
    pub functional_positions: Vec<usize>,
    pub shift_slot: usize,
    pub linear: LinearPart,
    pub symmetrized: bool,
}

/// Names accepted by [`MultilinearSpec::by_name`].
pub const OPERATOR_REGISTRY: [&str; 7] =
    ["mc_CN", "m_l1", "n_transpose", "m_fg_prime", "n_delta_d", "b_translate", "m_symmetric"];

impl MultilinearSpec {
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        shift_slot: usize,
        linear: LinearPart,
        symmetrized: bool,
    ) -> Result<Self, DynError> {
        if arity < 2 {
            return Err(DynError::InvalidOperator("arity must be at least 2".into()));
        }
        if shift_slot >= arity {
            return Err(DynError::InvalidOperator(format!("shift slot {shift_slot} out of range")));
        }
        if symmetrized && arity != 2 {
            return Err(DynError::InvalidOperator("symmetrization needs arity 2".into()));
        }
        Ok(MultilinearSpec {
            name: name.into(),
            arity,
            functional_positions: (0..arity).filter(|&i| i != shift_slot).collect(),
            shift_slot,
            linear,
            symmetrized,
        })
    }

    /// `[x_{1-m}]_1 ⋯ [x_{-1}]_1 B(x_0)` on `ℂ^ℕ`.
    pub fn mc_cn(m: usize) -> Result<Self, DynError> {
        Self::new("mc_CN", m, m - 1, LinearPart::BackwardShift(WeightSeq::unit()), false)
    }

    /// `M(x, y) = e_1'(y) B_ω(x)`.
    pub fn m_l1(w: WeightSeq) -> Self {
        Self::new("m_l1", 2, 0, LinearPart::BackwardShift(w), false).expect("valid")
    }

    /// `N(x, y) = e_1'(x) B_ω(y)`.
    pub fn n_transpose(w: WeightSeq) -> Self {
        Self::new("n_transpose", 2, 1, LinearPart::BackwardShift(w), false).expect("valid")
    }

    /// `M(f, g) = f(0) g'`.
    pub fn m_fg_prime() -> Self {
        Self::new("m_fg_prime", 2, 1, LinearPart::Derivative, false).expect("valid")
    }

    /// `N(f, g) = g(0) f'`.
    pub fn n_delta_d() -> Self {
        Self::new("n_delta_d", 2, 0, LinearPart::Derivative, false).expect("valid")
    }

    /// `B(g, f) = g(0) f(z + 1)`.
    pub fn b_translate() -> Self {
        Self::new("b_translate", 2, 1, LinearPart::Translate, false).expect("valid")
    }

    /// `(e_1'(x) B_ω(y) + e_1'(y) B_ω(x)) / 2`.
    pub fn m_symmetric(w: WeightSeq) -> Self {
        Self::new("m_symmetric", 2, 0, LinearPart::BackwardShift(w), true).expect("valid")
    }

    /// Registry lookup. `weights` applies to the shift-based operators and
    /// `arity` to `mc_CN`.
    pub fn by_name(name: &str, weights: WeightSeq, arity: usize) -> Result<Self, DynError> {
        match name {
            "mc_CN" => Self::mc_cn(arity),
            "m_l1" => Ok(Self::m_l1(weights)),
            "n_transpose" => Ok(Self::n_transpose(weights)),
            "m_fg_prime" => Ok(Self::m_fg_prime()),
            "n_delta_d" => Ok(Self::n_delta_d()),
            "b_translate" => Ok(Self::b_translate()),
            "m_symmetric" => Ok(Self::m_symmetric(weights)),
            other => Err(DynError::InvalidOperator(format!("unknown operator {other:?}"))),
        }
    }

    pub fn describe(&self) -> String {
        format!(
            "{}: arity {}, shift slot {}, linear part {}{}",
            self.name,
            self.arity,
            self.shift_slot,
            self.linear.describe(),
            if self.symmetrized { ", symmetrized" } else { "" }
        )
    }

    fn check_space(&self, v: &SeqVector) -> Result<(), DynError> {
        let hc = v.space().is_hc();
        if hc != self.linear.expects_hc() {
            return Err(SpaceError::WrongSpace {
                expected: if self.linear.expects_hc() { "HC".into() } else { "a sequence space".into() },
                found: v.space().to_string(),
            }
            .into());
        }
        Ok(())
    }

    pub fn check_args(&self, args: &[SeqVector]) -> Result<(), DynError> {
        if args.len() != self.arity {
            return Err(DynError::ArityMismatch { expected: self.arity, got: args.len() });
        }
        args.iter().try_for_each(|a| self.check_space(a))
    }
}

/// Evaluates the operator on an m-tuple of vectors.
pub fn apply(spec: &MultilinearSpec, args: &[SeqVector]) -> Result<SeqVector, DynError> {
    spec.check_args(args)?;
    let one_assignment = |shift: usize, funcs: &[usize]| -> Result<SeqVector, DynError> {
        let scalar = funcs.iter().fold(LogComplex::ONE, |acc, &i| acc * eval_functional(&args[i]));
        let image = spec.linear.apply(&args[shift])?;
        Ok(image.scale(scalar))
    };
    if !spec.symmetrized {
        return one_assignment(spec.shift_slot, &spec.functional_positions);
    }
    let a = one_assignment(1, &[0])?;
    let b = one_assignment(0, &[1])?;
    let n = a.len().min(b.len());
    Ok(a.resized(n).add(&b.resized(n)).scale(LogComplex::from_real(0.5)))
}

/// A BC orbit: `x_n = M(x_{n-m}, …, x_{n-1})` from the initial m-tuple.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitBC {
    #[serde(skip)]
    pub initial: Vec<SeqVector>,
    #[serde(skip)]
    pub states: Vec<SeqVector>,
    pub exhausted_at: Option<usize>,
    pub arity: usize,
}

impl OrbitBC {
    /// `x_n` for `1 ≤ n ≤ states.len()`.
    pub fn state(&self, n: usize) -> &SeqVector {
        &self.states[n - 1]
    }

    pub fn log_norms(&self) -> Vec<f64> {
        self.states.iter().map(crate::spaces::norm).collect()
    }
}

/// Iterates the BC recursion directly. Running out of coordinates is
/// recorded in `exhausted_at` and ends the orbit.
pub fn iterate_bc(spec: &MultilinearSpec, init: &[SeqVector], steps: usize) -> Result<OrbitBC, DynError> {
    spec.check_args(init)?;
    let m = spec.arity;
    let mut window: Vec<SeqVector> = init.to_vec();
    let mut states = Vec::with_capacity(steps);
    let mut exhausted_at = None;
    for n in 1..=steps {
        let start = window.len() - m;
        match apply(spec, &window[start..]) {
            Ok(next) => {
                window.push(next.clone());
                states.push(next);
            }
            Err(DynError::Space(SpaceError::DegenerateLength(_))) => {
                exhausted_at = Some(n);
                break;
            }
            Err(e) => return Err(e),
        }
        if window.len() > 2 * m + 1 {
            window.drain(..window.len() - m);
        }
    }
    Ok(OrbitBC { initial: init.to_vec(), states, exhausted_at, arity: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpaceTag;

    fn l1(v: &[f64]) -> SeqVector {
        SeqVector::from_reals(v, SpaceTag::L1).unwrap()
    }

    fn reals(v: &SeqVector) -> Vec<f64> {
        v.to_complex().iter().map(|c| c.0).collect()
    }

    #[test]
    fn apply_direct_formula() {
        let w = WeightSeq::new(crate::spaces::WeightGen::Explicit(vec![1.0, 0.25])).unwrap();
        let m = MultilinearSpec::m_l1(w);
        let out = apply(&m, &[l1(&[1.0, 2.0, 3.0]), l1(&[5.0, 0.0, 0.0])]).unwrap();
        let r = reals(&out);
        assert!((r[0] - 10.0).abs() < 1e-13 && (r[1] - 3.75).abs() < 1e-13);
        let z = apply(&m, &[l1(&[1.0, 2.0, 3.0]), l1(&[0.0, 4.0, 4.0])]).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn symmetric_on_diagonal_is_polynomial() {
        let w = WeightSeq::inverse_square();
        let x = l1(&[0.5, -1.0, 2.0, 0.25]);
        let sym = apply(&MultilinearSpec::m_symmetric(w.clone()), &[x.clone(), x.clone()]).unwrap();
        let p = apply(&MultilinearSpec::m_l1(w), &[x.clone(), x]).unwrap();
        for i in 1..=p.len() {
            assert!(sym.get(i).rel_diff(p.get(i)) < 1e-15);
        }
    }

    #[test]
    fn zero_first_coordinates_give_zero_orbit() {
        let m = MultilinearSpec::mc_cn(3).unwrap();
        let cn = |v: &[f64]| SeqVector::from_reals(v, SpaceTag::Cn(3)).unwrap();
        let init = [cn(&[0.0, 1.0, 2.0, 3.0]), cn(&[0.0, 5.0, 1.0, 1.0]), cn(&[0.0, 1.0, 1.0, 1.0])];
        let orbit = iterate_bc(&m, &init, 3).unwrap();
        assert!(orbit.states.iter().all(|s| s.is_zero()));
    }

    #[test]
    fn four_step_hand_recursion() {
        // ω ≡ 1, x = y = (1,…,1): x_4 = B²(y)·c_4·d_4 = (1,1,1)
        let m = MultilinearSpec::m_l1(WeightSeq::unit());
        let ones = l1(&[1.0; 5]);
        let orbit = iterate_bc(&m, &[ones.clone(), ones], 4).unwrap();
        let x4 = orbit.state(4);
        assert_eq!(x4.len(), 3);
        assert!(reals(x4).iter().all(|&c| (c - 1.0).abs() < 1e-15));
    }

    #[test]
    fn exhaustion_is_recorded() {
        let m = MultilinearSpec::m_l1(WeightSeq::unit());
        let orbit = iterate_bc(&m, &[l1(&[1.0, 1.0]), l1(&[1.0, 1.0])], 10).unwrap();
        assert_eq!(orbit.exhausted_at, Some(3));
        assert_eq!(orbit.states.len(), 2);
    }

    #[test]
    fn wrong_space_and_arity() {
        let m = MultilinearSpec::m_fg_prime();
        assert!(matches!(apply(&m, &[l1(&[1.0, 2.0]), l1(&[1.0, 2.0])]), Err(DynError::Space(_))));
        assert!(matches!(apply(&m, &[l1(&[1.0, 2.0])]), Err(DynError::ArityMismatch { .. })));
        assert!(MultilinearSpec::new("bad", 3, 1, LinearPart::Derivative, true).is_err());
    }

    #[test]
    fn power_matches_iteration() {
        let v = l1(&[0.3, -1.5, 2.0, 0.7, -0.1, 4.0]);
        let w = WeightSeq::inverse_square();
        let lp = LinearPart::BackwardShift(w.clone());
        let mut it = v.clone();
        for _ in 0..3 {
            it = backward_shift(&it, &w).unwrap();
        }
        let direct = lp.power(&v, 3).unwrap().unwrap();
        for i in 1..=it.len() {
            assert!(it.get(i).rel_diff(direct.get(i)) < 1e-14);
        }
        assert!(lp.power(&v, 6).unwrap().is_none());
        let f = SeqVector::from_reals(&[1.0, 2.0, -3.0, 0.5], SpaceTag::Hc(1)).unwrap();
        let d2 = LinearPart::Derivative.power(&f, 2).unwrap().unwrap();
        let dd = derivative(&derivative(&f).unwrap()).unwrap();
        for i in 1..=dd.len() {
            assert!(dd.get(i).rel_diff(d2.get(i)) < 1e-14);
        }
    }

    #[test]
    fn registry_names_resolve() {
        for name in OPERATOR_REGISTRY {
            assert_eq!(MultilinearSpec::by_name(name, WeightSeq::unit(), 2).unwrap().name, name);
        }
        assert!(MultilinearSpec::by_name("nope", WeightSeq::unit(), 2).is_err());
    }
}
