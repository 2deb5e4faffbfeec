//! Asymptotic classification of orbits and the weight-collapse bound for
//! `M(f, g) = f(0) g'`.

use serde::Serialize;

use super::{ledger, DynError, MultilinearSpec, OrbitBC};
use crate::arith::{ln_factorial, LogComplex};
use crate::spaces::{backward_shift, eval_functional, norm, SeqVector, WeightSeq};

/// Consecutive small, decreasing norms required before declaring convergence.
pub const CONVERGENCE_RUN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    ConvergesToZero,
    Bounded,
    Escaping,
    Undecided,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::ConvergesToZero => "converges_to_zero",
            Classification::Bounded => "bounded",
            Classification::Escaping => "escaping",
            Classification::Undecided => "undecided",
        }
    }
}

/// Classifies a sequence of log-norms.
///
/// * escaping: some norm exceeds `1/tol`;
/// * converges to zero: the last `zero_run` states are exactly zero, or the
///   last [`CONVERGENCE_RUN`] norms are below `tol` and strictly decreasing;
/// * bounded: the second half never exceeds the maximum of the first half.
pub fn classify_norms(log_norms: &[f64], zero_run: usize, tol: f64) -> Classification {
    let log_tol = tol.ln();
    if log_norms.iter().any(|&l| l > -log_tol) {
        return Classification::Escaping;
    }
    let n = log_norms.len();
    let zero_run = zero_run.max(1);
    if n >= zero_run && log_norms[n - zero_run..].iter().all(|&l| l == f64::NEG_INFINITY) {
        return Classification::ConvergesToZero;
    }
    if n >= CONVERGENCE_RUN {
        let tail = &log_norms[n - CONVERGENCE_RUN..];
        let small = tail.iter().all(|&l| l < log_tol);
        let decreasing = tail.windows(2).all(|p| p[1] < p[0] || p[1] == f64::NEG_INFINITY);
        if small && decreasing {
            return Classification::ConvergesToZero;
        }
    }
    if n >= 2 {
        let (first, second) = log_norms.split_at(n / 2);
        let max = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max(second) <= max(first) {
            return Classification::Bounded;
        }
    }
    Classification::Undecided
}

/// Classifies the first `horizon` states of a BC orbit (all of them if the
/// truncation window ran out earlier).
pub fn classify_orbit(orbit: &OrbitBC, horizon: usize, tol: f64) -> Classification {
    let norms = orbit.log_norms();
    let h = horizon.min(norms.len());
    classify_norms(&norms[..h], orbit.arity, tol)
}

/// Log-norms of `P^n(x)` for the induced polynomial `P(x) = x_1 B_ω(x)`.
#[derive(Debug, Clone, Serialize)]
pub struct PolynomialOrbit {
    pub log_norms: Vec<f64>,
    pub exhausted_at: Option<usize>,
    /// Step at which iteration stopped because the norm passed `1/tol`.
    pub escaped_at: Option<usize>,
}

impl PolynomialOrbit {
    pub fn classify(&self, tol: f64) -> Classification {
        classify_norms(&self.log_norms, 1, tol)
    }
}

/// Iterates `P(x) = x_1 B_ω(x)` up to `steps` times. Stops early once the
/// state is zero, its norm exceeds `1/tol`, or the window is exhausted.
pub fn iterate_polynomial(w: &WeightSeq, x: &SeqVector, steps: usize, tol: f64) -> PolynomialOrbit {
    let mut log_norms = Vec::with_capacity(steps);
    let mut cur = x.clone();
    let mut exhausted_at = None;
    let mut escaped_at = None;
    for n in 1..=steps {
        let lead = eval_functional(&cur);
        let next = match backward_shift(&cur, w) {
            Ok(v) => v.scale(lead),
            Err(_) => {
                exhausted_at = Some(n);
                break;
            }
        };
        let ln = norm(&next);
        log_norms.push(ln);
        cur = next;
        if ln > -tol.ln() {
            escaped_at = Some(n);
            break;
        }
        if ln == f64::NEG_INFINITY {
            break;
        }
    }
    PolynomialOrbit { log_norms, exhausted_at, escaped_at }
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseEntry {
    pub n: usize,
    pub log_c: f64,
    pub log_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollapseReport {
    pub k: f64,
    pub delta: f64,
    pub f0_mag: f64,
    pub hypothesis_violation: Option<String>,
    pub entries: Vec<CollapseEntry>,
    /// First `n` with `log|c_n|` above the bound.
    pub first_failure: Option<usize>,
}

impl CollapseReport {
    pub fn bound_holds(&self) -> bool {
        self.first_failure.is_none()
    }

    pub fn passed(&self) -> bool {
        self.hypothesis_violation.is_none() && self.bound_holds()
    }
}

/// `ln k` for the smallest `k ≥ 1` with `k 2^{2^{n/2}} ≥ (n-2)! 2^{2^{(n-1)/2}}`
/// for every `n ≥ 2`.
pub fn collapse_log_k() -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let mut best = 0.0f64;
    for n in 2..400usize {
        let nf = n as f64;
        let e = ln_factorial(n - 2) + (2f64.powf((nf - 1.0) / 2.0) - 2f64.powf(nf / 2.0)) * ln2;
        best = best.max(e);
    }
    best
}

/// Runs the `c_n(f, g)` recursion for `M(f, g) = f(0) g'` with `|f(0)| = f0_mag`
/// and checks `log|c_n| ≤ -ln k - 2^{n/2} ln 2` for `n ≤ n_max`.
///
/// The hypotheses `|f(0)| < δ = 1/(4k)` and `|g^{(n)}(0)| ≤ n!` are checked
/// and any failure is recorded in the report; the recursion still runs.
pub fn verify_weight_collapse(f0_mag: f64, g: &SeqVector, n_max: usize) -> Result<CollapseReport, DynError> {
    if !g.space().is_hc() {
        return Err(crate::spaces::SpaceError::WrongSpace { expected: "HC".into(), found: g.space().to_string() }.into());
    }
    let log_k = collapse_log_k();
    let k = log_k.exp();
    let delta = 1.0 / (4.0 * k);
    let mut violation = None;
    if !(f0_mag.abs() < delta) {
        violation = Some(format!("|f(0)| = {f0_mag} is not below delta = {delta}"));
    } else if let Some(j) = (0..g.len()).find(|&j| g.get(j + 1).log_mag() > 1e-12) {
        violation = Some(format!("|g^({j})(0)| exceeds {j}!"));
    }
    let spec = MultilinearSpec::m_fg_prime();
    let f = SeqVector::new(vec![LogComplex::from_real(f0_mag)], g.space())?;
    // coefficients past the stored ones are zero
    let g_pad = g.resized(g.len().max(n_max + 1));
    let led = ledger(&spec, &[f, g_pad], n_max)?;
    let ln2 = std::f64::consts::LN_2;
    let mut entries = Vec::with_capacity(n_max);
    let mut first_failure = None;
    for n in 1..=n_max {
        let log_c = led.c(n).log_mag();
        let log_bound = -log_k - 2f64.powf(n as f64 / 2.0) * ln2;
        if log_c > log_bound && first_failure.is_none() {
            first_failure = Some(n);
        }
        entries.push(CollapseEntry { n, log_c, log_bound });
    }
    Ok(CollapseReport { k, delta, f0_mag, hypothesis_violation: violation, entries, first_failure })
}

#[cfg(test)]
mod tests {
    use super::super::iterate_bc;
    use super::*;
    use crate::spaces::SpaceTag;
    use proptest::prelude::*;

    fn l1(v: &[f64]) -> SeqVector {
        SeqVector::from_reals(v, SpaceTag::L1).unwrap()
    }

    #[test]
    fn unit_vectors_die_after_one_step() {
        let spec = MultilinearSpec::m_l1(WeightSeq::unit());
        let e1 = SeqVector::unit(1, 8, SpaceTag::L1);
        let orbit = iterate_bc(&spec, &[e1.clone(), e1], 6).unwrap();
        assert!(orbit.state(1).is_zero());
        assert_eq!(classify_orbit(&orbit, 6, 1e-12), Classification::ConvergesToZero);
    }

    #[test]
    fn large_first_coordinates_escape() {
        let spec = MultilinearSpec::m_l1(WeightSeq::unit());
        let x = l1(&[10.0; 100]);
        let orbit = iterate_bc(&spec, &[x.clone(), x], 60).unwrap();
        assert_eq!(classify_orbit(&orbit, 60, 1e-12), Classification::Escaping);
    }

    #[test]
    fn unit_ball_converges() {
        let spec = MultilinearSpec::m_l1(WeightSeq::unit());
        let x = l1(&[0.3; 128]).scale(LogComplex::from_real(1.0 / 128.0));
        let y = l1(&[-0.5; 128]).scale(LogComplex::from_real(1.0 / 128.0));
        let orbit = iterate_bc(&spec, &[x, y], 200).unwrap();
        assert_eq!(classify_orbit(&orbit, 200, 1e-12), Classification::ConvergesToZero);
    }

    #[test]
    fn bounded_and_undecided() {
        assert_eq!(classify_norms(&[0.0, 1.0, 0.5, 0.2, 0.9, 1.0], 2, 1e-12), Classification::Bounded);
        assert_eq!(classify_norms(&[0.0, 0.1, 0.5, 2.0], 2, 1e-12), Classification::Undecided);
        // a transient dip is not convergence
        let mut dip = vec![0.0; 20];
        dip.extend([-40.0, -41.0, -42.0]);
        assert_ne!(classify_norms(&dip, 2, 1e-12), Classification::ConvergesToZero);
    }

    #[test]
    fn collapse_constants() {
        let k = collapse_log_k().exp();
        assert!(k > 60.0 && k < 62.0, "k = {k}");
    }

    #[test]
    fn collapse_examples() {
        let hc = SpaceTag::Hc(1);
        let g = SeqVector::from_reals(&[1.0; 45], hc).unwrap();
        let r = verify_weight_collapse(0.0, &g, 40).unwrap();
        assert!(r.passed());
        assert!(r.entries.iter().all(|e| e.log_c == f64::NEG_INFINITY));
        let delta = verify_weight_collapse(0.0, &g, 1).unwrap().delta;
        let r = verify_weight_collapse(0.999 * delta, &g, 40).unwrap();
        assert!(r.passed(), "{r:?}");
        let r = verify_weight_collapse(10.0, &g, 40).unwrap();
        assert!(r.hypothesis_violation.is_some());
        assert!(!r.passed());
        let big_g = SeqVector::from_reals(&[1.0, 3.0], hc).unwrap();
        assert!(verify_weight_collapse(0.5 * delta, &big_g, 10).unwrap().hypothesis_violation.is_some());
    }

    proptest! {
        #[test]
        fn contraction_ball_orbits_converge(
            x in prop::collection::vec(-1.0f64..1.0, 110),
            y in prop::collection::vec(-1.0f64..1.0, 110),
        ) {
            // ℓ1 norms below 1 with ‖M‖ ≤ 1
            let sx: f64 = x.iter().map(|v| v.abs()).sum::<f64>() * 1.01 + 1e-3;
            let sy: f64 = y.iter().map(|v| v.abs()).sum::<f64>() * 1.01 + 1e-3;
            let x = l1(&x.iter().map(|v| v / sx).collect::<Vec<_>>());
            let y = l1(&y.iter().map(|v| v / sy).collect::<Vec<_>>());
            let spec = MultilinearSpec::m_l1(WeightSeq::unit());
            let orbit = iterate_bc(&spec, &[x, y], 200).unwrap();
            prop_assert_eq!(classify_orbit(&orbit, 200, 1e-12), Classification::ConvergesToZero);
            let norms = orbit.log_norms();
            for p in norms[2..].windows(2) {
                prop_assert!(p[1] <= p[0]);
            }
        }
    }
}
