//! Locating the boundary of `{x : P^n(x) → 0}` along a ray, for
//! `P(x) = x_1 B_ω(x)`.

use serde::Serialize;

use super::ConstructionError;
use crate::arith::{ln_factorial, LogComplex};
use crate::dynamics::{iterate_polynomial, Classification};
use crate::spaces::{SeqVector, SpaceTag, WeightSeq};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JuliaConfig {
    pub truncation: usize,
    pub iterations: usize,
    /// Convergence threshold; escape is declared above `1/tol`.
    pub tol: f64,
    /// Safety bound on the number of bisection steps.
    pub max_steps: usize,
}

impl Default for JuliaConfig {
    fn default() -> Self {
        JuliaConfig { truncation: 200, iterations: 500, tol: 1e-12, max_steps: 200 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JuliaProbe {
    #[serde(skip)]
    pub v: SeqVector,
    pub t_lo: f64,
    pub t_hi: f64,
    pub class_lo: Classification,
    pub class_hi: Classification,
    pub steps: usize,
    pub config: JuliaConfig,
}

impl JuliaProbe {
    pub fn width(&self) -> f64 {
        self.t_hi - self.t_lo
    }
}

/// `v_i = 1/(i-1)!²`.
pub fn factorial_tail(len: usize) -> SeqVector {
    let coords = (1..=len).map(|i| LogComplex::new(-2.0 * ln_factorial(i - 1), 0.0)).collect();
    SeqVector::new(coords, SpaceTag::L1).expect("finite coordinates")
}

fn classify_at(w: &WeightSeq, v: &SeqVector, t: f64, cfg: &JuliaConfig) -> Classification {
    let x = v.scale(LogComplex::from_real(t));
    iterate_polynomial(w, &x, cfg.iterations, cfg.tol).classify(cfg.tol)
}

/// Bisects `[t_lo, t_hi]` until its width is at most `tol`, keeping
/// `t_lo·v` attracted to 0 and `t_hi·v` not.
pub fn julia_ray_bisection(
    w: &WeightSeq,
    v: &SeqVector,
    t_lo: f64,
    t_hi: f64,
    tol: f64,
    cfg: &JuliaConfig,
) -> Result<JuliaProbe, ConstructionError> {
    if !(t_lo < t_hi) || !(tol > 0.0) {
        return Err(ConstructionError::BadBracket(format!("[{t_lo}, {t_hi}] with tolerance {tol}")));
    }
    let v = v.resized(cfg.truncation).with_space(SpaceTag::L1);
    let at = |t: f64| classify_at(w, &v, t, cfg);
    let class_lo = at(t_lo);
    if class_lo != Classification::ConvergesToZero {
        return Err(ConstructionError::BadBracket(format!("t = {t_lo} classifies as {}", class_lo.as_str())));
    }
    let class_hi = at(t_hi);
    if class_hi == Classification::ConvergesToZero {
        return Err(ConstructionError::BadBracket(format!("t = {t_hi} also converges to zero")));
    }
    let (mut lo, mut hi) = (t_lo, t_hi);
    let mut steps = 0;
    while hi - lo > tol {
        if steps == cfg.max_steps {
            return Err(ConstructionError::InvalidParameter(format!("no width {tol} after {steps} steps")));
        }
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid) == Classification::ConvergesToZero {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    let (class_lo, class_hi) = (at(lo), at(hi));
    if class_lo != Classification::ConvergesToZero {
        return Err(ConstructionError::BadBracket(format!("re-check at t = {lo} gave {}", class_lo.as_str())));
    }
    if class_hi == Classification::Undecided {
        return Err(ConstructionError::UndecidedRegion);
    }
    Ok(JuliaProbe { v, t_lo: lo, t_hi: hi, class_lo, class_hi, steps, config: *cfg })
}
