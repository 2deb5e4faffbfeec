//! Preimages under the symmetrized operator
//! `M(x, y) = (e_1'(x) B_ω(y) + e_1'(y) B_ω(x)) / 2`.

use serde::Serialize;

use super::ConstructionError;
use crate::arith::LogComplex;
use crate::dynamics::{apply, MultilinearSpec};
use crate::spaces::{forward_shift, norm, SeqVector, SpaceTag, WeightSeq};

#[derive(Debug, Clone, Serialize)]
pub struct SymmetricPreimage {
    #[serde(skip)]
    pub x: SeqVector,
    #[serde(skip)]
    pub y: SeqVector,
    /// `‖M(x, y) − x_0‖_1 / ‖x_0‖_1`, or the absolute error when `x_0 = 0`.
    pub residual: f64,
}

/// `x = λ S_ω(x_0) + Σ_{i≥2} e_i/i² + e_1` and
/// `y = −(λ−2) S_ω(x_0) − Σ_{i≥2} e_i/i² + e_1`, truncated to `len(x_0) + 1`.
pub fn symmetric_preimage(
    x0: &SeqVector,
    lambda: LogComplex,
    w: &WeightSeq,
) -> Result<SymmetricPreimage, ConstructionError> {
    let x0 = x0.clone().with_space(SpaceTag::L1);
    let s = forward_shift(&x0, w);
    let len = s.len();
    let tail: Vec<LogComplex> = (1..=len)
        .map(|i| if i == 1 { LogComplex::ONE } else { LogComplex::new(-2.0 * (i as f64).ln(), 0.0) })
        .collect();
    let tail = SeqVector::new(tail, SpaceTag::L1)?;
    let e1 = SeqVector::unit(1, len, SpaceTag::L1);
    let two = LogComplex::from_real(2.0);
    let x = s.scale(lambda).add(&tail);
    let y = e1.add(&e1).sub(&tail).sub(&s.scale(lambda - two));
    let image = apply(&MultilinearSpec::m_symmetric(w.clone()), &[x.clone(), y.clone()])?;
    let err = norm(&image.resized(x0.len()).sub(&x0));
    let scale = norm(&x0);
    let residual = if scale == f64::NEG_INFINITY { err.exp() } else { (err - scale).exp() };
    Ok(SymmetricPreimage { x, y, residual })
}
