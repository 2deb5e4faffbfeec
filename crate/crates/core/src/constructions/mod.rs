//! Builders for the explicit vectors and functions behind the hypercyclicity
//! results, each returned together with the inequalities it must satisfy.

mod companion;
mod delta_d;
mod gap;
mod julia;
mod qblocks;
mod steering;
mod symmetric;

use serde::Serialize;
use thiserror::Error;

use crate::arith::{ArithError, LogComplex};
use crate::dynamics::DynError;
use crate::spaces::SpaceError;

pub use companion::{
    companion_x, phi_map, weight_identity, WeightIdentityEntry, WeightIdentityReport,
};
pub use delta_d::{delta_d_pair, universal_g, DeltaDPair, UniversalG};
pub use gap::{
    gap_schedule_search, universal_y_l1, BlockRecord, GapSchedule, UniversalL1, DEFAULT_SEARCH_CAP,
};
pub use julia::{factorial_tail, julia_ray_bisection, JuliaConfig, JuliaProbe};
pub use qblocks::{hc_q_blocks, inductive_constant, QBlock, QBlocks};
pub use steering::{c_k_rational, forward_iterate_rational, steer_target_cn};
pub use symmetric::{symmetric_preimage, SymmetricPreimage};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructionError {
    #[error("zero coordinate at index {0}")]
    ZeroCoordinate(usize),
    #[error("block {j}: no admissible n_j below the search cap {cap}")]
    SearchOverflow { j: usize, cap: usize },
    #[error("certificate {name} failed at index {index}: {measured} > {bound}")]
    CertificateFailure { name: String, index: usize, measured: f64, bound: f64 },
    #[error("root of zero: {0}")]
    RootOfZero(String),
    #[error("bad bracket: {0}")]
    BadBracket(String),
    #[error("classification undecided across the bracket")]
    UndecidedRegion,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// One checked inequality `measured ≤ bound` (both in the units named by
/// `name`, usually natural logs).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub name: String,
    pub index: usize,
    pub measured: f64,
    pub bound: f64,
}

impl Certificate {
    pub fn new(name: impl Into<String>, index: usize, measured: f64, bound: f64) -> Self {
        Certificate { name: name.into(), index, measured, bound }
    }

    pub fn passed(&self) -> bool {
        self.measured <= self.bound
    }

    pub fn margin(&self) -> f64 {
        self.bound - self.measured
    }

    pub fn into_result(self) -> Result<Self, ConstructionError> {
        if self.passed() {
            Ok(self)
        } else {
            Err(ConstructionError::CertificateFailure {
                name: self.name,
                index: self.index,
                measured: self.measured,
                bound: self.bound,
            })
        }
    }
}

/// First failing certificate, as an error.
pub fn first_failure(certs: &[Certificate]) -> Result<(), ConstructionError> {
    match certs.iter().find(|c| !c.passed()) {
        Some(c) => c.clone().into_result().map(|_| ()),
        None => Ok(()),
    }
}

/// Targets `z_k ∈ c_00` with support exactly `[1, k]` and `1/k ≤ |[z_k]_i| ≤ k`,
/// and polynomials `p_n = Σ_{i≤n} a_{i,n} z^i` with `1/n ≤ |a_{i,n}| ≤ n`.
///
/// The default generator is `(1/k)(1 + (i mod k)(k-1)/k)·(-1)^{i+k}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DenseTestSeq {
    targets: Option<Vec<Vec<LogComplex>>>,
    polys: Option<Vec<Vec<LogComplex>>>,
}

fn default_entry(i: usize, k: usize) -> LogComplex {
    let kf = k as f64;
    let mag = (1.0 + (i % k) as f64 * (kf - 1.0) / kf) / kf;
    let sign = if (i + k) % 2 == 0 { 1.0 } else { -1.0 };
    LogComplex::from_real(sign * mag)
}

impl DenseTestSeq {
    pub fn new() -> Self {
        Self::default()
    }

    /// Explicit targets; `targets[k-1]` must have length `k`.
    pub fn with_targets(mut self, targets: Vec<Vec<LogComplex>>) -> Result<Self, ConstructionError> {
        for (k, t) in targets.iter().enumerate() {
            check_constraint(t, k + 1, k + 1)?;
        }
        self.targets = Some(targets);
        Ok(self)
    }

    /// Explicit polynomial coefficients; `polys[n-1]` must have length `n + 1`.
    pub fn with_polys(mut self, polys: Vec<Vec<LogComplex>>) -> Result<Self, ConstructionError> {
        for (n, p) in polys.iter().enumerate() {
            check_constraint(p, n + 2, n + 1)?;
        }
        self.polys = Some(polys);
        Ok(self)
    }

    /// `z_k` as coordinates `1..=k`.
    pub fn target(&self, k: usize) -> Vec<LogComplex> {
        match &self.targets {
            Some(t) if k <= t.len() => t[k - 1].clone(),
            _ => (1..=k).map(|i| default_entry(i, k)).collect(),
        }
    }

    /// `a_{0,n}, …, a_{n,n}`.
    pub fn poly(&self, n: usize) -> Vec<LogComplex> {
        match &self.polys {
            Some(p) if n <= p.len() => p[n - 1].clone(),
            _ => (0..=n).map(|i| default_entry(i, n)).collect(),
        }
    }
}

fn check_constraint(v: &[LogComplex], len: usize, k: usize) -> Result<(), ConstructionError> {
    if v.len() != len {
        return Err(ConstructionError::InvalidParameter(format!("entry {k} has length {} (expected {len})", v.len())));
    }
    let lk = (k as f64).ln();
    for (i, c) in v.iter().enumerate() {
        if c.is_zero() || c.log_mag() < -lk - 1e-12 || c.log_mag() > lk + 1e-12 {
            return Err(ConstructionError::InvalidParameter(format!("entry {k}, coordinate {i} outside [1/{k}, {k}]")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_targets_meet_constraints() {
        let d = DenseTestSeq::new();
        for k in 1..60 {
            let z = d.target(k);
            assert_eq!(z.len(), k);
            check_constraint(&z, k, k).unwrap();
            let p = d.poly(k);
            assert_eq!(p.len(), k + 1);
            check_constraint(&p, k + 1, k).unwrap();
        }
        assert!(DenseTestSeq::new().with_targets(vec![vec![LogComplex::from_real(2.0)]]).is_err());
    }
}
