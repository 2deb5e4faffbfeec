//! Quasiconjugation of `M(u, v) = e_1'(v) B_ω(u)` onto a host space with a
//! bounded Markushevich basis `(x_n, x_n^*)`, through `φ(a) = Σ_l a_l x_l`.
//!
//! Host vectors are dense complex coordinates of length `N + 1`; basis
//! vectors and functionals are stored sparsely.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dynamics::{apply, iterate_bc, DynError, MultilinearSpec};
use crate::spaces::{SeqVector, SpaceError, SpaceTag, WeightSeq};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConjugationError {
    #[error("parameter out of range: {0}")]
    ParameterRange(String),
    #[error("truncation window exhausted at step {0}")]
    WindowExhausted(usize),
    #[error("malformed basis: {0}")]
    Parse(String),
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

type Sparse = Vec<(usize, Complex64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum BasisKind {
    Identity,
    /// `x_n = s_n e_n`; the last scale repeats if the list is short.
    Diagonal(Vec<f64>),
    /// `x_n = e_n + u 2^{-n} e_{n+1}`.
    Banded(f64),
    /// Read from JSON without a generator.
    Imported,
}

impl BasisKind {
    /// `s_n = 1 + 1/(2n)`.
    pub fn default_diagonal(n: usize) -> Self {
        BasisKind::Diagonal((1..=n).map(|k| 1.0 + 0.5 / k as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkushevichBasis {
    pub kind: BasisKind,
    vectors: Vec<Sparse>,
    functionals: Vec<Sparse>,
    host_dim: usize,
    /// `sup_n ‖x_n‖_1 ‖x_n^*‖_∞`.
    pub bound: f64,
}

fn dot(row: &Sparse, h: &[Complex64]) -> Complex64 {
    row.iter().filter(|(i, _)| *i <= h.len()).map(|(i, c)| c * h[i - 1]).sum()
}

fn sparse_dot(row: &Sparse, v: &Sparse) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (i, a) in row {
        if let Some((_, b)) = v.iter().find(|(j, _)| j == i) {
            s += a * b;
        }
    }
    s
}

pub fn l1_norm(h: &[Complex64]) -> f64 {
    h.iter().map(|c| c.norm()).sum()
}

fn bound_of(vectors: &[Sparse], functionals: &[Sparse]) -> f64 {
    vectors
        .iter()
        .zip(functionals)
        .map(|(x, f)| {
            let nx: f64 = x.iter().map(|(_, c)| c.norm()).sum();
            let nf = f.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max);
            nx * nf
        })
        .fold(0.0, f64::max)
}

/// Builds `N` basis vectors in a host of dimension `N + 1`.
pub fn host_basis(kind: BasisKind, n: usize) -> Result<MarkushevichBasis, ConjugationError> {
    if n == 0 {
        return Err(ConjugationError::ParameterRange("at least one basis vector".into()));
    }
    let one = Complex64::new(1.0, 0.0);
    let (vectors, functionals): (Vec<Sparse>, Vec<Sparse>) = match &kind {
        BasisKind::Identity => (1..=n).map(|k| (vec![(k, one)], vec![(k, one)])).unzip(),
        BasisKind::Diagonal(s) => {
            if s.is_empty() {
                return Err(ConjugationError::ParameterRange("empty scale list".into()));
            }
            if let Some(bad) = s.iter().find(|v| !(0.5..=2.0).contains(*v)) {
                return Err(ConjugationError::ParameterRange(format!("scale {bad} outside [1/2, 2]")));
            }
            (1..=n)
                .map(|k| {
                    let sk = s[(k - 1).min(s.len() - 1)];
                    (vec![(k, Complex64::new(sk, 0.0))], vec![(k, Complex64::new(1.0 / sk, 0.0))])
                })
                .unzip()
        }
        BasisKind::Banded(u) => {
            if !(u.abs() < 0.5) {
                return Err(ConjugationError::ParameterRange(format!("|u| = {} must be below 1/2", u.abs())));
            }
            let sub = |t: usize| u * 0.5f64.powi(t as i32);
            let vectors = (1..=n).map(|k| vec![(k, one), (k + 1, Complex64::new(sub(k), 0.0))]).collect();
            // rows of the inverse of the unit lower-bidiagonal matrix:
            // (X^{-1})_{k,j} = Π_{t=j}^{k-1} (-u 2^{-t}) for j ≤ k
            let functionals = (1..=n)
                .map(|k| {
                    let mut row = vec![(k, one)];
                    let mut p = 1.0;
                    for j in (1..k).rev() {
                        p *= -sub(j);
                        if p == 0.0 {
                            break;
                        }
                        row.push((j, Complex64::new(p, 0.0)));
                    }
                    row.reverse();
                    row
                })
                .collect();
            (vectors, functionals)
        }
        BasisKind::Imported => return Err(ConjugationError::ParameterRange("imported bases come from JSON".into())),
    };
    let bound = bound_of(&vectors, &functionals);
    Ok(MarkushevichBasis { kind, vectors, functionals, host_dim: n + 1, bound })
}

impl MarkushevichBasis {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn host_dim(&self) -> usize {
        self.host_dim
    }

    pub fn is_bounded(&self, eps: f64) -> bool {
        self.bound <= 1.0 + eps
    }

    /// `x_n` as a dense host vector.
    pub fn vector(&self, n: usize) -> Vec<Complex64> {
        let mut h = vec![Complex64::new(0.0, 0.0); self.host_dim];
        for (i, c) in &self.vectors[n - 1] {
            h[i - 1] = *c;
        }
        h
    }

    /// `x_n^*(h)`.
    pub fn functional(&self, n: usize, h: &[Complex64]) -> Complex64 {
        dot(&self.functionals[n - 1], h)
    }

    /// `max_{n,k} |x_n^*(x_k) − δ_{n,k}|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (n, f) in self.functionals.iter().enumerate() {
            // only x_k meeting the support of x_n^* can pair nontrivially
            let lo = f.first().map_or(1, |(i, _)| i.saturating_sub(1).max(1));
            let hi = f.last().map_or(0, |(i, _)| *i).min(self.len());
            for k in lo..=hi {
                let delta = if k == n + 1 { 1.0 } else { 0.0 };
                worst = worst.max((sparse_dot(f, &self.vectors[k - 1]) - delta).norm());
            }
        }
        worst
    }

    /// `φ(a) = Σ_l a_l x_l` for coefficients `a_1, …, a_L`, `L ≤ N`.
    pub fn phi(&self, a: &[Complex64]) -> Result<Vec<Complex64>, ConjugationError> {
        if a.len() > self.len() {
            return Err(ConjugationError::ParameterRange(format!("{} coefficients for {} basis vectors", a.len(), self.len())));
        }
        let mut h = vec![Complex64::new(0.0, 0.0); self.host_dim];
        for (l, al) in a.iter().enumerate() {
            if *al == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (i, c) in &self.vectors[l] {
                h[i - 1] += al * c;
            }
        }
        Ok(h)
    }

    pub fn phi_seq(&self, v: &SeqVector) -> Result<Vec<Complex64>, ConjugationError> {
        let a: Vec<Complex64> = v.to_complex().into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        self.phi(&a)
    }

    pub fn to_json(&self) -> Value {
        let dense = |s: &Sparse| -> Vec<(f64, f64)> {
            let end = s.last().map_or(0, |(i, _)| *i);
            let mut v = vec![(0.0, 0.0); end];
            for (i, c) in s {
                v[i - 1] = (c.re, c.im);
            }
            v
        };
        let vectors: Vec<Value> = self
            .vectors
            .iter()
            .map(|s| SeqVector::from_complex(&dense(s), SpaceTag::L1).expect("finite").resized(self.host_dim).to_json())
            .collect();
        let functionals: Vec<Value> = self.functionals.iter().map(|s| json!(dense(s))).collect();
        json!({
            "kind": self.kind,
            "host_dim": self.host_dim,
            "bound": self.bound,
            "vectors": vectors,
            "functionals": functionals,
        })
    }

    pub fn from_json(value: &Value) -> Result<Self, ConjugationError> {
        let err = |m: &str| ConjugationError::Parse(m.to_string());
        let host_dim = value["host_dim"].as_u64().ok_or_else(|| err("host_dim"))? as usize;
        let kind = serde_json::from_value(value["kind"].clone()).unwrap_or(BasisKind::Imported);
        let to_sparse = |pairs: Vec<(f64, f64)>| -> Sparse {
            pairs
                .into_iter()
                .enumerate()
                .filter(|(_, (re, im))| *re != 0.0 || *im != 0.0)
                .map(|(i, (re, im))| (i + 1, Complex64::new(re, im)))
                .collect()
        };
        let vectors: Vec<Sparse> = value["vectors"]
            .as_array()
            .ok_or_else(|| err("vectors"))?
            .iter()
            .map(|v| SeqVector::from_json(v).map(|s| to_sparse(s.to_complex())))
            .collect::<Result<_, _>>()?;
        let functionals: Vec<Sparse> = value["functionals"]
            .as_array()
            .ok_or_else(|| err("functionals"))?
            .iter()
            .map(|row| serde_json::from_value::<Vec<(f64, f64)>>(row.clone()).map(to_sparse).map_err(|e| err(&e.to_string())))
            .collect::<Result<_, _>>()?;
        if vectors.len() != functionals.len() || vectors.is_empty() {
            return Err(err("vector and functional counts differ"));
        }
        if vectors.iter().chain(&functionals).flatten().any(|(i, _)| *i > host_dim) {
            return Err(err("entry beyond host_dim"));
        }
        let bound = bound_of(&vectors, &functionals);
        Ok(MarkushevichBasis { kind, vectors, functionals, host_dim, bound })
    }
}

/// `N(u, v) = x_1^*(v) Σ_{l≥2} x_l^*(u) ω_{l-1} x_{l-1}`; the `l = 1` term,
/// which would point at a nonexistent `x_0`, is zero.
#[derive(Debug, Clone)]
pub struct ConjugatedOperator {
    pub basis: MarkushevichBasis,
    pub w: WeightSeq,
}

pub fn build_n(basis: &MarkushevichBasis, w: &WeightSeq) -> Result<ConjugatedOperator, ConjugationError> {
    if basis.len() < 2 {
        return Err(ConjugationError::ParameterRange("N needs at least two basis vectors".into()));
    }
    Ok(ConjugatedOperator { basis: basis.clone(), w: w.clone() })
}

impl ConjugatedOperator {
    pub fn apply(&self, u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        let b = &self.basis;
        let mut out = vec![Complex64::new(0.0, 0.0); b.host_dim];
        let lead = b.functional(1, v);
        if lead == Complex64::new(0.0, 0.0) {
            return out;
        }
        for l in 2..=b.len() {
            let c = b.functional(l, u);
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let s = lead * c * self.w.log_weight(l - 1).exp();
            for (i, x) in &b.vectors[l - 2] {
                out[i - 1] += s * x;
            }
        }
        out
    }
}

fn to_host(v: &SeqVector) -> Vec<Complex64> {
    v.to_complex().into_iter().map(|(re, im)| Complex64::new(re, im)).collect()
}

fn diff_norm(a: &[Complex64], b: &[Complex64]) -> f64 {
    let n = a.len().max(b.len());
    let z = Complex64::new(0.0, 0.0);
    (0..n).map(|i| (a.get(i).unwrap_or(&z) - b.get(i).unwrap_or(&z)).norm()).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutationReport {
    pub basis_pairs: usize,
    /// `max ‖φ(M(e_k, e_j)) − N(x_k, x_j)‖_1` over `k, j ≤ samples`.
    pub basis_max: f64,
    pub random_pairs: usize,
    /// Largest `‖φ(M(u, v)) − N(φu, φv)‖_1 / (1 + ‖N(φu, φv)‖_1)` over random pairs.
    pub random_max: f64,
}

impl CommutationReport {
    pub fn max_residual(&self) -> f64 {
        self.basis_max.max(self.random_max)
    }
}

/// Compares `φ ∘ M` with `N ∘ (φ × φ)` on basis pairs and on seeded random
/// pairs with coordinates `|a_l| ≤ 1/l`.
pub fn commutation_check(
    m: &MultilinearSpec,
    n: &ConjugatedOperator,
    samples: usize,
    random_pairs: usize,
    seed: u64,
) -> Result<CommutationReport, ConjugationError> {
    let dim = n.basis.len();
    let samples = samples.min(dim);
    let side = |u: &SeqVector, v: &SeqVector| -> Result<f64, ConjugationError> {
        let lhs = n.basis.phi_seq(&apply(m, &[u.clone(), v.clone()])?)?;
        let rhs = n.apply(&n.basis.phi_seq(u)?, &n.basis.phi_seq(v)?);
        Ok(diff_norm(&lhs, &rhs) / (1.0 + l1_norm(&rhs)))
    };
    let mut basis_max: f64 = 0.0;
    for k in 1..=samples {
        for j in 1..=samples {
            let (ek, ej) = (SeqVector::unit(k, dim, SpaceTag::L1), SeqVector::unit(j, dim, SpaceTag::L1));
            basis_max = basis_max.max(side(&ek, &ej)?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random = || -> Result<SeqVector, ConjugationError> {
        let vals: Vec<(f64, f64)> = (1..=dim)
            .map(|l| (rng.gen_range(-1.0..1.0) / l as f64, rng.gen_range(-1.0..1.0) / l as f64))
            .collect();
        Ok(SeqVector::from_complex(&vals, SpaceTag::L1)?)
    };
    let mut random_max: f64 = 0.0;
    for _ in 0..random_pairs {
        let (u, v) = (random()?, random()?);
        random_max = random_max.max(side(&u, &v)?);
    }
    Ok(CommutationReport { basis_pairs: samples * samples, basis_max, random_pairs, random_max })
}

#[derive(Debug, Clone, Serialize)]
pub struct PushforwardReport {
    /// `‖φ(x_n^M) − x_n^N‖_1 / (1 + ‖x_n^N‖_1)` for `n = 1..=steps`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

impl PushforwardReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_residual <= tol
    }
}

/// Runs the BC orbit of `M` from `init` and the orbit of `N` from `φ(init)`
/// side by side.
pub fn pushforward_orbit_check(
    m: &MultilinearSpec,
    n: &ConjugatedOperator,
    init: &[SeqVector],
    steps: usize,
) -> Result<PushforwardReport, ConjugationError> {
    let orbit = iterate_bc(m, init, steps)?;
    if let Some(at) = orbit.exhausted_at {
        return Err(ConjugationError::WindowExhausted(at));
    }
    let mut window: Vec<Vec<Complex64>> = init.iter().map(|v| n.basis.phi_seq(v)).collect::<Result<_, _>>()?;
    let mut residuals = Vec::with_capacity(steps);
    for k in 1..=steps {
        let len = window.len();
        let next = n.apply(&window[len - 2], &window[len - 1]);
        let pushed = n.basis.phi(&to_host(orbit.state(k)))?;
        residuals.push(diff_norm(&pushed, &next) / (1.0 + l1_norm(&next)));
        window.push(next);
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(PushforwardReport { residuals, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::LogComplex;

    fn m() -> MultilinearSpec {
        MultilinearSpec::m_l1(WeightSeq::inverse_square())
    }

    #[test]
    fn identity_basis() {
        let b = host_basis(BasisKind::Identity, 30).unwrap();
        assert_eq!(b.biorthogonality_residual(), 0.0);
        assert_eq!(b.bound, 1.0);
        let n = build_n(&b, &WeightSeq::inverse_square()).unwrap();
        // N(e_k, e_j) = δ_{1,j} e_{k-1}/(k-1)^2
        for k in 1..=6 {
            for j in 1..=3 {
                let out = n.apply(&b.vector(k), &b.vector(j));
                for i in 1..=b.host_dim() {
                    let expected = if j == 1 && k >= 2 && i == k - 1 { 1.0 / ((k - 1) * (k - 1)) as f64 } else { 0.0 };
                    assert!((out[i - 1].re - expected).abs() < 1e-16 && out[i - 1].im == 0.0);
                }
            }
        }
        let r = commutation_check(&m(), &n, 10, 10, 1).unwrap();
        assert_eq!(r.basis_max, 0.0);
        assert!(r.random_max < 1e-15);
    }

    #[test]
    fn diagonal_basis() {
        let b = host_basis(BasisKind::default_diagonal(40), 40).unwrap();
        assert!(b.biorthogonality_residual() < 1e-15);
        assert!((b.bound - 1.0).abs() <= f64::EPSILON);
        let n = build_n(&b, &WeightSeq::inverse_square()).unwrap();
        for k in 2..=10 {
            let out = n.apply(&b.vector(k), &b.vector(1));
            let expected: Vec<Complex64> = b.vector(k - 1).iter().map(|c| c / ((k - 1) * (k - 1)) as f64).collect();
            assert!(diff_norm(&out, &expected) < 1e-15);
        }
        assert!(commutation_check(&m(), &n, 12, 20, 2).unwrap().max_residual() < 1e-14);
        assert!(host_basis(BasisKind::Diagonal(vec![3.0]), 4).is_err());
    }

    #[test]
    fn banded_basis() {
        let b = host_basis(BasisKind::Banded(0.3), 200).unwrap();
        assert!(b.biorthogonality_residual() < 1e-13);
        assert!((b.bound - 1.15).abs() < 1e-15);
        assert!(b.is_bounded(0.15 + 1e-12));
        let n = build_n(&b, &WeightSeq::inverse_square()).unwrap();
        let r = commutation_check(&m(), &n, 15, 50, 3).unwrap();
        assert!(r.max_residual() <= 1e-10, "{r:?}");
        assert!(host_basis(BasisKind::Banded(0.5), 4).is_err());
    }

    #[test]
    fn large_bases_stay_biorthogonal() {
        for kind in [BasisKind::Identity, BasisKind::default_diagonal(1000), BasisKind::Banded(-0.49)] {
            assert!(host_basis(kind, 1000).unwrap().biorthogonality_residual() <= 1e-12);
        }
    }

    #[test]
    fn zero_lead_functional() {
        let b = host_basis(BasisKind::Banded(0.2), 10).unwrap();
        let n = build_n(&b, &WeightSeq::inverse_square()).unwrap();
        let v = b.vector(3);
        assert_eq!(b.functional(1, &v), Complex64::new(0.0, 0.0));
        assert!(n.apply(&b.vector(4), &v).iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn pushforward() {
        let len = 60;
        let vals = |f: fn(usize) -> f64| (1..=len).map(f).collect::<Vec<f64>>();
        let x = SeqVector::from_reals(&vals(|i| 0.5 / i as f64), SpaceTag::L1).unwrap();
        let y = SeqVector::from_reals(&vals(|i| 0.4 * (i as f64).cos() / i as f64), SpaceTag::L1).unwrap();
        for kind in [BasisKind::Identity, BasisKind::default_diagonal(len), BasisKind::Banded(0.3)] {
            let b = host_basis(kind, len).unwrap();
            let n = build_n(&b, &WeightSeq::inverse_square()).unwrap();
            let r = pushforward_orbit_check(&m(), &n, &[x.clone(), y.clone()], 50).unwrap();
            assert!(r.passed(1e-9), "{r:?}");
        }
        let b = host_basis(BasisKind::Identity, len).unwrap();
        let n = build_n(&b, &WeightSeq::inverse_square()).unwrap();
        // M runs in log-polar arithmetic and N in Cartesian, so only rounding separates them
        assert!(pushforward_orbit_check(&m(), &n, &[x.clone(), y.clone()], 50).unwrap().max_residual < 1e-15);
        // y_1 = 0 kills both orbits
        let mut y0 = y.clone();
        y0.set(1, LogComplex::ZERO);
        let r = pushforward_orbit_check(&m(), &n, &[x.clone(), y0], 10).unwrap();
        assert_eq!(r.max_residual, 0.0);
        assert!(matches!(
            pushforward_orbit_check(&m(), &n, &[x, y], 200),
            Err(ConjugationError::WindowExhausted(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let b = host_basis(BasisKind::Banded(0.25), 12).unwrap();
        let back = MarkushevichBasis::from_json(&b.to_json()).unwrap();
        assert_eq!(back.len(), 12);
        assert!(back.biorthogonality_residual() < 1e-15);
        for k in 1..=12 {
            assert!(diff_norm(&back.vector(k), &b.vector(k)) < 1e-15);
        }
        assert!((back.bound - b.bound).abs() < 1e-15);
    }
}
