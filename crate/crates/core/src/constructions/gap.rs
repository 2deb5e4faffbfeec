//! Gap-schedule search and the universal vector `z ∈ ℓ_1` for the family
//! `2^n n!^2 B_ω^n`, `ω_n = 1/n^2`.
//!
//! The vector is `Σ_j S_ω^{n_j}(z_j / (2^{n_j} n_j!^2))` with the gaps
//! `n_{j-1}+j ≤ l ≤ n_j` filled by `1/(2^{n_{j-1}} l^2)`. All conditions are
//! evaluated in base-2 logs; a condition holds when its value is `≤ 0`.

use serde::Serialize;

use super::{Certificate, ConstructionError, DenseTestSeq};
use crate::arith::{a_seq, ln_factorial, log_sum_exp, ASeq, LogComplex};
use crate::spaces::{SeqVector, SpaceTag, WeightGen, WeightSeq};

use super::phi_map;

pub const DEFAULT_SEARCH_CAP: usize = 1_000_000;

/// Points past `n_j` at which condition (iv) is re-evaluated.
const TAIL_CHECK: usize = 10;

const LN2: f64 = std::f64::consts::LN_2;

fn log2_fact(n: usize) -> f64 {
    ln_factorial(n) / LN2
}

fn log2(x: f64) -> f64 {
    x.log2()
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockRecord {
    pub j: usize,
    pub n_j: usize,
    /// Base condition `n²/4 + 4log₂n + 4log₂n! + 2n + 2 + a_n` (block 2 only).
    pub base: Option<f64>,
    /// Condition (iii), strict.
    pub iii: f64,
    /// Condition (iv) at `n_j`.
    pub iv: f64,
    /// Largest value of (iv) (and the base condition) on `n_j+1 ..= n_j+10`.
    pub iv_tail_max: f64,
    /// `(iv)(n_j+1) − (iv)(n_j)`.
    pub iv_slope: f64,
    /// `log₂ π_{j-1}`.
    pub log2_pi_prev: f64,
    /// Whether `n_j − 1` violates at least one condition (or lies below the gap start).
    pub prev_violates: bool,
}

impl BlockRecord {
    pub fn satisfied(&self) -> bool {
        self.base.is_none_or(|b| b <= 0.0)
            && self.iii < 0.0
            && self.iv <= 0.0
            && self.iv_tail_max <= 0.0
            && self.iv_slope < 0.0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GapSchedule {
    /// `n_1 = 0, n_2, …, n_J`.
    pub n: Vec<usize>,
    /// Records for `j ≥ 2`.
    pub records: Vec<BlockRecord>,
}

impl GapSchedule {
    pub fn blocks(&self) -> usize {
        self.n.len()
    }

    /// Length of the built prefix, `n_J + J`.
    pub fn built_len(&self) -> usize {
        self.n.last().copied().unwrap_or(0) + self.blocks()
    }
}

fn base_condition(n: usize, a: &ASeq) -> f64 {
    let nf = n as f64;
    nf * nf / 4.0 + 4.0 * log2(nf) + 4.0 * log2_fact(n) + 2.0 * nf + 2.0 + a.get(n) as f64
}

fn cond_iii(n: usize, j: usize, n_prev: usize) -> f64 {
    let jf = j as f64;
    n_prev as f64 + 2.0 * log2_fact(n_prev) + 2.0 * jf * log2((n + j) as f64) + 4.0 * log2(jf) - n as f64
}

fn cond_iv(n: usize, j: usize, n_prev: usize, log2_pi: f64, a: &ASeq) -> f64 {
    let (nf, jf) = (n as f64, j as f64);
    4.0 * log2(nf + jf) + nf * nf / 4.0 + 4.0 * log2_fact(n) + a.get(n) as f64 + log2_pi
        + n_prev as f64 * nf
        + jf * nf
        + jf * log2(jf)
}

/// `S_ω^{n}(z) / (2^n n!^2)` placed at coordinates `n+1 ..= n+k`.
fn block_coords(z: &[LogComplex], n: usize, w: &WeightSeq) -> Vec<LogComplex> {
    let scale = n as f64 * LN2 + 2.0 * ln_factorial(n);
    z.iter()
        .enumerate()
        .map(|(t, c)| {
            let i = t + 1;
            // [S^n v]_{i+n} = v_i / (ω_i ⋯ ω_{i+n-1})
            let lw = w.log_prefix(i + n - 1) - w.log_prefix(i - 1);
            LogComplex::new(c.log_mag() - lw - scale, c.phase())
        })
        .collect()
}

fn gap_coords(from: usize, to: usize, n_prev: usize) -> impl Iterator<Item = LogComplex> {
    (from..=to).map(move |l| LogComplex::new(-(n_prev as f64) * LN2 - 2.0 * (l as f64).ln(), 0.0))
}

fn require_inverse_square(w: &WeightSeq) -> Result<(), ConstructionError> {
    if *w.gen() != WeightGen::InverseSquare {
        return Err(ConstructionError::InvalidParameter("the gap conditions assume ω_n = 1/n²".into()));
    }
    Ok(())
}

/// Searches `n_2 < n_3 < … < n_J`, each the smallest admissible value at or
/// after `n_{j-1} + j + 1`, building the prefix `u_{j-1}` along the way to
/// evaluate `π_{j-1}`.
pub fn gap_schedule_search(
    dense: &DenseTestSeq,
    w: &WeightSeq,
    a: &ASeq,
    blocks: usize,
    cap: usize,
) -> Result<GapSchedule, ConstructionError> {
    require_inverse_square(w)?;
    if blocks < 2 {
        return Err(ConstructionError::InvalidParameter("at least two blocks are needed".into()));
    }
    let mut n = vec![0usize];
    let mut u: Vec<LogComplex> = dense.target(1);
    let mut records = Vec::new();
    for j in 2..=blocks {
        let n_prev = n[j - 2];
        let log2_pi = -u.iter().map(|c| c.log_mag()).sum::<f64>() / LN2;
        let start = n_prev + j + 1;
        let pointwise = |m: usize| -> bool {
            (j > 2 || base_condition(m, a) <= 0.0)
                && cond_iii(m, j, n_prev) < 0.0
                && cond_iv(m, j, n_prev, log2_pi, a) <= 0.0
        };
        let tail = |m: usize| -> (f64, f64) {
            let mut worst = f64::NEG_INFINITY;
            for t in m + 1..=m + TAIL_CHECK {
                worst = worst.max(cond_iv(t, j, n_prev, log2_pi, a));
                if j == 2 {
                    worst = worst.max(base_condition(t, a));
                }
            }
            (worst, cond_iv(m + 1, j, n_prev, log2_pi, a) - cond_iv(m, j, n_prev, log2_pi, a))
        };
        let mut found = None;
        let mut m = start;
        while m <= cap {
            if m + TAIL_CHECK > a.len() {
                return Err(ConstructionError::InvalidParameter(format!("a_n needed beyond {}", a.len())));
            }
            if pointwise(m) {
                let (worst, slope) = tail(m);
                if worst <= 0.0 && slope < 0.0 {
                    found = Some((m, worst, slope));
                    break;
                }
            }
            m += 1;
        }
        let Some((nj, worst, slope)) = found else {
            return Err(ConstructionError::SearchOverflow { j, cap });
        };
        records.push(BlockRecord {
            j,
            n_j: nj,
            base: (j == 2).then(|| base_condition(nj, a)),
            iii: cond_iii(nj, j, n_prev),
            iv: cond_iv(nj, j, n_prev, log2_pi, a),
            iv_tail_max: worst,
            iv_slope: slope,
            log2_pi_prev: log2_pi,
            prev_violates: nj == start || !pointwise(nj - 1),
        });
        u.extend(gap_coords(n_prev + j, nj, n_prev));
        u.extend(block_coords(&dense.target(j), nj, w));
        n.push(nj);
    }
    Ok(GapSchedule { n, records })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniversalL1 {
    #[serde(skip)]
    pub z: SeqVector,
    pub n: Vec<usize>,
    pub certificates: Vec<Certificate>,
    /// `ln ‖2^{n_j} n_j!^2 B_ω^{n_j}(z) − z_j‖_1` per block, over the
    /// coordinates past `j`.
    pub log_residuals: Vec<f64>,
    /// Log of the same norm over coordinates `1..=j`: the error of storing
    /// the block in log form, which the certificate adds to the residual.
    pub log_roundoff: Vec<f64>,
    pub log_norm: f64,
}

impl UniversalL1 {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(Certificate::passed)
    }
}

/// `Σ_{l≥j} 1/l²`.
fn zeta2_tail(j: usize) -> f64 {
    let zeta2 = std::f64::consts::PI * std::f64::consts::PI / 6.0;
    zeta2 - (1..j).map(|l| 1.0 / (l * l) as f64).sum::<f64>()
}

/// Builds the prefix `u_J` of the universal vector and certifies, in log
/// domain: (a) block norms `≤ 1/j²`; (b) `[Φ(z)]_i ≤ 1/i²` for
/// `n_2 < i ≤ n_J + J`; (c) universality residuals `≤ 2 Σ_{l≥j} 1/l²`;
/// and `‖z‖_1 ≤ ‖z_1‖_1 + 2 Σ 1/l²`.
pub fn universal_y_l1(schedule: &GapSchedule, dense: &DenseTestSeq) -> Result<UniversalL1, ConstructionError> {
    let w = WeightSeq::inverse_square();
    let blocks = schedule.blocks();
    let mut coords: Vec<LogComplex> = dense.target(1);
    let mut certificates = Vec::new();
    let z1_norm = log_sum_exp(&coords.iter().map(|c| c.log_mag()).collect::<Vec<_>>());
    certificates.push(Certificate::new("block_norm", 1, z1_norm, 0.0));
    for j in 2..=blocks {
        let (n_prev, nj) = (schedule.n[j - 2], schedule.n[j - 1]);
        if coords.len() != n_prev + j - 1 || nj < n_prev + j {
            return Err(ConstructionError::InvalidParameter(format!("schedule is not increasing at block {j}")));
        }
        coords.extend(gap_coords(n_prev + j, nj, n_prev));
        let block = block_coords(&dense.target(j), nj, &w);
        let norm = log_sum_exp(&block.iter().map(|c| c.log_mag()).collect::<Vec<_>>());
        certificates.push(Certificate::new("block_norm", j, norm, -2.0 * (j as f64).ln()));
        coords.extend(block);
    }
    let z = SeqVector::new(coords, SpaceTag::L1)?;

    // (b) Φ-bound
    let a = a_seq(z.len())?;
    let phi = phi_map(&z, &a)?;
    let n2 = schedule.n.get(1).copied().unwrap_or(0);
    let (mut worst, mut worst_i) = (f64::NEG_INFINITY, n2 + 1);
    for i in n2 + 1..=z.len() {
        let m = phi.get(i).log_mag() + 2.0 * (i as f64).ln();
        if m > worst {
            (worst, worst_i) = (m, i);
        }
    }
    certificates.push(Certificate::new("phi_bound", worst_i, worst, 0.0));

    // (c) universality residuals, split into the part beyond the block and
    // the reconstruction error of the block itself (zero in exact arithmetic)
    let mut log_residuals = Vec::with_capacity(blocks);
    let mut log_roundoff = Vec::with_capacity(blocks);
    for j in 1..=blocks {
        let nj = schedule.n[j - 1];
        let target = dense.target(j);
        let scale = nj as f64 * LN2 + 2.0 * ln_factorial(nj);
        let (mut block, mut tail) = (Vec::new(), Vec::new());
        for i in 1..=z.len() - nj {
            let c = z.get(i + nj);
            let v = if c.is_zero() {
                c
            } else {
                let lw = w.log_prefix(i + nj - 1) - w.log_prefix(i - 1);
                LogComplex::new(c.log_mag() + lw + scale, c.phase())
            };
            if i <= target.len() {
                block.push((v - target[i - 1]).log_mag());
            } else {
                tail.push(v.log_mag());
            }
        }
        let (t, r) = (log_sum_exp(&tail), log_sum_exp(&block));
        let total = log_sum_exp(&[t, r]);
        certificates.push(Certificate::new("universality_residual", j, total, (2.0 * zeta2_tail(j)).ln()));
        log_residuals.push(t);
        log_roundoff.push(r);
    }

    let log_norm = crate::spaces::norm(&z);
    certificates.push(Certificate::new("l1_norm", 0, log_norm, (z1_norm.exp() + 2.0 * zeta2_tail(1)).ln()));
    Ok(UniversalL1 { z, n: schedule.n.clone(), certificates, log_residuals, log_roundoff, log_norm })
}
