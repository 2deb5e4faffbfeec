//! The tree-shaped orbit `M^n(x, y) = M^{n-1}(x, y) ∪ {M(z, w)}`.

use std::collections::HashMap;

use serde::Serialize;

use super::{apply, DynError, MultilinearSpec, OrbitBC};
use crate::spaces::{SeqVector, SpaceError};

pub const DEFAULT_LEVEL_CAP: usize = 1_000_000;

type Key = Vec<(i64, i64)>;

/// Quantized hash key: each coordinate contributes `(round(ln|c|/q), round(arg c/q))`,
/// zero coordinates a fixed marker, and trailing zeros are dropped so the
/// zero vector of any length has the empty key.
fn key(v: &SeqVector, q: f64) -> Key {
    let end = v.support_end();
    v.coords()[..end]
        .iter()
        .map(|c| if c.is_zero() { (i64::MIN, 0) } else { ((c.log_mag() / q).round() as i64, (c.phase() / q).round() as i64) })
        .collect()
}

fn close(a: &SeqVector, b: &SeqVector, rel: f64) -> bool {
    let n = a.support_end().max(b.support_end());
    (1..=n).all(|i| {
        let (x, y) = (a.get(i), b.get(i));
        (x.is_zero() && y.is_zero()) || x.rel_diff(y) <= rel
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitTreeGK {
    #[serde(skip)]
    pub levels: Vec<Vec<SeqVector>>,
    #[serde(skip)]
    index: Vec<HashMap<Key, Vec<usize>>>,
    pub q: f64,
    pub level_sizes: Vec<usize>,
    /// `|level n-1| + |level n-1|²` before deduplication.
    pub raw_counts: Vec<usize>,
    /// Pairs skipped because the truncation window could not supply `M(z, w)`.
    pub skipped_pairs: Vec<usize>,
    /// Level at which the state cap stopped the build.
    pub capped_at: Option<usize>,
}

impl OrbitTreeGK {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// Quantized lookup first, then a relative-difference scan.
    pub fn contains(&self, level: usize, v: &SeqVector) -> bool {
        let Some(states) = self.levels.get(level) else { return false };
        if let Some(ids) = self.index[level].get(&key(v, self.q)) {
            if ids.iter().any(|&i| close(&states[i], v, 1e-9)) {
                return true;
            }
        }
        states.iter().any(|s| close(s, v, 1e-9))
    }

    /// For each `n ≤ depth`, whether the BC state `x_n` lies in level `n`.
    pub fn contains_bc(&self, orbit: &OrbitBC) -> Vec<bool> {
        (1..=self.depth().min(orbit.states.len())).map(|n| self.contains(n, orbit.state(n))).collect()
    }
}

struct Level {
    states: Vec<SeqVector>,
    index: HashMap<Key, Vec<usize>>,
}

impl Level {
    fn new() -> Self {
        Level { states: Vec::new(), index: HashMap::new() }
    }

    fn insert(&mut self, v: SeqVector, q: f64) {
        let k = key(&v, q);
        let bucket = self.index.entry(k).or_default();
        if bucket.iter().any(|&i| close(&self.states[i], &v, 1e-12)) {
            return;
        }
        bucket.push(self.states.len());
        self.states.push(v);
    }
}

/// Builds levels `0..=depth`, stopping early with a partial tree once a level
/// would exceed `cap` distinct states.
pub fn gk_tree(
    spec: &MultilinearSpec,
    x: &SeqVector,
    y: &SeqVector,
    depth: usize,
    q: f64,
    cap: usize,
) -> Result<OrbitTreeGK, DynError> {
    if spec.arity != 2 {
        return Err(DynError::ArityMismatch { expected: 2, got: spec.arity });
    }
    if !(q > 0.0) {
        return Err(DynError::InvalidOperator(format!("quantization grid {q} must be positive")));
    }
    spec.check_args(&[x.clone(), y.clone()])?;
    let mut level0 = Level::new();
    level0.insert(x.clone(), q);
    level0.insert(y.clone(), q);
    let mut tree = OrbitTreeGK {
        level_sizes: vec![level0.states.len()],
        raw_counts: vec![2],
        skipped_pairs: vec![0],
        levels: vec![level0.states],
        index: vec![level0.index],
        q,
        capped_at: None,
    };
    'levels: for n in 1..=depth {
        let prev = &tree.levels[n - 1];
        let mut next = Level::new();
        let mut skipped = 0;
        for s in prev {
            next.insert(s.clone(), q);
        }
        for z in prev {
            for w in prev {
                match apply(spec, &[z.clone(), w.clone()]) {
                    Ok(v) => next.insert(v, q),
                    Err(DynError::Space(SpaceError::DegenerateLength(_))) => skipped += 1,
                    Err(e) => return Err(e),
                }
                if next.states.len() > cap {
                    tree.capped_at = Some(n);
                    break 'levels;
                }
            }
        }
        tree.raw_counts.push(prev.len() + prev.len() * prev.len());
        tree.level_sizes.push(next.states.len());
        tree.skipped_pairs.push(skipped);
        tree.levels.push(next.states);
        tree.index.push(next.index);
    }
    Ok(tree)
}
