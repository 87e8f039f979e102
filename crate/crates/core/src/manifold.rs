//! Precision, recall, density and coverage over k-NN balls.
//!
//! All neighbor queries are exact: distances are evaluated for every pair,
//! block by block. Counts are integers, so the parallel reduction is order
//! independent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::EmbeddingMatrix;
use crate::summation::chunked_tree_reduce;
use crate::{Error, Result};

/// Query rows handled per parallel task.
const BLOCK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrdcConfig {
    pub k: usize,
}

impl Default for PrdcConfig {
    fn default() -> Self {
        Self { k: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrdcResult {
    pub precision: f64,
    pub recall: f64,
    pub density: f64,
    pub coverage: f64,
}

/// Euclidean distance between two `f32` rows, accumulated in `f64`.
#[inline]
pub fn euclidean(a: &[f32], b: &[f32]) -> f64 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let t = f64::from(*x) - f64::from(*y);
        acc += t * t;
    }
    acc.sqrt()
}

/// Distance from every point to its k-th nearest other point. Duplicated
/// coordinates count as separate neighbors at distance zero.
pub fn knn_radii(points: &EmbeddingMatrix, k: usize) -> Result<Vec<f64>> {
    let n = points.n();
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if n < k + 1 {
        return Err(Error::TooFewPoints { n, k });
    }
    let starts: Vec<usize> = (0..n).step_by(BLOCK).collect();
    let blocks: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&start| {
            let mut row = Vec::with_capacity(n - 1);
            (start..(start + BLOCK).min(n))
                .map(|i| {
                    row.clear();
                    let p = points.row(i);
                    row.extend(
                        (0..n)
                            .filter(|&j| j != i)
                            .map(|j| euclidean(p, points.row(j))),
                    );
                    let (_, kth, _) = row.select_nth_unstable_by(k - 1, f64::total_cmp);
                    *kth
                })
                .collect()
        })
        .collect();
    Ok(blocks.concat())
}

struct Tally {
    precision: u64,
    density: u64,
    coverage: Vec<bool>,
    recall: Vec<bool>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.precision += other.precision;
        self.density += other.density;
        for (a, b) in self.coverage.iter_mut().zip(other.coverage) {
            *a |= b;
        }
        for (a, b) in self.recall.iter_mut().zip(other.recall) {
            *a |= b;
        }
        self
    }
}

/// PRDC of `fake` against `real` with inclusive ball boundaries.
pub fn prdc(real: &EmbeddingMatrix, fake: &EmbeddingMatrix, cfg: &PrdcConfig) -> Result<PrdcResult> {
    if real.d() != fake.d() {
        return Err(Error::DimensionMismatch(real.d(), fake.d()));
    }
    let real_radii = knn_radii(real, cfg.k)?;
    let fake_radii = knn_radii(fake, cfg.k)?;
    let (n_real, n_fake) = (real.n(), fake.n());

    let tally = chunked_tree_reduce(
        n_fake,
        BLOCK,
        |fakes| {
            let mut t = Tally {
                precision: 0,
                density: 0,
                coverage: vec![false; n_real],
                recall: vec![false; n_real],
            };
            for j in fakes {
                let f = fake.row(j);
                let mut inside_any = false;
                for i in 0..n_real {
                    let dist = euclidean(f, real.row(i));
                    if dist <= real_radii[i] {
                        inside_any = true;
                        t.density += 1;
                        t.coverage[i] = true;
                    }
                    if dist <= fake_radii[j] {
                        t.recall[i] = true;
                    }
                }
                t.precision += u64::from(inside_any);
            }
            t
        },
        Tally::merge,
    )
    .expect("fake set is non-empty");

    let count = |v: &[bool]| v.iter().filter(|&&b| b).count() as f64;
    Ok(PrdcResult {
        precision: tally.precision as f64 / n_fake as f64,
        recall: count(&tally.recall) / n_real as f64,
        density: tally.density as f64 / (cfg.k as f64 * n_fake as f64),
        coverage: count(&tally.coverage) / n_real as f64,
    })
}
