use serde::{Deserialize, Serialize};

use super::rank::rank_metric;
use super::table::Direction;
use crate::summation::{tree_mean, tree_sum};
use crate::{Error, Result};

/// Product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples(x.len()));
    }
    for (i, v) in x.iter().chain(y).enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteValue(i % x.len()));
        }
    }
    let (mx, my) = (tree_mean(x), tree_mean(y));
    let dx: Vec<f64> = x.iter().map(|v| v - mx).collect();
    let dy: Vec<f64> = y.iter().map(|v| v - my).collect();
    let sxy = tree_sum(&dx.iter().zip(&dy).map(|(a, b)| a * b).collect::<Vec<_>>());
    let sxx = tree_sum(&dx.iter().map(|a| a * a).collect::<Vec<_>>());
    let syy = tree_sum(&dy.iter().map(|b| b * b).collect::<Vec<_>>());
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of average-tie ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let rx = rank_metric(x, Direction::LowerBetter)?;
    let ry = rank_metric(y, Direction::LowerBetter)?;
    pearson(&rx, &ry)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub name: String,
    /// Models (or labels) present in both series, in the order used.
    pub keys: Vec<String>,
    pub pearson: f64,
    pub spearman: f64,
}

impl Correlation {
    pub fn between(name: impl Into<String>, keys: Vec<String>, x: &[f64], y: &[f64]) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            keys,
            pearson: pearson(x, y)?,
            spearman: spearman(x, y)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_self_correlation() {
        let x = [1.0, 4.0, 2.0, 8.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &x).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch(2, 1))));
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::ZeroVariance)));
        assert!(matches!(pearson(&[1.0], &[1.0]), Err(Error::TooFewSamples(1))));
        assert!(matches!(spearman(&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]), Err(Error::ZeroVariance)));
    }

    #[test]
    fn spearman_with_ties_matches_rank_pearson() {
        let x = [1.0, 2.0, 2.0, 3.0, 5.0];
        let y = [2.0, 1.0, 4.0, 4.0, 3.0];
        let rx = [1.0, 2.5, 2.5, 4.0, 5.0];
        let ry = [2.0, 1.0, 4.5, 4.5, 3.0];
        assert_eq!(spearman(&x, &y).unwrap(), pearson(&rx, &ry).unwrap());
    }

    proptest! {
        #[test]
        fn affine_maps_give_sign(
            xs in prop::collection::vec(-1e3f64..1e3, 3..30),
            a in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0],
            b in -100.0f64..100.0,
        ) {
            let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - xs.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-6);
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let r = pearson(&xs, &ys).unwrap();
            prop_assert!((r - a.signum()).abs() < 1e-9, "r = {}", r);
        }

        #[test]
        fn bounded(
            pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..40),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let Ok(r) = pearson(&x, &y) {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }
}
