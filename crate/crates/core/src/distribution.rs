//! Distributional fidelity: Gaussian moment fitting, Fréchet distance (FID)
//! and the unbiased polynomial-kernel MMD estimator (KID).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::io::EmbeddingMatrix;
use crate::rng::{SeedTree, DEFAULT_SEED};
use crate::summation::{chunked_tree_reduce, tree_mean, tree_sum};
use crate::{Error, Result};

/// Rows per block when accumulating moments.
const MOMENT_CHUNK: usize = 2048;
/// Eigenvalues below `-SQRT_TOLERANCE * trace` abort the square root;
/// negative values above it are clamped to zero.
const SQRT_TOLERANCE: f64 = 1e-8;
/// Auto-regularization triggers when the smallest covariance eigenvalue is
/// below this fraction of the trace.
const RANK_DEFICIENT: f64 = 1e-10;
/// Auto-regularization adds this fraction of the mean diagonal.
const AUTO_EPSILON_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub n: usize,
    /// Ridge added to the covariance diagonal (0 if none).
    pub regularization_epsilon: f64,
}

impl GaussianStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Smallest eigenvalue of the covariance.
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.covariance.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn trace(&self) -> f64 {
        tree_sum(self.covariance.diagonal().as_slice())
    }

    /// Adds `epsilon * I` to the covariance.
    pub fn regularize(&mut self, epsilon: f64) {
        for i in 0..self.dim() {
            self.covariance[(i, i)] += epsilon;
        }
        self.regularization_epsilon += epsilon;
    }

    /// Applies `1e-6 * mean(diag)` when the covariance is numerically rank
    /// deficient (smallest eigenvalue below `1e-10 * trace`). Returns the
    /// epsilon applied.
    pub fn regularize_if_singular(&mut self) -> f64 {
        let trace = self.trace();
        if self.dim() == 0 || self.min_eigenvalue() >= RANK_DEFICIENT * trace {
            return 0.0;
        }
        let eps = AUTO_EPSILON_SCALE * trace / self.dim() as f64;
        self.regularize(eps);
        eps
    }
}

/// How the covariance diagonal is loaded after fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Regularization {
    /// Add exactly this epsilon.
    Fixed(f64),
    /// Regularize only rank-deficient covariances, see
    /// [`GaussianStats::regularize_if_singular`].
    #[default]
    Auto,
}

/// Column means and unbiased (n - 1) covariance plus `epsilon * I`.
pub fn fit_gaussian(m: &EmbeddingMatrix, epsilon: f64) -> Result<GaussianStats> {
    let mut stats = fit_moments(m)?;
    if epsilon != 0.0 {
        stats.regularize(epsilon);
    }
    Ok(stats)
}

pub fn fit_gaussian_with(m: &EmbeddingMatrix, reg: Regularization) -> Result<GaussianStats> {
    match reg {
        Regularization::Fixed(eps) => fit_gaussian(m, eps),
        Regularization::Auto => {
            let mut stats = fit_moments(m)?;
            stats.regularize_if_singular();
            Ok(stats)
        }
    }
}

fn fit_moments(m: &EmbeddingMatrix) -> Result<GaussianStats> {
    let (n, d) = (m.n(), m.d());
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    if let Some(pos) = m.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput {
            row: pos / d,
            col: pos % d,
        });
    }

    let mean: Vec<f64> = (0..d)
        .map(|c| {
            let col: Vec<f64> = (0..n).map(|r| f64::from(m.values()[r * d + c])).collect();
            tree_mean(&col)
        })
        .collect();

    let scatter = chunked_tree_reduce(
        n,
        MOMENT_CHUNK,
        |rows| {
            let block = DMatrix::from_fn(rows.len(), d, |i, j| {
                f64::from(m.values()[(rows.start + i) * d + j]) - mean[j]
            });
            block.tr_mul(&block)
        },
        |a, b| a + b,
    )
    .expect("n >= 2");

    let mut covariance = scatter / (n - 1) as f64;
    symmetrize(&mut covariance);
    Ok(GaussianStats {
        mean: DVector::from_vec(mean),
        covariance,
        n,
        regularization_epsilon: 0.0,
    })
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let d = a.nrows();
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Eigenvalues of a symmetric PSD matrix with small negative values clamped.
fn clamped_eigen(a: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let trace = tree_sum(a.diagonal().as_slice()).abs();
    let mut eig = SymmetricEigen::new(a);
    let tolerance = -SQRT_TOLERANCE * trace;
    for lambda in eig.eigenvalues.iter_mut() {
        if *lambda < 0.0 {
            if *lambda < tolerance {
                return Err(Error::SqrtFailure {
                    eigenvalue: *lambda,
                    tolerance,
                });
            }
            *lambda = 0.0;
        }
    }
    Ok(eig)
}

/// Squared Fréchet (2-Wasserstein) distance between two Gaussians:
/// `|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^{1/2})`.
///
/// The trace of the cross square root is taken as the sum of square roots of
/// the eigenvalues of `S_a^{1/2} S_b S_a^{1/2}`, which share the spectrum of
/// `S_a S_b` but form a symmetric matrix.
pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let diff: Vec<f64> = a
        .mean
        .iter()
        .zip(b.mean.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    let mean_term = tree_sum(&diff);

    let eig_a = clamped_eigen(a.covariance.clone())?;
    let sqrt_vals = DVector::from_iterator(
        eig_a.eigenvalues.len(),
        eig_a.eigenvalues.iter().map(|l| l.sqrt()),
    );
    let v = &eig_a.eigenvectors;
    let sqrt_a = v * DMatrix::from_diagonal(&sqrt_vals) * v.transpose();
    let mut cross = &sqrt_a * &b.covariance * &sqrt_a;
    symmetrize(&mut cross);
    let eig_cross = clamped_eigen(cross)?;
    let roots: Vec<f64> = eig_cross.eigenvalues.iter().map(|l| l.sqrt()).collect();
    let tr_sqrt = tree_sum(&roots);

    Ok(mean_term + a.trace() + b.trace() - 2.0 * tr_sqrt)
}

/// Kernel scale `gamma` in `(gamma <x, y> + coef)^degree`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum KernelGamma {
    /// `1 / d`
    #[default]
    Auto,
    Fixed(f64),
}

impl KernelGamma {
    pub fn resolve(self, d: usize) -> f64 {
        match self {
            KernelGamma::Auto => 1.0 / d as f64,
            KernelGamma::Fixed(g) => g,
        }
    }
}

impl Serialize for KernelGamma {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            KernelGamma::Auto => s.serialize_str("auto"),
            KernelGamma::Fixed(g) => s.serialize_f64(*g),
        }
    }
}

impl<'de> Deserialize<'de> for KernelGamma {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(g) => Ok(KernelGamma::Fixed(g)),
            Raw::Str(s) if s == "auto" => Ok(KernelGamma::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "kernel_gamma must be a number or \"auto\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KidConfig {
    pub kernel_degree: u32,
    pub kernel_gamma: KernelGamma,
    pub kernel_coef: f64,
    /// `None` means `min(1000, n_x, n_y)`.
    pub subset_size: Option<usize>,
    pub num_subsets: usize,
    pub rng_seed: u64,
}

impl Default for KidConfig {
    fn default() -> Self {
        Self {
            kernel_degree: 3,
            kernel_gamma: KernelGamma::Auto,
            kernel_coef: 1.0,
            subset_size: None,
            num_subsets: 100,
            rng_seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KidResult {
    pub kid_mean: f64,
    /// Population standard deviation over subsets.
    pub kid_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialKernel {
    pub degree: u32,
    pub gamma: f64,
    pub coef: f64,
}

impl PolynomialKernel {
    #[inline]
    pub fn from_dot(&self, dot: f64) -> f64 {
        (self.gamma * dot + self.coef).powi(self.degree as i32)
    }
}

/// KID: mean and spread of the unbiased squared MMD over random subsets.
pub fn kid(x: &EmbeddingMatrix, y: &EmbeddingMatrix, cfg: &KidConfig) -> Result<KidResult> {
    if x.d() != y.d() {
        return Err(Error::DimensionMismatch(x.d(), y.d()));
    }
    let available = x.n().min(y.n());
    let m = cfg.subset_size.unwrap_or(available.min(1000));
    if m > available {
        return Err(Error::SubsetTooLarge {
            subset: m,
            available,
        });
    }
    if m < 2 {
        return Err(Error::InvalidConfig(format!(
            "KID subset size must be at least 2, got {m}"
        )));
    }
    if cfg.num_subsets == 0 {
        return Err(Error::InvalidConfig("num_subsets must be at least 1".into()));
    }
    let kernel = PolynomialKernel {
        degree: cfg.kernel_degree,
        gamma: cfg.kernel_gamma.resolve(x.d()),
        coef: cfg.kernel_coef,
    };
    let seeds = SeedTree::new(cfg.rng_seed);

    let scores: Vec<f64> = (0..cfg.num_subsets)
        .into_par_iter()
        .map(|s| {
            let mut rng = seeds.stream("kid", s as u64);
            let xs = draw_subset(&mut rng, x, m);
            let ys = draw_subset(&mut rng, y, m);
            mmd2_unbiased(&xs, &ys, &kernel)
        })
        .collect();

    let mean = tree_mean(&scores);
    let dev: Vec<f64> = scores.iter().map(|s| (s - mean) * (s - mean)).collect();
    Ok(KidResult {
        kid_mean: mean,
        kid_std: tree_mean(&dev).sqrt(),
    })
}

/// `m` rows drawn without replacement, kept in their original order.
fn draw_subset<R: rand::Rng>(rng: &mut R, e: &EmbeddingMatrix, m: usize) -> DMatrix<f64> {
    let mut rows = index::sample(rng, e.n(), m).into_vec();
    rows.sort_unstable();
    let d = e.d();
    DMatrix::from_fn(m, d, |i, j| f64::from(e.values()[rows[i] * d + j]))
}

/// Unbiased squared MMD between the rows of `x` and `y` (equal row counts).
pub fn mmd2_unbiased(x: &DMatrix<f64>, y: &DMatrix<f64>, kernel: &PolynomialKernel) -> f64 {
    let m = x.nrows();
    let off_diagonal = |gram: DMatrix<f64>| {
        let mut vals = Vec::with_capacity(m * (m - 1));
        for j in 0..m {
            for i in 0..m {
                if i != j {
                    vals.push(kernel.from_dot(gram[(i, j)]));
                }
            }
        }
        tree_sum(&vals)
    };
    let kxx = off_diagonal(x * x.transpose());
    let kyy = off_diagonal(y * y.transpose());
    let cross: Vec<f64> = (x * y.transpose())
        .iter()
        .map(|&dot| kernel.from_dot(dot))
        .collect();
    let kxy = tree_sum(&cross);

    let mf = m as f64;
    kxx / (mf * (mf - 1.0)) + kyy / (mf * (mf - 1.0)) - 2.0 * kxy / (mf * mf)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityResult {
    pub fid: f64,
    pub kid_mean: f64,
    pub kid_std: f64,
}

/// FID and KID between a real and a synthetic embedding set.
pub fn fidelity(
    real: &EmbeddingMatrix,
    fake: &EmbeddingMatrix,
    reg: Regularization,
    kid_cfg: &KidConfig,
) -> Result<FidelityResult> {
    let a = fit_gaussian_with(real, reg)?;
    let b = fit_gaussian_with(fake, reg)?;
    let fid = frechet_distance(&a, &b)?;
    let k = kid(real, fake, kid_cfg)?;
    Ok(FidelityResult {
        fid,
        kid_mean: k.kid_mean,
        kid_std: k.kid_std,
    })
}
