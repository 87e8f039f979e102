//! Evaluation engine for text-to-image generators of chest radiographs.
//!
//! Every metric here runs over inputs produced elsewhere: embedding matrices
//! (CXGB files), sample manifests, grayscale images and re-identification score
//! files. The crate is model-free; feature extraction and scoring networks live
//! outside of it.
//!
//! The modules map onto the metric families of the benchmark:
//!
//! * [`io`]: manifest CSV, CXGB embedding container, grayscale image loading.
//! * [`distribution`]: Gaussian moment fitting, Fréchet distance and KID.
//! * [`manifold`]: k-NN radii and precision / recall / density / coverage.
//! * [`privacy`]: pixel and latent distances, per-prompt extrema and the
//!   dataset-level re-identification summary.
//! * [`conditional`]: per-pathology stratification and stratified metrics.
//! * [`leaderboard`]: metric tables, rank aggregation, correlations and reports.

pub mod conditional;
pub mod distribution;
mod error;
pub mod io;
pub mod leaderboard;
pub mod manifold;
pub mod privacy;
pub mod rng;
pub mod summation;

pub use error::{Error, ErrorKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use io::{EmbeddingMatrix, GrayImage, SampleManifest, SampleRecord, Split, LABEL_NAMES};

pub type Result<T, E = Error> = std::result::Result<T, E>;
