use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use genmetrics_core::distribution::{KidConfig, Regularization};
use genmetrics_core::leaderboard::{Direction, ReportFormat};
use genmetrics_core::manifold::PrdcConfig;
use genmetrics_core::privacy::PrivacyConfig;
use genmetrics_core::conditional::ConditionalConfig;
use genmetrics_core::rng::DEFAULT_SEED;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

pub const THREADS_ENV: &str = "GENMETRICS_THREADS";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub real_embeddings: Option<PathBuf>,
    pub fake_embeddings: Option<PathBuf>,
    pub real_manifest: Option<PathBuf>,
    pub fake_manifest: Option<PathBuf>,
    pub images_root: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub alignment_scores: Option<PathBuf>,
    /// Model x metric fixture to rank.
    pub metric_table: Option<PathBuf>,
    /// Second table whose ranking is correlated against `metric_table`.
    pub compare_table: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankSettings {
    /// Use this column of `metric_table` as its score instead of the
    /// aggregated average rank.
    pub table_column: Option<String>,
    /// Same for `compare_table`.
    pub compare_column: Option<String>,
    /// Columns dropped from the tables before ranking.
    pub exclude_columns: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Fixed(usize),
}

impl Serialize for Threads {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Threads::Auto => s.serialize_str("auto"),
            Threads::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Threads {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(usize),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Err(serde::de::Error::custom("threads must be at least 1")),
            Raw::Num(n) => Ok(Threads::Fixed(n)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("threads must be \"auto\" or a positive integer, got `{s}`")),
            Ok(n) => Ok(Threads::Fixed(n)),
        }
    }
}

/// Everything a run needs. Loaded from one JSON document, then overridden
/// by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub kid: KidConfig,
    pub prdc: PrdcConfig,
    pub privacy: PrivacyConfig,
    pub conditional: ConditionalConfig,
    pub regularization: Regularization,
    /// Optimization direction of each metric column in fixture tables.
    pub directions: BTreeMap<String, Direction>,
    pub rank: RankSettings,
    /// Side length for pixel-distance preprocessing.
    pub image_side: u32,
    pub formats: Vec<ReportFormat>,
    pub output_dir: PathBuf,
    pub rng_seed: u64,
    pub threads: Threads,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            kid: KidConfig::default(),
            prdc: PrdcConfig::default(),
            privacy: PrivacyConfig::default(),
            conditional: ConditionalConfig::default(),
            regularization: Regularization::Auto,
            directions: BTreeMap::new(),
            rank: RankSettings::default(),
            image_side: genmetrics_core::io::DEFAULT_TARGET_SIDE,
            formats: vec![ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json],
            output_dir: PathBuf::from("genmetrics-out"),
            rng_seed: DEFAULT_SEED,
            threads: Threads::Auto,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
        })
    }

    /// Resolves the worker count: config/flag, then `GENMETRICS_THREADS`,
    /// then the machine's parallelism.
    pub fn worker_count(&self) -> Result<usize, CliError> {
        let threads = match self.threads {
            Threads::Fixed(n) => Threads::Fixed(n),
            Threads::Auto => match std::env::var(THREADS_ENV) {
                Ok(v) => v
                    .parse()
                    .map_err(|e| CliError::Config(format!("{THREADS_ENV}: {e}")))?,
                Err(_) => Threads::Auto,
            },
        };
        Ok(match threads {
            Threads::Fixed(n) => n,
            Threads::Auto => std::thread::available_parallelism().map_or(1, |n| n.get()),
        })
    }

    /// KID settings with the run seed applied.
    pub fn kid_config(&self) -> KidConfig {
        KidConfig {
            rng_seed: self.rng_seed,
            ..self.kid.clone()
        }
    }

    /// The config as recorded in run records: worker count and output
    /// location excluded, since neither may influence results.
    pub fn fingerprint_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("threads");
            obj.remove("output_dir");
        }
        v
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, name: &str) -> Result<&'a PathBuf, CliError> {
        value
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("missing required path `{name}`")))
    }
}
