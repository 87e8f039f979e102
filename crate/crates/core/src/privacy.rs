//! Re-identification audit over multi-seed generations.
//!
//! Each training prompt is generated under several seeds and every
//! (real, synthetic) pair carries a re-identification score plus pixel- and
//! latent-space distances. Risk is assessed per prompt by the worst case
//! across seeds (highest score, smallest distances), then aggregated.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::GrayImage;
use crate::summation::{tree_mean, tree_sum};
use crate::{Error, Result};

/// Euclidean norm of the pixel-wise difference.
pub fn pixel_distance(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::ShapeMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    let sq: Vec<f64> = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let t = f64::from(x) - f64::from(y);
            t * t
        })
        .collect();
    Ok(tree_sum(&sq).sqrt())
}

/// Euclidean distance between the two vectors after scaling each to unit
/// length. Lies in `[0, 2]`.
pub fn latent_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    let norm = |v: &[f64]| tree_sum(&v.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let sq: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x / na - y / nb;
            t * t
        })
        .collect();
    Ok(tree_sum(&sq).sqrt().min(2.0))
}

/// One scored (real, synthetic-seed) comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyPairRecord {
    pub prompt_id: String,
    pub seed: u64,
    pub reid_score: f64,
    pub pixel_distance: f64,
    pub latent_distance: f64,
}

impl PrivacyPairRecord {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.reid_score) {
            return Err(Error::OutOfRange(format!(
                "reid_score {} for prompt `{}` seed {} outside [0, 1]",
                self.reid_score, self.prompt_id, self.seed
            )));
        }
        for (name, v) in [
            ("pixel_distance", self.pixel_distance),
            ("latent_distance", self.latent_distance),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::OutOfRange(format!(
                    "{name} {v} for prompt `{}` seed {} is not a finite non-negative number",
                    self.prompt_id, self.seed
                )));
            }
        }
        Ok(())
    }
}

/// A row of a score file. Distances may be left empty for the engine to
/// compute from images and embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub prompt_id: String,
    pub seed: u64,
    pub reid_score: f64,
    #[serde(default)]
    pub pixel_distance: Option<f64>,
    #[serde(default)]
    pub latent_distance: Option<f64>,
}

impl ScoreRow {
    /// Converts to a complete record; fails if a distance is missing.
    pub fn complete(self) -> Result<PrivacyPairRecord> {
        let missing = |what: &str| {
            Error::MissingColumn(format!("{what} (prompt `{}` seed {})", self.prompt_id, self.seed))
        };
        let rec = PrivacyPairRecord {
            pixel_distance: self.pixel_distance.ok_or_else(|| missing("pixel_distance"))?,
            latent_distance: self.latent_distance.ok_or_else(|| missing("latent_distance"))?,
            prompt_id: self.prompt_id,
            seed: self.seed,
            reid_score: self.reid_score,
        };
        rec.validate()?;
        Ok(rec)
    }
}

pub fn read_score_file(path: impl AsRef<Path>) -> Result<Vec<ScoreRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_scores(file)
}

pub fn parse_scores<R: Read>(reader: R) -> Result<Vec<ScoreRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    for col in ["prompt_id", "seed", "reid_score"] {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::MissingColumn(col.into()));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<ScoreRow>() {
        let row = rec?;
        if !(0.0..=1.0).contains(&row.reid_score) {
            return Err(Error::OutOfRange(format!(
                "reid_score {} for prompt `{}` outside [0, 1]",
                row.reid_score, row.prompt_id
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// What the dataset-level averages run over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AverageOver {
    /// Per-prompt worst cases (max score, min distances).
    #[default]
    PromptExtrema,
    /// Every scored pair.
    RawPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacyConfig {
    pub delta: f64,
    pub seeds_per_prompt: usize,
    pub num_prompts: usize,
    pub average_over: AverageOver,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        Self {
            delta: 0.85,
            seeds_per_prompt: 10,
            num_prompts: 2000,
            average_over: AverageOver::PromptExtrema,
        }
    }
}

impl PrivacyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta {} not in (0, 1)", self.delta)));
        }
        if self.seeds_per_prompt == 0 || self.num_prompts == 0 {
            return Err(Error::InvalidConfig(
                "seeds_per_prompt and num_prompts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptExtrema {
    pub prompt_id: String,
    pub max_reid: f64,
    pub min_pixel: f64,
    pub min_latent: f64,
    pub num_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrivacyWarning {
    /// A prompt has fewer scored seeds than configured.
    ShortGroup {
        prompt_id: String,
        found: usize,
        expected: usize,
    },
    /// The number of distinct prompts differs from the configured count.
    PromptCount { found: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaReport {
    /// Sorted by prompt id.
    pub per_prompt: Vec<PromptExtrema>,
    pub warnings: Vec<PrivacyWarning>,
}

/// Worst case per prompt across its seeds.
pub fn per_prompt_extrema(records: &[PrivacyPairRecord], cfg: &PrivacyConfig) -> Result<ExtremaReport> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: BTreeMap<&str, PromptExtrema> = BTreeMap::new();
    for r in records {
        r.validate()?;
        let e = groups.entry(&r.prompt_id).or_insert_with(|| PromptExtrema {
            prompt_id: r.prompt_id.clone(),
            max_reid: f64::NEG_INFINITY,
            min_pixel: f64::INFINITY,
            min_latent: f64::INFINITY,
            num_seeds: 0,
        });
        e.max_reid = e.max_reid.max(r.reid_score);
        e.min_pixel = e.min_pixel.min(r.pixel_distance);
        e.min_latent = e.min_latent.min(r.latent_distance);
        e.num_seeds += 1;
    }

    let mut warnings = Vec::new();
    for e in groups.values() {
        if e.num_seeds < cfg.seeds_per_prompt {
            log::warn!(
                "prompt `{}` has {} of {} expected seeds",
                e.prompt_id,
                e.num_seeds,
                cfg.seeds_per_prompt
            );
            warnings.push(PrivacyWarning::ShortGroup {
                prompt_id: e.prompt_id.clone(),
                found: e.num_seeds,
                expected: cfg.seeds_per_prompt,
            });
        }
    }
    if groups.len() != cfg.num_prompts {
        warnings.push(PrivacyWarning::PromptCount {
            found: groups.len(),
            expected: cfg.num_prompts,
        });
    }
    Ok(ExtremaReport {
        per_prompt: groups.into_values().collect(),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacySummary {
    pub avg_reid: f64,
    pub avg_latent: f64,
    pub avg_pixel: f64,
    pub max_reid: f64,
    /// Prompts whose worst-case score is strictly above `delta`.
    pub count_over_delta: usize,
    pub delta: f64,
    pub num_prompts: usize,
    pub average_over: AverageOver,
    pub per_prompt: Vec<PromptExtrema>,
}

/// Dataset-level statistics from per-prompt extrema.
pub fn summarize_privacy(per_prompt: &[PromptExtrema], cfg: &PrivacyConfig) -> Result<PrivacySummary> {
    if per_prompt.is_empty() {
        return Err(Error::EmptyInput);
    }
    let col = |f: fn(&PromptExtrema) -> f64| per_prompt.iter().map(f).collect::<Vec<_>>();
    let reid = col(|e| e.max_reid);
    Ok(PrivacySummary {
        avg_reid: tree_mean(&reid),
        avg_latent: tree_mean(&col(|e| e.min_latent)),
        avg_pixel: tree_mean(&col(|e| e.min_pixel)),
        max_reid: reid.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        count_over_delta: count_over(&reid, cfg.delta),
        delta: cfg.delta,
        num_prompts: per_prompt.len(),
        average_over: AverageOver::PromptExtrema,
        per_prompt: per_prompt.to_vec(),
    })
}

/// Number of scores strictly greater than `delta`.
pub fn count_over(scores: &[f64], delta: f64) -> usize {
    scores.iter().filter(|&&s| s > delta).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyAudit {
    pub summary: PrivacySummary,
    pub warnings: Vec<PrivacyWarning>,
}

/// Extrema plus summary, honoring [`PrivacyConfig::average_over`].
pub fn audit(records: &[PrivacyPairRecord], cfg: &PrivacyConfig) -> Result<PrivacyAudit> {
    cfg.validate()?;
    let ex = per_prompt_extrema(records, cfg)?;
    let mut summary = summarize_privacy(&ex.per_prompt, cfg)?;
    if cfg.average_over == AverageOver::RawPairs {
        let mut sorted: Vec<&PrivacyPairRecord> = records.iter().collect();
        sorted.sort_by(|a, b| {
            (a.prompt_id.as_str(), a.seed)
                .cmp(&(b.prompt_id.as_str(), b.seed))
                .then(a.reid_score.total_cmp(&b.reid_score))
        });
        let col = |f: fn(&PrivacyPairRecord) -> f64| sorted.iter().map(|r| f(r)).collect::<Vec<_>>();
        summary.avg_reid = tree_mean(&col(|r| r.reid_score));
        summary.avg_pixel = tree_mean(&col(|r| r.pixel_distance));
        summary.avg_latent = tree_mean(&col(|r| r.latent_distance));
        summary.average_over = AverageOver::RawPairs;
    }
    Ok(PrivacyAudit {
        summary,
        warnings: ex.warnings,
    })
}

/// Writes one CSV row per prompt.
pub fn write_per_prompt_csv<W: Write>(per_prompt: &[PromptExtrema], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["prompt_id", "num_seeds", "max_reid", "min_pixel", "min_latent"])?;
    for e in per_prompt {
        w.write_record([
            e.prompt_id.clone(),
            e.num_seeds.to_string(),
            e.max_reid.to_string(),
            e.min_pixel.to_string(),
            e.min_latent.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<per-prompt csv>", e))
}
