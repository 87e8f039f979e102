//! Per-pathology stratified evaluation.
//!
//! A sample belongs to every stratum whose label bit is set, so strata
//! overlap and their sizes sum past the dataset size.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{fidelity, KidConfig, Regularization};
use crate::io::{EmbeddingMatrix, SampleManifest, LABEL_NAMES, NUM_LABELS};
use crate::manifold::{prdc, PrdcConfig, PrdcResult};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub label_name: String,
    pub real_ids: Vec<String>,
    pub fake_ids: Vec<String>,
    pub real_count: usize,
}

/// One stratum per label, in [`LABEL_NAMES`] order. Real ids come from
/// train/test records, fake ids from synthetic records.
pub fn stratify(manifest: &SampleManifest) -> Vec<Stratum> {
    stratify_pair(manifest, manifest)
}

/// Like [`stratify`] with real and synthetic samples in separate manifests.
pub fn stratify_pair(real: &SampleManifest, fake: &SampleManifest) -> Vec<Stratum> {
    (0..NUM_LABELS)
        .map(|label| {
            let real_ids: Vec<String> = real
                .records
                .iter()
                .filter(|r| r.split.is_real() && r.has_label(label))
                .map(|r| r.sample_id.clone())
                .collect();
            let fake_ids = fake
                .records
                .iter()
                .filter(|r| !r.split.is_real() && r.has_label(label))
                .map(|r| r.sample_id.clone())
                .collect();
            Stratum {
                label_name: LABEL_NAMES[label].to_string(),
                real_count: real_ids.len(),
                real_ids,
                fake_ids,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prevalence {
    pub label_name: String,
    pub count: usize,
    /// 1 = most frequent; ties share the average position.
    pub rank: f64,
}

/// Label counts over the real records, with frequency ranks.
pub fn prevalence(manifest: &SampleManifest) -> Vec<Prevalence> {
    let strata = stratify(manifest);
    let counts: Vec<f64> = strata.iter().map(|s| s.real_count as f64).collect();
    let ranks = crate::leaderboard::rank_metric(&counts, crate::leaderboard::Direction::HigherBetter)
        .expect("counts are finite");
    strata
        .into_iter()
        .zip(ranks)
        .map(|(s, rank)| Prevalence {
            label_name: s.label_name,
            count: s.real_count,
            rank,
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionalConfig {
    /// Strata with fewer real or synthetic samples are skipped. `None` keeps
    /// every stratum that can support FID (2 samples per side); PRDC is then
    /// reported only where both sides exceed `k`.
    pub min_stratum: Option<usize>,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumMetrics {
    pub fid: f64,
    pub kid_mean: f64,
    pub kid_std: f64,
    pub prdc: Option<PrdcResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub label_name: String,
    pub n_real: usize,
    pub n_fake: usize,
    pub metrics: Option<StratumMetrics>,
    pub skipped: Option<String>,
    pub prdc_skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalReport {
    pub strata: Vec<StratumReport>,
}

/// Settings shared by every stratum.
#[derive(Debug, Clone, Copy)]
pub struct StratumSettings<'a> {
    pub regularization: Regularization,
    pub kid: &'a KidConfig,
    pub prdc: &'a PrdcConfig,
    pub conditional: &'a ConditionalConfig,
}

/// Restricts both embedding sets to each stratum and evaluates FID, KID and
/// PRDC independently per label.
pub fn conditional_metrics(
    real: &EmbeddingMatrix,
    fake: &EmbeddingMatrix,
    real_manifest: &SampleManifest,
    fake_manifest: &SampleManifest,
    settings: StratumSettings<'_>,
) -> Result<ConditionalReport> {
    check_alignment(real, real_manifest.records.iter().filter(|r| r.split.is_real()).map(|r| r.sample_id.as_str()))?;
    check_alignment(fake, fake_manifest.records.iter().filter(|r| !r.split.is_real()).map(|r| r.sample_id.as_str()))?;

    let strata = stratify_pair(real_manifest, fake_manifest);
    let strata: Vec<StratumReport> = strata
        .par_iter()
        .map(|s| evaluate_stratum(real, fake, s, settings))
        .collect::<Result<_>>()?;
    Ok(ConditionalReport { strata })
}

fn check_alignment<'a>(m: &EmbeddingMatrix, ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let present: HashSet<&str> = m.sample_ids().iter().map(String::as_str).collect();
    for id in ids {
        if !present.contains(id) {
            return Err(Error::IdAlignment(id.to_string()));
        }
    }
    Ok(())
}

fn evaluate_stratum(
    real: &EmbeddingMatrix,
    fake: &EmbeddingMatrix,
    s: &Stratum,
    settings: StratumSettings<'_>,
) -> Result<StratumReport> {
    let (n_real, n_fake) = (s.real_ids.len(), s.fake_ids.len());
    let mut report = StratumReport {
        label_name: s.label_name.clone(),
        n_real,
        n_fake,
        metrics: None,
        skipped: None,
        prdc_skipped: None,
    };
    let floor = settings.conditional.min_stratum.unwrap_or(2).max(2);
    if n_real < floor || n_fake < floor {
        report.skipped = Some(format!(
            "too few samples: {n_real} real, {n_fake} synthetic, need {floor}"
        ));
        return Ok(report);
    }

    let r = real.restrict_to(s.real_ids.iter().map(String::as_str))?;
    let f = fake.restrict_to(s.fake_ids.iter().map(String::as_str))?;
    let mut kid = settings.kid.clone();
    kid.subset_size = Some(kid.subset_size.unwrap_or(1000).min(n_real).min(n_fake));
    let fid = fidelity(&r, &f, settings.regularization, &kid)?;

    let k = settings.prdc.k;
    let prdc = if n_real > k && n_fake > k {
        Some(prdc(&r, &f, settings.prdc)?)
    } else {
        report.prdc_skipped = Some(format!("too few samples for k={k}"));
        None
    };
    report.metrics = Some(StratumMetrics {
        fid: fid.fid,
        kid_mean: fid.kid_mean,
        kid_std: fid.kid_std,
        prdc,
    });
    Ok(report)
}

impl ConditionalReport {
    pub fn get(&self, label: &str) -> Option<&StratumReport> {
        self.strata.iter().find(|s| s.label_name == label)
    }

    /// One row per label.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "label", "n_real", "n_fake", "fid", "kid_mean", "kid_std", "precision", "recall",
            "density", "coverage", "skipped",
        ])?;
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.strata {
            let m = s.metrics.as_ref();
            let p = m.and_then(|m| m.prdc);
            w.write_record([
                s.label_name.clone(),
                s.n_real.to_string(),
                s.n_fake.to_string(),
                num(m.map(|m| m.fid)),
                num(m.map(|m| m.kid_mean)),
                num(m.map(|m| m.kid_std)),
                num(p.map(|p| p.precision)),
                num(p.map(|p| p.recall)),
                num(p.map(|p| p.density)),
                num(p.map(|p| p.coverage)),
                s.skipped.clone().or_else(|| s.prdc_skipped.clone()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<conditional csv>", e))
    }
}
