use genmetrics_core::conditional::{conditional_metrics, ConditionalConfig, StratumSettings};
use genmetrics_core::distribution::{fidelity, KidConfig, Regularization};
use genmetrics_core::manifold::{prdc, PrdcConfig};
use genmetrics_core::{EmbeddingMatrix, SampleManifest, SampleRecord, Split, LABEL_NAMES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn record(id: String, split: Split, label: usize) -> SampleRecord {
    let mut labels = [false; 14];
    labels[label] = true;
    SampleRecord {
        image_path: format!("{id}.png"),
        prompt_id: id.clone(),
        sample_id: id,
        split,
        labels,
        prompt_text: None,
        seed: (split == Split::Synthetic).then_some(0),
        model_id: None,
    }
}

struct Side {
    rows: Vec<Vec<f64>>,
    ids: Vec<String>,
    records: Vec<SampleRecord>,
}

fn side(rng: &mut impl Rng, split: Split, prefix: &str, groups: &[(usize, usize, f64)]) -> Side {
    let mut s = Side {
        rows: Vec::new(),
        ids: Vec::new(),
        records: Vec::new(),
    };
    for &(label, n, shift) in groups {
        for i in 0..n {
            let id = format!("{prefix}-{label}-{i}");
            s.rows.push((0..3).map(|_| normal(rng) + shift).collect());
            s.records.push(record(id.clone(), split, label));
            s.ids.push(id);
        }
    }
    s
}

fn matrix(s: &Side) -> EmbeddingMatrix {
    let d = s.rows[0].len();
    let values = s.rows.iter().flatten().map(|&v| v as f32).collect();
    EmbeddingMatrix::new(s.rows.len(), d, values, s.ids.clone()).unwrap()
}

const A: usize = 0;
const B: usize = 1;

#[test]
fn shifted_stratum_scores_worse() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let real = side(&mut rng, Split::Train, "r", &[(A, 150, 0.0), (B, 150, 0.0)]);
    let fake = side(&mut rng, Split::Synthetic, "f", &[(A, 150, 0.0), (B, 150, 5.0)]);
    let kid = KidConfig {
        num_subsets: 10,
        ..KidConfig::default()
    };
    let settings = StratumSettings {
        regularization: Regularization::Auto,
        kid: &kid,
        prdc: &PrdcConfig::default(),
        conditional: &ConditionalConfig::default(),
    };
    let report = conditional_metrics(
        &matrix(&real),
        &matrix(&fake),
        &SampleManifest::new(real.records).unwrap(),
        &SampleManifest::new(fake.records).unwrap(),
        settings,
    )
    .unwrap();
    let a = report.get(LABEL_NAMES[A]).unwrap().metrics.as_ref().unwrap();
    let b = report.get(LABEL_NAMES[B]).unwrap().metrics.as_ref().unwrap();
    assert!(b.fid > a.fid + 10.0, "{} vs {}", b.fid, a.fid);
    assert!(b.kid_mean > a.kid_mean);
    assert!(b.prdc.unwrap().recall < a.prdc.unwrap().recall);
    // Strata with no samples are reported as skipped, not dropped.
    assert_eq!(report.strata.len(), 14);
    let empty = report.get(LABEL_NAMES[5]).unwrap();
    assert!(empty.metrics.is_none() && empty.skipped.is_some());
}

#[test]
fn single_stratum_equals_unconditional() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let real = side(&mut rng, Split::Test, "r", &[(A, 80, 0.0)]);
    let fake = side(&mut rng, Split::Synthetic, "f", &[(A, 70, 1.0)]);
    let kid = KidConfig {
        num_subsets: 8,
        ..KidConfig::default()
    };
    let prdc_cfg = PrdcConfig::default();
    let settings = StratumSettings {
        regularization: Regularization::Auto,
        kid: &kid,
        prdc: &prdc_cfg,
        conditional: &ConditionalConfig::default(),
    };
    let (rm, fm) = (matrix(&real), matrix(&fake));
    let report = conditional_metrics(
        &rm,
        &fm,
        &SampleManifest::new(real.records).unwrap(),
        &SampleManifest::new(fake.records).unwrap(),
        settings,
    )
    .unwrap();
    let s = report.get(LABEL_NAMES[A]).unwrap().metrics.as_ref().unwrap();
    let whole = fidelity(&rm, &fm, Regularization::Auto, &KidConfig { subset_size: Some(70), ..kid }).unwrap();
    assert_eq!(s.fid, whole.fid);
    assert_eq!((s.kid_mean, s.kid_std), (whole.kid_mean, whole.kid_std));
    assert_eq!(s.prdc.unwrap(), prdc(&rm, &fm, &prdc_cfg).unwrap());
}
