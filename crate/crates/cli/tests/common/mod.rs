#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use genmetrics_core::io::{write_embeddings, write_manifest};
use genmetrics_core::{EmbeddingMatrix, SampleManifest, SampleRecord, Split};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BIN: &str = env!("CARGO_BIN_EXE_genmetrics");

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn genmetrics(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("GENMETRICS_THREADS")
        .output()
        .expect("binary runs")
}

pub fn stdout_files(out: &Output) -> Vec<PathBuf> {
    String::from_utf8_lossy(&out.stdout).lines().map(PathBuf::from).collect()
}

/// A small end-to-end dataset: manifests, CXGB embeddings, PNG images and a
/// score file with the distance columns left empty.
pub struct Dataset {
    pub dir: tempfile::TempDir,
    pub config: PathBuf,
}

const PROMPTS: usize = 12;
const SEEDS: u64 = 3;
const SIDE: u32 = 16;

fn labels(rng: &mut impl Rng) -> [bool; 14] {
    let mut l = [false; 14];
    for slot in l.iter_mut().take(4) {
        *slot = rng.gen_bool(0.6);
    }
    l
}

fn write_png(path: &Path, rng: &mut impl Rng, base: u8) {
    let img = image::GrayImage::from_fn(SIDE, SIDE, |_, _| {
        image::Luma([base.saturating_add(rng.gen_range(0..40))])
    });
    img.save(path).unwrap();
}

impl Dataset {
    pub fn build() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        std::fs::create_dir_all(root.join("images")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = 6;

        let mut real = Vec::new();
        let mut real_rows = Vec::new();
        for p in 0..PROMPTS {
            let id = format!("real-{p:02}");
            let path = format!("images/{id}.png");
            write_png(&root.join(&path), &mut rng, 60);
            real.push(SampleRecord {
                sample_id: id,
                image_path: path,
                split: if p % 4 == 0 { Split::Test } else { Split::Train },
                labels: labels(&mut rng),
                prompt_id: format!("prompt-{p:02}"),
                prompt_text: Some(format!("finding {p}")),
                seed: None,
                model_id: None,
            });
            real_rows.push((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>());
        }

        let mut fake = Vec::new();
        let mut fake_rows = Vec::new();
        for p in 0..PROMPTS {
            for s in 0..SEEDS {
                let id = format!("syn-{p:02}-{s}");
                let path = format!("images/{id}.png");
                write_png(&root.join(&path), &mut rng, 70);
                fake.push(SampleRecord {
                    sample_id: id,
                    image_path: path,
                    split: Split::Synthetic,
                    labels: real[p].labels,
                    prompt_id: format!("prompt-{p:02}"),
                    prompt_text: Some(format!("finding {p}")),
                    seed: Some(s),
                    model_id: Some("toy-model".into()),
                });
                fake_rows.push((0..d).map(|_| rng.gen_range(-0.8..1.2)).collect::<Vec<f64>>());
            }
        }

        let real_ids: Vec<String> = real.iter().map(|r| r.sample_id.clone()).collect();
        let fake_ids: Vec<String> = fake.iter().map(|r| r.sample_id.clone()).collect();
        let to_matrix = |rows: &[Vec<f64>], ids: Vec<String>| {
            let values = rows.iter().flatten().map(|&v| v as f32).collect();
            EmbeddingMatrix::new(rows.len(), d, values, ids).unwrap()
        };
        write_embeddings(&to_matrix(&real_rows, real_ids), root.join("real.cxgb")).unwrap();
        write_embeddings(&to_matrix(&fake_rows, fake_ids), root.join("synthetic.cxgb")).unwrap();
        write_manifest(
            &SampleManifest::new(real).unwrap(),
            std::fs::File::create(root.join("real_manifest.csv")).unwrap(),
        )
        .unwrap();
        write_manifest(
            &SampleManifest::new(fake).unwrap(),
            std::fs::File::create(root.join("synthetic_manifest.csv")).unwrap(),
        )
        .unwrap();

        let mut scores = String::from("prompt_id,seed,reid_score,pixel_distance,latent_distance\n");
        for p in 0..PROMPTS {
            for s in 0..SEEDS {
                scores.push_str(&format!("prompt-{p:02},{s},{:.3},,\n", rng.gen_range(0.0..1.0)));
            }
        }
        std::fs::write(root.join("scores.csv"), scores).unwrap();
        let mut align = String::from("sample_id,alignment_score\n");
        for p in 0..PROMPTS {
            align.push_str(&format!("syn-{p:02}-0,{:.4}\n", rng.gen_range(-0.2..0.9)));
        }
        std::fs::write(root.join("alignment.csv"), align).unwrap();

        let config = root.join("run.json");
        let cfg = serde_json::json!({
            "paths": {
                "real_embeddings": "real.cxgb",
                "fake_embeddings": "synthetic.cxgb",
                "real_manifest": "real_manifest.csv",
                "fake_manifest": "synthetic_manifest.csv",
                "images_root": ".",
                "scores": "scores.csv",
                "alignment_scores": "alignment.csv"
            },
            "kid": { "num_subsets": 20 },
            "prdc": { "k": 3 },
            "privacy": { "seeds_per_prompt": SEEDS, "num_prompts": PROMPTS },
            "image_side": SIDE
        });
        std::fs::write(&config, serde_json::to_vec_pretty(&cfg).unwrap()).unwrap();
        Self { dir, config }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}
