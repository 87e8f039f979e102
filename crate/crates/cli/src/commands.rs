use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use genmetrics_core::conditional::{conditional_metrics, ConditionalReport, StratumSettings};
use genmetrics_core::distribution::{fidelity, FidelityResult};
use genmetrics_core::io::{load_gray_image, read_embeddings, read_manifest};
use genmetrics_core::leaderboard::{
    aggregate_ranks, emit_report, mean_alignment, read_alignment_scores, Correlation, Direction, MetricTable,
    RankTable, Report, ReportFormat,
};
use genmetrics_core::manifold::{prdc, PrdcResult};
use genmetrics_core::privacy::{
    audit, latent_distance, pixel_distance, read_score_file, write_per_prompt_csv, PrivacyAudit, PrivacyPairRecord,
    ScoreRow,
};
use genmetrics_core::{EmbeddingMatrix, Error, GrayImage, SampleManifest};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Context};
use crate::record::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Fidelity,
    Prdc,
    Privacy,
    Conditional,
    Rank,
    Report,
    Validate,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Fidelity => "fidelity",
            Subcommand::Prdc => "prdc",
            Subcommand::Privacy => "privacy",
            Subcommand::Conditional => "conditional",
            Subcommand::Rank => "rank",
            Subcommand::Report => "report",
            Subcommand::Validate => "validate",
        }
    }
}

/// Files read and written by one run.
#[derive(Default)]
struct Run {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Run {
    fn input(&mut self, p: &Path) -> PathBuf {
        self.inputs.push(p.to_path_buf());
        p.to_path_buf()
    }

    fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        self.outputs.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
        let mut json = serde_json::to_vec_pretty(value).expect("result serializes");
        json.push(b'\n');
        self.write(dir, name, &json)
    }
}

/// Runs one subcommand and writes its results plus a run record into the
/// configured output directory. Returns the files written.
pub fn run(cmd: Subcommand, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| CliError::Output(format!("{}: {e}", out.display())))?;
    let mut run = Run::default();
    match cmd {
        Subcommand::Fidelity => run_fidelity(cfg, &out, &mut run)?,
        Subcommand::Prdc => run_prdc(cfg, &out, &mut run)?,
        Subcommand::Privacy => run_privacy(cfg, &out, &mut run)?,
        Subcommand::Conditional => run_conditional(cfg, &out, &mut run)?,
        Subcommand::Rank => run_rank(cfg, &out, &mut run)?,
        Subcommand::Report => run_report(cfg, &out, &mut run)?,
        Subcommand::Validate => run_validate(cfg, &out, &mut run)?,
    }
    let record = RunRecord::new(cmd.name(), cfg, &run.inputs, &run.outputs)?;
    let path = record.write(&out)?;
    run.outputs.push(path);
    Ok(run.outputs)
}

fn embeddings(path: &Path, run: &mut Run) -> Result<EmbeddingMatrix, CliError> {
    read_embeddings(run.input(path)).context(path.display())
}

fn manifest(path: &Path, run: &mut Run) -> Result<SampleManifest, CliError> {
    read_manifest(run.input(path)).context(path.display())
}

fn real_fake(cfg: &RunConfig, run: &mut Run) -> Result<(EmbeddingMatrix, EmbeddingMatrix), CliError> {
    let real = embeddings(cfg.require(&cfg.paths.real_embeddings, "paths.real_embeddings")?, run)?;
    let fake = embeddings(cfg.require(&cfg.paths.fake_embeddings, "paths.fake_embeddings")?, run)?;
    Ok((real, fake))
}

fn metric_value_csv(rows: &[(&str, f64)]) -> Vec<u8> {
    let mut s = String::from("metric,value\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s.into_bytes()
}

#[derive(Debug, Serialize)]
struct FidelityOutput {
    n_real: usize,
    n_fake: usize,
    dim: usize,
    #[serde(flatten)]
    result: FidelityResult,
    alignment_score: Option<f64>,
}

fn compute_fidelity(cfg: &RunConfig, run: &mut Run) -> Result<FidelityOutput, CliError> {
    let (real, fake) = real_fake(cfg, run)?;
    let result = fidelity(&real, &fake, cfg.regularization, &cfg.kid_config()).context("fidelity")?;
    let alignment_score = match &cfg.paths.alignment_scores {
        Some(p) => {
            let scores = read_alignment_scores(run.input(p)).context(p.display())?;
            Some(mean_alignment(&scores).context(p.display())?)
        }
        None => None,
    };
    Ok(FidelityOutput {
        n_real: real.n(),
        n_fake: fake.n(),
        dim: real.d(),
        result,
        alignment_score,
    })
}

fn run_fidelity(cfg: &RunConfig, out: &Path, run: &mut Run) -> Result<(), CliError> {
    let res = compute_fidelity(cfg, run)?;
    if cfg.formats.contains(&ReportFormat::Json) {
        run.write_json(out, "fidelity.json", &res)?;
    }
    if cfg.formats.contains(&ReportFormat::Csv) {
        let mut rows = vec![
            ("fid", res.result.fid),
            ("kid_mean", res.result.kid_mean),
            ("kid_std", res.result.kid_std),
        ];
        if let Some(a) = res.alignment_score {
            rows.push(("alignment_score", a));
        }
        run.write(out, "fidelity.csv", &metric_value_csv(&rows))?;
    }
    Ok(())
}

fn compute_prdc(cfg: &RunConfig, run: &mut Run) -> Result<PrdcResult, CliError> {
    let (real, fake) = real_fake(cfg, run)?;
    prdc(&real, &fake, &cfg.prdc).context("prdc")
}

fn run_prdc(cfg: &RunConfig, out: &Path, run: &mut Run) -> Result<(), CliError> {
    let res = compute_prdc(cfg, run)?;
    if cfg.formats.contains(&ReportFormat::Json) {
        #[derive(Serialize)]
        struct Out {
            k: usize,
            #[serde(flatten)]
            result: PrdcResult,
        }
        run.write_json(out, "prdc.json", &Out { k: cfg.prdc.k, result: res })?;
    }
    if cfg.formats.contains(&ReportFormat::Csv) {
        let rows = [
            ("precision", res.precision),
            ("recall", res.recall),
            ("density", res.density),
            ("coverage", res.coverage),
        ];
        run.write(out, "prdc.csv", &metric_value_csv(&rows))?;
    }
    Ok(())
}

/// Fills missing distances in score rows from manifests, images and
/// embeddings. Real images are matched by prompt id, synthetic images by
/// prompt id and seed.
fn resolve_distances(rows: Vec<ScoreRow>, cfg: &RunConfig, run: &mut Run) -> Result<Vec<PrivacyPairRecord>, CliError> {
    let needs_pixel = rows.iter().any(|r| r.pixel_distance.is_none());
    let needs_latent = rows.iter().any(|r| r.latent_distance.is_none());
    if !needs_pixel && !needs_latent {
        return rows
            .into_iter()
            .map(|r| r.complete())
            .collect::<Result<_, _>>()
            .context("scores");
    }

    let real_m = manifest(cfg.require(&cfg.paths.real_manifest, "paths.real_manifest")?, run)?;
    let fake_m = manifest(cfg.require(&cfg.paths.fake_manifest, "paths.fake_manifest")?, run)?;
    let mut real_by_prompt: HashMap<&str, usize> = HashMap::new();
    for (i, r) in real_m.records.iter().enumerate() {
        real_by_prompt.entry(r.prompt_id.as_str()).or_insert(i);
    }
    let mut fake_by_key: HashMap<(&str, u64), usize> = HashMap::new();
    for (i, r) in fake_m.records.iter().enumerate() {
        if let Some(seed) = r.seed {
            fake_by_key.entry((r.prompt_id.as_str(), seed)).or_insert(i);
        }
    }
    let lookup = |row: &ScoreRow| -> Result<(usize, usize), CliError> {
        let real = real_by_prompt.get(row.prompt_id.as_str()).copied().ok_or_else(|| {
            CliError::Core {
                context: "real manifest".into(),
                source: Error::IdAlignment(format!("no real record for prompt `{}`", row.prompt_id)),
            }
        })?;
        let fake = fake_by_key
            .get(&(row.prompt_id.as_str(), row.seed))
            .copied()
            .ok_or_else(|| CliError::Core {
                context: "synthetic manifest".into(),
                source: Error::IdAlignment(format!(
                    "no synthetic record for prompt `{}` seed {}",
                    row.prompt_id, row.seed
                )),
            })?;
        Ok((real, fake))
    };
    let pairs: Vec<(usize, usize)> = rows.iter().map(lookup).collect::<Result<_, _>>()?;

    let root = cfg.paths.images_root.clone().unwrap_or_default();
    let side = cfg.image_side;
    let image_path = |rel: &str| root.join(rel);

    let real_images: BTreeMap<usize, GrayImage> = if needs_pixel {
        let mut wanted: Vec<usize> = rows
            .iter()
            .zip(&pairs)
            .filter(|(r, _)| r.pixel_distance.is_none())
            .map(|(_, p)| p.0)
            .collect();
        wanted.sort_unstable();
        wanted.dedup();
        for &i in &wanted {
            run.input(&image_path(&real_m.records[i].image_path));
        }
        wanted
            .par_iter()
            .map(|&i| {
                let p = image_path(&real_m.records[i].image_path);
                load_gray_image(&p, side).context(p.display()).map(|img| (i, img))
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .collect()
    } else {
        BTreeMap::new()
    };
    if needs_pixel {
        for (r, p) in rows.iter().zip(&pairs) {
            if r.pixel_distance.is_none() {
                run.input(&image_path(&fake_m.records[p.1].image_path));
            }
        }
    }

    let latents = if needs_latent {
        let (real_e, fake_e) = real_fake(cfg, run)?;
        Some((real_e, fake_e))
    } else {
        None
    };
    let latent_rows = |real_i: usize, fake_i: usize| -> Result<f64, CliError> {
        let (re, fe) = latents.as_ref().expect("latents loaded");
        let rid = &real_m.records[real_i].sample_id;
        let fid = &fake_m.records[fake_i].sample_id;
        let find = |m: &EmbeddingMatrix, id: &str| {
            m.sample_ids().iter().position(|s| s == id).ok_or_else(|| CliError::Core {
                context: "embeddings".into(),
                source: Error::IdAlignment(format!("sample `{id}` has no embedding row")),
            })
        };
        let a = re.row_f64(find(re, rid)?);
        let b = fe.row_f64(find(fe, fid)?);
        latent_distance(&a, &b).context(format!("latent distance {rid} vs {fid}"))
    };

    rows.into_par_iter()
        .zip(pairs.par_iter())
        .map(|(row, &(ri, fi))| {
            let pixel = match row.pixel_distance {
                Some(v) => v,
                None => {
                    let p = image_path(&fake_m.records[fi].image_path);
                    let fake_img = load_gray_image(&p, side).context(p.display())?;
                    pixel_distance(&real_images[&ri], &fake_img).context(p.display())?
                }
            };
            let latent = match row.latent_distance {
                Some(v) => v,
                None => latent_rows(ri, fi)?,
            };
            ScoreRow {
                pixel_distance: Some(pixel),
                latent_distance: Some(latent),
                ..row
            }
            .complete()
            .context("scores")
        })
        .collect()
}

fn compute_privacy(cfg: &RunConfig, run: &mut Run) -> Result<PrivacyAudit, CliError> {
    cfg.privacy.validate().context("privacy config")?;
    let path = cfg.require(&cfg.paths.scores, "paths.scores")?;
    let rows = read_score_file(run.input(path)).context(path.display())?;
    let records = resolve_distances(rows, cfg, run)?;
    audit(&records, &cfg.privacy).context(path.display())
}

fn run_privacy(cfg: &RunConfig, out: &Path, run: &mut Run) -> Result<(), CliError> {
    let res = compute_privacy(cfg, run)?;
    if cfg.formats.contains(&ReportFormat::Json) {
        run.write_json(out, "privacy.json", &res)?;
    }
    if cfg.formats.contains(&ReportFormat::Csv) {
        let s = &res.summary;
        let rows = [
            ("avg_reid", s.avg_reid),
            ("avg_latent", s.avg_latent),
            ("avg_pixel", s.avg_pixel),
            ("max_reid", s.max_reid),
            ("count_over_delta", s.count_over_delta as f64),
            ("delta", s.delta),
            ("num_prompts", s.num_prompts as f64),
        ];
        run.write(out, "privacy.csv", &metric_value_csv(&rows))?;
        let mut buf = Vec::new();
        write_per_prompt_csv(&s.per_prompt, &mut buf).context("privacy_per_prompt.csv")?;
        run.write(out, "privacy_per_prompt.csv", &buf)?;
    }
    Ok(())
}

fn compute_conditional(cfg: &RunConfig, run: &mut Run) -> Result<ConditionalReport, CliError> {
    let (real, fake) = real_fake(cfg, run)?;
    let real_m = manifest(cfg.require(&cfg.paths.real_manifest, "paths.real_manifest")?, run)?;
    let fake_m = manifest(cfg.require(&cfg.paths.fake_manifest, "paths.fake_manifest")?, run)?;
    let kid = cfg.kid_config();
    let settings = StratumSettings {
        regularization: cfg.regularization,
        kid: &kid,
        prdc: &cfg.prdc,
        conditional: &cfg.conditional,
    };
    conditional_metrics(&real, &fake, &real_m, &fake_m, settings).context("conditional")
}

fn run_conditional(cfg: &RunConfig, out: &Path, run: &mut Run) -> Result<(), CliError> {
    let res = compute_conditional(cfg, run)?;
    if cfg.formats.contains(&ReportFormat::Json) {
        run.write_json(out, "conditional.json", &res)?;
    }
    if cfg.formats.contains(&ReportFormat::Csv) {
        let mut buf = Vec::new();
        res.write_csv(&mut buf).context("conditional.csv")?;
        run.write(out, "conditional.csv", &buf)?;
    }
    Ok(())
}

/// A fixture table plus whether every metric had a configured direction.
struct LoadedTable {
    name: String,
    table: MetricTable,
    /// Metrics with no configured direction.
    undirected: Vec<String>,
}

fn load_table(path: &Path, cfg: &RunConfig, run: &mut Run) -> Result<LoadedTable, CliError> {
    let bytes = std::fs::read(run.input(path)).map_err(|e| CliError::Core {
        context: path.display().to_string(),
        source: Error::io(path, e),
    })?;
    // Columns without a configured direction are still readable as raw
    // values; they just cannot be ranked.
    let header_line = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    let mut dirs = cfg.directions.clone();
    for col in String::from_utf8_lossy(header_line).split(',').map(|c| c.trim().trim_matches('"')) {
        if col != "model_id" && !dirs.contains_key(col) && !col.is_empty() {
            dirs.insert(col.to_string(), Direction::LowerBetter);
        }
    }
    let mut table = MetricTable::parse_csv(bytes.as_slice(), &dirs).context(path.display())?;
    if !cfg.rank.exclude_columns.is_empty() {
        let keep: Vec<usize> = (0..table.num_metrics())
            .filter(|&i| !cfg.rank.exclude_columns.contains(&table.metric_names[i]))
            .collect();
        table = MetricTable::new(
            table.model_ids.clone(),
            keep.iter().map(|&i| table.metric_names[i].clone()).collect(),
            table.values.iter().map(|r| keep.iter().map(|&i| r[i]).collect()).collect(),
            keep.iter().map(|&i| table.directions[i]).collect(),
        )
        .context(path.display())?;
    }
    let undirected = table
        .metric_names
        .iter()
        .filter(|m| !cfg.directions.contains_key(*m))
        .cloned()
        .collect();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "table".into());
    Ok(LoadedTable {
        name,
        table,
        undirected,
    })
}

/// The score series used to correlate two tables: a named column if given,
/// else the aggregated average rank.
fn score_series(
    t: &LoadedTable,
    ranks: Option<&RankTable>,
    column: Option<&str>,
) -> Result<(String, Vec<f64>), CliError> {
    match column {
        Some(c) => Ok((
            format!("{}[{c}]", t.name),
            t.table.column_by_name(c).context(&t.name)?,
        )),
        None => {
            let r = ranks.ok_or_else(|| {
                CliError::Config(format!(
                    "table `{}` needs a direction for every metric or a selected column",
                    t.name
                ))
            })?;
            Ok((format!("{}[average_rank]", t.name), r.average_rank.clone()))
        }
    }
}

fn ranks_for(t: &LoadedTable, required: bool) -> Result<Option<RankTable>, CliError> {
    if !t.undirected.is_empty() {
        if required {
            return Err(CliError::Core {
                context: t.name.clone(),
                source: Error::InvalidConfig(format!("no direction given for metrics {:?}", t.undirected)),
            });
        }
        return Ok(None);
    }
    aggregate_ranks(&t.table).context(&t.name).map(Some)
}

fn rank_sections(cfg: &RunConfig, run: &mut Run, report: &mut Report) -> Result<(), CliError> {
    let path = cfg.require(&cfg.paths.metric_table, "paths.metric_table")?;
    let main = load_table(path, cfg, run)?;
    let main_ranks = ranks_for(&main, cfg.rank.table_column.is_none())?;
    if let Some(r) = &main_ranks {
        report.add_rank_table(format!("{} ranks", main.name), r.clone());
    }

    if let Some(cpath) = &cfg.paths.compare_table {
        let other = load_table(cpath, cfg, run)?;
        let other_ranks = if cfg.rank.compare_column.is_some() {
            None
        } else {
            ranks_for(&other, true)?
        };
        let (xname, x) = score_series(&main, main_ranks.as_ref(), cfg.rank.table_column.as_deref())?;
        let (yname, y) = score_series(&other, other_ranks.as_ref(), cfg.rank.compare_column.as_deref())?;
        let yidx: HashMap<&str, usize> = other
            .table
            .model_ids
            .iter()
            .enumerate()
            .map(|(i, m)| (m.as_str(), i))
            .collect();
        let mut keys = Vec::new();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (i, m) in main.table.model_ids.iter().enumerate() {
            if let Some(&j) = yidx.get(m.as_str()) {
                keys.push(m.clone());
                xs.push(x[i]);
                ys.push(y[j]);
            }
        }
        if keys.len() != main.table.num_models() || keys.len() != other.table.num_models() {
            log::warn!(
                "correlating {} of {} / {} models present in both tables",
                keys.len(),
                main.table.num_models(),
                other.table.num_models()
            );
        }
        let corr = Correlation::between(format!("{xname} vs {yname}"), keys, &xs, &ys).context("correlation")?;
        report.correlations.push(corr);
        if let Some(r) = other_ranks {
            report.add_rank_table(format!("{} ranks", other.name), r);
        }
    }
    Ok(())
}

fn run_rank(cfg: &RunConfig, out: &Path, run: &mut Run) -> Result<(), CliError> {
    let mut report = Report::new("Rankings");
    rank_sections(cfg, run, &mut report)?;
    let files = emit_report(&report, &cfg.formats, out).context(out.display())?;
    run.outputs.extend(files);
    Ok(())
}

/// Builds whichever sections the configured inputs allow.
fn run_report(cfg: &RunConfig, out: &Path, run: &mut Run) -> Result<(), CliError> {
    let mut report = Report::new("Evaluation report");
    let p = &cfg.paths;
    if let Some(path) = &p.metric_table {
        let t = load_table(path, cfg, run)?;
        if t.undirected.is_empty() {
            report.add_metric_table(t.name.clone(), t.table);
        }
        rank_sections(cfg, run, &mut report)?;
    }
    if p.real_embeddings.is_some() && p.fake_embeddings.is_some() {
        let f = compute_fidelity(cfg, run)?;
        let pr = compute_prdc(cfg, run)?;
        let model = p
            .fake_embeddings
            .as_ref()
            .and_then(|f| f.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "synthetic".into());
        let mut cols = vec![
            ("FID", f.result.fid, Direction::LowerBetter),
            ("KID", f.result.kid_mean, Direction::LowerBetter),
        ];
        if let Some(a) = f.alignment_score {
            cols.push(("Alignment Score", a, Direction::HigherBetter));
        }
        cols.extend([
            ("Precision", pr.precision, Direction::HigherBetter),
            ("Recall", pr.recall, Direction::HigherBetter),
            ("Density", pr.density, Direction::HigherBetter),
            ("Coverage", pr.coverage, Direction::HigherBetter),
        ]);
        let table = MetricTable::new(
            vec![model],
            cols.iter().map(|c| c.0.to_string()).collect(),
            vec![cols.iter().map(|c| c.1).collect()],
            cols.iter().map(|c| c.2).collect(),
        )
        .context("fidelity table")?;
        report.add_metric_table("Fidelity", table);
        if p.real_manifest.is_some() && p.fake_manifest.is_some() {
            report.conditional = Some(compute_conditional(cfg, run)?);
        }
    }
    if p.scores.is_some() {
        report.privacy = Some(compute_privacy(cfg, run)?.summary);
    }
    if report.is_empty() {
        return Err(CliError::Config(
            "report needs at least one of: metric_table, embeddings, scores".into(),
        ));
    }
    let files = emit_report(&report, &cfg.formats, out).context(out.display())?;
    run.outputs.extend(files);
    Ok(())
}

#[derive(Debug, Serialize)]
struct FileCheck {
    path: String,
    kind: &'static str,
    summary: String,
}

#[derive(Debug, Default, Serialize)]
struct Validation {
    files: Vec<FileCheck>,
    warnings: Vec<String>,
}

fn check_pair(m: &SampleManifest, e: &EmbeddingMatrix, what: &str, v: &mut Validation) {
    let mids: Vec<&str> = m.ids().collect();
    let eids: Vec<&str> = e.sample_ids().iter().map(String::as_str).collect();
    if mids != eids {
        let missing = mids.iter().filter(|id| !eids.contains(id)).count();
        let extra = eids.iter().filter(|id| !mids.contains(id)).count();
        v.warnings.push(if missing == 0 && extra == 0 {
            format!("{what}: embedding ids are a reordering of the manifest ids")
        } else {
            format!("{what}: {missing} manifest ids without embeddings, {extra} embeddings without manifest rows")
        });
    }
}

fn run_validate(cfg: &RunConfig, out: &Path, run: &mut Run) -> Result<(), CliError> {
    let p = &cfg.paths;
    let mut v = Validation::default();
    let check_emb = |path: &Option<PathBuf>, run: &mut Run, v: &mut Validation| -> Result<Option<EmbeddingMatrix>, CliError> {
        let Some(path) = path else { return Ok(None) };
        let m = embeddings(path, run)?;
        v.files.push(FileCheck {
            path: path.display().to_string(),
            kind: "embeddings",
            summary: format!("n={} d={}", m.n(), m.d()),
        });
        Ok(Some(m))
    };
    let real_e = check_emb(&p.real_embeddings, run, &mut v)?;
    let fake_e = check_emb(&p.fake_embeddings, run, &mut v)?;
    let check_man = |path: &Option<PathBuf>, run: &mut Run, v: &mut Validation| -> Result<Option<SampleManifest>, CliError> {
        let Some(path) = path else { return Ok(None) };
        let m = manifest(path, run)?;
        v.files.push(FileCheck {
            path: path.display().to_string(),
            kind: "manifest",
            summary: format!("records={}", m.len()),
        });
        Ok(Some(m))
    };
    let real_m = check_man(&p.real_manifest, run, &mut v)?;
    let fake_m = check_man(&p.fake_manifest, run, &mut v)?;
    if let (Some(m), Some(e)) = (&real_m, &real_e) {
        check_pair(m, e, "real", &mut v);
    }
    if let (Some(m), Some(e)) = (&fake_m, &fake_e) {
        check_pair(m, e, "synthetic", &mut v);
    }
    if let Some(path) = &p.scores {
        let rows = read_score_file(run.input(path)).context(path.display())?;
        let mut seen = std::collections::BTreeSet::new();
        for r in &rows {
            if !seen.insert((r.prompt_id.as_str(), r.seed)) {
                v.warnings.push(format!("{}: duplicate pair prompt `{}` seed {}", path.display(), r.prompt_id, r.seed));
            }
            for (name, d) in [("pixel_distance", r.pixel_distance), ("latent_distance", r.latent_distance)] {
                if let Some(d) = d {
                    if !d.is_finite() || d < 0.0 {
                        return Err(CliError::Core {
                            context: path.display().to_string(),
                            source: Error::OutOfRange(format!(
                                "{name} {d} for prompt `{}` seed {}",
                                r.prompt_id, r.seed
                            )),
                        });
                    }
                }
            }
        }
        v.files.push(FileCheck {
            path: path.display().to_string(),
            kind: "scores",
            summary: format!("pairs={}", rows.len()),
        });
    }
    if let Some(path) = &p.alignment_scores {
        let s = read_alignment_scores(run.input(path)).context(path.display())?;
        v.files.push(FileCheck {
            path: path.display().to_string(),
            kind: "alignment_scores",
            summary: format!("samples={}", s.len()),
        });
    }
    for path in [&p.metric_table, &p.compare_table].into_iter().flatten() {
        let t = load_table(path, cfg, run)?;
        v.files.push(FileCheck {
            path: path.display().to_string(),
            kind: "metric_table",
            summary: format!("models={} metrics={}", t.table.num_models(), t.table.num_metrics()),
        });
    }
    if v.files.is_empty() {
        return Err(CliError::Config("nothing to validate: no input paths given".into()));
    }
    for w in &v.warnings {
        log::warn!("{w}");
    }
    run.write_json(out, "validation.json", &v)
}
