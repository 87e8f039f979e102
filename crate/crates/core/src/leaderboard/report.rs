use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::correlation::Correlation;
use super::rank::RankTable;
use super::table::{Direction, MetricTable};
use crate::conditional::ConditionalReport;
use crate::privacy::PrivacySummary;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Named<T> {
    pub name: String,
    pub table: T,
}

/// Everything a report run can render. Sections are emitted in field order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub metric_tables: Vec<Named<MetricTable>>,
    pub rank_tables: Vec<Named<RankTable>>,
    pub correlations: Vec<Correlation>,
    pub conditional: Option<ConditionalReport>,
    pub privacy: Option<PrivacySummary>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            ..Self::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.metric_tables.is_empty()
            && self.rank_tables.is_empty()
            && self.correlations.is_empty()
            && self.conditional.is_none()
            && self.privacy.is_none()
    }

    pub fn add_metric_table(&mut self, name: impl Into<String>, table: MetricTable) {
        self.metric_tables.push(Named {
            name: name.into(),
            table,
        });
    }

    pub fn add_rank_table(&mut self, name: impl Into<String>, table: RankTable) {
        self.rank_tables.push(Named {
            name: name.into(),
            table,
        });
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("# {}\n", self.title);
        for t in &self.metric_tables {
            let _ = write!(out, "\n## {}\n\n{}", t.name, t.table.to_markdown(3));
        }
        for t in &self.rank_tables {
            let _ = write!(out, "\n## {}\n\n{}", t.name, t.table.to_markdown());
        }
        if !self.correlations.is_empty() {
            out.push_str("\n## Correlations\n\n| Pair | n | Pearson | Spearman |\n|---|---|---|---|\n");
            for c in &self.correlations {
                let _ = writeln!(
                    out,
                    "| {} | {} | {:.3} | {:.3} |",
                    c.name,
                    c.keys.len(),
                    c.pearson,
                    c.spearman
                );
            }
        }
        if let Some(c) = &self.conditional {
            out.push_str("\n## Per-pathology metrics\n\n");
            out.push_str(&conditional_markdown(c));
        }
        if let Some(p) = &self.privacy {
            out.push_str("\n## Re-identification risk\n\n");
            out.push_str(&privacy_markdown(p));
        }
        out
    }
}

impl MetricTable {
    /// Markdown with the best value per column in bold and the runner-up
    /// underlined.
    pub fn to_markdown(&self, decimals: usize) -> String {
        let mut out = String::from("| Model |");
        for (name, dir) in self.metric_names.iter().zip(&self.directions) {
            let _ = write!(out, " {name} {} |", dir.arrow());
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(self.num_metrics()));
        out.push('\n');

        let podium: Vec<(Option<f64>, Option<f64>)> = (0..self.num_metrics())
            .map(|m| top_two(&self.column(m), self.directions[m]))
            .collect();
        for (id, row) in self.model_ids.iter().zip(&self.values) {
            let _ = write!(out, "| {id} |");
            for (m, v) in row.iter().enumerate() {
                let cell = format!("{v:.decimals$}");
                let cell = match podium[m] {
                    (Some(best), _) if *v == best => format!("**{cell}**"),
                    (_, Some(second)) if *v == second => format!("<u>{cell}</u>"),
                    _ => cell,
                };
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }
        out
    }
}

fn top_two(values: &[f64], dir: Direction) -> (Option<f64>, Option<f64>) {
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if dir == Direction::HigherBetter {
        distinct.reverse();
    }
    (distinct.first().copied(), distinct.get(1).copied())
}

fn conditional_markdown(c: &ConditionalReport) -> String {
    let mut out = String::from("| Metric |");
    for s in &c.strata {
        let _ = write!(out, " {} |", s.label_name);
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(c.strata.len()));
    out.push('\n');

    type Getter = fn(&crate::conditional::StratumReport) -> Option<f64>;
    let rows: [(&str, Getter, usize); 8] = [
        ("n real", |s| Some(s.n_real as f64), 0),
        ("n synthetic", |s| Some(s.n_fake as f64), 0),
        ("FID ↓", |s| s.metrics.as_ref().map(|m| m.fid), 2),
        ("KID ↓", |s| s.metrics.as_ref().map(|m| m.kid_mean), 3),
        ("Precision ↑", |s| s.metrics.as_ref().and_then(|m| m.prdc).map(|p| p.precision), 3),
        ("Recall ↑", |s| s.metrics.as_ref().and_then(|m| m.prdc).map(|p| p.recall), 3),
        ("Density ↑", |s| s.metrics.as_ref().and_then(|m| m.prdc).map(|p| p.density), 3),
        ("Coverage ↑", |s| s.metrics.as_ref().and_then(|m| m.prdc).map(|p| p.coverage), 3),
    ];
    for (name, get, decimals) in rows {
        let _ = write!(out, "| {name} |");
        for s in &c.strata {
            match get(s) {
                Some(v) => {
                    let _ = write!(out, " {v:.decimals$} |");
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out
}

fn privacy_markdown(p: &PrivacySummary) -> String {
    format!(
        "| Statistic | Value |\n|---|---:|\n\
         | Avg. Re-ID Score ↓ | {:.3} |\n\
         | Avg. Latent Distance ↑ | {:.3} |\n\
         | Avg. Pixel Distance ↑ | {:.3} |\n\
         | Max. Re-ID Score ↓ | {:.3} |\n\
         | Count Re-ID > {} ↓ | {} |\n\
         | Prompts | {} |\n",
        p.avg_reid,
        p.avg_latent,
        p.avg_pixel,
        p.max_reid,
        p.delta,
        p.count_over_delta,
        p.num_prompts
    )
}

fn slug(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    while s.contains("__") {
        s = s.replace("__", "_");
    }
    s.trim_matches('_').to_string()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes the report into `out_dir` in each requested format and returns
/// the files written. Output is a pure function of the report contents.
pub fn emit_report(report: &Report, formats: &[ReportFormat], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if report.is_empty() || report.metric_tables.iter().any(|t| t.table.is_empty()) {
        return Err(Error::EmptyInput);
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            ReportFormat::Markdown => {
                let path = out_dir.join("report.md");
                write_file(&path, report.to_markdown().as_bytes())?;
                written.push(path);
            }
            ReportFormat::Json => {
                let path = out_dir.join("report.json");
                let mut json = serde_json::to_vec_pretty(report)
                    .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                json.push(b'\n');
                write_file(&path, &json)?;
                written.push(path);
            }
            ReportFormat::Csv => {
                for t in &report.metric_tables {
                    let mut buf = Vec::new();
                    t.table.write_csv(&mut buf)?;
                    let path = out_dir.join(format!("{}.csv", slug(&t.name)));
                    write_file(&path, &buf)?;
                    written.push(path);
                }
                for t in &report.rank_tables {
                    let mut buf = Vec::new();
                    t.table.write_csv(&mut buf)?;
                    let path = out_dir.join(format!("{}.csv", slug(&t.name)));
                    write_file(&path, &buf)?;
                    written.push(path);
                }
                if !report.correlations.is_empty() {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.write_record(["pair", "n", "pearson", "spearman"])?;
                    for c in &report.correlations {
                        w.write_record([
                            c.name.clone(),
                            c.keys.len().to_string(),
                            c.pearson.to_string(),
                            c.spearman.to_string(),
                        ])?;
                    }
                    let buf = w.into_inner().map_err(|e| Error::io(out_dir, e.into_error()))?;
                    let path = out_dir.join("correlations.csv");
                    write_file(&path, &buf)?;
                    written.push(path);
                }
                if let Some(c) = &report.conditional {
                    let mut buf = Vec::new();
                    c.write_csv(&mut buf)?;
                    let path = out_dir.join("conditional.csv");
                    write_file(&path, &buf)?;
                    written.push(path);
                }
                if let Some(p) = &report.privacy {
                    let mut buf = Vec::new();
                    crate::privacy::write_per_prompt_csv(&p.per_prompt, &mut buf)?;
                    let path = out_dir.join("privacy_per_prompt.csv");
                    write_file(&path, &buf)?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}
