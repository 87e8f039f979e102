use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::summation::tree_mean;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

impl Direction {
    pub fn arrow(self) -> &'static str {
        match self {
            Direction::LowerBetter => "↓",
            Direction::HigherBetter => "↑",
        }
    }
}

/// Model x metric matrix with a per-metric optimization direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTable {
    pub model_ids: Vec<String>,
    pub metric_names: Vec<String>,
    /// One row per model.
    pub values: Vec<Vec<f64>>,
    pub directions: Vec<Direction>,
}

impl MetricTable {
    pub fn new(
        model_ids: Vec<String>,
        metric_names: Vec<String>,
        values: Vec<Vec<f64>>,
        directions: Vec<Direction>,
    ) -> Result<Self> {
        if values.len() != model_ids.len() {
            return Err(Error::LengthMismatch(values.len(), model_ids.len()));
        }
        if directions.len() != metric_names.len() {
            return Err(Error::LengthMismatch(directions.len(), metric_names.len()));
        }
        if let Some(row) = values.iter().find(|r| r.len() != metric_names.len()) {
            return Err(Error::LengthMismatch(row.len(), metric_names.len()));
        }
        Ok(Self {
            model_ids,
            metric_names,
            values,
            directions,
        })
    }

    pub fn num_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn num_metrics(&self) -> usize {
        self.metric_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.model_ids.is_empty() || self.metric_names.is_empty()
    }

    pub fn metric_index(&self, name: &str) -> Option<usize> {
        self.metric_names.iter().position(|m| m == name)
    }

    pub fn column(&self, metric: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[metric]).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Result<Vec<f64>> {
        self.metric_index(name)
            .map(|i| self.column(i))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Best model for a metric; the first listed wins exact ties.
    pub fn best(&self, metric: usize) -> Option<(&str, f64)> {
        let better = |a: f64, b: f64| match self.directions[metric] {
            Direction::LowerBetter => a < b,
            Direction::HigherBetter => a > b,
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.values.iter().enumerate() {
            let v = row[metric];
            if best.is_none_or(|(_, b)| better(v, b)) {
                best = Some((i, v));
            }
        }
        best.map(|(i, v)| (self.model_ids[i].as_str(), v))
    }

    /// Parses `model_id,<metric>,...`; every metric column needs an entry in
    /// `directions`.
    pub fn parse_csv<R: Read>(reader: R, directions: &BTreeMap<String, Direction>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let id_col = headers
            .iter()
            .position(|h| h == "model_id")
            .ok_or_else(|| Error::MissingColumn("model_id".into()))?;
        let metric_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != id_col).collect();
        let metric_names: Vec<String> = metric_cols.iter().map(|&c| headers[c].to_string()).collect();
        let dirs = metric_names
            .iter()
            .map(|m| {
                directions
                    .get(m)
                    .copied()
                    .ok_or_else(|| Error::InvalidConfig(format!("no direction given for metric `{m}`")))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut model_ids = Vec::new();
        let mut values = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            model_ids.push(row.get(id_col).unwrap_or("").to_string());
            let vals = metric_cols
                .iter()
                .map(|&c| {
                    let raw = row.get(c).unwrap_or("");
                    raw.parse::<f64>().map_err(|_| Error::BadRecord {
                        line,
                        message: format!("`{raw}` in column `{}` is not a number", &headers[c]),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(vals);
        }
        Self::new(model_ids, metric_names, values, dirs)
    }

    pub fn read_csv(path: impl AsRef<Path>, directions: &BTreeMap<String, Direction>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(f, directions)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["model_id".to_string()];
        header.extend(self.metric_names.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.model_ids.iter().zip(&self.values) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<metric csv>", e))
    }
}

/// Reads `sample_id,alignment_score` rows; scores must lie in `[-1, 1]`.
pub fn read_alignment_scores(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f);
    let headers = rdr.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == "alignment_score")
        .ok_or_else(|| Error::MissingColumn("alignment_score".into()))?;
    let mut scores = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let raw = row.get(col).unwrap_or("");
        let v: f64 = raw.parse().map_err(|_| Error::BadRecord {
            line,
            message: format!("alignment score `{raw}` is not a number"),
        })?;
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange(format!("alignment score {v} on line {line}")));
        }
        scores.push(v);
    }
    Ok(scores)
}

/// Plain mean of per-sample alignment scores.
pub fn mean_alignment(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(tree_mean(scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirs(pairs: &[(&str, Direction)]) -> BTreeMap<String, Direction> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn parse_and_best() {
        let csv = "model_id,fid,recall\nA,10.5,0.2\nB,8.0,0.1\nC,9.0,0.3\n";
        let t = MetricTable::parse_csv(
            csv.as_bytes(),
            &dirs(&[("fid", Direction::LowerBetter), ("recall", Direction::HigherBetter)]),
        )
        .unwrap();
        assert_eq!(t.num_models(), 3);
        assert_eq!(t.best(0), Some(("B", 8.0)));
        assert_eq!(t.best(1), Some(("C", 0.3)));
        assert_eq!(t.column_by_name("recall").unwrap(), vec![0.2, 0.1, 0.3]);
    }

    #[test]
    fn missing_direction_and_bad_number() {
        let csv = "model_id,fid\nA,1\n";
        assert!(matches!(
            MetricTable::parse_csv(csv.as_bytes(), &BTreeMap::new()),
            Err(Error::InvalidConfig(_))
        ));
        let csv = "model_id,fid\nA,abc\n";
        assert!(matches!(
            MetricTable::parse_csv(csv.as_bytes(), &dirs(&[("fid", Direction::LowerBetter)])),
            Err(Error::BadRecord { line: 2, .. })
        ));
        assert!(matches!(
            MetricTable::parse_csv("fid\n1\n".as_bytes(), &BTreeMap::new()),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn alignment_mean() {
        assert!((mean_alignment(&[0.5, 0.7, 0.9]).unwrap() - 0.7).abs() < 1e-15);
        assert!(mean_alignment(&[]).is_err());
    }
}
