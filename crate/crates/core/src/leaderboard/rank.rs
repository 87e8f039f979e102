use std::io::Write;

use serde::{Deserialize, Serialize};

use super::table::{Direction, MetricTable};
use crate::summation::tree_mean;
use crate::{Error, Result};

/// Ranks with 1 = best. Tied values share the mean of the positions they
/// occupy.
pub fn rank_metric(values: &[f64], direction: Direction) -> Result<Vec<f64>> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue(pos));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let ord = values[a].total_cmp(&values[b]);
        match direction {
            Direction::LowerBetter => ord,
            Direction::HigherBetter => ord.reverse(),
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    Ok(ranks)
}

/// Dense ranks of ascending values: 1, 2, 2, 3, ...
pub fn dense_rank(values: &[f64]) -> Vec<usize> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    values
        .iter()
        .map(|v| distinct.partition_point(|d| d < v) + 1)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub model_ids: Vec<String>,
    pub metric_names: Vec<String>,
    /// One row per model, one rank per metric.
    pub ranks: Vec<Vec<f64>>,
    pub average_rank: Vec<f64>,
    pub normalized_rank: Vec<usize>,
}

/// Per-metric ranks, their per-model mean, and a dense re-ranking of that
/// mean.
pub fn aggregate_ranks(t: &MetricTable) -> Result<RankTable> {
    if t.is_empty() {
        return Err(Error::EmptyInput);
    }
    let columns = (0..t.num_metrics())
        .map(|m| rank_metric(&t.column(m), t.directions[m]))
        .collect::<Result<Vec<_>>>()?;
    let ranks: Vec<Vec<f64>> = (0..t.num_models())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    let average_rank: Vec<f64> = ranks.iter().map(|r| tree_mean(r)).collect();
    let normalized_rank = dense_rank(&average_rank);
    Ok(RankTable {
        model_ids: t.model_ids.clone(),
        metric_names: t.metric_names.clone(),
        ranks,
        average_rank,
        normalized_rank,
    })
}

impl RankTable {
    pub fn average_for(&self, model: &str) -> Option<f64> {
        self.model_ids
            .iter()
            .position(|m| m == model)
            .map(|i| self.average_rank[i])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["model_id".to_string()];
        header.extend(self.metric_names.iter().cloned());
        header.extend(["average_rank".to_string(), "normalized_rank".to_string()]);
        w.write_record(&header)?;
        for i in 0..self.model_ids.len() {
            let mut rec = vec![self.model_ids[i].clone()];
            rec.extend(self.ranks[i].iter().map(|r| r.to_string()));
            rec.push(self.average_rank[i].to_string());
            rec.push(self.normalized_rank[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<rank csv>", e))
    }

    /// Markdown with two-decimal average ranks.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| Model |");
        for m in &self.metric_names {
            out.push_str(&format!(" {m} |"));
        }
        out.push_str(" Average Rank | Normalized Rank |\n|---|");
        out.push_str(&"---|".repeat(self.metric_names.len() + 2));
        out.push('\n');
        for i in 0..self.model_ids.len() {
            out.push_str(&format!("| {} |", self.model_ids[i]));
            for r in &self.ranks[i] {
                out.push_str(&format!(" {} |", fmt_rank(*r)));
            }
            out.push_str(&format!(
                " {:.2} | {} |\n",
                self.average_rank[i], self.normalized_rank[i]
            ));
        }
        out
    }
}

fn fmt_rank(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{r:.0}")
    } else {
        format!("{r:.1}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_lower_better() {
        assert_eq!(
            rank_metric(&[3.0, 1.0, 2.0], Direction::LowerBetter).unwrap(),
            vec![3.0, 1.0, 2.0]
        );
    }

    #[test]
    fn ties_share_average_position() {
        assert_eq!(
            rank_metric(&[1.0, 1.0, 3.0], Direction::LowerBetter).unwrap(),
            vec![1.5, 1.5, 3.0]
        );
        assert_eq!(
            rank_metric(&[2.0, 2.0, 2.0], Direction::HigherBetter).unwrap(),
            vec![2.0, 2.0, 2.0]
        );
    }

    #[test]
    fn ranks_higher_better() {
        assert_eq!(
            rank_metric(&[0.1, 0.9], Direction::HigherBetter).unwrap(),
            vec![2.0, 1.0]
        );
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            rank_metric(&[1.0, f64::NAN], Direction::LowerBetter),
            Err(Error::NonFiniteValue(1))
        ));
    }

    #[test]
    fn dense_ranking() {
        assert_eq!(dense_rank(&[2.5, 1.0, 2.5, 7.0]), vec![2, 1, 2, 3]);
    }

    #[test]
    fn single_model_table() {
        let t = MetricTable::new(
            vec!["only".into()],
            vec!["fid".into(), "recall".into()],
            vec![vec![50.0, 0.4]],
            vec![Direction::LowerBetter, Direction::HigherBetter],
        )
        .unwrap();
        let r = aggregate_ranks(&t).unwrap();
        assert_eq!(r.average_rank, vec![1.0]);
        assert_eq!(r.normalized_rank, vec![1]);
    }

    #[test]
    fn empty_table_rejected() {
        let t = MetricTable::new(vec![], vec![], vec![], vec![]).unwrap();
        assert!(matches!(aggregate_ranks(&t), Err(Error::EmptyInput)));
    }
}
