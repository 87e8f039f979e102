//! Cross-model aggregation: metric tables, direction-aware ranks, rank
//! averaging, correlations and report rendering.

mod correlation;
mod rank;
mod report;
mod table;

pub use correlation::{pearson, spearman, Correlation};
pub use rank::{aggregate_ranks, dense_rank, rank_metric, RankTable};
pub use report::{emit_report, Report, ReportFormat};
pub use table::{mean_alignment, read_alignment_scores, Direction, MetricTable};
