//! Tab-separated tweet datasets, the three label schemas, stratified
//! splitting, and macro-F1 scoring.

mod dataset;
mod metrics;
mod schema;

pub use dataset::{
    load_tsv, parse_tsv, sniff_field_count, stratified_counts, stratified_split, write_tsv, DataRecord, Dataset,
};
pub use metrics::{confusion_matrix, macro_f1, score, score_labels, ClassMetrics, MetricsReport};
pub use schema::{LabelSchema, Task};
