//! File formats and persistence: the long-format dataset CSV, the
//! JSON-lines chain file, summary tables, and the flat key-value run
//! configuration.

mod chain_file;
mod config;
mod dataset;
mod summaries;

pub use chain_file::{read_chain, write_chain, CHAIN_FORMAT_VERSION};
pub use config::{parse_run_config, parse_run_config_str, RunConfig};
pub use dataset::{read_dataset_csv, write_dataset_csv};
pub use summaries::{
    write_coclustering, write_coefficient_summaries, write_count_summaries,
    write_effect_draws, write_ground_truth, write_km_clusters, write_outcome_draws,
    write_partition, write_progress_log,
};
