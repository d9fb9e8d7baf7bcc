//! Simulation studies: configs, the seeded parallel runner and CSV output.

mod config;
mod output;
mod run;

pub use config::{builtin_config, Axis, ExperimentConfig, GridPoint, Method, BUILTIN_EXAMPLES};
pub use output::{
    read_aggregates, read_records, write_aggregates, write_aggregates_csv, write_records, write_records_csv,
    AGGREGATE_HEADER, RECORD_HEADER,
};
pub use run::{aggregate, rep_seed, run_experiment, AggregateRow, ExperimentOutput, RepStatus, RepetitionRecord};
