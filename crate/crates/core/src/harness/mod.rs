//! Experiment matrices: configuration files, parallel sweeps, CSV output and
//! summaries.

pub mod config;
pub mod presets;
pub mod summarize;
pub mod sweep;

pub use config::{ConfigError, NwbsPerSeed, SweepConfig};
pub use presets::{preset, PRESET_NAMES};
pub use summarize::{read_records, summarize, SummarizeError};
pub use sweep::{enumerate_cells, run_cell, run_sweep, write_csv, Cell, SweepError};
