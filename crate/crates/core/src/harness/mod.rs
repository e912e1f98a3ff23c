//! Cross-validated experiment runner: config parsing, per-(arm, fold)
//! training, and Table-style report rendering.

mod config;
mod report;
mod runner;
mod seeds;

pub use config::{Arm, DataSource, ExperimentConfig};
pub use report::{render_report, render_table, RenderedReport};
pub use runner::{load_dataset, run_experiment, ArmReport, ExperimentReport, FoldReport, FoldSeeds};
pub use seeds::{derive_seed, SeedPurpose};
