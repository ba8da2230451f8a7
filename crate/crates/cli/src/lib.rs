//! Sweep driver, file output and plotting for the steering criteria.

pub mod checks;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod sweep;

pub use config::{parse_criteria, CriterionSpec, OutputFormat, SweepConfig};
pub use error::{CliError, Result};
pub use output::{parse_csv, rows_to_csv, write_output, CSV_HEADER};
pub use plot::{render_plot, render_svg};
pub use sweep::{run_sweep, FirstTermKind, FirstTermRow, SweepOutput, SweepRow};
