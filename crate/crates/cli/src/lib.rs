//! Configuration, sweeps and reports behind the `weylbox` command.

pub mod commands;
pub mod config;
pub mod expr;
pub mod report;
pub mod sweep;

pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use expr::{Expr, VectorExpr};
pub use report::{emit_report, ReportError};
pub use sweep::{run_sweep, SweepRow};
