//! Ensemble sweeps over (sample size, SNR) grids.
//!
//! Every cell `(x-index, snr-index, replicate)` derives its random streams
//! from the master seed and its own key only, so a sweep produces the same
//! numbers under any execution policy or worker count.

mod config;
mod csv;
mod pair;
mod sweep;

pub use config::{relu_train_config, ActivationPair, Axis, Solver, SweepConfig};
pub use csv::{emit_csv, parse_csv, write_csv, CSV_COLUMNS};
pub use pair::{run_pair, solve_network, CellSpec, Replicate};
pub use sweep::{aggregate, mean_stderr, run_sweep, Stat, SweepMetadata, SweepResult, SweepRow};
