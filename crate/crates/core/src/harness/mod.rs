//! Run configuration, output files, error norms and the scripted
//! experiments behind the command-line tool.

pub mod config;
pub mod experiments;
pub mod io;
pub mod norms;
pub mod validate;

pub use config::{InitialCondition, ModelSpec, Prepared, RunConfig, Speed};
pub use io::{read_diagnostics, read_snapshot, write_diagnostics, write_snapshot, DiagnosticsRecord};
pub use norms::{algebraic_orders, convergence_rates, cross_section_y0, error_norms, StateErrors};
pub use experiments::{reproduce_table, run, run_to_dir, sweep_dt, sweep_n, Column, RunOutput, SweepReport};
pub use validate::{validate, ValidationReport};
