//! Command-line companion to the numerical core: JSON configuration,
//! diagnostics CSV, VTK/raw snapshots, and the simulate / bound /
//! certify / phi-check workflows.

pub mod commands;
pub mod config;
pub mod csv;
pub mod error;
pub mod vtk;

pub use commands::{cmd_bound, cmd_certify, cmd_phi_check, cmd_simulate, phi_sweep, PhiSweep};
pub use config::{FieldInit, RunConfig, SnapshotFormat};
pub use csv::{csv_row, diagnostics_csv, fmt_real, CSV_HEADER};
pub use error::CliError;
