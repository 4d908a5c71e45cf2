//! Command-line front end: presets, sweep grids, experiments and CSV output.
//!
//! [`run`] is the whole program; the binary only forwards `argv` to it.

pub mod commands;
pub mod experiment;
pub mod grid;
pub mod output;
pub mod preset;
pub mod sweeps;

pub use commands::run;
pub use experiment::{NullDesign, NullRecord, PointOutcome, Program, Scene, Survey, System};
pub use grid::{Axis, Patch, SweepGrid};
pub use output::{write_curve_csv, write_heatmap_csv, CurveRow, HeatmapRow};
pub use preset::Preset;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] slm_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("nulling synthesis found no feasible design (best objective {:.4})", .0.record.objective)]
    Infeasible(Box<NullDesign>),
}

impl CliError {
    /// 2 for an infeasible synthesis, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) => 2,
            CliError::Core(slm_core::Error::Infeasible(_)) => 2,
            _ => 1,
        }
    }
}
