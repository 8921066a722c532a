//! Scenario files: loading, running and sweeping.

mod config;
mod run;
mod sweep;

pub use config::{
    load_scenario, Assembled, BasisBlock, ForcingBlock, FreeEnergyBlock, GridBlock, InitialBlock,
    MobilityBlock, OutputBlock, Profile, ReactionBlock, Scenario, SolverBlock, SpeciesBlock,
    TimeBlock, ViscosityBlock, VolumeFunction,
};
pub use run::{
    output_root, run, simulate, snapshot_csv, Outcome, RunStatus, Summary, OUTPUT_ROOT_ENV,
};
pub use sweep::{
    apply_overrides, parse_grid, sweep, GridAxis, OrderEstimate, SweepEntry, SweepReport,
};
