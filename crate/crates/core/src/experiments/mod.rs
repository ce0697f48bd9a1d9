//! Configuration, scenario execution, sweeps, refinement studies and the
//! verification suites behind the command-line tool.

pub mod config;
pub mod scenario;
pub mod snapshot;
pub mod studies;

pub use config::{DiagnosticsSelection, InitialRecipe, RunConfig};
pub use scenario::{eps_sweep, output_root, report, run_in_memory, run_scenario, Manifest, RunOutcome, SweepTable};
pub use snapshot::{SnapshotFile, SnapshotHeader};
pub use studies::{refinement_study, RefinementRow, Verdict};
