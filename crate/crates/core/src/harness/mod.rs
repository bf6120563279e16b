//! Manufactured solutions, convergence sweeps and experiment presets.

pub mod exact;
pub mod presets;
pub mod sweep;

pub use exact::{mms_source_bcp, mms_source_ns, ExactSolutionBcp, ExactSolutionNs};
pub use presets::{experiment_presets, find_preset, Preset, SchemeKind};
pub use sweep::{
    benchmark_solution, run_convergence, run_convergence_with, ConvergenceRow, ConvergenceTable, Reference, SweepScheme,
    SweepSpec,
};
