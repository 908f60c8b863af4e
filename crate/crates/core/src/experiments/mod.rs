//! Scenario definitions, data synthesis on a finer grid, inversion setup and
//! error metrics.

mod evaluate;
mod run;
mod scenario;

pub use evaluate::{
    cross_section, evaluate, write_cross_section_csv, write_reconstruction_csv, CrossSectionSample,
    ErrorComponents, ErrorReport, CROSS_SECTION_SAMPLES,
};
pub use run::{
    build_grids, convergence_report, solve_forward, synthesize, InversionSetup, SolverUsed,
    SynthesisSummary, CONVERGENCE_ORDER, NEWTON_MAX_ITER,
};
pub use scenario::{
    default_scales, scenario_1d, scenario_2d, DiskMedium, ForwardSettings, ForwardSolverKind,
    Medium, Region, Resolutions, Scenario, SourceSet, DISK_SOURCE_COUNT, DISK_WAVENUMBER,
};
