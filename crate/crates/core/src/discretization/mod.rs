//! Grids for the unit interval and unit disk, the background Neumann
//! Helmholtz solver and the Green operator.

pub mod banded;
mod green;
mod grid;
pub mod snapshot;

pub use green::{
    solve_background, sup_norm, BackgroundField, GreenSolver, MuEstimate, SourceSpec,
    MU_FULL_ROW_LIMIT, RESONANCE_GUARD,
};
pub use grid::{build_grid, DomainKind, Grid, GridMetadata, DISK_SCHEME, INTERVAL_SCHEME, MIN_RESOLUTION};
