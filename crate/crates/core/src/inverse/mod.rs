//! Linearized forward map, its regularized pseudoinverse and the inverse
//! Born series.

mod data;
mod linearized;
mod pinv;
mod series;

pub use data::ScatteringData;
pub use linearized::{Block, Column, LinearizedMap, Parameterization, UnknownSelection};
pub use pinv::{RegularizedPseudoinverse, DEFAULT_TAU};
pub use series::{
    compositions, inverse_compositions, inverse_terms, reconstruct, InverseDiagnostics,
    InverseOptions, InverseProblem, Reconstruction, COMPOSITION_LIMIT,
};
