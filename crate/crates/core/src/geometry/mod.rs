//! Triangular nanobeam geometry and its rasterization onto a staggered grid.

mod raster;
mod spec;
mod structure;

pub use raster::{
    rasterize, required_memory, DielectricGrid, GridLayout, RasterOptions, Symmetry,
    SOLVER_BYTES_PER_CELL,
};
pub use spec::{GeometryConfig, GeometrySpec, LengthValue, Preset};
pub use structure::{
    Bounds, EmptySpace, HalfSpace, LayerStack, Material, NanobeamCavity, PeriodicBeam, Structure,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid geometry field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("grid needs {required} bytes, exceeding the memory budget of {budget} bytes")]
    MemoryBudget { required: usize, budget: usize },
}

impl GeometryError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        GeometryError::Invalid {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
