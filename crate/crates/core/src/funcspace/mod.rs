//! Weights, measures and test functions: closed-form piecewise densities on
//! the line, uniform grid functions with prefix sums, small matrices and cube
//! families.

mod cube;
mod grid;
mod matrix;
mod segment;

pub use cube::{Cube, CubeFamily, FamilySpec, GridLattices, Lattice};
pub use grid::{
    geometry_from_box, sample_density_2d, sample_separable, sample_to_grid, CellCube, GridFunction,
    GridGeometry, GridSpec,
};
pub use matrix::{MatrixSpec, SquareMatrix, ORDER_SEARCH_BOUND};
pub use segment::{
    compose_matrix, segment_mass, weight_mass, Density, FormTag, Measure, Segment, SegmentSpec,
    SegmentWeight1D, Tail, WeightSpec,
};
