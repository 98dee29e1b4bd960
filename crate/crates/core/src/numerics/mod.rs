//! Uniform-grid finite elements and the linear and nonlinear solvers shared
//! by every experiment.

pub mod assembly;
pub mod grid;
pub mod nonlinear;
pub mod solvers;
pub mod sparse;

pub use assembly::{scalar_matrix, DofMap, LowerOrder, Mat2, QuadraticProblem};
pub use grid::{interpolate_affine, Grid, Topology};
pub use nonlinear::{minimize_p_energy, ConvexFunctional, Minimization, PEnergyFunctional};
pub use solvers::{
    cg_solve, cg_solve_with, gmres_solve_with, krylov_solve_nonsymmetric, Kernel, Solution,
    SolverConfig,
};
pub use sparse::{SparseSystem, TripletBuilder};

/// Builds a grid; see [`Grid::new`].
pub fn build_grid(
    dim: usize,
    cells_per_axis: usize,
    origin: &[f64],
    side_length: f64,
    topology: Topology,
) -> crate::Result<Grid> {
    Grid::new(dim, cells_per_axis, origin, side_length, topology)
}
