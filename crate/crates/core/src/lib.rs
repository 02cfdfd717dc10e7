//! Exact graph-cut minimization of discrete prescribed-curvature functionals
//! on periodic grids, with isovolumetric and homogenization analysis.

pub mod energy;
pub mod error;
pub mod fft;
pub mod field;
pub mod forcing;
pub mod grid;
pub mod homogenize;
pub mod io;
pub mod isovol;
pub mod mask;
pub mod maxflow;
pub mod numeric;
pub mod oracle;
pub mod rng;
pub mod solver;
pub mod stencil;

pub use energy::{energy, Ledger};
pub use error::{Error, Result};
pub use field::ScalarField;
pub use forcing::{build_field, check_condg, solve_div_sigma, ForcingKind, ForcingSpec, TrigMode, VectorFieldSigma};
pub use grid::{AxisBoundary, PeriodicGrid};
pub use homogenize::{asymptotic_convergence, cell_surface_tension, wulff_shape, Anisotropy, WulffShape};
pub use isovol::{isovolumetric_curve, IsovolCurve, IsovolSample};
pub use mask::Mask;
pub use oracle::{brute_force_isovol, brute_force_min, IsovolTable, OracleResult};
pub use solver::{
    minimize_penalized, minimize_unconstrained, minimize_volume_constrained, parametric_sweep, Bracket,
    ConstrainedOptions, SolveResult, Status,
};
pub use stencil::{perimeter, PerimeterStencil, StencilPreset};
