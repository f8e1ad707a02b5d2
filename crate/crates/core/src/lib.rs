//! Numerical machinery for the decay dynamics of a two-level emitter with a
//! regularized memory kernel: special functions, kernel evaluation, an
//! error-controlled Volterra solver with a unitarity audit, and the
//! long-time asymptotics (contour pieces, crossover times).

pub mod asymptotics;
pub mod complex;
pub mod grid;
pub mod kernels;
pub mod params;
pub mod precision;
pub mod quadrature;
pub mod error;
pub mod real;
pub mod solver;
pub mod special;

pub use asymptotics::{amplitude_model, branch_cut_integrals, crossover_times, AsymptoticModel, ContourPieces, CrossoverTimes, TauLn};
pub use complex::{Complex, C64};
pub use error::{Error, Result};
pub use grid::Grid;
pub use kernels::KernelKind;
pub use precision::{Backend, PrecisionConfig};
pub use solver::{solve, spectral_amplitude, unitarity_audit, Scheme, SolveOptions, Trajectory, UnitarityReport};
pub use params::{Params, PhysicalInput};
pub use real::{Dd, Real};
