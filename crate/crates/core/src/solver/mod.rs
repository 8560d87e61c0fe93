//! Piecewise-polynomial collocation of the boundary integral system.
//!
//! The four complex densities are polynomials on each arc. Collocating the two
//! integral equations and the surface-tension conditions at oversampled points
//! gives an overdetermined real system. Force balance, single-valuedness and
//! the continuity conditions are imposed exactly; the rest is solved in the
//! least-squares sense by SVD with rank reporting.

mod assemble;
mod density;
mod solve;

pub use assemble::{assemble, CoefficientLayout, ConstantTerm, LinearSystem, Part, RowKind, RowTag, SolverOptions};
pub use density::{collocation_points, default_inset, slot, slot_lengths, Density, DensitySet};
pub use solve::{solve, solve_problem, ResidualReport, Solution};
