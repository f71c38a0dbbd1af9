//! Finite-difference Newton-homotopy solver for the fully nonlinear
//! conformal equation `sigma_k^{1/k}(g^{-1} A^t) = f < 0` on periodic,
//! conformally flat grids.

pub mod continuation;
pub mod error;
pub mod expr;
pub mod geomgrid;
pub mod krylov;
pub mod linearized;
pub mod oracle;
pub mod residual;
pub mod symfun;

pub use continuation::{
    apriori_bounds, apriori_bounds_at, certify, continuation_solve, newton_solve, solve_from_seed,
    t_sweep, uniqueness_probe, HomotopyPoint, IterationRecord, SolveReport,
};
pub use error::{NewtonFailure, ProblemError, SolveError};
pub use expr::TrigSeries;
pub use geomgrid::{Background, Grid, ScalarField, TensorField};
pub use residual::{Case, ProblemSpec, SolverOptions};
pub use symfun::SymMatrix;
