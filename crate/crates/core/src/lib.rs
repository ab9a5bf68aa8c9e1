//! Hamiltonian Boundary Value Methods HBVM(k, s) for Hamiltonian differential
//! equations with a piecewise constant argument, `y' = f(y(t), y(⌊t⌋))`.

pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod legendre;
pub mod matrix;
pub mod problem;
pub mod quadrature;
pub mod tableau;

pub use diagnostics::{
    coefficient_decay_report, convergence_order, convergence_table, hamiltonian_series,
    last_point_error, stroboscopic_sample, ConvergenceError, ConvergenceRow, DriftSeries,
};
pub use error::{HbvmError, Result};
pub use integrator::{
    dense_eval, integrate, solve_stage_system, DelaySource, IntegrationError, Integrator,
    RecordRetention, SolveConfig, StageSolution, StageSolver, StepRecord, StepSize, Trajectory,
};
pub use legendre::{eval_basis, eval_integrated_basis};
pub use matrix::Matrix;
pub use problem::{
    builtin, Builtin, Cassini, FdepcaProblem, Hamiltonian, Overrides, Pendulum, Quartic,
    VectorField, CASSINI_PERIOD,
};
pub use quadrature::{apply_rule, gauss_legendre, QuadratureRule};
pub use tableau::{build_tableau, gauss_collocation_matrix, HbvmTableau};
