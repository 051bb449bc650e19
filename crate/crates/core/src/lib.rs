//! Shamanskii's m-method for square systems of nonlinear equations.
//!
//! One Jacobian factorization per outer iteration is reused for `m`
//! frozen-Jacobian steps, giving local convergence of order `m + 1` at the
//! cost of a single LU factorization. The crate also carries five standard
//! test systems, a finite-difference Jacobian checker and the computational
//! order of convergence estimator used to grade runs.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the type.
//!
//! ```
//! use shamanskii::{solve, Benchmark, SolverConfig64};
//!
//! let trace = solve(&Benchmark::C, &SolverConfig64::with_m(3)).unwrap();
//! assert!(trace.converged());
//! assert_eq!((trace.it_inv, trace.it_tot), (3, 9));
//! ```

pub mod analysis;
pub mod linalg;
pub mod problem;
pub mod scalar;
pub mod solver;

pub use analysis::{
    coc_from_diffs, coc_from_iterates, estimate_coc, run_cell, run_suite, run_suite_problems,
    CocReport, NaReason, SuiteCell, SuiteReport,
};
pub use linalg::{lu_factor, lu_solve, norm2, DenseMatrix, LinalgError, LuFactors, Vector};
pub use problem::{
    check_jacobian, evaluate_f, evaluate_jacobian, fd_jacobian, registry_get, Benchmark,
    DomainViolation, FnProblem, JacobianCheck, Problem, ProblemError,
};
pub use scalar::Scalar;
pub use solver::{
    default_tol, newton_solve, outer_step, solve, solve_from, ConfigError, EvalCounts, OuterStep,
    SolveStatus, SolveTrace, SolverConfig, StepError,
};

pub type Vector64 = Vector<f64>;
pub type DenseMatrix64 = DenseMatrix<f64>;
pub type LuFactors64 = LuFactors<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type SolveTrace64 = SolveTrace<f64>;
pub type CocReport64 = CocReport<f64>;
pub type SuiteReport64 = SuiteReport<f64>;

pub type Vector32 = Vector<f32>;
pub type DenseMatrix32 = DenseMatrix<f32>;
pub type LuFactors32 = LuFactors<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type SolveTrace32 = SolveTrace<f32>;
pub type CocReport32 = CocReport<f32>;
pub type SuiteReport32 = SuiteReport<f32>;
