//! Shamanskii's m-method.
//!
//! Each outer iteration evaluates and factors the Jacobian once at the
//! current outer iterate, then performs `m` chord steps
//! `x <- x - U \ (L \ F(x))` with those frozen factors. `m = 1` is Newton's
//! method; as `m` grows the sweep approaches the chord method. Under the
//! usual local assumptions the outer iterates converge with order `m + 1`.
//!
//! Convergence is tested on the residual norm after each full sweep, so a
//! converged run always has `it_tot = m * it_inv` unless
//! [`SolverConfig::inner_early_exit`] is set.

use std::fmt;

use thiserror::Error;

use crate::linalg::{lu_factor, lu_solve, norm2, LinalgError, LuFactors, Vector};
use crate::problem::{evaluate_f, evaluate_jacobian, Problem, ProblemError};
use crate::scalar::Scalar;

/// Default cap on outer iterations.
pub const DEFAULT_MAX_OUTER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Inner (frozen-Jacobian) steps per outer iteration.
    pub m: usize,
    /// Residual-norm tolerance; defaults to `10 * eps`.
    pub tol: T,
    pub max_outer: usize,
    /// Cap on total inner steps; `None` means `m * max_outer`.
    pub max_total: Option<usize>,
    /// Stop the inner sweep as soon as the residual meets `tol`.
    pub inner_early_exit: bool,
    /// Keep every inner iterate in [`SolveTrace::inner_iterates`].
    pub record_inner: bool,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            m: 1,
            tol: default_tol(),
            max_outer: DEFAULT_MAX_OUTER,
            max_total: None,
            inner_early_exit: false,
            record_inner: false,
        }
    }
}

/// `10 * eps` for the scalar type.
pub fn default_tol<T: Scalar>() -> T {
    T::lit(10.0) * T::epsilon()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("m must be at least 1")]
    ZeroInnerSteps,
    #[error("tolerance must be positive and finite")]
    BadTolerance,
    #[error("max_outer must be at least 1")]
    ZeroMaxOuter,
    #[error("max_total must be at least 1")]
    ZeroMaxTotal,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn with_m(m: usize) -> Self {
        Self {
            m,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.m == 0 {
            return Err(ConfigError::ZeroInnerSteps);
        }
        if !(self.tol > T::zero() && self.tol.is_finite()) {
            return Err(ConfigError::BadTolerance);
        }
        if self.max_outer == 0 {
            return Err(ConfigError::ZeroMaxOuter);
        }
        if self.max_total == Some(0) {
            return Err(ConfigError::ZeroMaxTotal);
        }
        Ok(())
    }

    pub fn total_cap(&self) -> usize {
        self.max_total
            .unwrap_or_else(|| self.m.saturating_mul(self.max_outer))
    }
}

/// Terminal state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    SingularJacobian,
    NonFiniteIterate,
    DomainViolation,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "Converged",
            Self::MaxIterations => "MaxIterations",
            Self::SingularJacobian => "SingularJacobian",
            Self::NonFiniteIterate => "NonFiniteIterate",
            Self::DomainViolation => "DomainViolation",
        }
    }

    pub fn is_converged(self) -> bool {
        self == Self::Converged
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How many times the solver touched the problem and the factorizer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub residuals: usize,
    pub jacobians: usize,
    pub factorizations: usize,
}

/// Full history of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace<T> {
    /// `x(0) ... x(it_inv)`.
    pub outer_iterates: Vec<Vector<T>>,
    /// `||F(x(k))||_2` for each outer iterate.
    pub residual_norms: Vec<T>,
    /// Inner iterates, only filled when [`SolverConfig::record_inner`] is set.
    pub inner_iterates: Vec<Vector<T>>,
    pub it_inv: usize,
    pub it_tot: usize,
    pub status: SolveStatus,
    /// Failure detail for non-converged runs.
    pub message: Option<String>,
    pub evals: EvalCounts,
}

impl<T: Scalar> SolveTrace<T> {
    pub fn solution(&self) -> &Vector<T> {
        self.outer_iterates
            .last()
            .expect("trace holds the starting point")
    }

    pub fn final_residual(&self) -> T {
        *self
            .residual_norms
            .last()
            .expect("trace holds the starting residual")
    }

    pub fn converged(&self) -> bool {
        self.status.is_converged()
    }
}

/// Why a sweep stopped before completing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("singular Jacobian: {0}")]
    Singular(LinalgError),
    #[error("non-finite iterate or residual after inner step {step}")]
    NonFinite { step: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

impl StepError {
    pub fn status(&self) -> SolveStatus {
        match self {
            Self::Singular(_) => SolveStatus::SingularJacobian,
            Self::NonFinite { .. } => SolveStatus::NonFiniteIterate,
            Self::Problem(ProblemError::Domain(_)) => SolveStatus::DomainViolation,
            // Dimension errors cannot arise from a well-formed problem.
            Self::Problem(_) => SolveStatus::DomainViolation,
        }
    }
}

/// Result of one factor-and-sweep outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterStep<T> {
    pub x: Vector<T>,
    pub residual: Vector<T>,
    pub residual_norm: T,
    /// Inner steps actually performed (`m` unless stopped early).
    pub inner_count: usize,
}

struct Sweep<'a, T> {
    m: usize,
    tol: Option<T>,
    budget: usize,
    inner_sink: Option<&'a mut Vec<Vector<T>>>,
}

struct SweepFailure {
    error: StepError,
    inner_count: usize,
}

fn factor_at<T: Scalar, P: Problem<T> + ?Sized>(
    p: &P,
    x: &Vector<T>,
    evals: &mut EvalCounts,
) -> Result<LuFactors<T>, StepError> {
    let jac = evaluate_jacobian(p, x)?;
    evals.jacobians += 1;
    let factors = lu_factor(&jac).map_err(|e| match e {
        LinalgError::NonFiniteInput { .. } => StepError::NonFinite { step: 0 },
        other => StepError::Singular(other),
    })?;
    evals.factorizations += 1;
    Ok(factors)
}

fn sweep<T: Scalar, P: Problem<T> + ?Sized>(
    p: &P,
    x: &Vector<T>,
    rhs: Vector<T>,
    mut opts: Sweep<'_, T>,
    evals: &mut EvalCounts,
) -> Result<OuterStep<T>, SweepFailure> {
    let fail = |error, inner_count| SweepFailure { error, inner_count };
    let factors = factor_at(p, x, evals).map_err(|e| fail(e, 0))?;

    let mut x = x.clone();
    let mut rhs = rhs;
    let mut norm = norm2(&rhs);
    let mut inner = 0;
    while inner < opts.m && inner < opts.budget {
        let step = lu_solve(&factors, &rhs).expect("factor dimension matches residual");
        x = x.add_scaled(-T::one(), &step).expect("dimension fixed");
        inner += 1;
        if !x.is_finite() {
            return Err(fail(StepError::NonFinite { step: inner }, inner));
        }
        rhs = evaluate_f(p, &x).map_err(|e| fail(e.into(), inner))?;
        evals.residuals += 1;
        norm = norm2(&rhs);
        if !norm.is_finite() {
            return Err(fail(StepError::NonFinite { step: inner }, inner));
        }
        if let Some(sink) = opts.inner_sink.as_deref_mut() {
            sink.push(x.clone());
        }
        if opts.tol.is_some_and(|tol| norm <= tol) {
            break;
        }
    }
    Ok(OuterStep {
        x,
        residual: rhs,
        residual_norm: norm,
        inner_count: inner,
    })
}

/// One outer iteration from `x`: a single Jacobian factorization followed by
/// `m` frozen-Jacobian steps.
pub fn outer_step<T: Scalar, P: Problem<T> + ?Sized>(
    p: &P,
    x: &Vector<T>,
    m: usize,
) -> Result<OuterStep<T>, StepError> {
    let mut evals = EvalCounts::default();
    let rhs = evaluate_f(p, x)?;
    if !rhs.is_finite() {
        return Err(StepError::NonFinite { step: 0 });
    }
    let opts = Sweep {
        m,
        tol: None,
        budget: usize::MAX,
        inner_sink: None,
    };
    sweep(p, x, rhs, opts, &mut evals).map_err(|f| f.error)
}

/// Runs the m-method from the problem's default starting point.
pub fn solve<T: Scalar, P: Problem<T> + ?Sized>(
    p: &P,
    cfg: &SolverConfig<T>,
) -> Result<SolveTrace<T>, ConfigError> {
    solve_from(p, p.start(), cfg)
}

/// Newton's method: [`solve`] with `m` forced to 1.
pub fn newton_solve<T: Scalar, P: Problem<T> + ?Sized>(
    p: &P,
    cfg: &SolverConfig<T>,
) -> Result<SolveTrace<T>, ConfigError> {
    let cfg = SolverConfig {
        m: 1,
        ..cfg.clone()
    };
    solve(p, &cfg)
}

/// Runs the m-method from `x0`.
///
/// Numerical failures end the run with a non-converged
/// [`SolveTrace::status`]; the partial trace is kept. Only an invalid
/// configuration is reported as `Err`.
pub fn solve_from<T: Scalar, P: Problem<T> + ?Sized>(
    p: &P,
    x0: Vector<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolveTrace<T>, ConfigError> {
    cfg.validate()?;
    let total_cap = cfg.total_cap();

    let mut trace = SolveTrace {
        outer_iterates: Vec::new(),
        residual_norms: Vec::new(),
        inner_iterates: Vec::new(),
        it_inv: 0,
        it_tot: 0,
        status: SolveStatus::Converged,
        message: None,
        evals: EvalCounts::default(),
    };

    let finish = |mut trace: SolveTrace<T>, status, message: Option<String>| {
        trace.status = status;
        trace.message = message;
        Ok(trace)
    };

    let mut rhs = match evaluate_f(p, &x0) {
        Ok(r) => r,
        Err(e) => {
            // Keep the trace invariant: one iterate, one residual.
            trace.outer_iterates.push(x0);
            trace.residual_norms.push(T::nan());
            let status = StepError::from(e.clone()).status();
            return finish(trace, status, Some(e.to_string()));
        }
    };
    trace.evals.residuals += 1;
    let mut residual = norm2(&rhs);
    let mut x = x0;
    trace.outer_iterates.push(x.clone());
    trace.residual_norms.push(residual);
    if !x.is_finite() || !residual.is_finite() {
        return finish(
            trace,
            SolveStatus::NonFiniteIterate,
            Some("non-finite starting point or residual".into()),
        );
    }

    loop {
        if residual <= cfg.tol {
            return finish(trace, SolveStatus::Converged, None);
        }
        if trace.it_inv >= cfg.max_outer || trace.it_tot >= total_cap {
            let message = format!(
                "stopped after {} outer / {} inner iterations with residual {:e}",
                trace.it_inv, trace.it_tot, residual
            );
            return finish(trace, SolveStatus::MaxIterations, Some(message));
        }

        let opts = Sweep {
            m: cfg.m,
            tol: cfg.inner_early_exit.then_some(cfg.tol),
            budget: total_cap - trace.it_tot,
            inner_sink: cfg.record_inner.then_some(&mut trace.inner_iterates),
        };
        match sweep(p, &x, rhs, opts, &mut trace.evals) {
            Ok(step) => {
                trace.it_inv += 1;
                trace.it_tot += step.inner_count;
                x = step.x;
                rhs = step.residual;
                residual = step.residual_norm;
                trace.outer_iterates.push(x.clone());
                trace.residual_norms.push(residual);
            }
            Err(failure) => {
                trace.it_tot += failure.inner_count;
                let status = failure.error.status();
                return finish(trace, status, Some(failure.error.to_string()));
            }
        }
    }
}
