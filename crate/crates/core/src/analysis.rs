//! Computational order of convergence and benchmark grids.
//!
//! The order estimate uses the last four outer iterates `x(j-3) ... x(j)`:
//!
//! ```text
//! d0 = |x(j-2) - x(j-3)|,  d1 = |x(j-1) - x(j-2)|,  d2 = |x(j) - x(j-1)|
//! rho = log(d2 / d1) / log(d1 / d0)
//! ```

use std::fmt;

use crate::linalg::{norm2, Vector};
use crate::problem::{registry_get, Problem, ProblemError};
use crate::scalar::Scalar;
use crate::solver::{solve, SolveStatus, SolveTrace, SolverConfig};

/// Why an order estimate is not available.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaReason {
    /// Fewer than four outer iterates (counting the starting point).
    TooFewIterates { available: usize },
    /// Two consecutive iterates coincide; `index` is the position in `diffs`.
    ZeroDifference { index: usize },
    /// `d1 == d0`, so the denominator log vanishes.
    DegenerateRatio,
    /// The run did not converge.
    NotConverged(SolveStatus),
}

impl fmt::Display for NaReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooFewIterates { available } => {
                write!(f, "only {available} outer iterates, need 4")
            }
            Self::ZeroDifference { index } => write!(f, "difference {index} is zero"),
            Self::DegenerateRatio => f.write_str("equal consecutive differences"),
            Self::NotConverged(status) => write!(f, "run ended with {status}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocReport<T> {
    /// `None` is the NA case; see `na_reason`.
    pub rho: Option<T>,
    /// The (up to) four iterates that entered the estimate.
    pub points_used: Vec<Vector<T>>,
    /// Consecutive difference norms `[d0, d1, d2]`.
    pub diffs: Vec<T>,
    pub na_reason: Option<NaReason>,
}

impl<T: Scalar> CocReport<T> {
    fn na(points_used: Vec<Vector<T>>, diffs: Vec<T>, reason: NaReason) -> Self {
        Self {
            rho: None,
            points_used,
            diffs,
            na_reason: Some(reason),
        }
    }
}

/// `log(d2 / d1) / log(d1 / d0)`, or the reason it is undefined.
pub fn coc_from_diffs<T: Scalar>(diffs: [T; 3]) -> Result<T, NaReason> {
    if let Some(index) = diffs.iter().position(|&d| d == T::zero()) {
        return Err(NaReason::ZeroDifference { index });
    }
    let [d0, d1, d2] = diffs;
    let denom = (d1 / d0).ln();
    if denom == T::zero() {
        return Err(NaReason::DegenerateRatio);
    }
    Ok((d2 / d1).ln() / denom)
}

/// Order estimate from the last four points of any iterate sequence.
pub fn coc_from_iterates<T: Scalar>(iterates: &[Vector<T>]) -> CocReport<T> {
    if iterates.len() < 4 {
        return CocReport::na(
            iterates.to_vec(),
            Vec::new(),
            NaReason::TooFewIterates {
                available: iterates.len(),
            },
        );
    }
    let points = &iterates[iterates.len() - 4..];
    let diffs: Vec<T> = points.windows(2).map(|w| norm2(&(&w[1] - &w[0]))).collect();
    match coc_from_diffs([diffs[0], diffs[1], diffs[2]]) {
        Ok(rho) => CocReport {
            rho: Some(rho),
            points_used: points.to_vec(),
            diffs,
            na_reason: None,
        },
        Err(reason) => CocReport::na(points.to_vec(), diffs, reason),
    }
}

/// Order estimate over the outer iterates of a solve.
///
/// Non-converged runs are reported as NA carrying their status.
pub fn estimate_coc<T: Scalar>(trace: &SolveTrace<T>) -> CocReport<T> {
    let report = coc_from_iterates(&trace.outer_iterates);
    if trace.converged() {
        report
    } else {
        CocReport::na(
            report.points_used,
            report.diffs,
            NaReason::NotConverged(trace.status),
        )
    }
}

/// One `(problem, m)` entry of a benchmark grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCell<T> {
    pub problem: String,
    pub m: usize,
    pub it_inv: usize,
    pub it_tot: usize,
    pub rho: Option<T>,
    pub status: SolveStatus,
    pub final_residual: T,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport<T> {
    /// Problems in request order, `m` values varying fastest.
    pub cells: Vec<SuiteCell<T>>,
}

impl<T: Scalar> SuiteReport<T> {
    pub fn cell(&self, problem: &str, m: usize) -> Option<&SuiteCell<T>> {
        self.cells.iter().find(|c| c.problem == problem && c.m == m)
    }

    pub fn all_converged(&self) -> bool {
        self.cells.iter().all(|c| c.status.is_converged())
    }
}

/// Runs one solve and its order estimate.
pub fn run_cell<T: Scalar, P: Problem<T> + ?Sized>(
    p: &P,
    m: usize,
    base: &SolverConfig<T>,
) -> SuiteCell<T> {
    let cfg = SolverConfig { m, ..base.clone() };
    match solve(p, &cfg) {
        Ok(trace) => SuiteCell {
            problem: p.name().to_string(),
            m,
            it_inv: trace.it_inv,
            it_tot: trace.it_tot,
            rho: estimate_coc(&trace).rho,
            status: trace.status,
            final_residual: trace.final_residual(),
        },
        // An invalid m is the only way to get here; surface it as a failed cell.
        Err(_) => SuiteCell {
            problem: p.name().to_string(),
            m,
            it_inv: 0,
            it_tot: 0,
            rho: None,
            status: SolveStatus::MaxIterations,
            final_residual: T::nan(),
        },
    }
}

/// Grid over arbitrary problems. Cells run on scoped threads; the result
/// order is fixed by the input order.
pub fn run_suite_problems<T: Scalar, P: Problem<T>>(
    problems: &[P],
    ms: &[usize],
    cfg: &SolverConfig<T>,
) -> SuiteReport<T> {
    let cells = std::thread::scope(|scope| {
        let handles: Vec<_> = problems
            .iter()
            .flat_map(|p| ms.iter().map(move |&m| (p, m)))
            .map(|(p, m)| scope.spawn(move || run_cell(p, m, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("suite cell panicked"))
            .collect()
    });
    SuiteReport { cells }
}

/// Grid over registry problems given by name.
pub fn run_suite<T: Scalar>(
    names: &[&str],
    ms: &[usize],
    cfg: &SolverConfig<T>,
) -> Result<SuiteReport<T>, ProblemError> {
    let problems = names
        .iter()
        .map(|n| registry_get(n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(run_suite_problems(&problems, ms, cfg))
}
