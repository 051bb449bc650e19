//! Square nonlinear systems `F(x) = 0` with analytic Jacobians.
//!
//! [`Benchmark`] holds the five standard test systems used to compare
//! Newton-type methods; [`FnProblem`] wraps arbitrary closures.
//! [`fd_jacobian`] and [`check_jacobian`] validate hand-coded Jacobians
//! against central differences.

use std::fmt;

use thiserror::Error;

use crate::linalg::{DenseMatrix, Vector};
use crate::scalar::Scalar;

/// An input outside a problem's natural real domain.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("problem '{problem}': x[{index}] {description}")]
pub struct DomainViolation {
    pub problem: String,
    pub index: usize,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Domain(#[from] DomainViolation),
    #[error("problem '{problem}' expects {expected} unknowns, got {found}")]
    DimensionMismatch {
        problem: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown problem '{0}'")]
    UnknownProblem(String),
}

/// A square system of `dim` equations in `dim` unknowns.
///
/// Implementors may assume `x.len() == self.dim()`; the checked entry points
/// are [`evaluate_f`] and [`evaluate_jacobian`].
pub trait Problem<T: Scalar>: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Default starting point.
    fn start(&self) -> Vector<T>;

    fn residual(&self, x: &Vector<T>) -> Result<Vector<T>, ProblemError>;

    /// `J[i][j] = dF_i / dx_j`.
    fn jacobian(&self, x: &Vector<T>) -> Result<DenseMatrix<T>, ProblemError>;
}

impl<T: Scalar, P: Problem<T> + ?Sized> Problem<T> for &P {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn start(&self) -> Vector<T> {
        (**self).start()
    }
    fn residual(&self, x: &Vector<T>) -> Result<Vector<T>, ProblemError> {
        (**self).residual(x)
    }
    fn jacobian(&self, x: &Vector<T>) -> Result<DenseMatrix<T>, ProblemError> {
        (**self).jacobian(x)
    }
}

impl<T: Scalar, P: Problem<T> + ?Sized> Problem<T> for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn start(&self) -> Vector<T> {
        (**self).start()
    }
    fn residual(&self, x: &Vector<T>) -> Result<Vector<T>, ProblemError> {
        (**self).residual(x)
    }
    fn jacobian(&self, x: &Vector<T>) -> Result<DenseMatrix<T>, ProblemError> {
        (**self).jacobian(x)
    }
}

fn check_dim<T: Scalar, P: Problem<T> + ?Sized>(p: &P, x: &Vector<T>) -> Result<(), ProblemError> {
    if x.len() == p.dim() {
        Ok(())
    } else {
        Err(ProblemError::DimensionMismatch {
            problem: p.name().to_string(),
            expected: p.dim(),
            found: x.len(),
        })
    }
}

/// `F(x)` with a length check on `x`.
pub fn evaluate_f<T: Scalar, P: Problem<T> + ?Sized>(
    p: &P,
    x: &Vector<T>,
) -> Result<Vector<T>, ProblemError> {
    check_dim(p, x)?;
    p.residual(x)
}

/// `J(x)` with a length check on `x`.
pub fn evaluate_jacobian<T: Scalar, P: Problem<T> + ?Sized>(
    p: &P,
    x: &Vector<T>,
) -> Result<DenseMatrix<T>, ProblemError> {
    check_dim(p, x)?;
    p.jacobian(x)
}

/// The five registry systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    /// `[x1^2 - 4 x2 + x2^2, 2 x1 - x2^2 - 2]`, start `[1, 0.1]`.
    A,
    /// `[x1^2 + x2^2 - 1, x1^2 - x2^2 + 0.5]`, start `[1, 1]`.
    B,
    /// `[cos x2 - cos x1, x3^x1 - 1/x2, exp x1 - x3^2]`, start `[1, 1, 2]`.
    C,
    /// Cyclic `x_i x_{i+1} - 1` over 31 unknowns, start `-2 * ones`.
    D,
    /// `[x1^2 + x2^2 - 2, exp(x1 - 1) + x2^2 - 2]`, start `[2, 0.5]`.
    E,
}

/// Dimension of the cyclic product system [`Benchmark::D`].
pub const CYCLIC_DIM: usize = 31;

impl Benchmark {
    pub const ALL: [Benchmark; 5] = [Self::A, Self::B, Self::C, Self::D, Self::E];

    pub fn id(self) -> &'static str {
        match self {
            Self::A => "a",
            Self::B => "b",
            Self::C => "c",
            Self::D => "d",
            Self::E => "e",
        }
    }

    pub fn from_id(name: &str) -> Result<Self, ProblemError> {
        Self::ALL
            .into_iter()
            .find(|b| b.id() == name)
            .ok_or_else(|| ProblemError::UnknownProblem(name.to_string()))
    }

    pub fn size(self) -> usize {
        match self {
            Self::A | Self::B | Self::E => 2,
            Self::C => 3,
            Self::D => CYCLIC_DIM,
        }
    }

    /// Human-readable formula, used by listings.
    pub fn formula(self) -> &'static str {
        match self {
            Self::A => "[x1^2 - 4 x2 + x2^2; 2 x1 - x2^2 - 2]",
            Self::B => "[x1^2 + x2^2 - 1; x1^2 - x2^2 + 0.5]",
            Self::C => "[cos(x2) - cos(x1); x3^x1 - 1/x2; exp(x1) - x3^2]",
            Self::D => "[x_i x_(i+1) - 1, i = 1..30; x31 x1 - 1]",
            Self::E => "[x1^2 + x2^2 - 2; exp(x1 - 1) + x2^2 - 2]",
        }
    }

    fn violation(self, index: usize, description: &str) -> ProblemError {
        DomainViolation {
            problem: self.id().to_string(),
            index,
            description: description.to_string(),
        }
        .into()
    }

    fn check_domain<T: Scalar>(self, x: &Vector<T>) -> Result<(), ProblemError> {
        if self == Self::C {
            if x[2].is_nan() || x[2] <= T::zero() {
                return Err(self.violation(2, "must be positive as the base of x3^x1"));
            }
            if x[1] == T::zero() {
                return Err(self.violation(1, "must be nonzero in 1/x2"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl<T: Scalar> Problem<T> for Benchmark {
    fn name(&self) -> &str {
        self.id()
    }

    fn dim(&self) -> usize {
        self.size()
    }

    fn start(&self) -> Vector<T> {
        let l = T::lit;
        match self {
            Self::A => vec![l(1.0), l(0.1)].into(),
            Self::B => vec![l(1.0), l(1.0)].into(),
            Self::C => vec![l(1.0), l(1.0), l(2.0)].into(),
            Self::D => Vector::from_elem(CYCLIC_DIM, l(-2.0)),
            Self::E => vec![l(2.0), l(0.5)].into(),
        }
    }

    fn residual(&self, x: &Vector<T>) -> Result<Vector<T>, ProblemError> {
        self.check_domain(x)?;
        let l = T::lit;
        let one = T::one();
        let two = l(2.0);
        let f = match self {
            Self::A => vec![
                x[0] * x[0] - l(4.0) * x[1] + x[1] * x[1],
                two * x[0] - x[1] * x[1] - two,
            ],
            Self::B => vec![
                x[0] * x[0] + x[1] * x[1] - one,
                x[0] * x[0] - x[1] * x[1] + l(0.5),
            ],
            Self::C => vec![
                x[1].cos() - x[0].cos(),
                x[2].powf(x[0]) - one / x[1],
                x[0].exp() - x[2] * x[2],
            ],
            Self::D => (0..CYCLIC_DIM)
                .map(|i| x[i] * x[(i + 1) % CYCLIC_DIM] - one)
                .collect(),
            Self::E => vec![
                x[0] * x[0] + x[1] * x[1] - two,
                (x[0] - one).exp() + x[1] * x[1] - two,
            ],
        };
        Ok(Vector::from_vec(f))
    }

    fn jacobian(&self, x: &Vector<T>) -> Result<DenseMatrix<T>, ProblemError> {
        self.check_domain(x)?;
        let l = T::lit;
        let one = T::one();
        let two = l(2.0);
        let zero = T::zero();
        let rows = match self {
            Self::A => vec![
                vec![two * x[0], two * x[1] - l(4.0)],
                vec![two, -two * x[1]],
            ],
            Self::B => vec![vec![two * x[0], two * x[1]], vec![two * x[0], -two * x[1]]],
            Self::C => {
                let power = x[2].powf(x[0]);
                vec![
                    vec![x[0].sin(), -x[1].sin(), zero],
                    vec![
                        power * x[2].ln(),
                        one / (x[1] * x[1]),
                        x[0] * x[2].powf(x[0] - one),
                    ],
                    vec![x[0].exp(), zero, -two * x[2]],
                ]
            }
            Self::D => {
                let mut j = DenseMatrix::zeros(CYCLIC_DIM);
                for i in 0..CYCLIC_DIM {
                    let next = (i + 1) % CYCLIC_DIM;
                    j[(i, i)] = x[next];
                    j[(i, next)] = x[i];
                }
                return Ok(j);
            }
            Self::E => vec![
                vec![two * x[0], two * x[1]],
                vec![(x[0] - one).exp(), two * x[1]],
            ],
        };
        Ok(DenseMatrix::from_rows(&rows).expect("benchmark Jacobian rows are square"))
    }
}

/// Looks up a registry problem by its identifier (`"a"` ... `"e"`).
pub fn registry_get(name: &str) -> Result<Benchmark, ProblemError> {
    Benchmark::from_id(name)
}

type ResidualFn<T> = dyn Fn(&Vector<T>) -> Result<Vector<T>, ProblemError> + Send + Sync;
type JacobianFn<T> = dyn Fn(&Vector<T>) -> Result<DenseMatrix<T>, ProblemError> + Send + Sync;

/// A problem assembled from closures.
pub struct FnProblem<T> {
    name: String,
    start: Vector<T>,
    residual: Box<ResidualFn<T>>,
    jacobian: Box<JacobianFn<T>>,
}

impl<T: Scalar> FnProblem<T> {
    pub fn new<F, J>(name: impl Into<String>, start: Vector<T>, residual: F, jacobian: J) -> Self
    where
        F: Fn(&Vector<T>) -> Result<Vector<T>, ProblemError> + Send + Sync + 'static,
        J: Fn(&Vector<T>) -> Result<DenseMatrix<T>, ProblemError> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            start,
            residual: Box::new(residual),
            jacobian: Box::new(jacobian),
        }
    }

    /// Affine map `F(x) = A x - b`, handy as a test fixture.
    pub fn affine(
        name: impl Into<String>,
        a: DenseMatrix<T>,
        b: Vector<T>,
        start: Vector<T>,
    ) -> Self {
        let a_f = a.clone();
        Self::new(
            name,
            start,
            move |x| {
                Ok(a_f
                    .mul_vec(x)
                    .expect("dimension checked")
                    .try_sub(&b)
                    .expect("dimension checked"))
            },
            move |_| Ok(a.clone()),
        )
    }
}

impl<T: Scalar> fmt::Debug for FnProblem<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnProblem")
            .field("name", &self.name)
            .field("dim", &self.start.len())
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> Problem<T> for FnProblem<T> {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.start.len()
    }
    fn start(&self) -> Vector<T> {
        self.start.clone()
    }
    fn residual(&self, x: &Vector<T>) -> Result<Vector<T>, ProblemError> {
        (self.residual)(x)
    }
    fn jacobian(&self, x: &Vector<T>) -> Result<DenseMatrix<T>, ProblemError> {
        (self.jacobian)(x)
    }
}

/// Central-difference Jacobian: column `j` is `(F(x + h e_j) - F(x - h e_j)) / 2h`.
pub fn fd_jacobian<T: Scalar, P: Problem<T> + ?Sized>(
    p: &P,
    x: &Vector<T>,
    h: T,
) -> Result<DenseMatrix<T>, ProblemError> {
    check_dim(p, x)?;
    let n = p.dim();
    let mut jac = DenseMatrix::zeros(n);
    let mut probe = x.clone();
    for j in 0..n {
        probe[j] = x[j] + h;
        let plus = p.residual(&probe)?;
        probe[j] = x[j] - h;
        let minus = p.residual(&probe)?;
        probe[j] = x[j];
        let col = plus
            .try_sub(&minus)
            .expect("residual length is fixed")
            .scale(T::one() / (h + h));
        jac.set_column(j, &col).expect("residual length is fixed");
    }
    Ok(jac)
}

/// Outcome of comparing an analytic Jacobian with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianCheck<T> {
    /// Largest entrywise `|J - J_fd|`.
    pub max_error: T,
    /// Row and column of that entry.
    pub worst: (usize, usize),
    /// Allowed error: `rel_tol * (1 + ||J||_inf)`.
    pub allowed: T,
}

impl<T: Scalar> JacobianCheck<T> {
    pub fn passed(&self) -> bool {
        self.max_error <= self.allowed
    }
}

/// Compares `evaluate_jacobian` against `fd_jacobian(h)` at `x`.
pub fn check_jacobian<T: Scalar, P: Problem<T> + ?Sized>(
    p: &P,
    x: &Vector<T>,
    h: T,
    rel_tol: T,
) -> Result<JacobianCheck<T>, ProblemError> {
    let analytic = evaluate_jacobian(p, x)?;
    let numeric = fd_jacobian(p, x, h)?;
    let n = analytic.dim();
    let mut worst = (0, 0);
    let mut max_error = T::zero();
    for i in 0..n {
        for j in 0..n {
            let err = (analytic[(i, j)] - numeric[(i, j)]).abs();
            if err > max_error || err.is_nan() {
                max_error = err;
                worst = (i, j);
            }
        }
    }
    Ok(JacobianCheck {
        max_error,
        worst,
        allowed: rel_tol * (T::one() + analytic.norm_inf()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector<f64> {
        Vector::from_vec(xs.to_vec())
    }

    fn assert_matrix_close(a: &DenseMatrix<f64>, rows: &[&[f64]], tol: f64) {
        for (i, row) in rows.iter().enumerate() {
            for (j, &expected) in row.iter().enumerate() {
                assert_abs_diff_eq!(a[(i, j)], expected, epsilon = tol);
            }
        }
    }

    #[test]
    fn residual_examples() {
        assert_eq!(
            evaluate_f(&Benchmark::B, &v(&[1.0, 1.0])).unwrap(),
            v(&[1.0, 0.5])
        );
        assert_eq!(
            evaluate_f(&Benchmark::E, &v(&[1.0, 1.0])).unwrap(),
            v(&[0.0, 0.0])
        );
        let minus_ones = Vector::from_elem(CYCLIC_DIM, -1.0);
        assert_eq!(
            evaluate_f(&Benchmark::D, &minus_ones).unwrap(),
            Vector::zeros(CYCLIC_DIM)
        );
    }

    #[test]
    fn jacobian_examples() {
        let j = evaluate_jacobian(&Benchmark::B, &v(&[1.0, 1.0])).unwrap();
        assert_matrix_close(&j, &[&[2.0, 2.0], &[2.0, -2.0]], 0.0);
        let j = evaluate_jacobian(&Benchmark::A, &v(&[0.0, 0.0])).unwrap();
        assert_matrix_close(&j, &[&[0.0, -4.0], &[2.0, 0.0]], 0.0);
        let j = evaluate_jacobian(&Benchmark::E, &v(&[1.0, 1.0])).unwrap();
        assert_matrix_close(&j, &[&[2.0, 2.0], &[1.0, 2.0]], 0.0);
    }

    #[test]
    fn cyclic_jacobian_pattern() {
        let x: Vector<f64> = (0..CYCLIC_DIM)
            .map(|i| i as f64 + 1.0)
            .collect::<Vec<_>>()
            .into();
        let j = evaluate_jacobian(&Benchmark::D, &x).unwrap();
        for i in 0..CYCLIC_DIM {
            let next = (i + 1) % CYCLIC_DIM;
            for k in 0..CYCLIC_DIM {
                let expected = if k == i {
                    x[next]
                } else if k == next {
                    x[i]
                } else {
                    0.0
                };
                assert_eq!(j[(i, k)], expected, "entry ({i}, {k})");
            }
        }
        assert_eq!(j[(30, 30)], x[0]);
        assert_eq!(j[(30, 0)], x[30]);
    }

    #[test]
    fn registry_lookup() {
        let d = registry_get("d").unwrap();
        assert_eq!(Problem::<f64>::dim(&d), 31);
        assert_eq!(Problem::<f64>::start(&d), Vector::from_elem(31, -2.0));
        let c = registry_get("c").unwrap();
        assert_eq!(Problem::<f64>::start(&c), v(&[1.0, 1.0, 2.0]));
        assert_eq!(
            registry_get("z").unwrap_err(),
            ProblemError::UnknownProblem("z".into())
        );
        let dims: Vec<usize> = Benchmark::ALL.iter().map(|b| b.size()).collect();
        assert_eq!(dims, [2, 2, 3, 31, 2]);
    }

    #[test]
    fn domain_violations_for_power_and_reciprocal() {
        let err = evaluate_f(&Benchmark::C, &v(&[1.0, 1.0, 0.0])).unwrap_err();
        assert!(matches!(
            err,
            ProblemError::Domain(DomainViolation { index: 2, .. })
        ));
        let err = evaluate_jacobian(&Benchmark::C, &v(&[1.0, 1.0, -1.0])).unwrap_err();
        assert!(matches!(
            err,
            ProblemError::Domain(DomainViolation { index: 2, .. })
        ));
        let err = evaluate_f(&Benchmark::C, &v(&[1.0, 0.0, 2.0])).unwrap_err();
        assert!(matches!(
            err,
            ProblemError::Domain(DomainViolation { index: 1, .. })
        ));
        let err = evaluate_f(&Benchmark::C, &v(&[1.0, 1.0, f64::NAN])).unwrap_err();
        assert!(matches!(err, ProblemError::Domain(_)));
    }

    #[test]
    fn dimension_is_checked() {
        let err = evaluate_f(&Benchmark::B, &v(&[1.0, 1.0, 1.0])).unwrap_err();
        assert_eq!(
            err,
            ProblemError::DimensionMismatch {
                problem: "b".into(),
                expected: 2,
                found: 3
            }
        );
        assert!(evaluate_jacobian(&Benchmark::D, &v(&[1.0])).is_err());
    }

    #[test]
    fn fd_is_exact_for_linear_maps() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let p = FnProblem::affine("lin", a.clone(), Vector::zeros(2), v(&[0.3, -0.7]));
        let fd = fd_jacobian(&p, &v(&[0.3, -0.7]), 1e-5).unwrap();
        assert!(fd.try_sub(&a).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn fd_matches_analytic_at_starts() {
        let x = v(&[1.0, 1.0]);
        let fd = fd_jacobian(&Benchmark::B, &x, 1e-6).unwrap();
        let j = evaluate_jacobian(&Benchmark::B, &x).unwrap();
        assert!(fd.try_sub(&j).unwrap().max_abs() < 1e-7);

        let x = v(&[1.0, 1.0, 2.0]);
        let fd = fd_jacobian(&Benchmark::C, &x, 1e-6).unwrap();
        let j = evaluate_jacobian(&Benchmark::C, &x).unwrap();
        assert!(fd.try_sub(&j).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn fd_reports_domain_exit() {
        let err = fd_jacobian(&Benchmark::C, &v(&[1.0, 1.0, 1e-7]), 1e-6).unwrap_err();
        assert!(matches!(err, ProblemError::Domain(_)));
    }

    #[test]
    fn check_flags_wrong_sign() {
        let bad = FnProblem::new(
            "bad-b",
            v(&[1.0, 1.0]),
            |x| Benchmark::B.residual(x),
            |x| {
                let mut j = Benchmark::B.jacobian(x)?;
                j[(1, 1)] = -j[(1, 1)];
                Ok(j)
            },
        );
        let check = check_jacobian(&bad, &v(&[1.0, 1.0]), 1e-6, 1e-5).unwrap();
        assert!(!check.passed());
        assert_eq!(check.worst, (1, 1));
        let check = check_jacobian(&Benchmark::B, &v(&[1.0, 1.0]), 1e-6, 1e-5).unwrap();
        assert!(check.passed());
    }

    #[test]
    fn evaluation_is_deterministic() {
        let x = v(&[0.93, 1.07, 1.95]);
        let a = evaluate_f(&Benchmark::C, &x).unwrap();
        let b = evaluate_f(&Benchmark::C, &x).unwrap();
        assert!(a
            .iter()
            .zip(b.iter())
            .all(|(p, q)| p.to_bits() == q.to_bits()));
    }

    #[test]
    fn known_roots() {
        // b: x1^2 = 1/4, x2^2 = 3/4
        let b = evaluate_f(&Benchmark::B, &v(&[0.5, 3f64.sqrt() / 2.0])).unwrap();
        assert!(b.norm_inf() <= 1e-12, "{b:?}");
        let e = evaluate_f(&Benchmark::E, &v(&[1.0, -1.0])).unwrap();
        assert!(e.norm_inf() <= 1e-12);
        let d = evaluate_f(&Benchmark::D, &Vector::from_elem(CYCLIC_DIM, 1.0)).unwrap();
        assert!(d.norm_inf() <= 1e-12);
    }

    #[test]
    fn f32_evaluation() {
        let f: Vector<f32> =
            evaluate_f(&Benchmark::B, &Problem::<f32>::start(&Benchmark::B)).unwrap();
        assert_eq!(f.as_slice(), &[1.0f32, 0.5]);
    }
}
