//! Dense vectors, square matrices and LU factorization with partial pivoting.
//!
//! Storage is plain row-major. The systems this crate targets stay well under
//! a hundred unknowns, so no sparsity or blocking is attempted.

use std::ops::{Index, IndexMut, Sub};

use thiserror::Error;

use crate::scalar::Scalar;

/// Errors raised by the dense linear algebra routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular: pivot {pivot:e} at elimination step {step} is below threshold {threshold:e}")]
    SingularMatrix {
        step: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFiniteInput { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Column vector of scalars with a length fixed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<T> {
    entries: Vec<T>,
}

impl<T: Scalar> Vector<T> {
    pub fn from_vec(entries: Vec<T>) -> Self {
        Self { entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_elem(n, T::zero())
    }

    pub fn from_elem(n: usize, value: T) -> Self {
        Self {
            entries: vec![value; n],
        }
    }

    /// Unit vector `e_j` of length `n`.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut v = Self::zeros(n);
        v.entries[j] = T::one();
        v
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.entries
    }

    pub fn into_vec(self) -> Vec<T> {
        self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.entries.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    /// Euclidean norm. NaN entries propagate.
    pub fn norm2(&self) -> T {
        norm2(self)
    }

    pub fn norm_inf(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: T, other: &Self) -> Result<Self, LinalgError> {
        check_len(self.len(), other.len())?;
        Ok(Self::from_vec(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a + alpha * b)
                .collect(),
        ))
    }

    pub fn scale(&self, alpha: T) -> Self {
        Self::from_vec(self.entries.iter().map(|&v| alpha * v).collect())
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.add_scaled(-T::one(), other)
    }
}

impl<T> Index<usize> for Vector<T> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.entries[i]
    }
}

impl<T> IndexMut<usize> for Vector<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.entries[i]
    }
}

/// Panics on length mismatch; use [`Vector::try_sub`] for a checked version.
impl<T: Scalar> Sub for &Vector<T> {
    type Output = Vector<T>;

    fn sub(self, rhs: &Vector<T>) -> Vector<T> {
        self.try_sub(rhs).expect("vector lengths must match")
    }
}

impl<T: Scalar> From<Vec<T>> for Vector<T> {
    fn from(entries: Vec<T>) -> Self {
        Self::from_vec(entries)
    }
}

/// Euclidean norm `sqrt(sum v_i^2)`.
///
/// Computed with a running scale so very small or very large entries do not
/// underflow or overflow when squared.
pub fn norm2<T: Scalar>(v: &Vector<T>) -> T {
    let scale = v.norm_inf();
    if scale.is_nan() || v.iter().any(|x| x.is_nan()) {
        return T::nan();
    }
    if scale == T::zero() || scale.is_infinite() {
        return scale;
    }
    let sum = v
        .iter()
        .map(|&x| {
            let r = x / scale;
            r * r
        })
        .fold(T::zero(), |acc, s| acc + s);
    scale * sum.sqrt()
}

/// Square `n x n` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from rows; every row must have as many entries as
    /// there are rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            check_len(n, row.len())?;
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix from `n * n` row-major entries.
    pub fn from_row_major(n: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        check_len(n * n, data.len())?;
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn set_column(&mut self, j: usize, col: &Vector<T>) -> Result<(), LinalgError> {
        check_len(self.n, col.len())?;
        for i in 0..self.n {
            self[(i, j)] = col[i];
        }
        Ok(())
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.n)
            .map(|i| self.row(i).iter().fold(T::zero(), |acc, v| acc + v.abs()))
            .fold(T::zero(), T::max)
    }

    /// Largest entrywise absolute value.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn mul_vec(&self, x: &Vector<T>) -> Result<Vector<T>, LinalgError> {
        check_len(self.n, x.len())?;
        Ok(Vector::from_vec(
            (0..self.n)
                .map(|i| {
                    self.row(i)
                        .iter()
                        .zip(x.iter())
                        .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
                })
                .collect(),
        ))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        check_len(self.n, other.n)?;
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, LinalgError> {
        check_len(self.n, other.n)?;
        Ok(Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    /// Rows reordered so that row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self, LinalgError> {
        check_len(self.n, perm.len())?;
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        Ok(Self { n: self.n, data })
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// LU factors of a square matrix: `P A = L U`.
///
/// `L` (unit diagonal, strictly lower part) and `U` share one packed matrix.
/// `perm[i]` is the row of the original matrix that ended up in row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors<T> {
    packed: DenseMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> LuFactors<T> {
    pub fn dim(&self) -> usize {
        self.packed.dim()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Unit lower-triangular factor.
    pub fn lower(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut l = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..i {
                l[(i, j)] = self.packed[(i, j)];
            }
        }
        l
    }

    /// Upper-triangular factor.
    pub fn upper(&self) -> DenseMatrix<T> {
        let n = self.dim();
        let mut u = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                u[(i, j)] = self.packed[(i, j)];
            }
        }
        u
    }

    /// Solves `A y = b` for the factored `A`.
    pub fn solve(&self, b: &Vector<T>) -> Result<Vector<T>, LinalgError> {
        lu_solve(self, b)
    }
}

/// Factors `a` with partial (row) pivoting.
///
/// A pivot whose magnitude does not exceed `n * eps * ||A||_inf` is treated
/// as zero and reported as [`LinalgError::SingularMatrix`].
pub fn lu_factor<T: Scalar>(a: &DenseMatrix<T>) -> Result<LuFactors<T>, LinalgError> {
    let n = a.dim();
    for i in 0..n {
        for j in 0..n {
            if !a[(i, j)].is_finite() {
                return Err(LinalgError::NonFiniteInput { row: i, col: j });
            }
        }
    }

    let threshold = T::from_count(n) * T::epsilon() * a.norm_inf();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (pivot_row, pivot) =
            (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold(
                    (k, -T::one()),
                    |best, cand| if cand.1 > best.1 { cand } else { best },
                );
        if pivot.is_nan() || pivot <= threshold {
            return Err(LinalgError::SingularMatrix {
                step: k,
                pivot: pivot.to_f64().unwrap_or(f64::NAN),
                threshold: threshold.to_f64().unwrap_or(f64::NAN),
            });
        }
        if pivot_row != k {
            perm.swap(k, pivot_row);
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
        }
        let diag = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / diag;
            lu[(i, k)] = factor;
            if factor == T::zero() {
                continue;
            }
            for j in k + 1..n {
                lu[(i, j)] = lu[(i, j)] - factor * lu[(k, j)];
            }
        }
    }

    Ok(LuFactors { packed: lu, perm })
}

/// Forward then back substitution: `U \ (L \ (P b))`.
pub fn lu_solve<T: Scalar>(
    factors: &LuFactors<T>,
    b: &Vector<T>,
) -> Result<Vector<T>, LinalgError> {
    let n = factors.dim();
    check_len(n, b.len())?;
    let lu = &factors.packed;

    let mut y: Vec<T> = factors.perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        let mut acc = y[i];
        for j in 0..i {
            acc = acc - lu[(i, j)] * y[j];
        }
        y[i] = acc;
    }
    for i in (0..n).rev() {
        let mut acc = y[i];
        for j in i + 1..n {
            acc = acc - lu[(i, j)] * y[j];
        }
        y[i] = acc / lu[(i, i)];
    }
    Ok(Vector::from_vec(y))
}

fn check_len(expected: usize, found: usize) -> Result<(), LinalgError> {
    if expected == found {
        Ok(())
    } else {
        Err(LinalgError::DimensionMismatch { expected, found })
    }
}
