//! Small dense complex matrices and the Hermitian factorizations used by the
//! channel samplers and the log-det capacity.
//!
//! Matrices here are tiny (tens of rows), so a flat row-major `Vec` with
//! hand-written loops beats pulling in a general linear-algebra crate.

use std::fmt;

use num_complex::Complex;

use crate::error::{DmtError, Result};
use crate::scalar::Scalar;

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size, size);
        for i in 0..size {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        Self::from_fn(rows, cols, |i, j| Complex::new(f(i, j), T::zero()))
    }

    /// Build from row-major data; fails if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(DmtError::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                actual: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Outer product `a b⁺` of two column vectors.
    pub fn outer(a: &[Complex<T>], b: &[Complex<T>]) -> Self {
        Self::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(DmtError::DimensionMismatch {
                expected: format!("lhs cols == rhs rows ({})", self.cols),
                actual: format!("{}", rhs.rows),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, x| acc + x)
            })
            .collect()
    }

    /// `A A⁺`, a `rows × rows` Hermitian PSD matrix.
    pub fn gram(&self) -> Self {
        let mut out = Self::zeros(self.rows, self.rows);
        gram_rows(&self.data, self.rows, self.cols, &mut out.data);
        out
    }

    /// `A⁺ A`, a `cols × cols` Hermitian PSD matrix.
    pub fn gram_inner(&self) -> Self {
        self.conj_transpose().gram()
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
    }

    /// Squared Frobenius norm, `Σ |a_ij|²`.
    pub fn frobenius_sq(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in i..self.cols {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for CMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = &self.data[i * self.cols + j];
                write!(f, "({:?}, {:?}) ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Writes the lower triangle (and mirrored upper) of `A A⁺` into `out`.
pub(crate) fn gram_rows<T: Scalar>(
    a: &[Complex<T>],
    rows: usize,
    cols: usize,
    out: &mut [Complex<T>],
) {
    for i in 0..rows {
        let ri = &a[i * cols..(i + 1) * cols];
        for j in 0..=i {
            let rj = &a[j * cols..(j + 1) * cols];
            let mut acc = Complex::new(T::zero(), T::zero());
            for (x, y) in ri.iter().zip(rj) {
                acc += x * y.conj();
            }
            out[i * rows + j] = acc;
            out[j * rows + i] = acc.conj();
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L L⁺` for a Hermitian
/// positive semi-definite `A`.
///
/// Zero pivots (up to `tol` relative to the largest diagonal entry) are
/// accepted when the rest of their column vanishes, so singular PSD inputs
/// such as a fully correlated matrix still factor. A negative pivot beyond
/// tolerance means the matrix is not PSD.
pub fn cholesky_psd<T: Scalar>(a: &CMatrix<T>, tol: T) -> Result<CMatrix<T>> {
    if !a.is_square() {
        return Err(DmtError::DimensionMismatch {
            expected: "square matrix".into(),
            actual: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    if !a.is_hermitian(tol * (T::one() + a.max_abs())) {
        return Err(DmtError::InvalidSpec("matrix is not Hermitian".into()));
    }
    let n = a.rows();
    let scale = (0..n)
        .map(|i| a[(i, i)].re.abs())
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    let thresh = tol * scale;
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d > thresh {
            let ljj = d.sqrt();
            l[(j, j)] = Complex::new(ljj, T::zero());
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        } else if d >= -thresh {
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                if s.norm() > thresh.sqrt() * scale.sqrt() {
                    return Err(DmtError::InvalidSpec(format!(
                        "matrix is not positive semi-definite (zero pivot at {j} with nonzero column)"
                    )));
                }
            }
        } else {
            return Err(DmtError::InvalidSpec(format!(
                "matrix is not positive semi-definite (pivot {j} = {d})"
            )));
        }
    }
    Ok(l)
}

/// `ln det(I + scale · W)` for Hermitian PSD `W` (size `n`, row-major).
///
/// `I + scale·W` is positive definite, so a plain Cholesky sweep is safe;
/// only the lower triangle of `W` is read. `work` must hold `n²` entries.
pub(crate) fn ln_det_identity_plus<T: Scalar>(
    scale: T,
    w: &[Complex<T>],
    n: usize,
    work: &mut [Complex<T>],
) -> T {
    let zero = Complex::new(T::zero(), T::zero());
    let mut acc = T::zero();
    for j in 0..n {
        let mut d = T::one() + scale * w[j * n + j].re;
        for k in 0..j {
            d -= work[j * n + k].norm_sqr();
        }
        let ljj = d.sqrt();
        acc += d.ln();
        let inv = T::one() / ljj;
        for i in (j + 1)..n {
            let mut s = w[i * n + j] * scale;
            for k in 0..j {
                s -= work[i * n + k] * work[j * n + k].conj();
            }
            work[i * n + j] = s * inv;
        }
        work[j * n + j] = zero;
    }
    acc
}

/// `ln det A` for Hermitian positive definite `A`, via Cholesky.
pub fn ln_det_hpd<T: Scalar>(a: &CMatrix<T>) -> Result<T> {
    if !a.is_square() {
        return Err(DmtError::DimensionMismatch {
            expected: "square matrix".into(),
            actual: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    let l = cholesky_psd(a, T::lit(1e-12))?;
    let mut acc = T::zero();
    for i in 0..a.rows() {
        let d = l[(i, i)].re;
        if d <= T::zero() {
            return Err(DmtError::NumericalDomain {
                context: "ln_det_hpd",
                detail: "matrix is singular".into(),
            });
        }
        acc += d.ln();
    }
    Ok(acc + acc)
}
