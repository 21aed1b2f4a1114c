//! Row-major batch matrices and the GEMM kernels behind dense layers.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type a [`Network`](super::Network) can be instantiated with.
///
/// Training runs in `f32`; the `f64` instantiation exists so gradient checks
/// against finite differences are not swamped by rounding.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + Send
    + Sync
    + 'static
{
    /// `c = alpha * a * b + beta * c` with arbitrary strides.
    ///
    /// # Safety
    /// Strides and dimensions must describe memory inside the three buffers.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Real for f64 {
    unsafe fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Dense row-major matrix; rows are batch items.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "matrix buffer does not match {rows}x{cols}"
        );
        Self { rows, cols, data }
    }

    pub fn row_vector(data: Vec<T>) -> Self {
        let cols = data.len();
        Self {
            rows: 1,
            cols,
            data,
        }
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
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
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hcat row mismatch");
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Self {
            rows: self.rows,
            cols,
            data,
        }
    }

    /// Splits columns at `at` into `(left, right)`.
    pub fn hsplit(&self, at: usize) -> (Self, Self) {
        assert!(at <= self.cols);
        let mut left = Vec::with_capacity(self.rows * at);
        let mut right = Vec::with_capacity(self.rows * (self.cols - at));
        for r in 0..self.rows {
            let row = self.row(r);
            left.extend_from_slice(&row[..at]);
            right.extend_from_slice(&row[at..]);
        }
        (
            Self {
                rows: self.rows,
                cols: at,
                data: left,
            },
            Self {
                rows: self.rows,
                cols: self.cols - at,
                data: right,
            },
        )
    }

    /// Column slice `[from, to)`.
    pub fn columns(&self, from: usize, to: usize) -> Self {
        assert!(from <= to && to <= self.cols);
        let mut data = Vec::with_capacity(self.rows * (to - from));
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[from..to]);
        }
        Self {
            rows: self.rows,
            cols: to - from,
            data,
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|v| U::from_f64_lossy(v.as_f64()))
                .collect(),
        }
    }
}

/// `x (b×in) · wᵀ` where `w` is `out×in` row-major, plus `bias` per column.
pub(crate) fn affine_forward<T: Real>(x: &Matrix<T>, w: &[T], bias: &[T], out: usize) -> Matrix<T> {
    let (b, inp) = (x.rows, x.cols);
    debug_assert_eq!(w.len(), out * inp);
    let mut y = Matrix::zeros(b, out);
    for r in 0..b {
        y.row_mut(r).copy_from_slice(bias);
    }
    if b > 0 && inp > 0 && out > 0 {
        // SAFETY: shapes checked above, buffers are owned and sized.
        unsafe {
            T::gemm(
                b,
                inp,
                out,
                T::one(),
                x.data.as_ptr(),
                inp as isize,
                1,
                w.as_ptr(),
                1,
                inp as isize,
                T::one(),
                y.data.as_mut_ptr(),
                out as isize,
                1,
            );
        }
    }
    y
}

/// `dy (b×out) · w (out×in)`.
pub(crate) fn affine_input_grad<T: Real>(dy: &Matrix<T>, w: &[T], inp: usize) -> Matrix<T> {
    let (b, out) = (dy.rows, dy.cols);
    let mut dx = Matrix::zeros(b, inp);
    if b > 0 && inp > 0 && out > 0 {
        // SAFETY: as above.
        unsafe {
            T::gemm(
                b,
                out,
                inp,
                T::one(),
                dy.data.as_ptr(),
                out as isize,
                1,
                w.as_ptr(),
                inp as isize,
                1,
                T::zero(),
                dx.data.as_mut_ptr(),
                inp as isize,
                1,
            );
        }
    }
    dx
}

/// Accumulates `dyᵀ x` into `dw` (`out×in` row-major).
pub(crate) fn affine_weight_grad<T: Real>(dy: &Matrix<T>, x: &Matrix<T>, dw: &mut [T]) {
    let (b, out) = (dy.rows, dy.cols);
    let inp = x.cols;
    debug_assert_eq!(dw.len(), out * inp);
    if b > 0 && inp > 0 && out > 0 {
        // SAFETY: as above.
        unsafe {
            T::gemm(
                out,
                b,
                inp,
                T::one(),
                dy.data.as_ptr(),
                1,
                out as isize,
                x.data.as_ptr(),
                inp as isize,
                1,
                T::one(),
                dw.as_mut_ptr(),
                inp as isize,
                1,
            );
        }
    }
}
