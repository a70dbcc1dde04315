//! Dense linear algebra for the small systems that show up in cutting-plane
//! methods: a row-major matrix, p-norms and a Cholesky factorization.
//!
//! Vectors are plain `[f64]` slices. Sizes here stay in the low hundreds, so
//! nothing is blocked or vectorized.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is singular")]
    Singular,
}

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat({}x{})", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Mat::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from equally sized rows.
    ///
    /// Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ * v`
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                axpy(vi, self.row(i), &mut out);
            }
        }
        out
    }

    pub fn mul_mat(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                let (src, dst) = (
                    other.row(k),
                    &mut out.data[i * other.cols..(i + 1) * other.cols],
                );
                axpy(aik, src, dst);
            }
        }
        out
    }

    pub fn max_abs_diag(&self) -> f64 {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)].abs())
            .fold(0.0, f64::max)
    }

    /// Symmetry check relative to the largest entry magnitude.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces the matrix with `(M + Mᵀ)/2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(alpha: f64, v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| alpha * x).collect()
}

pub fn norm2(v: &[f64]) -> f64 {
    // Rescale so long vectors with huge entries do not overflow.
    let m = norm_inf(v);
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// The p-norm for `p >= 1`; `f64::INFINITY` selects the max-norm.
///
/// Panics if `p < 1` or is NaN.
pub fn norm(v: &[f64], p: f64) -> f64 {
    assert!(p >= 1.0, "p-norm requires p >= 1, got {p}");
    if p == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        norm2(v)
    } else if p.is_infinite() {
        norm_inf(v)
    } else {
        let m = norm_inf(v);
        if m == 0.0 {
            return 0.0;
        }
        m * v
            .iter()
            .map(|x| (x.abs() / m).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Hölder conjugate exponent `q` with `1/p + 1/q = 1`.
pub fn holder_conjugate(p: f64) -> f64 {
    assert!(p >= 1.0);
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Lower-triangular Cholesky factor `L` with `H = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors a symmetric positive-definite matrix. Only the lower triangle
    /// is read. A pivot at or below `1e-14 * max|diag|` is rejected.
    pub fn new(h: &Mat) -> Result<Self, NumericsError> {
        let n = h.rows();
        if h.cols() != n {
            return Err(NumericsError::DimensionMismatch {
                expected: n,
                got: h.cols(),
            });
        }
        let floor = 1e-14 * h.max_abs_diag();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = h[(j, j)];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) || !d.is_finite() {
                return Err(NumericsError::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = h[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Cholesky { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L y = rhs` in place.
    pub fn forward_in_place(&self, y: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `Lᵀ y = rhs` in place.
    pub fn backward_in_place(&self, y: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let mut y = rhs.to_vec();
        self.forward_in_place(&mut y);
        self.backward_in_place(&mut y);
        y
    }

    /// `vᵀ H⁻¹ v`, computed as `‖L⁻¹v‖²`.
    pub fn inv_quad_form(&self, v: &[f64]) -> f64 {
        let mut y = v.to_vec();
        self.forward_in_place(&mut y);
        dot(&y, &y)
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n)
            .map(|i| self.l[i * self.n + i].ln())
            .sum::<f64>()
    }
}

/// Solves `H y = rhs` for symmetric positive-definite `H`.
pub fn cholesky_solve(h: &Mat, rhs: &[f64]) -> Result<Vec<f64>, NumericsError> {
    if h.rows() != rhs.len() {
        return Err(NumericsError::DimensionMismatch {
            expected: h.rows(),
            got: rhs.len(),
        });
    }
    if !h.is_symmetric(1e-12) {
        return Err(NumericsError::NotSymmetric);
    }
    Ok(Cholesky::new(h)?.solve(rhs))
}

/// Inverse of a square matrix by Gauss-Jordan elimination with partial
/// pivoting.
pub fn invert(m: &Mat) -> Result<Mat, NumericsError> {
    let n = m.rows();
    if m.cols() != n {
        return Err(NumericsError::DimensionMismatch {
            expected: n,
            got: m.cols(),
        });
    }
    let mut a = m.clone();
    let mut inv = Mat::identity(n);
    let scale = a.as_slice().iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .unwrap();
        if a[(piv, col)].abs() <= 1e-14 * scale {
            return Err(NumericsError::Singular);
        }
        if piv != col {
            for j in 0..n {
                a.data.swap(piv * n + j, col * n + j);
                inv.data.swap(piv * n + j, col * n + j);
            }
        }
        let p = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= p;
            inv[(col, j)] /= p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[(i, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                a[(i, j)] -= f * a[(col, j)];
                inv[(i, j)] -= f * inv[(col, j)];
            }
        }
    }
    Ok(inv)
}

/// Thin QR factorization `A = QR` of a tall matrix by Householder
/// reflections: `Q` is `m × n` with orthonormal columns, `R` is `n × n`
/// upper triangular.
#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: Mat,
    pub r: Mat,
}

impl ThinQr {
    pub fn new(a: &Mat) -> Result<Self, NumericsError> {
        let (m, n) = (a.rows(), a.cols());
        if m < n {
            return Err(NumericsError::DimensionMismatch {
                expected: n,
                got: m,
            });
        }
        // Column-major working copy: reflectors act on columns.
        let mut cols: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)]).collect())
            .collect();
        let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut r = Mat::zeros(n, n);
        for k in 0..n {
            let x = &cols[k][k..];
            let alpha = norm2(x);
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(NumericsError::Singular);
            }
            let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
            let mut v = x.to_vec();
            v[0] += sign * alpha;
            let vnorm = norm2(&v);
            v.iter_mut().for_each(|e| *e /= vnorm);
            for col in cols.iter_mut().skip(k) {
                let tail = &mut col[k..];
                let proj = 2.0 * dot(&v, tail);
                axpy(-proj, &v, tail);
            }
            for j in k..n {
                r[(k, j)] = cols[j][k];
            }
            reflectors.push(v);
        }
        // Q = H₀ H₁ ⋯ H_{n−1} applied to the first n columns of the identity.
        let mut q = Mat::zeros(m, n);
        for j in 0..n {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            for (k, v) in reflectors.iter().enumerate().rev() {
                let tail = &mut e[k..];
                let proj = 2.0 * dot(v, tail);
                axpy(-proj, v, tail);
            }
            for i in 0..m {
                q[(i, j)] = e[i];
            }
        }
        Ok(ThinQr { q, r })
    }

    /// Solves `Rᵀ y = rhs`.
    pub fn solve_rt(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.r.rows();
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.r[(k, i)] * y[k];
            }
            y[i] = s / self.r[(i, i)];
        }
        y
    }

    /// Solves `R y = rhs`.
    pub fn solve_r(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.r.rows();
        let mut y = rhs.to_vec();
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.r[(i, k)] * y[k];
            }
            y[i] = s / self.r[(i, i)];
        }
        y
    }

    /// `log det(AᵀA) = 2 Σ log|Rⱼⱼ|`.
    pub fn log_det_gram(&self) -> f64 {
        2.0 * (0..self.r.rows())
            .map(|j| self.r[(j, j)].abs().ln())
            .sum::<f64>()
    }
}
