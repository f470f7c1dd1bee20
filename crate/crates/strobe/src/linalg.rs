//! Dense row-major matrices and finite-difference Jacobians.
//!
//! Everything here operates on the small dimensions of phase space
//! (n <= 8), so a pivoted LU and plain loops are all that is needed.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Central-difference step base: cube root of machine epsilon.
pub const FD_STEP: f64 = 6.055454452393343e-6;

/// Per-component step `h_i = FD_STEP * max(1, |y_i|)`.
pub fn fd_step(y: f64) -> f64 {
    FD_STEP * y.abs().max(1.0)
}

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Mat { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * out.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, c: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| c * x).collect() }
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        self.add(&other.scale(-1.0))
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Solve `A x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.rows != self.cols {
            return Err(Error::usage("solve: matrix not square"));
        }
        if b.len() != self.rows {
            return Err(Error::usage("solve: rhs length mismatch"));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for r in col + 1..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::numeric(format!(
                    "solve: singular matrix (pivot {best:e} at column {col})"
                )));
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                x.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                a[r * n + col] = 0.0;
                for j in col + 1..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                x[r] -= f * x[col];
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col];
            for j in col + 1..n {
                s -= a[col * n + j] * x[j];
            }
            x[col] = s / a[col * n + col];
        }
        Ok(x)
    }

    /// Solve `A X = B` column-wise with a single factorization.
    pub fn solve_columns(&self, b: &Mat) -> Result<Mat> {
        if self.rows != self.cols {
            return Err(Error::usage("solve_columns: matrix not square"));
        }
        if b.rows != self.rows {
            return Err(Error::usage("solve_columns: rhs row count mismatch"));
        }
        let n = self.rows;
        let m = b.cols;
        let mut a = self.data.clone();
        let mut x = b.data.clone(); // row-major rows x m
        for col in 0..n {
            let mut piv = col;
            let mut best = a[col * n + col].abs();
            for r in col + 1..n {
                let v = a[r * n + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::numeric(format!(
                    "solve_columns: singular matrix (pivot {best:e} at column {col})"
                )));
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                for j in 0..m {
                    x.swap(col * m + j, piv * m + j);
                }
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                a[r * n + col] = 0.0;
                for j in col + 1..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                for j in 0..m {
                    x[r * m + j] -= f * x[col * m + j];
                }
            }
        }
        for col in (0..n).rev() {
            for j in 0..m {
                let mut s = x[col * m + j];
                for l in col + 1..n {
                    s -= a[col * n + l] * x[l * m + j];
                }
                x[col * m + j] = s / a[col * n + col];
            }
        }
        Ok(Mat { rows: n, cols: m, data: x })
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex64::ZERO; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![Complex64::ZERO; self.rows];
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }
}

// --- small vector helpers ----------------------------------------------------

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn cnorm2(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Central-difference Jacobian of `f` at `y`.
///
/// Uses the actually-representable step (Higham's trick) so the divided
/// difference is exact in the perturbation.
pub fn fd_jacobian<F>(f: F, y: &[f64], out_dim: usize) -> Result<Mat>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = y.len();
    let mut jac = Mat::zeros(out_dim, n);
    let mut yp = y.to_vec();
    for j in 0..n {
        let h = fd_step(y[j]);
        let a = y[j] + h;
        let b = y[j] - h;
        yp[j] = a;
        let fp = f(&yp)?;
        yp[j] = b;
        let fm = f(&yp)?;
        yp[j] = y[j];
        let denom = a - b;
        for i in 0..out_dim {
            jac.set(i, j, (fp[i] - fm[i]) / denom);
        }
    }
    Ok(jac)
}

/// Central-difference Jacobian of a complex-valued map of a real point.
pub fn fd_jacobian_c<F>(f: F, y: &[f64], out_dim: usize) -> Result<CMat>
where
    F: Fn(&[f64]) -> Result<Vec<Complex64>>,
{
    let n = y.len();
    let mut jac = CMat::zeros(out_dim, n);
    let mut yp = y.to_vec();
    for j in 0..n {
        let h = fd_step(y[j]);
        let a = y[j] + h;
        let b = y[j] - h;
        yp[j] = a;
        let fp = f(&yp)?;
        yp[j] = b;
        let fm = f(&yp)?;
        yp[j] = y[j];
        let denom = a - b;
        for i in 0..out_dim {
            jac.set(i, j, (fp[i] - fm[i]) / denom);
        }
    }
    Ok(jac)
}

/// Central-difference gradient of a scalar map.
pub fn fd_gradient<F>(f: F, y: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let n = y.len();
    let mut g = vec![0.0; n];
    let mut yp = y.to_vec();
    for j in 0..n {
        let h = fd_step(y[j]);
        let a = y[j] + h;
        let b = y[j] - h;
        yp[j] = a;
        let fp = f(&yp)?;
        yp[j] = b;
        let fm = f(&yp)?;
        yp[j] = y[j];
        g[j] = (fp - fm) / (a - b);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solve_roundtrip() {
        let a = Mat::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]]);
        let x = vec![1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let xs = a.solve(&b).unwrap();
        for (u, v) in xs.iter().zip(&x) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_matrix_errors() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(a.solve(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn fd_jacobian_quadratic() {
        let f = |y: &[f64]| Ok(vec![y[0] * y[0], y[0] * y[1]]);
        let j = fd_jacobian(f, &[1.5, -2.0], 2).unwrap();
        assert!((j.get(0, 0) - 3.0).abs() < 1e-9);
        assert!((j.get(0, 1) - 0.0).abs() < 1e-9);
        assert!((j.get(1, 0) + 2.0).abs() < 1e-9);
        assert!((j.get(1, 1) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn fd_jacobian_second_order_in_h() {
        // error of the central difference scales like h^2 over a decade
        let f = |y: &[f64]| -> Result<Vec<f64>> { Ok(vec![y[0].exp()]) };
        let x = [0.7_f64];
        let exact = x[0].exp();
        let err_at = |h: f64| {
            let fp = f(&[x[0] + h]).unwrap()[0];
            let fm = f(&[x[0] - h]).unwrap()[0];
            ((fp - fm) / (2.0 * h) - exact).abs()
        };
        let e1 = err_at(1e-3);
        let e2 = err_at(1e-4);
        let rate = (e1 / e2).log10();
        assert!((rate - 2.0).abs() < 0.1, "rate {rate}");
    }
}
