//! Small dense linear algebra kernels: Cholesky factorisation and the cyclic
//! Jacobi symmetric eigensolver. Problem sizes here are tiny (tens of
//! columns), so plain row-major storage is enough.

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Principal submatrix on the given index set.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(&a, &b)| a * b).sum()
            })
            .collect()
    }

    pub fn max_abs_diag(&self) -> T {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)].abs())
            .fold(T::zero(), T::max)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative pivot tolerance used to declare a symmetric matrix singular.
pub fn default_pivot_tol<T: Scalar>() -> T {
    T::epsilon() * T::lit(1e4)
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
///
/// Returns `None` when a pivot falls below `rel_tol * max|diag|`.
pub fn cholesky<T: Scalar>(a: &Matrix<T>, rel_tol: T) -> Option<Matrix<T>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let scale = a.max_abs_diag();
    if !(scale > T::zero()) || !scale.is_finite() {
        return None;
    }
    let floor = rel_tol * scale;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the lower factor.
pub fn cholesky_solve<T: Scalar>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Inverse of `L Lᵀ` from its lower factor.
pub fn cholesky_inverse<T: Scalar>(l: &Matrix<T>) -> Matrix<T> {
    let n = l.rows();
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        let col = cholesky_solve(l, &e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    inv
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen<T> {
    /// Eigenvalues in descending order.
    pub values: Vec<T>,
    /// Eigenvectors stored as columns, matching `values`.
    pub vectors: Matrix<T>,
}

impl<T: Scalar> SymEigen<T> {
    pub fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.column(k)
    }
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius mass falls
/// below `tol` relative to the total.
pub fn sym_eigen<T: Scalar>(a: &Matrix<T>, tol: T) -> SymEigen<T> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let total: T = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)] * a[(i, j)])
        .sum::<T>()
        .sqrt();
    let two = T::lit(2.0);

    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        let off = (two * off).sqrt();
        if off <= tol * total.max(T::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their index order
    order.sort_by(|&i, &j| {
        m[(j, j)]
            .partial_cmp(&m[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    SymEigen { values, vectors }
}

/// Pearson correlation matrix of the given columns. Columns with zero
/// variance produce NaN entries; callers validate beforehand.
pub fn correlation<T: Scalar>(columns: &[Vec<T>]) -> Matrix<T> {
    let p = columns.len();
    let z: Vec<Vec<T>> = columns.iter().map(|c| standardize(c)).collect();
    let n = columns.first().map_or(0, Vec::len);
    let denom = T::count(n.saturating_sub(1).max(1));
    let mut r = Matrix::zeros(p, p);
    for i in 0..p {
        r[(i, i)] = T::one();
        for j in (i + 1)..p {
            let s: T = z[i].iter().zip(&z[j]).map(|(&a, &b)| a * b).sum();
            let rij = (s / denom).max(-T::one()).min(T::one());
            r[(i, j)] = rij;
            r[(j, i)] = rij;
        }
    }
    r
}

/// Centres and scales a column to unit sample variance.
pub fn standardize<T: Scalar>(x: &[T]) -> Vec<T> {
    let n = x.len();
    if n < 2 {
        return vec![T::zero(); n];
    }
    let mean = x.iter().copied().sum::<T>() / T::count(n);
    let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / T::count(n - 1);
    let sd = var.sqrt();
    x.iter().map(|&v| (v - mean) / sd).collect()
}

pub fn variance<T: Scalar>(x: &[T]) -> T {
    let n = x.len();
    if n < 2 {
        return T::zero();
    }
    let mean = x.iter().copied().sum::<T>() / T::count(n);
    x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / T::count(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_roundtrip_and_inverse() {
        let a = Matrix::from_fn(3, 3, |i, j| [[4.0_f64, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]][i][j]);
        let l = cholesky(&a, default_pivot_tol()).unwrap();
        let x = cholesky_solve(&l, &[1.0, 2.0, 3.0]);
        let back = a.mul_vec(&x);
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-12);
        }
        let inv = cholesky_inverse(&l);
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[(i, k)] * inv[(k, j)]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = Matrix::from_fn(2, 2, |_, _| 1.0_f64);
        assert!(cholesky(&a, default_pivot_tol()).is_none());
        let z = Matrix::from_fn(2, 2, |i, j| if i == 0 && j == 0 { 3.0_f64 } else { 0.0 });
        assert!(cholesky(&z, default_pivot_tol()).is_none());
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // eigenvalues of [[2,1],[1,2]] are 3 and 1
        let a = Matrix::from_fn(2, 2, |i, j| if i == j { 2.0_f64 } else { 1.0 });
        let e = sym_eigen(&a, 1e-12);
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        let v0 = e.vector(0);
        assert!((v0[0].abs() - 0.5_f64.sqrt()).abs() < 1e-12);

        let b = Matrix::from_fn(3, 3, |i, j| [[1.0_f64, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]][i][j]);
        let e = sym_eigen(&b, 1e-12);
        assert!((e.values[0] - 2.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        assert!(e.values[2].abs() < 1e-12);
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric() {
        let raw = [0.3, -1.2, 0.7, 2.0, 0.1, -0.4, 0.9, 1.5, -0.8, 0.2, 0.6, -1.1, 0.05, 0.33, 1.7, -0.6];
        let a = Matrix::from_fn(4, 4, |i, j| raw[i * 4 + j] + raw[j * 4 + i]);
        let e = sym_eigen(&a, 1e-14);
        for i in 0..4 {
            for j in 0..4 {
                let s: f64 = (0..4).map(|k| e.vectors[(i, k)] * e.values[k] * e.vectors[(j, k)]).sum();
                assert!((s - a[(i, j)]).abs() < 1e-10);
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn correlation_is_scale_free() {
        let x = vec![1.0_f64, 2.0, 4.0, 3.0, 7.0];
        let y = vec![2.0_f64, 1.0, 5.0, 5.0, 6.0];
        let r1 = correlation(&[x.clone(), y.clone()]);
        let r2 = correlation(&[x.iter().map(|v| v * 100.0).collect(), y]);
        assert!((r1[(0, 1)] - r2[(0, 1)]).abs() < 1e-14);
    }
}
