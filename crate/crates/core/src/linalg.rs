//! Small dense linear algebra over any [`Scalar`]: row-major matrices,
//! Gaussian elimination, the Björck–Pereyra Vandermonde solver, and a
//! Padé scaling-and-squaring matrix exponential for `f64`.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        Ok(Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(T::to_f64)
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if *a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = a.clone() * other.data[k * other.cols + j].clone();
                    out.data[i * other.cols + j] += v;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone()))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self[(i, j)].to_f64().abs()).sum::<f64>()).fold(0.0, f64::max)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorisation with partial pivoting (largest magnitude; any nonzero
/// pivot for exact types).
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn new(mut a: Matrix<T>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::InvalidArgument("LU needs a square matrix".into()));
        }
        let n = a.rows;
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let pivot = (col..n)
                .filter(|&r| a[(r, col)] != T::zero())
                .max_by(|&r, &s| a[(r, col)].abs().partial_cmp(&a[(s, col)].abs()).unwrap_or(std::cmp::Ordering::Equal))
                .ok_or(Error::Singular(col))?;
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                }
                perm.swap(pivot, col);
            }
            let d = a[(col, col)].clone();
            for r in col + 1..n {
                if a[(r, col)] == T::zero() {
                    continue;
                }
                let f = a[(r, col)].clone() / d.clone();
                for j in col + 1..n {
                    let v = f.clone() * a[(col, j)].clone();
                    a[(r, j)] -= v;
                }
                a[(r, col)] = f;
            }
        }
        Ok(Lu { lu: a, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let v = self.lu[(i, j)].clone() * x[j].clone();
                x[i] -= v;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let v = self.lu[(i, j)].clone() * x[j].clone();
                x[i] -= v;
            }
            x[i] = x[i].clone() / self.lu[(i, i)].clone();
        }
        x
    }

    /// Solve `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix<T>) -> Matrix<T> {
        let mut out = Matrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let col: Vec<T> = (0..b.rows).map(|i| b[(i, j)].clone()).collect();
            for (i, v) in self.solve(&col).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// Solve the primal Vandermonde system `Σ_k z_k^n x_k = b_n`, `n = 0..m`,
/// with the Björck–Pereyra algorithm (`O(m²)`, no pivoting). Nodes must be
/// distinct.
pub fn solve_vandermonde<T: Scalar>(nodes: &[T], rhs: &[T]) -> Result<Vec<T>> {
    let m = nodes.len();
    if rhs.len() != m {
        return Err(Error::InvalidArgument("Vandermonde rhs length mismatch".into()));
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let n = m - 1;
    let mut b = rhs.to_vec();
    for k in 0..n {
        for i in (k + 1..=n).rev() {
            let v = nodes[k].clone() * b[i - 1].clone();
            b[i] -= v;
        }
    }
    for k in (0..n).rev() {
        for i in k + 1..=n {
            let gap = nodes[i].clone() - nodes[i - k - 1].clone();
            if gap == T::zero() {
                return Err(Error::Singular(i));
            }
            b[i] = b[i].clone() / gap;
        }
        for i in k..n {
            let v = b[i + 1].clone();
            b[i] -= v;
        }
    }
    Ok(b)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `e^A` by degree-13 Padé approximation with scaling and squaring.
pub fn expm(a: &Matrix<f64>) -> Result<Matrix<f64>> {
    if a.rows != a.cols {
        return Err(Error::InvalidArgument("expm needs a square matrix".into()));
    }
    // θ_13 from Higham (2005).
    const THETA13: f64 = 5.371920351148152;
    let norm = a.norm1();
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.scale(&2f64.powi(-squarings));
    let n = a.rows;
    let b = &PADE13;
    let ident = Matrix::<f64>::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let comb = |c6: f64, c4: f64, c2: f64, c0: f64| {
        a6.scale(&c6).add(&a4.scale(&c4)).add(&a2.scale(&c2)).add(&ident.scale(&c0))
    };
    let u_inner = a6.matmul(&a6.scale(&b[13]).add(&a4.scale(&b[11])).add(&a2.scale(&b[9])));
    let u = a.matmul(&u_inner.add(&comb(b[7], b[5], b[3], b[1])));
    let v_inner = a6.matmul(&a6.scale(&b[12]).add(&a4.scale(&b[10])).add(&a2.scale(&b[8])));
    let v = v_inner.add(&comb(b[6], b[4], b[2], b[0]));
    let mut r = Lu::new(v.sub(&u))?.solve_matrix(&v.add(&u));
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    Ok(r)
}

/// `e^A` by scaled Taylor series and repeated squaring, carried out in the
/// matrix's own scalar type. Intended for wide floating-point types, where
/// the Padé degree tuned to `f64` would cap the accuracy.
pub fn expm_taylor<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if a.rows != a.cols {
        return Err(Error::InvalidArgument("expm needs a square matrix".into()));
    }
    const MAX_TERMS: usize = 400;
    let norm = a.norm1();
    // Scale to ‖A‖ ≤ 2^−8 so that few terms are needed.
    let squarings = if norm > 0.0 { (norm.log2().ceil() as i64 + 8).max(0) as u32 } else { 0 };
    let a = a.scale(&T::ratio(1, 2).powu(squarings));
    let tol = T::epsilon().max(f64::MIN_POSITIVE);
    let mut sum = Matrix::<T>::identity(a.rows);
    let mut term = sum.clone();
    for j in 1..=MAX_TERMS {
        term = term.matmul(&a).scale(&T::ratio(1, j as i64));
        sum = sum.add(&term);
        if term.max_abs() <= tol {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    Ok(sum)
}
