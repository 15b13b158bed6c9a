//! Small dense matrices over any [`Scalar`], plus f64 helpers backed by nalgebra.

use crate::jet::Scalar;
use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("matrix is numerically singular (pivot {pivot:e})")]
pub struct Singular {
    pub pivot: f64,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_f64(m: &Mat<f64>) -> Self {
        Self {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|v| S::from_f64(*v)).collect(),
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn values(&self) -> Mat<f64> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(Scalar::value).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = S::zero();
            for k in 0..self.cols {
                acc = acc + self.at(i, k).clone() * other.at(k, j).clone();
            }
            acc
        })
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for (k, vk) in v.iter().enumerate() {
                    acc = acc + self.at(i, k).clone() * vk.clone();
                }
                acc
            })
            .collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            self.at(i, j).clone() - other.at(i, j).clone()
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            self.at(i, j).clone() + other.at(i, j).clone()
        })
    }

    /// Gauss–Jordan inverse with partial pivoting on the plain values.
    pub fn inverse(&self) -> Result<Self, Singular> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self
            .data
            .iter()
            .map(|v| v.value().abs())
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| {
                    a.at(x, col)
                        .value()
                        .abs()
                        .total_cmp(&a.at(y, col).value().abs())
                })
                .unwrap();
            let pv = a.at(piv, col).value();
            if pv.abs() <= 1e-14 * scale {
                return Err(Singular { pivot: pv });
            }
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let p = a.at(col, col).clone();
            for j in 0..n {
                let v = a.at(col, j).clone() / p.clone();
                a.set(col, j, v);
                let w = inv.at(col, j).clone() / p.clone();
                inv.set(col, j, w);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a.at(r, col).clone();
                if factor.is_constant() && factor.value() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = a.at(r, j).clone() - factor.clone() * a.at(col, j).clone();
                    a.set(r, j, v);
                    let w = inv.at(r, j).clone() - factor.clone() * inv.at(col, j).clone();
                    inv.set(r, j, w);
                }
            }
        }
        Ok(inv)
    }
}

/// `aᵀ G b`.
pub fn inner<S: Scalar>(g: &Mat<S>, a: &[S], b: &[S]) -> S {
    let gb = g.matvec(b);
    dot(a, &gb)
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc = acc + x.clone() * y.clone();
    }
    acc
}

pub fn axpy<S: Scalar>(a: &[S], k: S, b: &[S]) -> Vec<S> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.clone() + k.clone() * y.clone())
        .collect()
}

pub fn vsub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub fn vadd<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub fn vscale<S: Scalar>(a: &[S], k: S) -> Vec<S> {
    a.iter().map(|x| x.clone() * k.clone()).collect()
}

pub fn to_nalgebra(m: &Mat<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

pub fn from_nalgebra(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigenvalues (ascending) and matching unit eigenvectors of a symmetric matrix.
pub fn symmetric_eigen(m: &Mat<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let sym = {
        let a = to_nalgebra(m);
        (&a + a.transpose()) * 0.5
    };
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m.rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}

/// Singular values, descending.
pub fn singular_values(m: &Mat<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = to_nalgebra(m).singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn norm_with(g: &Mat<f64>, v: &[f64]) -> f64 {
    inner(g, v, v).max(0.0).sqrt()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Modified Gram–Schmidt with respect to `g`. A candidate is dropped when its
/// remaining norm falls below `1e-9` of the largest candidate norm.
pub fn gram_schmidt(g: &Mat<f64>, candidates: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let scale = candidates.iter().map(|c| norm_with(g, c)).fold(0.0, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if scale == 0.0 {
        return basis;
    }
    for c in candidates {
        let mut v = c.clone();
        for b in &basis {
            let k = inner(g, b, &v);
            v = axpy(&v, -k, b);
        }
        let n = norm_with(g, &v);
        if n < 1e-9 * scale {
            continue;
        }
        basis.push(vscale(&v, 1.0 / n));
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet2;

    #[test]
    fn inverse_round_trip() {
        let m = Mat {
            rows: 3,
            cols: 3,
            data: vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0],
        };
        let inv = m.inverse().unwrap();
        let id = m.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id.at(i, j) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_is_reported() {
        let m = Mat {
            rows: 2,
            cols: 2,
            data: vec![1.0, 2.0, 2.0, 4.0],
        };
        assert!(m.inverse().is_err());
    }

    #[test]
    fn inverse_differentiates() {
        // d/dt (1/(2+t)) at t = 0 is -1/4.
        let t = Jet2::<f64>::variable(0.0, 0, 1);
        let m = Mat {
            rows: 1,
            cols: 1,
            data: vec![Jet2::from_f64(2.0) + t],
        };
        let inv = m.inverse().unwrap();
        assert!((inv.data[0].grad[0] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn gram_schmidt_drops_dependent_vectors() {
        let g = Mat::<f64>::identity(3);
        let b = gram_schmidt(
            &g,
            &[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 1.0, 0.0]],
        );
        assert_eq!(b.len(), 2);
        assert!(inner(&g, &b[0], &b[1]).abs() < 1e-15);
    }

    #[test]
    fn eigen_sorted() {
        let m = Mat {
            rows: 2,
            cols: 2,
            data: vec![2.0, 1.0, 1.0, 2.0],
        };
        let (vals, vecs) = symmetric_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        assert!((vecs[1][0].abs() - vecs[1][1].abs()).abs() < 1e-14);
    }
}
