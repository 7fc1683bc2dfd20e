//! Small dense tensors and matrix helpers on top of nalgebra.

use crate::num::Real;
use crate::Error;
use nalgebra::{DMatrix, DVector};

/// Rank-3 tensor with equal extents, stored row-major as `[i][j][k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3<R> {
    dim: usize,
    data: Vec<R>,
}

impl<R: Real> Tensor3<R> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![R::zero(); dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> R) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t[(i, j, k)] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_max(&self) -> R {
        self.data
            .iter()
            .fold(R::zero(), |m, v| if v.abs() > m { v.abs() } else { m })
    }

    /// Contracts the first index with a vector: `out[j][k] = v[i] t[i][j][k]`.
    pub fn contract_first(&self, v: &DVector<R>) -> DMatrix<R> {
        let d = self.dim;
        DMatrix::from_fn(d, d, |j, k| {
            (0..d).fold(R::zero(), |s, i| s + v[i] * self[(i, j, k)])
        })
    }
}

impl<R> std::ops::Index<(usize, usize, usize)> for Tensor3<R> {
    type Output = R;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &R {
        &self.data[(i * self.dim + j) * self.dim + k]
    }
}

impl<R> std::ops::IndexMut<(usize, usize, usize)> for Tensor3<R> {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut R {
        &mut self.data[(i * self.dim + j) * self.dim + k]
    }
}

/// Rank-4 tensor with equal extents, stored row-major as `[i][j][k][l]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4<R> {
    dim: usize,
    data: Vec<R>,
}

impl<R: Real> Tensor4<R> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![R::zero(); dim * dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize, usize) -> R) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        t[(i, j, k, l)] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_max(&self) -> R {
        self.data
            .iter()
            .fold(R::zero(), |m, v| if v.abs() > m { v.abs() } else { m })
    }
}

impl<R> std::ops::Index<(usize, usize, usize, usize)> for Tensor4<R> {
    type Output = R;
    fn index(&self, (i, j, k, l): (usize, usize, usize, usize)) -> &R {
        &self.data[((i * self.dim + j) * self.dim + k) * self.dim + l]
    }
}

impl<R> std::ops::IndexMut<(usize, usize, usize, usize)> for Tensor4<R> {
    fn index_mut(&mut self, (i, j, k, l): (usize, usize, usize, usize)) -> &mut R {
        &mut self.data[((i * self.dim + j) * self.dim + k) * self.dim + l]
    }
}

/// Max-abs norm of a matrix.
pub fn norm_max<R: Real>(m: &DMatrix<R>) -> R {
    m.iter()
        .fold(R::zero(), |acc, v| if v.abs() > acc { v.abs() } else { acc })
}

/// Max-abs norm of a vector.
pub fn vec_norm_max<R: Real>(v: &DVector<R>) -> R {
    v.iter()
        .fold(R::zero(), |acc, x| if x.abs() > acc { x.abs() } else { acc })
}

/// Inverts a small matrix, reporting a condition estimate on failure.
pub fn invert<R: Real>(m: &DMatrix<R>) -> Result<DMatrix<R>, Error> {
    let cond_gate = R::of(1e14);
    let norm = norm_max(m);
    match m.clone().try_inverse() {
        Some(inv) => {
            let cond = norm * norm_max(&inv) * R::of(m.nrows() as f64);
            if cond > cond_gate {
                Err(Error::SingularForm {
                    cond: cond.to_double(),
                })
            } else {
                Ok(inv)
            }
        }
        None => Err(Error::SingularForm { cond: f64::INFINITY }),
    }
}

/// Matrix exponential by scaling and squaring of the Taylor series.
pub fn expm<R: Real>(a: &DMatrix<R>) -> DMatrix<R> {
    let n = a.nrows();
    let norm = norm_max(a);
    let mut squarings = 0u32;
    let mut scale = R::one();
    while norm * scale > R::of(0.5) && squarings < 40 {
        scale = scale * R::of(0.5);
        squarings += 1;
    }
    let b = a * scale;
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..30 {
        term = &term * &b / R::of(k as f64);
        sum += &term;
        if norm_max(&term) < R::of(1e-20) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Solves the linear system `m x = rhs` for a small matrix.
pub fn solve<R: Real>(m: &DMatrix<R>, rhs: &DVector<R>) -> Result<DVector<R>, Error> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::SingularForm { cond: f64::INFINITY })
}
