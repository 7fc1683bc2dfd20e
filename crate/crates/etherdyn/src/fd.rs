//! Central finite differences with one level of Richardson extrapolation.
//!
//! Defaults follow the crate-wide convention: step `1e-5` for first
//! derivatives, `1e-3` for second derivatives, Richardson on by default.

use crate::linalg::Tensor3;
use crate::num::Real;
use nalgebra::{DMatrix, DVector};

/// Step sizes used by derivative helpers.
#[derive(Clone, Copy, Debug)]
pub struct FdSteps<R> {
    /// First-derivative step.
    pub h1: R,
    /// Second-derivative step.
    pub h2: R,
    /// One extra Richardson level when true.
    pub richardson: bool,
}

impl<R: Real> Default for FdSteps<R> {
    fn default() -> Self {
        Self {
            h1: R::of(1e-5),
            h2: R::of(1e-3),
            richardson: true,
        }
    }
}

/// Values that support the linear combinations needed by the stencils.
pub trait Linear<R>: Clone {
    fn combine(a: R, x: &Self, b: R, y: &Self) -> Self;
}

impl<R: Real> Linear<R> for R {
    fn combine(a: R, x: &Self, b: R, y: &Self) -> Self {
        a * *x + b * *y
    }
}

impl<R: Real> Linear<R> for DVector<R> {
    fn combine(a: R, x: &Self, b: R, y: &Self) -> Self {
        x * a + y * b
    }
}

impl<R: Real> Linear<R> for DMatrix<R> {
    fn combine(a: R, x: &Self, b: R, y: &Self) -> Self {
        x * a + y * b
    }
}

impl<R: Real> Linear<R> for Tensor3<R> {
    fn combine(a: R, x: &Self, b: R, y: &Self) -> Self {
        Tensor3::from_fn(x.dim(), |i, j, k| a * x[(i, j, k)] + b * y[(i, j, k)])
    }
}

fn central_once<R: Real, T: Linear<R>>(f: &mut impl FnMut(R) -> T, t: R, h: R) -> T {
    let two = R::of(2.0);
    let fp = f(t + h);
    let fm = f(t - h);
    T::combine(R::one() / (two * h), &fp, -R::one() / (two * h), &fm)
}

/// First derivative of a curve `f` at `t`.
pub fn deriv<R: Real, T: Linear<R>>(
    mut f: impl FnMut(R) -> T,
    t: R,
    h: R,
    richardson: bool,
) -> T {
    if richardson {
        let d1 = central_once(&mut f, t, h);
        let d2 = central_once(&mut f, t, h / R::of(2.0));
        T::combine(R::of(4.0 / 3.0), &d2, R::of(-1.0 / 3.0), &d1)
    } else {
        central_once(&mut f, t, h)
    }
}

fn second_once<R: Real, T: Linear<R>>(f: &mut impl FnMut(R) -> T, t: R, h: R) -> T {
    let fp = f(t + h);
    let fm = f(t - h);
    let f0 = f(t);
    let s = T::combine(R::one(), &fp, R::one(), &fm);
    T::combine(R::one() / (h * h), &s, R::of(-2.0) / (h * h), &f0)
}

/// Second derivative of a curve `f` at `t`.
pub fn second_deriv<R: Real, T: Linear<R>>(
    mut f: impl FnMut(R) -> T,
    t: R,
    h: R,
    richardson: bool,
) -> T {
    if richardson {
        let d1 = second_once(&mut f, t, h);
        let d2 = second_once(&mut f, t, h / R::of(2.0));
        T::combine(R::of(4.0 / 3.0), &d2, R::of(-1.0 / 3.0), &d1)
    } else {
        second_once(&mut f, t, h)
    }
}

fn shifted<R: Real>(x: &DVector<R>, k: usize, dt: R) -> DVector<R> {
    let mut y = x.clone();
    y[k] += dt;
    y
}

/// Partial derivative of an arbitrary field along coordinate `k`.
pub fn partial<R: Real, T: Linear<R>>(
    mut f: impl FnMut(&DVector<R>) -> T,
    x: &DVector<R>,
    k: usize,
    steps: &FdSteps<R>,
) -> T {
    deriv(|t| f(&shifted(x, k, t)), R::zero(), steps.h1, steps.richardson)
}

/// Gradient of a scalar field.
pub fn gradient<R: Real>(
    mut f: impl FnMut(&DVector<R>) -> R,
    x: &DVector<R>,
    steps: &FdSteps<R>,
) -> DVector<R> {
    DVector::from_fn(x.len(), |k, _| partial(&mut f, x, k, steps))
}

/// Jacobian of a vector field: `J[(i, j)] = d f_i / d x_j`.
pub fn jacobian<R: Real>(
    mut f: impl FnMut(&DVector<R>) -> DVector<R>,
    x: &DVector<R>,
    steps: &FdSteps<R>,
) -> DMatrix<R> {
    let d = x.len();
    let cols: Vec<DVector<R>> = (0..d).map(|k| partial(&mut f, x, k, steps)).collect();
    DMatrix::from_fn(cols[0].len(), d, |i, j| cols[j][i])
}

fn mixed_once<R: Real>(
    f: &mut impl FnMut(&DVector<R>) -> R,
    x: &DVector<R>,
    j: usize,
    k: usize,
    h: R,
) -> R {
    let mut pp = x.clone();
    pp[j] += h;
    pp[k] += h;
    let mut pm = x.clone();
    pm[j] += h;
    pm[k] -= h;
    let mut mp = x.clone();
    mp[j] -= h;
    mp[k] += h;
    let mut mm = x.clone();
    mm[j] -= h;
    mm[k] -= h;
    (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (R::of(4.0) * h * h)
}

/// Hessian of a scalar field (plain second partials, no connection terms).
pub fn hessian<R: Real>(
    mut f: impl FnMut(&DVector<R>) -> R,
    x: &DVector<R>,
    steps: &FdSteps<R>,
) -> DMatrix<R> {
    let d = x.len();
    let h = steps.h2;
    let mut m = DMatrix::zeros(d, d);
    for j in 0..d {
        m[(j, j)] = second_deriv(|t| f(&shifted(x, j, t)), R::zero(), h, steps.richardson);
        for k in (j + 1)..d {
            let v = if steps.richardson {
                let d1 = mixed_once(&mut f, x, j, k, h);
                let d2 = mixed_once(&mut f, x, j, k, h / R::of(2.0));
                (R::of(4.0) * d2 - d1) / R::of(3.0)
            } else {
                mixed_once(&mut f, x, j, k, h)
            };
            m[(j, k)] = v;
            m[(k, j)] = v;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_quadratic() {
        let f = |x: &DVector<f64>| 0.5 * (x[0] * x[0] + 3.0 * x[1] * x[1]);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        let g = gradient(f, &x, &FdSteps::default());
        assert!((g[0] - 1.0).abs() < 1e-9);
        assert!((g[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn hessian_of_quartic() {
        let f = |x: &DVector<f64>| x[0] * x[0] * x[0] * x[0] + x[0] * x[1];
        let x = DVector::from_vec(vec![0.7, -0.3]);
        let h = hessian(f, &x, &FdSteps::default());
        assert!((h[(0, 0)] - 12.0 * 0.7 * 0.7).abs() < 1e-8);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-9);
        assert_eq!(h[(0, 1)], h[(1, 0)]);
    }
}
