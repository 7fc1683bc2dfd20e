//! Composite Gauss-Legendre quadrature for line integrals.

use crate::num::Real;
use nalgebra::DVector;

/// Gauss-Legendre rule on `[-1, 1]`, nodes found by Newton iteration.
#[derive(Clone, Debug)]
pub struct GaussLegendre<R> {
    nodes: Vec<R>,
    weights: Vec<R>,
}

impl<R: Real> GaussLegendre<R> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "need at least two nodes");
        let mut nodes = vec![R::zero(); n];
        let mut weights = vec![R::zero(); n];
        let nf = R::of(n as f64);
        for i in 0..n {
            // Chebyshev-like initial guess, then Newton on P_n.
            let mut x = (R::pi() * (R::of(i as f64 + 1.0) - R::of(0.25))
                / (nf + R::of(0.5)))
            .cos();
            for _ in 0..100 {
                let (pn, pn1) = legendre_pair(n, x);
                let dp = nf * (x * pn - pn1) / (x * x - R::one());
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < R::of(1e-16) {
                    break;
                }
            }
            let (_, pn1) = legendre_pair(n, x);
            let dp = nf * (x * legendre_pair(n, x).0 - pn1) / (x * x - R::one());
            nodes[i] = x;
            weights[i] = R::of(2.0) / ((R::one() - x * x) * dp * dp);
        }
        Self { nodes, weights }
    }

    /// Integral of a scalar function over `[a, b]` with `panels` subdivisions.
    pub fn integrate(&self, f: impl Fn(R) -> R, a: R, b: R, panels: usize) -> R {
        let mut total = R::zero();
        let m = R::of(panels as f64);
        for p in 0..panels {
            let pa = a + (b - a) * R::of(p as f64) / m;
            let pb = a + (b - a) * R::of(p as f64 + 1.0) / m;
            let mid = (pa + pb) / R::of(2.0);
            let half = (pb - pa) / R::of(2.0);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += *w * half * f(mid + half * *x);
            }
        }
        total
    }

    /// Integral of a vector-valued function over `[a, b]`.
    pub fn integrate_vec(
        &self,
        f: impl Fn(R) -> DVector<R>,
        a: R,
        b: R,
        panels: usize,
        dim: usize,
    ) -> DVector<R> {
        let mut total = DVector::zeros(dim);
        let m = R::of(panels as f64);
        for p in 0..panels {
            let pa = a + (b - a) * R::of(p as f64) / m;
            let pb = a + (b - a) * R::of(p as f64 + 1.0) / m;
            let mid = (pa + pb) / R::of(2.0);
            let half = (pb - pa) / R::of(2.0);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += f(mid + half * *x) * (*w * half);
            }
        }
        total
    }
}

/// Returns `(P_n(x), P_{n-1}(x))`.
fn legendre_pair<R: Real>(n: usize, x: R) -> (R, R) {
    let mut p0 = R::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = R::of(k as f64);
        let p2 = ((R::of(2.0) * kf - R::one()) * x * p1 - (kf - R::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_integrate_polynomials_exactly() {
        let gl: GaussLegendre<f64> = GaussLegendre::new(8);
        // degree 15 is exact for 8 nodes
        let f = |x: f64| x.powi(14) + 3.0 * x.powi(7) - x;
        let exact = 2.0 / 15.0;
        assert!((gl.integrate(f, -1.0, 1.0, 1) - exact).abs() < 1e-14);
    }

    #[test]
    fn composite_handles_oscillation() {
        let gl: GaussLegendre<f64> = GaussLegendre::new(16);
        let val = gl.integrate(|x: f64| (10.0 * x).sin(), 0.0, 1.0, 4);
        let exact = (1.0 - (10.0_f64).cos()) / 10.0;
        assert!((val - exact).abs() < 1e-13);
    }
}
