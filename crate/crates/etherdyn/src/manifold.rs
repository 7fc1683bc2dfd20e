//! Chart-based manifold models with a symplectic form and an affine
//! connection, plus the tensors derived from them.
//!
//! Every model lives in a single chart. Built-ins: the flat plane `R^{2n}`
//! with the constant block form, the unit sphere in a stereographic chart
//! (domain `|u| < 2`), and the hyperbolic plane in the Poincaré disk
//! (domain `|u| < 0.9`). All fields are pure functions of the coordinates,
//! so models are freely shareable across threads.

use crate::fd::{self, FdSteps};
use crate::linalg::{self, Tensor3, Tensor4};
use crate::num::Real;
use crate::ode::{self, OdeOptions};
use crate::path::Path;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// A chart point.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<R: Real> {
    pub coords: DVector<R>,
}

impl<R: Real> Point<R> {
    pub fn new(coords: DVector<R>) -> Self {
        Self { coords }
    }

    pub fn from_f64s(coords: &[f64]) -> Self {
        Self {
            coords: DVector::from_iterator(coords.len(), coords.iter().map(|&x| R::of(x))),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

impl<R: Real> From<DVector<R>> for Point<R> {
    fn from(coords: DVector<R>) -> Self {
        Self { coords }
    }
}

/// A linear map between tangent spaces, kept with its base points.
#[derive(Clone, Debug)]
pub struct LinearMap<R: Real> {
    pub matrix: DMatrix<R>,
    pub source: Point<R>,
    pub target: Point<R>,
}

impl<R: Real> LinearMap<R> {
    /// How far the map is from being symplectic between its base points.
    pub fn symplectic_residual(&self, model: &ManifoldModel<R>) -> R {
        let om_src = model.omega(&self.source.coords);
        let om_tgt = model.omega(&self.target.coords);
        let pulled = self.matrix.transpose() * om_tgt * &self.matrix;
        linalg::norm_max(&(pulled - om_src))
    }
}

type MatrixField<R> = dyn Fn(&DVector<R>) -> DMatrix<R> + Send + Sync;
type GammaField<R> = dyn Fn(&DVector<R>) -> Tensor3<R> + Send + Sync;
type CurvField<R> = dyn Fn(&DVector<R>) -> Tensor4<R> + Send + Sync;
type ReflectionFamily<R> = dyn Fn(&DVector<R>, &DVector<R>) -> DVector<R> + Send + Sync;
type GeodesicExp<R> = dyn Fn(&DVector<R>, &DVector<R>, R) -> DVector<R> + Send + Sync;
type DomainPred<R> = dyn Fn(&DVector<R>) -> bool + Send + Sync;

struct ModelData<R: Real> {
    name: String,
    dim: usize,
    domain: Box<DomainPred<R>>,
    /// Radius of the box from which test samples are drawn.
    sample_radius: R,
    omega: Box<MatrixField<R>>,
    gamma: Box<GammaField<R>>,
    curvature_closed: Option<Box<CurvField<R>>>,
    reflection_closed: Option<Box<ReflectionFamily<R>>>,
    geodesic_exp: Option<Box<GeodesicExp<R>>>,
    flat: bool,
}

/// Chart model of a manifold; cheap to clone (shared interior).
#[derive(Clone)]
pub struct ManifoldModel<R: Real> {
    data: Arc<ModelData<R>>,
}

impl<R: Real> std::fmt::Debug for ManifoldModel<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManifoldModel")
            .field("name", &self.data.name)
            .field("dim", &self.data.dim)
            .finish()
    }
}

impl<R: Real> ManifoldModel<R> {
    pub fn name(&self) -> &str {
        &self.data.name
    }

    pub fn dim(&self) -> usize {
        self.data.dim
    }

    pub fn is_flat(&self) -> bool {
        self.data.flat
    }

    /// Radius inside which random test points are sampled.
    pub fn sample_radius(&self) -> R {
        self.data.sample_radius
    }

    pub fn contains(&self, x: &DVector<R>) -> bool {
        (self.data.domain)(x)
    }

    pub fn check_in_domain(&self, x: &DVector<R>) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::DomainExit {
                model: self.data.name.clone(),
                point: x.iter().map(|v| v.to_double()).collect(),
            })
        }
    }

    pub fn omega(&self, x: &DVector<R>) -> DMatrix<R> {
        (self.data.omega)(x)
    }

    pub fn gamma(&self, x: &DVector<R>) -> Tensor3<R> {
        (self.data.gamma)(x)
    }

    pub fn has_closed_reflections(&self) -> bool {
        self.data.reflection_closed.is_some()
    }

    /// Closed-form reflection family, when the model has one.
    pub fn reflection_closed(&self, x: &DVector<R>, z: &DVector<R>) -> Result<DVector<R>> {
        match &self.data.reflection_closed {
            Some(s) => Ok(s(x, z)),
            None => Err(Error::NoReflections(self.data.name.clone())),
        }
    }

    /// Closed-form geodesic exponential, when the model has one.
    pub fn geodesic_exp(&self, x: &DVector<R>, v: &DVector<R>, t: R) -> Option<DVector<R>> {
        self.data.geodesic_exp.as_ref().map(|g| g(x, v, t))
    }

    /// Poisson tensor `psi = omega^{-1}`.
    pub fn poisson_tensor(&self, x: &DVector<R>) -> Result<DMatrix<R>> {
        self.check_in_domain(x)?;
        linalg::invert(&self.omega(x))
    }

    /// Coordinate derivative of the Poisson tensor: `dpsi[(c, a, b)] = d_c psi^{ab}`.
    pub fn poisson_tensor_derivative(&self, x: &DVector<R>) -> Result<Tensor3<R>> {
        let d = self.dim();
        let psi = self.poisson_tensor(x)?;
        if self.data.flat {
            return Ok(Tensor3::zeros(d));
        }
        let steps = FdSteps::default();
        let mut out = Tensor3::zeros(d);
        for c in 0..d {
            // d psi = -psi (d omega) psi
            let domega = fd::partial(|y| self.omega(y), x, c, &steps);
            let dpsi = -&psi * domega * &psi;
            for a in 0..d {
                for b in 0..d {
                    out[(c, a, b)] = dpsi[(a, b)];
                }
            }
        }
        Ok(out)
    }

    /// Curvature tensor `riem[(s, m, j, k)] = R^s_{m j k}`, antisymmetric in `(j, k)`.
    ///
    /// Computed from the connection coefficients by finite differences; when a
    /// closed form is attached the two are compared (a large discrepancy is a
    /// model-definition bug) and the closed form is returned.
    pub fn curvature_tensor(&self, x: &DVector<R>) -> Result<Tensor4<R>> {
        self.check_in_domain(x)?;
        let d = self.dim();
        if self.data.flat {
            return Ok(Tensor4::zeros(d));
        }
        let steps = FdSteps::default();
        let gamma0 = self.gamma(x);
        let dgamma: Vec<Tensor3<R>> = (0..d)
            .map(|j| fd::partial(|y| self.gamma(y), x, j, &steps))
            .collect();
        let fd_riem = Tensor4::from_fn(d, |s, m, j, k| {
            let mut v = dgamma[j][(s, k, m)] - dgamma[k][(s, j, m)];
            for l in 0..d {
                v += gamma0[(s, j, l)] * gamma0[(l, k, m)]
                    - gamma0[(s, k, l)] * gamma0[(l, j, m)];
            }
            v
        });
        if let Some(closed) = &self.data.curvature_closed {
            let cl = closed(x);
            let mut worst = R::zero();
            for s in 0..d {
                for m in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            let diff = (cl[(s, m, j, k)] - fd_riem[(s, m, j, k)]).abs();
                            if diff > worst {
                                worst = diff;
                            }
                        }
                    }
                }
            }
            if worst > R::of(1e-6) {
                return Err(Error::ModelDefinition {
                    model: self.data.name.clone(),
                    what: "closed-form curvature disagrees with connection".into(),
                    residual: worst.to_double(),
                });
            }
            Ok(cl)
        } else {
            Ok(fd_riem)
        }
    }

    /// Covariant Hessian of a scalar field: `D^2_{jk} f - D_m f Gamma^m_{jk}`.
    pub fn covariant_hessian(
        &self,
        f: &(impl Fn(&DVector<R>) -> R + ?Sized),
        x: &DVector<R>,
    ) -> DMatrix<R> {
        let steps = FdSteps::default();
        let hess = fd::hessian(|y| f(y), x, &steps);
        let grad = fd::gradient(|y| f(y), x, &steps);
        let gamma = self.gamma(x);
        let d = self.dim();
        DMatrix::from_fn(d, d, |j, k| {
            let mut v = hess[(j, k)];
            for m in 0..d {
                v -= grad[m] * gamma[(m, j, k)];
            }
            v
        })
    }

    /// Torsion `T^k_{sl} = Gamma^k_{sl} - Gamma^k_{ls}`.
    pub fn torsion(&self, x: &DVector<R>) -> Tensor3<R> {
        let g = self.gamma(x);
        Tensor3::from_fn(self.dim(), |k, s, l| g[(k, s, l)] - g[(k, l, s)])
    }

    /// Max-abs residual of the covariant derivative of the symplectic form.
    pub fn symplectic_connection_residual(&self, x: &DVector<R>) -> R {
        let d = self.dim();
        let steps = FdSteps {
            h1: R::of(1e-5),
            ..FdSteps::default()
        };
        let gamma = self.gamma(x);
        let omega = self.omega(x);
        let mut worst = R::zero();
        for c in 0..d {
            let domega = fd::partial(|y| self.omega(y), x, c, &steps);
            for i in 0..d {
                for j in 0..d {
                    let mut v = domega[(i, j)];
                    for m in 0..d {
                        v -= gamma[(m, c, i)] * omega[(m, j)] + gamma[(m, c, j)] * omega[(i, m)];
                    }
                    if v.abs() > worst {
                        worst = v.abs();
                    }
                }
            }
        }
        worst
    }

    /// Parallel transport along a path: solves `dV/dt + ydot^j Gamma_j V = 0`.
    pub fn parallel_transport(&self, path: &Path<R>) -> Result<LinearMap<R>> {
        let m = self.parallel_transport_matrix(path, R::zero(), R::one())?;
        Ok(LinearMap {
            matrix: m,
            source: Point::new(path.at(R::zero()).0),
            target: Point::new(path.at(R::one()).0),
        })
    }

    /// Transport matrix over a sub-interval of the path parameter.
    pub fn parallel_transport_matrix(
        &self,
        path: &Path<R>,
        t0: R,
        t1: R,
    ) -> Result<DMatrix<R>> {
        let d = self.dim();
        if self.data.flat {
            return Ok(DMatrix::identity(d, d));
        }
        let rhs = |t: R, state: &DVector<R>| {
            let (y, ydot) = path.at(t);
            let gamma = self.gamma(&y);
            let v = DMatrix::from_iterator(d, d, state.iter().copied());
            // (dV)^k_m = -ydot^j Gamma^k_{j l} V^l_m
            let mut dv = DMatrix::zeros(d, d);
            for k in 0..d {
                for mcol in 0..d {
                    let mut acc = R::zero();
                    for j in 0..d {
                        for l in 0..d {
                            acc -= ydot[j] * gamma[(k, j, l)] * v[(l, mcol)];
                        }
                    }
                    dv[(k, mcol)] = acc;
                }
            }
            DVector::from_iterator(d * d, dv.iter().copied())
        };
        let v0 = DMatrix::identity(d, d);
        let state0 = DVector::from_iterator(d * d, v0.iter().copied());
        let state = ode::solve_piecewise(
            rhs,
            t0,
            t1,
            path.breakpoints(),
            state0,
            &OdeOptions::default(),
        )?;
        Ok(DMatrix::from_iterator(d, d, state.iter().copied()))
    }
}

fn block_symplectic<R: Real>(d: usize) -> DMatrix<R> {
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d / 2 {
        m[(2 * i, 2 * i + 1)] = R::one();
        m[(2 * i + 1, 2 * i)] = -R::one();
    }
    m
}

/// Christoffel symbols of a conformally flat surface metric `exp(2 phi) delta`.
fn conformal_gamma<R: Real>(dphi: DVector<R>) -> Tensor3<R> {
    let d = dphi.len();
    Tensor3::from_fn(d, |k, i, j| {
        let mut v = R::zero();
        if k == i {
            v += dphi[j];
        }
        if k == j {
            v += dphi[i];
        }
        if i == j {
            v -= dphi[k];
        }
        v
    })
}

/// Constant-curvature tensor `K (delta^s_j g_{km} - delta^s_k g_{jm})`.
fn constant_curvature<R: Real>(k_curv: R, g: &DMatrix<R>) -> Tensor4<R> {
    let d = g.nrows();
    Tensor4::from_fn(d, |s, m, j, k| {
        let mut v = R::zero();
        if s == j {
            v += k_curv * g[(k, m)];
        }
        if s == k {
            v -= k_curv * g[(j, m)];
        }
        v
    })
}

impl<R: Real> ManifoldModel<R> {
    /// Flat `R^{2n}` with the constant block-diagonal symplectic form.
    pub fn flat_r2n(n: usize) -> Self {
        let d = 2 * n;
        ManifoldModel {
            data: Arc::new(ModelData {
                name: format!("flat-r{d}"),
                dim: d,
                domain: Box::new(|_| true),
                sample_radius: R::of(1.5),
                omega: Box::new(move |_| block_symplectic(d)),
                gamma: Box::new(move |_| Tensor3::zeros(d)),
                curvature_closed: Some(Box::new(move |_| Tensor4::zeros(d))),
                reflection_closed: Some(Box::new(|x, z| x * R::of(2.0) - z)),
                geodesic_exp: Some(Box::new(|x, v, t| x + v * t)),
                flat: true,
            }),
        }
    }

    /// Unit sphere in the stereographic chart centered at the south pole.
    pub fn sphere_s2(cap: f64) -> Self {
        let cap = R::of(cap);
        ManifoldModel {
            data: Arc::new(ModelData {
                name: "sphere-s2".into(),
                dim: 2,
                domain: Box::new(move |x: &DVector<R>| x.norm() < cap),
                sample_radius: cap * R::of(0.25),
                omega: Box::new(|u: &DVector<R>| {
                    let s = R::one() + u.norm_squared();
                    let lam2 = R::of(4.0) / (s * s);
                    DMatrix::from_row_slice(2, 2, &[R::zero(), lam2, -lam2, R::zero()])
                }),
                gamma: Box::new(|u: &DVector<R>| {
                    let s = R::one() + u.norm_squared();
                    conformal_gamma(u * (-R::of(2.0) / s))
                }),
                curvature_closed: Some(Box::new(|u: &DVector<R>| {
                    let s = R::one() + u.norm_squared();
                    let lam2 = R::of(4.0) / (s * s);
                    let g = DMatrix::from_diagonal_element(2, 2, lam2);
                    constant_curvature(R::one(), &g)
                })),
                reflection_closed: Some(Box::new(|x, z| {
                    let px = sphere_embed(x);
                    let pz = sphere_embed(z);
                    let q = &px * (R::of(2.0) * px.dot(&pz)) - pz;
                    sphere_chart(&q)
                })),
                geodesic_exp: Some(Box::new(|x, v, t| {
                    let p = sphere_embed(x);
                    let w = sphere_embed_differential(x) * v;
                    let speed = w.norm();
                    if speed < R::of(1e-300) {
                        return x.clone();
                    }
                    let ang = speed * t;
                    let q = &p * ang.cos() + (&w / speed) * ang.sin();
                    sphere_chart(&q)
                })),
                flat: false,
            }),
        }
    }

    /// Hyperbolic plane in the Poincaré disk chart.
    pub fn hyperbolic_h2(cap: f64) -> Self {
        let cap = R::of(cap);
        ManifoldModel {
            data: Arc::new(ModelData {
                name: "hyperbolic-h2".into(),
                dim: 2,
                domain: Box::new(move |x: &DVector<R>| x.norm() < cap),
                sample_radius: cap * R::of(0.45),
                omega: Box::new(|u: &DVector<R>| {
                    let s = R::one() - u.norm_squared();
                    let lam2 = R::of(4.0) / (s * s);
                    DMatrix::from_row_slice(2, 2, &[R::zero(), lam2, -lam2, R::zero()])
                }),
                gamma: Box::new(|u: &DVector<R>| {
                    let s = R::one() - u.norm_squared();
                    conformal_gamma(u * (R::of(2.0) / s))
                }),
                curvature_closed: Some(Box::new(|u: &DVector<R>| {
                    let s = R::one() - u.norm_squared();
                    let lam2 = R::of(4.0) / (s * s);
                    let g = DMatrix::from_diagonal_element(2, 2, lam2);
                    constant_curvature(-R::one(), &g)
                })),
                reflection_closed: Some(Box::new(|a, z| {
                    // Geodesic point symmetry of the disk, via Moebius maps:
                    // s_a(z) = (2a - (1 + |a|^2) z) / ((1 + |a|^2) - 2 conj(a) z)
                    let one_a2 = R::one() + a.norm_squared();
                    let num = a * R::of(2.0) - z * one_a2;
                    let den = DVector::from_vec(vec![
                        one_a2 - R::of(2.0) * (a[0] * z[0] + a[1] * z[1]),
                        -R::of(2.0) * (a[0] * z[1] - a[1] * z[0]),
                    ]);
                    cdiv(&num, &den)
                })),
                geodesic_exp: Some(Box::new(|a, v, t| {
                    let scale = R::one() - a.norm_squared();
                    let u = v / scale;
                    let speed = u.norm();
                    if speed < R::of(1e-300) {
                        return a.clone();
                    }
                    let radial = (speed * t).tanh();
                    let w = (&u / speed) * radial;
                    // Moebius translation taking 0 to a.
                    let num = a + &w;
                    let den = DVector::from_vec(vec![
                        R::one() + a[0] * w[0] + a[1] * w[1],
                        a[0] * w[1] - a[1] * w[0],
                    ]);
                    cdiv(&num, &den)
                })),
                flat: false,
            }),
        }
    }

    /// Looks a built-in model up by name: `flat-r2`, `flat-r4`, ...,
    /// `sphere-s2`, `hyperbolic-h2`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "sphere-s2" => Ok(Self::sphere_s2(2.0)),
            "hyperbolic-h2" => Ok(Self::hyperbolic_h2(0.9)),
            _ => {
                if let Some(rest) = name.strip_prefix("flat-r") {
                    let d: usize = rest
                        .parse()
                        .map_err(|_| Error::Invalid(format!("unknown model `{name}`")))?;
                    if d == 0 || d % 2 != 0 {
                        return Err(Error::Invalid(format!(
                            "flat model dimension must be even and positive, got {d}"
                        )));
                    }
                    Ok(Self::flat_r2n(d / 2))
                } else {
                    Err(Error::Invalid(format!("unknown model `{name}`")))
                }
            }
        }
    }
}

// complex division for the disk model, coordinates as (re, im)

fn cdiv<R: Real>(a: &DVector<R>, b: &DVector<R>) -> DVector<R> {
    let n = b[0] * b[0] + b[1] * b[1];
    DVector::from_vec(vec![
        (a[0] * b[0] + a[1] * b[1]) / n,
        (a[1] * b[0] - a[0] * b[1]) / n,
    ])
}

/// Chart point to a point on the embedded unit sphere.
pub fn sphere_embed<R: Real>(u: &DVector<R>) -> DVector<R> {
    let s = R::one() + u.norm_squared();
    DVector::from_vec(vec![
        R::of(2.0) * u[0] / s,
        R::of(2.0) * u[1] / s,
        (u.norm_squared() - R::one()) / s,
    ])
}

/// Embedded sphere point back to the chart (projection from the north pole).
pub fn sphere_chart<R: Real>(p: &DVector<R>) -> DVector<R> {
    let denom = R::one() - p[2];
    DVector::from_vec(vec![p[0] / denom, p[1] / denom])
}

/// Differential of [`sphere_embed`]: a `3 x 2` matrix.
pub fn sphere_embed_differential<R: Real>(u: &DVector<R>) -> DMatrix<R> {
    let s = R::one() + u.norm_squared();
    let s2 = s * s;
    let two = R::of(2.0);
    let four = R::of(4.0);
    DMatrix::from_row_slice(
        3,
        2,
        &[
            two / s - four * u[0] * u[0] / s2,
            -four * u[0] * u[1] / s2,
            -four * u[0] * u[1] / s2,
            two / s - four * u[1] * u[1] / s2,
            four * u[0] / s2,
            four * u[1] / s2,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::Path;

    fn pt(coords: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(coords)
    }

    #[test]
    fn poisson_tensor_inverts_flat_form() {
        let model: ManifoldModel<f64> = ManifoldModel::flat_r2n(1);
        let psi = model.poisson_tensor(&pt(&[0.3, -0.4])).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(linalg::norm_max(&(psi - expect)) < 1e-15);
    }

    #[test]
    fn poisson_tensor_is_antisymmetric_and_inverse_on_sphere() {
        let model: ManifoldModel<f64> = ManifoldModel::sphere_s2(2.0);
        let x = pt(&[0.4, -0.7]);
        let om = model.omega(&x);
        let psi = model.poisson_tensor(&x).unwrap();
        assert!(linalg::norm_max(&(&psi + psi.transpose())) < 1e-15);
        let prod = om * psi;
        assert!(linalg::norm_max(&(prod - DMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn curvature_vanishes_on_flat() {
        let model: ManifoldModel<f64> = ManifoldModel::flat_r2n(2);
        let r = model.curvature_tensor(&pt(&[0.1, 0.2, -0.3, 0.4])).unwrap();
        assert!(r.norm_max() < 1e-14);
    }

    #[test]
    fn sphere_curvature_matches_closed_form_and_unit_sectional() {
        let model: ManifoldModel<f64> = ManifoldModel::sphere_s2(2.0);
        for x in [pt(&[0.0, 0.0]), pt(&[0.3, -0.5]), pt(&[0.8, 0.1])] {
            // the curvature op itself cross-checks FD against the closed form
            let r = model.curvature_tensor(&x).unwrap();
            let g = {
                let s = 1.0 + x.norm_squared();
                4.0 / (s * s)
            };
            // sectional curvature from R_{1212}/det g
            let r1212 = g * r[(0, 1, 0, 1)];
            let k = r1212 / (g * g);
            assert!((k - 1.0).abs() < 1e-7, "sectional curvature {k}");
            // antisymmetry in the last two indices
            for s in 0..2 {
                for m in 0..2 {
                    for j in 0..2 {
                        for kk in 0..2 {
                            assert_eq!(r[(s, m, j, kk)], -r[(s, m, kk, j)]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn hyperbolic_sectional_curvature_is_minus_one() {
        let model: ManifoldModel<f64> = ManifoldModel::hyperbolic_h2(0.9);
        let x = pt(&[0.25, -0.35]);
        let r = model.curvature_tensor(&x).unwrap();
        let s = 1.0 - x.norm_squared();
        let g = 4.0 / (s * s);
        let k = (g * r[(0, 1, 0, 1)]) / (g * g);
        assert!((k + 1.0).abs() < 1e-7, "sectional curvature {k}");
    }

    #[test]
    fn symplectic_connection_residual_small() {
        let sphere: ManifoldModel<f64> = ManifoldModel::sphere_s2(2.0);
        let hyp: ManifoldModel<f64> = ManifoldModel::hyperbolic_h2(0.9);
        for x in [pt(&[0.0, 0.0]), pt(&[0.4, 0.2]), pt(&[-0.3, 0.6])] {
            assert!(sphere.symplectic_connection_residual(&x) < 1e-6);
            assert!(hyp.symplectic_connection_residual(&(x * 0.8)) < 1e-6);
        }
    }

    #[test]
    fn covariant_hessian_flat_quadratic_and_linear() {
        let model: ManifoldModel<f64> = ManifoldModel::flat_r2n(1);
        let x = pt(&[0.7, -0.2]);
        let h = model.covariant_hessian(&|y: &DVector<f64>| 0.5 * y.norm_squared(), &x);
        assert!(linalg::norm_max(&(h - DMatrix::identity(2, 2))) < 1e-9);
        let h = model.covariant_hessian(&|y: &DVector<f64>| 3.0 * y[0] - y[1], &x);
        assert!(linalg::norm_max(&h) < 1e-9);
    }

    #[test]
    fn covariant_hessian_of_height_at_sphere_center() {
        // the third embedded coordinate pulled back to the chart has a
        // diagonal covariant Hessian -Z g = 4 I at the center
        let model: ManifoldModel<f64> = ManifoldModel::sphere_s2(2.0);
        let height = |u: &DVector<f64>| {
            let r2 = u.norm_squared();
            (r2 - 1.0) / (r2 + 1.0)
        };
        let h = model.covariant_hessian(&height, &pt(&[0.0, 0.0]));
        assert!(linalg::norm_max(&(h - DMatrix::identity(2, 2) * 4.0)) < 1e-8);
    }

    #[test]
    fn sphere_reflection_is_geodesic_symmetry() {
        // axis point x, z at 90 degrees: the image is the antipode along
        // the geodesic through x.
        let x = pt(&[0.0, 0.0]); // south pole
        let model: ManifoldModel<f64> = ManifoldModel::sphere_s2(2.0);
        let z = pt(&[0.5, 0.0]);
        let s = model.reflection_closed(&x, &z).unwrap();
        assert!((s - pt(&[-0.5, 0.0])).amax() < 1e-14);
        // involution at a generic base point
        let x = pt(&[0.3, -0.2]);
        let z = pt(&[0.1, 0.4]);
        let s2 = model
            .reflection_closed(&x, &model.reflection_closed(&x, &z).unwrap())
            .unwrap();
        assert!((s2 - z).amax() < 1e-13);
    }

    #[test]
    fn hyperbolic_reflection_fixes_base_and_involutes() {
        let model: ManifoldModel<f64> = ManifoldModel::hyperbolic_h2(0.9);
        let a = pt(&[0.3, -0.1]);
        let fixed = model.reflection_closed(&a, &a).unwrap();
        assert!((fixed - &a).amax() < 1e-14);
        let z = pt(&[-0.2, 0.25]);
        let s2 = model
            .reflection_closed(&a, &model.reflection_closed(&a, &z).unwrap())
            .unwrap();
        assert!((s2 - z).amax() < 1e-13);
    }

    #[test]
    fn geodesic_exp_runs_along_great_circles() {
        let model: ManifoldModel<f64> = ManifoldModel::sphere_s2(2.0);
        let x = pt(&[0.0, 0.0]);
        // chart tangent (1, 0) at the south pole has embedded length 2
        let v = pt(&[1.0, 0.0]);
        // a quarter circle: embedded angle pi/2 needs t = pi/4
        let q = model
            .geodesic_exp(&x, &v, std::f64::consts::FRAC_PI_4)
            .unwrap();
        let e = sphere_embed(&q);
        assert!((e - pt(&[1.0, 0.0, 0.0])).amax() < 1e-12);
    }

    #[test]
    fn transport_on_flat_is_identity() {
        let model: ManifoldModel<f64> = ManifoldModel::flat_r2n(1);
        let path = Path::line(pt(&[0.0, 0.0]), pt(&[0.7, -0.3]));
        let v = model.parallel_transport(&path).unwrap();
        assert!(linalg::norm_max(&(v.matrix - DMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn transport_forward_then_back_is_identity() {
        let model: ManifoldModel<f64> = ManifoldModel::sphere_s2(2.0);
        let fwd = Path::line(pt(&[0.0, 0.1]), pt(&[0.4, -0.2]));
        let round = fwd.then(&fwd.reversed()).unwrap();
        let v = model.parallel_transport(&round).unwrap();
        assert!(linalg::norm_max(&(v.matrix - DMatrix::identity(2, 2))) < 1e-8);
    }

    #[test]
    fn transport_around_small_loop_rotates_by_enclosed_area() {
        let model: ManifoldModel<f64> = ManifoldModel::sphere_s2(2.0);
        // chart circle of radius r centered at the origin encloses spherical
        // area 4 pi r^2 / (1 + r^2)
        let r = 0.05_f64;
        let area = 4.0 * std::f64::consts::PI * r * r / (1.0 + r * r);
        let loop_path = Path::circle(pt(&[0.0, 0.0]), r, 0, 1, false);
        let v = model.parallel_transport(&loop_path).unwrap().matrix;
        let angle = ((v[(1, 0)] - v[(0, 1)]) / 2.0).atan2((v[(0, 0)] + v[(1, 1)]) / 2.0);
        assert!(
            (angle.abs() - area).abs() / area < 1e-2,
            "angle {angle} vs area {area}"
        );
    }

    #[test]
    fn transport_is_symplectic_on_curved_models() {
        let model: ManifoldModel<f64> = ManifoldModel::hyperbolic_h2(0.9);
        let path = Path::line(pt(&[0.1, 0.0]), pt(&[-0.2, 0.3]));
        let v = model.parallel_transport(&path).unwrap();
        assert!(v.symplectic_residual(&model) < 1e-9);
    }

    #[test]
    fn transport_composes_over_concatenation() {
        let model: ManifoldModel<f64> = ManifoldModel::sphere_s2(2.0);
        let a = pt(&[0.0, 0.0]);
        let b = pt(&[0.3, 0.1]);
        let c = pt(&[0.1, 0.4]);
        let p1 = Path::line(a, b.clone());
        let p2 = Path::line(b, c);
        let whole = p1.then(&p2).unwrap();
        let v1 = model.parallel_transport(&p1).unwrap().matrix;
        let v2 = model.parallel_transport(&p2).unwrap().matrix;
        let v = model.parallel_transport(&whole).unwrap().matrix;
        assert!(linalg::norm_max(&(v - v2 * v1)) < 1e-8);
    }

    #[test]
    fn domain_violation_is_reported() {
        let model: ManifoldModel<f64> = ManifoldModel::sphere_s2(2.0);
        assert!(model.poisson_tensor(&pt(&[3.0, 0.0])).is_err());
    }

    #[test]
    fn by_name_resolves_builtins() {
        assert_eq!(
            ManifoldModel::<f64>::by_name("flat-r4").unwrap().dim(),
            4
        );
        assert!(ManifoldModel::<f64>::by_name("torus").is_err());
    }
}
