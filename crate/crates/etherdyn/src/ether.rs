//! The intrinsic Hamiltonian 1-form `H_x(z)` and the reflections it
//! generates.
//!
//! Three construction strategies, picked per model:
//! * flat models get the exact closed form `H_x(z)_k = 2 omega_{kj} (z-x)^j`;
//! * models with closed-form reflections get the line-integral
//!   reconstruction (the reflections determine the field);
//! * anything else gets a truncated covariant jet around the diagonal.
//!
//! In every strategy the diagonal conditions hold: `H_x(x) = 0`, the first
//! `z`-derivative is `2 omega(x)`, the covariant second derivative vanishes.

use crate::fd::{self, FdSteps};
use crate::linalg::{Tensor3, Tensor4};
use crate::manifold::ManifoldModel;
use crate::num::Real;
use crate::ode::{self, OdeOptions};
use crate::path::Path;
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// How the field is constructed.
#[derive(Clone, Debug, PartialEq)]
pub enum EtherStrategy {
    /// Exact closed form; flat models only.
    ClosedForm,
    /// Reconstruction from the model's closed-form reflections by a line
    /// integral (composite Gauss-Legendre with `nodes` per panel).
    LineIntegral { nodes: usize, panels: usize },
    /// Covariant jet of the given order (at most 3) trusted within `radius`
    /// chart units of the diagonal.
    Jet { order: usize, radius: f64 },
}

type ReflectionFn<R> = dyn Fn(&DVector<R>, &DVector<R>) -> DVector<R> + Send + Sync;

#[derive(Clone)]
enum Backend<R: Real> {
    Flat {
        two_omega: DMatrix<R>,
    },
    Line {
        sx: Arc<ReflectionFn<R>>,
        gl: GaussLegendre<R>,
        panels: usize,
    },
    Jet {
        order: usize,
        radius: R,
    },
}

/// The intrinsic Hamiltonian field of a model. Immutable and shareable.
#[derive(Clone)]
pub struct EtherField<R: Real> {
    model: ManifoldModel<R>,
    strategy: EtherStrategy,
    backend: Backend<R>,
    ode: OdeOptions<R>,
}

impl<R: Real> std::fmt::Debug for EtherField<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EtherField")
            .field("model", &self.model.name())
            .field("strategy", &self.strategy)
            .finish()
    }
}

impl<R: Real> EtherField<R> {
    /// Default strategy for a model: exact when flat, line integral when
    /// reflections are available, order-3 jet otherwise.
    pub fn for_model(model: &ManifoldModel<R>) -> Result<Self> {
        let strategy = if model.is_flat() {
            EtherStrategy::ClosedForm
        } else if model.has_closed_reflections() {
            EtherStrategy::LineIntegral {
                nodes: 16,
                panels: 4,
            }
        } else {
            EtherStrategy::Jet {
                order: 3,
                radius: 0.2,
            }
        };
        Self::with_strategy(model.clone(), strategy)
    }

    pub fn with_strategy(model: ManifoldModel<R>, strategy: EtherStrategy) -> Result<Self> {
        let backend = match &strategy {
            EtherStrategy::ClosedForm => {
                if !model.is_flat() {
                    return Err(Error::NotFlat(model.name().to_string()));
                }
                let omega0 = model.omega(&DVector::zeros(model.dim()));
                Backend::Flat {
                    two_omega: omega0 * R::of(2.0),
                }
            }
            EtherStrategy::LineIntegral { nodes, panels } => {
                if !model.has_closed_reflections() {
                    return Err(Error::NoReflections(model.name().to_string()));
                }
                let m = model.clone();
                let sx: Arc<ReflectionFn<R>> = Arc::new(move |x, z| {
                    m.reflection_closed(x, z).expect("model has reflections")
                });
                Backend::Line {
                    sx,
                    gl: GaussLegendre::new(*nodes),
                    panels: *panels,
                }
            }
            EtherStrategy::Jet { order, radius } => {
                if *order > 3 {
                    return Err(Error::JetOrder(*order));
                }
                Backend::Jet {
                    order: *order,
                    radius: R::of(*radius),
                }
            }
        };
        Ok(Self {
            model,
            strategy,
            backend,
            ode: OdeOptions::default(),
        })
    }

    /// Exact flat field (rejects non-flat models).
    pub fn flat(model: ManifoldModel<R>) -> Result<Self> {
        Self::with_strategy(model, EtherStrategy::ClosedForm)
    }

    pub fn model(&self) -> &ManifoldModel<R> {
        &self.model
    }

    pub fn strategy(&self) -> &EtherStrategy {
        &self.strategy
    }

    pub fn ode_options(&self) -> &OdeOptions<R> {
        &self.ode
    }

    pub fn set_ode_options(&mut self, opts: OdeOptions<R>) {
        self.ode = opts;
    }

    /// Components `H_x(z)_k` of the field as a covector in the base slot.
    pub fn eval(&self, x: &DVector<R>, z: &DVector<R>) -> Result<DVector<R>> {
        match &self.backend {
            Backend::Flat { two_omega } => Ok(two_omega * (z - x)),
            Backend::Line { sx, gl, panels } => Ok(line_integral_field(
                &self.model,
                sx.as_ref(),
                &Path::line(x.clone(), z.clone()),
                gl,
                *panels,
            )),
            Backend::Jet { order, radius } => {
                let jet = jet_expand(&self.model, x, *order)?;
                check_jet_radius(x, z, *radius)?;
                Ok(jet.eval(z))
            }
        }
    }

    /// `grad[(k, m)] = d H_x(z)_k / d z^m`.
    pub fn grad_z(&self, x: &DVector<R>, z: &DVector<R>) -> Result<DMatrix<R>> {
        match &self.backend {
            Backend::Flat { two_omega } => Ok(two_omega.clone()),
            Backend::Line { sx, .. } => {
                // The line integrand is an exact form, so the derivative is
                // the integrand itself.
                let w = sx(x, z);
                let p = base_derivative(sx.as_ref(), x, &w);
                let omega = self.model.omega(z);
                Ok(p.transpose() * omega)
            }
            Backend::Jet { order, radius } => {
                let jet = jet_expand(&self.model, x, *order)?;
                check_jet_radius(x, z, *radius)?;
                Ok(jet.grad(z))
            }
        }
    }

    /// The matrix of Hamiltonian vector fields: `flow[(k, b)]` is component
    /// `b` of the vector field generated by `H_x(.)_k` at `z`.
    pub fn flow_matrix(&self, x: &DVector<R>, z: &DVector<R>) -> Result<DMatrix<R>> {
        let grad = self.grad_z(x, z)?;
        let psi = self.model.poisson_tensor(z)?;
        Ok(grad * psi)
    }

    /// Flow matrix together with its `z`-derivative
    /// `dflow[(c, k, b)] = d_c flow[(k, b)]`, used by variational systems.
    pub fn flow_matrix_and_derivative(
        &self,
        x: &DVector<R>,
        z: &DVector<R>,
    ) -> Result<(DMatrix<R>, Tensor3<R>)> {
        let d = self.model.dim();
        let grad = self.grad_z(x, z)?;
        let psi = self.model.poisson_tensor(z)?;
        let flow = &grad * &psi;
        if self.model.is_flat() {
            return Ok((flow, Tensor3::zeros(d)));
        }
        let dpsi = self.model.poisson_tensor_derivative(z)?;
        let dgrad = self.grad_z_derivative(x, z)?;
        let mut out = Tensor3::zeros(d);
        for c in 0..d {
            for k in 0..d {
                for b in 0..d {
                    let mut v = R::zero();
                    for a in 0..d {
                        v += dgrad[(c, k, a)] * psi[(a, b)] + grad[(k, a)] * dpsi[(c, a, b)];
                    }
                    out[(c, k, b)] = v;
                }
            }
        }
        Ok((flow, out))
    }

    /// `dgrad[(c, k, m)] = d_c d_m H_x(z)_k`.
    pub fn grad_z_derivative(&self, x: &DVector<R>, z: &DVector<R>) -> Result<Tensor3<R>> {
        let d = self.model.dim();
        match &self.backend {
            Backend::Flat { .. } => Ok(Tensor3::zeros(d)),
            Backend::Line { sx, .. } => {
                // grad_{km}(z) = P^j_k(s_x(z)) omega_{jm}(z) with
                // P = d s / d x; differentiate both factors in z.
                let w = sx(x, z);
                let p = base_derivative(sx.as_ref(), x, &w);
                let omega = self.model.omega(z);
                let steps = FdSteps::default();
                let ds = fd::jacobian(|zz| sx(x, zz), z, &steps);
                let mixed = mixed_base_derivative(sx.as_ref(), x, &w);
                let domega: Vec<DMatrix<R>> =
                    (0..d).map(|c| fd::partial(|y| self.model.omega(y), z, c, &steps)).collect();
                let mut out = Tensor3::zeros(d);
                for c in 0..d {
                    for k in 0..d {
                        for m in 0..d {
                            let mut v = R::zero();
                            for j in 0..d {
                                let mut dp = R::zero();
                                for r in 0..d {
                                    dp += mixed[(j, k, r)] * ds[(r, c)];
                                }
                                v += dp * omega[(j, m)] + p[(j, k)] * domega[c][(j, m)];
                            }
                            out[(c, k, m)] = v;
                        }
                    }
                }
                Ok(out)
            }
            Backend::Jet { order, radius } => {
                let jet = jet_expand(&self.model, x, *order)?;
                check_jet_radius(x, z, *radius)?;
                Ok(jet.second(z))
            }
        }
    }

    /// Reflection `s_x(z)` by integrating the field along the chart-straight
    /// segment from `z` to `x` (the base point is the time variable).
    pub fn reflect(&self, x: &DVector<R>, z: &DVector<R>) -> Result<DVector<R>> {
        self.reflect_along(&Path::line(z.clone(), x.clone()), z)
    }

    /// Reflection along an arbitrary base-point path from `z` to `x`.
    pub fn reflect_along(&self, base_path: &Path<R>, z: &DVector<R>) -> Result<DVector<R>> {
        let rhs = |t: R, s: &DVector<R>| {
            let (c, cdot) = base_path.at(t);
            match self.flow_matrix(&c, s) {
                Ok(m) => m.transpose() * cdot,
                Err(_) => DVector::from_element(s.len(), R::of(f64::NAN)),
            }
        };
        ode::solve_piecewise(
            rhs,
            R::zero(),
            R::one(),
            base_path.breakpoints(),
            z.clone(),
            &self.ode,
        )
    }

    /// Reflection via the model's closed form when present, otherwise the
    /// integrated one. The two routes agreeing is asserted in the test
    /// suites; this accessor just picks the cheap one.
    pub fn reflect_fast(&self, x: &DVector<R>, z: &DVector<R>) -> Result<DVector<R>> {
        if self.model.has_closed_reflections() {
            self.model.reflection_closed(x, z)
        } else {
            self.reflect(x, z)
        }
    }

    /// Differential of the reflection in `z` (finite differences of the
    /// cheap route).
    pub fn reflection_differential(&self, x: &DVector<R>, z: &DVector<R>) -> Result<DMatrix<R>> {
        let steps = FdSteps::default();
        let mut failed = false;
        let jac = fd::jacobian(
            |zz| match self.reflect_fast(x, zz) {
                Ok(v) => v,
                Err(_) => {
                    failed = true;
                    DVector::zeros(z.len())
                }
            },
            z,
            &steps,
        );
        if failed {
            Err(Error::Invalid("reflection not evaluable near z".into()))
        } else {
            Ok(jac)
        }
    }
}

fn check_jet_radius<R: Real>(x: &DVector<R>, z: &DVector<R>, radius: R) -> Result<()> {
    let dist = (z - x).norm();
    if dist > radius * R::of(1.05) {
        Err(Error::Invalid(format!(
            "jet evaluation {:.3} chart units from the base exceeds the trust radius {:.3}",
            dist.to_double(),
            radius.to_double()
        )))
    } else {
        Ok(())
    }
}

/// `P[(j, k)] = d s_x(w)^j / d x^k` at fixed second argument `w`.
pub(crate) fn base_derivative<R: Real>(
    sx: &(impl Fn(&DVector<R>, &DVector<R>) -> DVector<R> + ?Sized),
    x: &DVector<R>,
    w: &DVector<R>,
) -> DMatrix<R> {
    let steps = FdSteps::default();
    fd::jacobian(|xx| sx(xx, w), x, &steps)
}

/// `M[(j, k, r)] = d^2 s_x(w)^j / d x^k d w^r`, a mixed central stencil with
/// one Richardson level (the accuracy here bounds the variational systems).
pub(crate) fn mixed_base_derivative<R: Real>(
    sx: &(impl Fn(&DVector<R>, &DVector<R>) -> DVector<R> + ?Sized),
    x: &DVector<R>,
    w: &DVector<R>,
) -> Tensor3<R> {
    let d = x.len();
    let cross = |k: usize, r: usize, h: R| -> DVector<R> {
        let mut xp = x.clone();
        xp[k] += h;
        let mut xm = x.clone();
        xm[k] -= h;
        let mut wp = w.clone();
        wp[r] += h;
        let mut wm = w.clone();
        wm[r] -= h;
        (sx(&xp, &wp) - sx(&xp, &wm) - sx(&xm, &wp) + sx(&xm, &wm)) / (R::of(4.0) * h * h)
    };
    let h = R::of(2e-3);
    let mut out = Tensor3::zeros(d);
    for k in 0..d {
        for r in 0..d {
            let c1 = cross(k, r, h);
            let c2 = cross(k, r, h / R::of(2.0));
            let v = (c2 * R::of(4.0) - c1) / R::of(3.0);
            for j in 0..d {
                out[(j, k, r)] = v[j];
            }
        }
    }
    out
}

/// Reconstructs the field from a reflection family by integrating
/// `(d s_x / d x^k)(s_x(z')) omega(z') dz'` along `base_path` (any path from
/// `x` to `z` gives the same answer; that is asserted separately).
pub fn line_integral_field<R: Real>(
    model: &ManifoldModel<R>,
    sx: &(impl Fn(&DVector<R>, &DVector<R>) -> DVector<R> + ?Sized),
    base_path: &Path<R>,
    gl: &GaussLegendre<R>,
    panels: usize,
) -> DVector<R> {
    let d = model.dim();
    let x = base_path.start();
    let integrand = |t: R| -> DVector<R> {
        let (p, pdot) = base_path.at(t);
        let w = sx(&x, &p);
        let pmat = base_derivative(sx, &x, &w);
        let omega = model.omega(&p);
        // value_k = P^j_k omega_{jm} pdot^m
        (pmat.transpose() * omega) * pdot
    };
    // honor path kinks by splitting the quadrature at breakpoints
    let mut total = DVector::zeros(d);
    let mut a = R::zero();
    for &b in base_path
        .breakpoints()
        .iter()
        .chain(std::iter::once(&R::one()))
    {
        if b > a {
            total += gl.integrate_vec(integrand, a, b, panels, d);
            a = b;
        }
    }
    total
}

/// Free-standing reconstruction entry point matching the field method.
pub fn ether_from_reflections<R: Real>(
    model: &ManifoldModel<R>,
    sx: &(impl Fn(&DVector<R>, &DVector<R>) -> DVector<R> + ?Sized),
    base_path: &Path<R>,
    nodes: usize,
    panels: usize,
) -> DVector<R> {
    line_integral_field(model, sx, base_path, &GaussLegendre::new(nodes), panels)
}

/// Connection coefficients recovered from a reflection family:
/// `Gamma^j_{kl}(x) = -1/2 d^2 s_x^j / d z^k d z^l` on the diagonal.
pub fn connection_from_reflections<R: Real>(
    sx: &(impl Fn(&DVector<R>, &DVector<R>) -> DVector<R> + ?Sized),
    x: &DVector<R>,
) -> Tensor3<R> {
    let d = x.len();
    let steps = FdSteps::default();
    let mut out = Tensor3::zeros(d);
    for j in 0..d {
        let hess = fd::hessian(|z| sx(x, z)[j], x, &steps);
        for k in 0..d {
            for l in 0..d {
                out[(j, k, l)] = -hess[(k, l)] / R::of(2.0);
            }
        }
    }
    out
}

/// Covariant Taylor data of the field at a base point.
///
/// The covariant coefficients are the diagonal values: order 0 vanishes,
/// order 1 is `2 omega(x)`, order 2 vanishes, order 3 is determined by the
/// curvature. Evaluation converts them to plain partial-derivative
/// coefficients in the chart.
#[derive(Clone, Debug)]
pub struct JetCoefficients<R: Real> {
    pub base: DVector<R>,
    pub order: usize,
    /// Covariant order-1 coefficient, equals `2 omega(x)`.
    pub cov1: DMatrix<R>,
    /// Covariant order-3 coefficient `T[(k, j, l, s)]` (zero below order 3).
    pub cov3: Tensor4<R>,
    /// Partial-derivative coefficients used for evaluation.
    part2: Tensor3<R>,
    part3: Tensor4<R>,
}

/// Builds the covariant jet of the field at `x` up to `order <= 3`.
pub fn jet_expand<R: Real>(
    model: &ManifoldModel<R>,
    x: &DVector<R>,
    order: usize,
) -> Result<JetCoefficients<R>> {
    if order > 3 {
        return Err(Error::JetOrder(order));
    }
    model.check_in_domain(x)?;
    let d = model.dim();
    let omega = model.omega(x);
    let cov1 = &omega * R::of(2.0);
    let gamma = model.gamma(x);

    // partial order 2 from the vanishing covariant second derivative:
    // D_l D_m H_k = 2 Gamma^a_{lm} omega_{ka}
    let mut part2 = Tensor3::zeros(d);
    if order >= 2 {
        for k in 0..d {
            for l in 0..d {
                for m in 0..d {
                    let mut v = R::zero();
                    for a in 0..d {
                        v += R::of(2.0) * gamma[(a, l, m)] * omega[(k, a)];
                    }
                    part2[(k, l, m)] = v;
                }
            }
        }
    }

    let mut cov3 = Tensor4::zeros(d);
    let mut part3 = Tensor4::zeros(d);
    if order >= 3 {
        let riem = model.curvature_tensor(x)?;
        // covariant third derivative on the diagonal, indexed (k; j, l, s)
        for k in 0..d {
            for j in 0..d {
                for l in 0..d {
                    for s in 0..d {
                        let mut v = R::zero();
                        for m in 0..d {
                            v += R::of(2.0) * omega[(s, m)] * riem[(m, l, k, j)];
                        }
                        cov3[(k, j, l, s)] = v;
                    }
                }
            }
        }
        let steps = FdSteps::default();
        let dgamma: Vec<Tensor3<R>> = (0..d)
            .map(|j| fd::partial(|y| model.gamma(y), x, j, &steps))
            .collect();
        // convert: D^3_{j l s} H_k =
        //   cov3 + (D_j Gamma^a_{ls}) D_a H_k + Gamma^a_{ls} D_j D_a H_k
        //   + Gamma^b_{jl} (D_b D_s H_k - Gamma^a_{bs} D_a H_k)
        //   + Gamma^b_{js} (D_l D_b H_k - Gamma^a_{lb} D_a H_k),
        // then symmetrized over (j, l, s); only the symmetric part feeds the
        // Taylor sum.
        let raw = |k: usize, j: usize, l: usize, s: usize| -> R {
            let mut v = cov3[(k, j, l, s)];
            for a in 0..d {
                v += dgamma[j][(a, l, s)] * cov1[(k, a)];
                v += gamma[(a, l, s)] * part2[(k, j, a)];
            }
            for b in 0..d {
                let mut inner1 = part2[(k, b, s)];
                let mut inner2 = part2[(k, l, b)];
                for a in 0..d {
                    inner1 -= gamma[(a, b, s)] * cov1[(k, a)];
                    inner2 -= gamma[(a, l, b)] * cov1[(k, a)];
                }
                v += gamma[(b, j, l)] * inner1 + gamma[(b, j, s)] * inner2;
            }
            v
        };
        for k in 0..d {
            for j in 0..d {
                for l in 0..d {
                    for s in 0..d {
                        let sym = (raw(k, j, l, s)
                            + raw(k, j, s, l)
                            + raw(k, l, j, s)
                            + raw(k, l, s, j)
                            + raw(k, s, j, l)
                            + raw(k, s, l, j))
                            / R::of(6.0);
                        part3[(k, j, l, s)] = sym;
                    }
                }
            }
        }
    }

    Ok(JetCoefficients {
        base: x.clone(),
        order,
        cov1,
        cov3,
        part2,
        part3,
    })
}

impl<R: Real> JetCoefficients<R> {
    /// Truncated series value at `z`.
    pub fn eval(&self, z: &DVector<R>) -> DVector<R> {
        let d = self.base.len();
        let dz = z - &self.base;
        let mut h = if self.order >= 1 {
            &self.cov1 * &dz
        } else {
            DVector::zeros(d)
        };
        if self.order >= 2 {
            for k in 0..d {
                let mut acc = R::zero();
                for l in 0..d {
                    for m in 0..d {
                        acc += self.part2[(k, l, m)] * dz[l] * dz[m];
                    }
                }
                h[k] += acc / R::of(2.0);
            }
        }
        if self.order >= 3 {
            for k in 0..d {
                let mut acc = R::zero();
                for j in 0..d {
                    for l in 0..d {
                        for s in 0..d {
                            acc += self.part3[(k, j, l, s)] * dz[j] * dz[l] * dz[s];
                        }
                    }
                }
                h[k] += acc / R::of(6.0);
            }
        }
        h
    }

    /// Gradient of the series in `z`: `out[(k, m)] = d H_k / d z^m`.
    pub fn grad(&self, z: &DVector<R>) -> DMatrix<R> {
        let d = self.base.len();
        let dz = z - &self.base;
        let mut g = self.cov1.clone();
        if self.order >= 2 {
            for k in 0..d {
                for m in 0..d {
                    let mut acc = R::zero();
                    for l in 0..d {
                        acc += self.part2[(k, m, l)] * dz[l];
                    }
                    g[(k, m)] += acc;
                }
            }
        }
        if self.order >= 3 {
            for k in 0..d {
                for m in 0..d {
                    let mut acc = R::zero();
                    for l in 0..d {
                        for s in 0..d {
                            acc += self.part3[(k, m, l, s)] * dz[l] * dz[s];
                        }
                    }
                    g[(k, m)] += acc / R::of(2.0);
                }
            }
        }
        g
    }

    /// Second derivative of the series: `out[(c, k, m)] = d_c d_m H_k`.
    pub fn second(&self, z: &DVector<R>) -> Tensor3<R> {
        let d = self.base.len();
        let dz = z - &self.base;
        Tensor3::from_fn(d, |c, k, m| {
            let mut v = if self.order >= 2 {
                self.part2[(k, c, m)]
            } else {
                R::zero()
            };
            if self.order >= 3 {
                for s in 0..d {
                    v += self.part3[(k, c, m, s)] * dz[s];
                }
            }
            v
        })
    }
}

/// Residual of the structure equation `dH + 1/2 {H wedge H} = 0` contracted
/// on a pair of base directions at `(x, z)`.
pub fn zero_curvature_residual<R: Real>(
    field: &EtherField<R>,
    x: &DVector<R>,
    z: &DVector<R>,
    dir1: &DVector<R>,
    dir2: &DVector<R>,
) -> Result<R> {
    let d = field.model().dim();
    let steps = FdSteps::default();
    // base-slot derivatives d_{x^j} H_x(z)_k
    let mut dx = Vec::with_capacity(d);
    for j in 0..d {
        let mut err = None;
        let der = fd::deriv(
            |t| {
                let mut xs = x.clone();
                xs[j] += t;
                match field.eval(&xs, z) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        DVector::zeros(d)
                    }
                }
            },
            R::zero(),
            steps.h1,
            steps.richardson,
        );
        if let Some(e) = err {
            return Err(e);
        }
        dx.push(der);
    }
    let grad = field.grad_z(x, z)?;
    let psi = field.model().poisson_tensor(z)?;
    let bracket = &grad * psi * grad.transpose();
    let mut res = R::zero();
    for j in 0..d {
        for k in 0..d {
            let v = dx[j][k] - dx[k][j] + bracket[(j, k)];
            res += dir1[j] * dir2[k] * v;
        }
    }
    Ok(res.abs())
}
