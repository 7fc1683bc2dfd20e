//! Diffeomorphisms obtained by integrating the intrinsic field along paths.
//!
//! Full-weight integration gives the translations `g` (independent of the
//! path shape between fixed endpoints, equal to a composition of two
//! reflections); half-weight integration gives the path symplectomorphisms
//! `[sigma]`, which do depend on the path shape, map the path origin to its
//! end, and linearize to parallel transport along the path.

use crate::ether::EtherField;
use crate::manifold::{LinearMap, Point};
use crate::num::Real;
use crate::ode::{self, DenseSolution, OdeOptions};
use crate::path::Path;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// A numerically realized diffeomorphism attached to a path. Evaluation
/// re-integrates per query, so a constructed map is freely shareable.
#[derive(Clone, Debug)]
pub struct PathMap<R: Real> {
    field: EtherField<R>,
    path: Path<R>,
    half: bool,
}

/// Full-weight translation along `path`: the map `g_{end, start}`.
pub fn ether_translation<R: Real>(field: &EtherField<R>, path: &Path<R>) -> PathMap<R> {
    PathMap {
        field: field.clone(),
        path: path.clone(),
        half: false,
    }
}

/// Half-weight map `[sigma]` of the path.
pub fn path_symplectomorphism<R: Real>(field: &EtherField<R>, path: &Path<R>) -> PathMap<R> {
    PathMap {
        field: field.clone(),
        path: path.clone(),
        half: true,
    }
}

impl<R: Real> PathMap<R> {
    pub fn path(&self) -> &Path<R> {
        &self.path
    }

    pub fn field(&self) -> &EtherField<R> {
        &self.field
    }

    pub fn is_half_weight(&self) -> bool {
        self.half
    }

    fn factor(&self) -> R {
        if self.half {
            R::of(0.5)
        } else {
            R::one()
        }
    }

    fn opts(&self) -> OdeOptions<R> {
        *self.field.ode_options()
    }

    /// Image of a point under the map.
    pub fn evaluate(&self, z: &DVector<R>) -> Result<DVector<R>> {
        let fac = self.factor();
        let rhs = |t: R, s: &DVector<R>| {
            let (y, ydot) = self.path.at(t);
            match self.field.flow_matrix(&y, s) {
                Ok(m) => m.transpose() * ydot * fac,
                Err(_) => DVector::from_element(s.len(), R::of(f64::NAN)),
            }
        };
        ode::solve_piecewise(
            rhs,
            R::zero(),
            R::one(),
            self.path.breakpoints(),
            z.clone(),
            &self.opts(),
        )
    }

    /// Preimage of a point (integration along the reversed path).
    pub fn inverse(&self, z: &DVector<R>) -> Result<DVector<R>> {
        PathMap {
            field: self.field.clone(),
            path: self.path.reversed(),
            half: self.half,
        }
        .evaluate(z)
    }

    /// Image and differential, integrated jointly with the tangent system.
    pub fn evaluate_with_differential(&self, z: &DVector<R>) -> Result<(DVector<R>, DMatrix<R>)> {
        let d = z.len();
        let fac = self.factor();
        let rhs = |t: R, state: &DVector<R>| {
            let (y, ydot) = self.path.at(t);
            let (s, j) = ode::unpack(state, d, d, d);
            match self.field.flow_matrix_and_derivative(&y, &s) {
                Ok((flow, dflow)) => {
                    let ds = flow.transpose() * &ydot * fac;
                    // tangent system: dJ^b_c = fac * ydot^k d_a flow[(k, b)] J^a_c
                    let mut a = DMatrix::zeros(d, d);
                    for b in 0..d {
                        for c in 0..d {
                            let mut acc = R::zero();
                            for k in 0..d {
                                acc += ydot[k] * dflow[(c, k, b)];
                            }
                            a[(b, c)] = acc * fac;
                        }
                    }
                    ode::pack(&ds, &(a * j))
                }
                Err(_) => DVector::from_element(d + d * d, R::of(f64::NAN)),
            }
        };
        let state0 = ode::pack(z, &DMatrix::identity(d, d));
        let state = ode::solve_piecewise(
            rhs,
            R::zero(),
            R::one(),
            self.path.breakpoints(),
            state0,
            &self.opts(),
        )?;
        let (s, j) = ode::unpack(&state, d, d, d);
        Ok((s, j))
    }

    /// Differential as a based linear map.
    pub fn differential(&self, z: &DVector<R>) -> Result<LinearMap<R>> {
        let (image, j) = self.evaluate_with_differential(z)?;
        Ok(LinearMap {
            matrix: j,
            source: Point::new(z.clone()),
            target: Point::new(image),
        })
    }

    /// `phi^T omega(phi(z)) phi - omega(z)` in the max norm.
    pub fn symplectic_residual(&self, z: &DVector<R>) -> Result<R> {
        self.differential(z)
            .map(|lm| lm.symplectic_residual(self.field.model()))
    }
}

/// Composition `[sigma2] o [sigma1]` realized on the concatenated path.
/// The maps must share weight and model, and `m1` must end where `m2`
/// starts.
pub fn groupoid_compose<R: Real>(m2: &PathMap<R>, m1: &PathMap<R>) -> Result<PathMap<R>> {
    if m1.half != m2.half {
        return Err(Error::Invalid(
            "cannot compose maps of different weights".into(),
        ));
    }
    if m1.field.model().name() != m2.field.model().name() {
        return Err(Error::Invalid("cannot compose maps across models".into()));
    }
    Ok(PathMap {
        field: m1.field.clone(),
        path: m1.path.then(&m2.path)?,
        half: m1.half,
    })
}

/// Ether exponential: integrates the half-weight field with frozen base
/// point `x` and constant velocity `v` up to time `t`.
pub fn ether_exponential<R: Real>(
    field: &EtherField<R>,
    x: &DVector<R>,
    v: &DVector<R>,
    t: R,
) -> Result<DVector<R>> {
    let rhs = exp_rhs(field, x, v);
    ode::solve(rhs, R::zero(), t, x.clone(), field.ode_options())
}

/// Dense Ether geodesic through `x`: the trajectory of the exponential over
/// `[t0, t1]` with a continuous interpolant.
pub fn ether_exponential_dense<R: Real>(
    field: &EtherField<R>,
    x: &DVector<R>,
    v: &DVector<R>,
    t0: R,
    t1: R,
) -> Result<DenseSolution<R>> {
    let rhs = exp_rhs(field, x, v);
    if t0 == R::zero() {
        ode::solve_dense(rhs, t0, t1, &[], x.clone(), field.ode_options())
    } else {
        let start = ode::solve(&rhs, R::zero(), t0, x.clone(), field.ode_options())?;
        ode::solve_dense(rhs, t0, t1, &[], start, field.ode_options())
    }
}

fn exp_rhs<'a, R: Real>(
    field: &'a EtherField<R>,
    x: &'a DVector<R>,
    v: &'a DVector<R>,
) -> impl Fn(R, &DVector<R>) -> DVector<R> + 'a {
    move |_t: R, e: &DVector<R>| match field.flow_matrix(x, e) {
        Ok(m) => m.transpose() * v * R::of(0.5),
        Err(_) => DVector::from_element(e.len(), R::of(f64::NAN)),
    }
}

/// Residual of the commutation law between a path map and the endpoint
/// reflections: `|| [sigma](s_x(z)) - s_y([sigma](z)) ||`.
pub fn reflection_commutation_residual<R: Real>(
    field: &EtherField<R>,
    path: &Path<R>,
    z: &DVector<R>,
) -> Result<R> {
    let x = path.start();
    let y = path.end();
    let map = path_symplectomorphism(field, path);
    let lhs = map.evaluate(&field.reflect_fast(&x, z)?)?;
    let rhs = field.reflect_fast(&y, &map.evaluate(z)?)?;
    Ok((lhs - rhs).amax())
}
