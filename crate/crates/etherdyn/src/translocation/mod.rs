//! External Hamiltonian systems and their translocation to an anchor point.
//!
//! Conjugating a Hamiltonian flow by the half-weight map of its own
//! trajectory produces a time-dependent system with an equilibrium at the
//! anchor; the flow factorizes through that map, the anchored Hessian is the
//! parallel-transported Hessian, and the first variation splits into a
//! geometric and a dynamic factor.

pub mod phase;

pub use phase::{
    generating_phase, hamilton_jacobi_residual, AuxPath, GeneratingPhase, PhaseOptions,
};

use crate::ether::EtherField;
use crate::fd::{self, FdSteps};
use crate::linalg;
use crate::manifold::{LinearMap, ManifoldModel, Point};
use crate::num::Real;
use crate::ode::{self, DenseSolution, OdeOptions};
use crate::path::Path;
use crate::pathmap::{path_symplectomorphism, PathMap};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

type ScalarField<R> = dyn Fn(&DVector<R>) -> R + Send + Sync;

/// An external Hamiltonian on a model, with its flow.
#[derive(Clone)]
pub struct HamiltonianSystem<R: Real> {
    model: ManifoldModel<R>,
    name: String,
    h: Arc<ScalarField<R>>,
    ode: OdeOptions<R>,
}

impl<R: Real> std::fmt::Debug for HamiltonianSystem<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianSystem")
            .field("model", &self.model.name())
            .field("name", &self.name)
            .finish()
    }
}

impl<R: Real> HamiltonianSystem<R> {
    pub fn new(
        model: ManifoldModel<R>,
        name: impl Into<String>,
        h: impl Fn(&DVector<R>) -> R + Send + Sync + 'static,
    ) -> Self {
        Self {
            model,
            name: name.into(),
            h: Arc::new(h),
            ode: OdeOptions::default(),
        }
    }

    /// Built-in Hamiltonians: `oscillator` and `quartic` on flat models,
    /// `height` on the sphere, `quadratic` on the hyperbolic disk.
    pub fn registry(model: &ManifoldModel<R>, name: &str) -> Result<Self> {
        let m = model.clone();
        match name {
            "oscillator" => Ok(Self::new(m, name, |x| x.norm_squared() / R::of(2.0))),
            "quartic" => Ok(Self::new(m, name, |x| {
                x.iter().fold(R::zero(), |a, &v| a + v * v * v * v) / R::of(4.0)
            })),
            "height" => {
                if model.name() != "sphere-s2" {
                    return Err(Error::Invalid("`height` requires sphere-s2".into()));
                }
                Ok(Self::new(m, name, |u| {
                    let r2 = u.norm_squared();
                    (r2 - R::one()) / (r2 + R::one())
                }))
            }
            "quadratic" => Ok(Self::new(m, name, |x| x.norm_squared() / R::of(2.0))),
            _ => Err(Error::Invalid(format!("unknown Hamiltonian `{name}`"))),
        }
    }

    pub fn model(&self) -> &ManifoldModel<R> {
        &self.model
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ode_options(&self) -> &OdeOptions<R> {
        &self.ode
    }

    pub fn energy(&self, x: &DVector<R>) -> R {
        (self.h)(x)
    }

    pub fn grad(&self, x: &DVector<R>) -> DVector<R> {
        fd::gradient(|y| (self.h)(y), x, &FdSteps::default())
    }

    /// Hamiltonian vector field `X^b = d_a H psi^{ab}`.
    pub fn vector_field(&self, x: &DVector<R>) -> Result<DVector<R>> {
        let psi = self.model.poisson_tensor(x)?;
        Ok(psi.transpose() * self.grad(x))
    }

    fn rhs(&self) -> impl Fn(R, &DVector<R>) -> DVector<R> + '_ {
        move |_t, x| match self.vector_field(x) {
            Ok(v) => v,
            Err(_) => DVector::from_element(x.len(), R::of(f64::NAN)),
        }
    }

    /// Flow map of the system.
    pub fn flow(&self, t: R, x: &DVector<R>) -> Result<DVector<R>> {
        ode::solve(self.rhs(), R::zero(), t, x.clone(), &self.ode)
    }

    /// Dense trajectory over `[0, t]`.
    pub fn trajectory(&self, y: &DVector<R>, t: R) -> Result<DenseSolution<R>> {
        ode::solve_dense(self.rhs(), R::zero(), t, &[], y.clone(), &self.ode)
    }

    /// Differential `dX^t(y)` of the flow, by the joint variational system.
    pub fn flow_differential(&self, t: R, y: &DVector<R>) -> Result<DMatrix<R>> {
        let d = y.len();
        let steps = FdSteps::default();
        let rhs = |_t: R, state: &DVector<R>| {
            let (x, j) = ode::unpack(state, d, d, d);
            let psi = match self.model.poisson_tensor(&x) {
                Ok(p) => p,
                Err(_) => return DVector::from_element(d + d * d, R::of(f64::NAN)),
            };
            let grad = self.grad(&x);
            let hess = fd::hessian(|z| (self.h)(z), &x, &steps);
            let dpsi = match self.model.poisson_tensor_derivative(&x) {
                Ok(p) => p,
                Err(_) => return DVector::from_element(d + d * d, R::of(f64::NAN)),
            };
            // B[(b, c)] = d_c (d_a H psi^{ab})
            let mut b = DMatrix::zeros(d, d);
            for bb in 0..d {
                for c in 0..d {
                    let mut acc = R::zero();
                    for a in 0..d {
                        acc += hess[(c, a)] * psi[(a, bb)] + grad[a] * dpsi[(c, a, bb)];
                    }
                    b[(bb, c)] = acc;
                }
            }
            let xdot = psi.transpose() * grad;
            ode::pack(&xdot, &(b * j))
        };
        let state0 = ode::pack(y, &DMatrix::identity(d, d));
        let state = ode::solve(rhs, R::zero(), t, state0, &self.ode)?;
        Ok(ode::unpack(&state, d, d, d).1)
    }

    /// Covariant Hessian of the Hamiltonian at a point.
    pub fn covariant_hessian(&self, x: &DVector<R>) -> DMatrix<R> {
        let h = self.h.clone();
        self.model.covariant_hessian(&move |y: &DVector<R>| h(y), x)
    }

    /// Energy drift along the flow (exact zero for the true dynamics).
    pub fn energy_drift(&self, t: R, x: &DVector<R>) -> Result<R> {
        let end = self.flow(t, x)?;
        Ok((self.energy(&end) - self.energy(x)).abs())
    }
}

/// Covariant derivative of the covariant Hessian along the Hamiltonian
/// field, maximized over sample points of the trajectory through `y`.
/// A vanishing value means the monodromy has the closed dynamic factor.
pub fn covariant_quadratic_residual<R: Real>(
    system: &HamiltonianSystem<R>,
    y: &DVector<R>,
    t: R,
    samples: usize,
) -> Result<R> {
    let model = system.model().clone();
    let d = model.dim();
    // coarse outer step: the inner Hessians carry round-off that a fine
    // step would amplify
    let steps = FdSteps {
        h1: R::of(1e-2),
        ..FdSteps::default()
    };
    let traj = system.trajectory(y, t)?;
    let mut worst = R::zero();
    for i in 0..=samples {
        let tau = t * R::of(i as f64) / R::of(samples.max(1) as f64);
        let x = traj.eval(tau);
        let u = system.vector_field(&x)?;
        let gamma = model.gamma(&x);
        let s0 = system.covariant_hessian(&x);
        // D_m S by finite differences of the covariant Hessian field
        let ds: Vec<DMatrix<R>> = (0..d)
            .map(|m| fd::partial(|p| system.covariant_hessian(p), &x, m, &steps))
            .collect();
        for j in 0..d {
            for k in 0..d {
                let mut v = R::zero();
                for m in 0..d {
                    v += u[m] * ds[m][(j, k)];
                    for a in 0..d {
                        v -= u[m] * (gamma[(a, m, j)] * s0[(a, k)] + gamma[(a, m, k)] * s0[(j, a)]);
                    }
                }
                if v.abs() > worst {
                    worst = v.abs();
                }
            }
        }
    }
    Ok(worst)
}

/// A Hamiltonian system translocated to an anchor point `y`.
///
/// Holds the dense anchor trajectory so the per-time segment maps do not
/// re-integrate the base flow.
#[derive(Clone, Debug)]
pub struct TranslocatedSystem<R: Real> {
    system: HamiltonianSystem<R>,
    field: EtherField<R>,
    anchor: DVector<R>,
    horizon: R,
    traj: DenseSolution<R>,
}

impl<R: Real> TranslocatedSystem<R> {
    /// Integrates the anchor trajectory up to `horizon` and keeps it.
    pub fn new(
        field: &EtherField<R>,
        system: &HamiltonianSystem<R>,
        y: &DVector<R>,
        horizon: R,
    ) -> Result<Self> {
        let traj = system.trajectory(y, horizon)?;
        Ok(Self {
            system: system.clone(),
            field: field.clone(),
            anchor: y.clone(),
            horizon,
            traj,
        })
    }

    pub fn anchor(&self) -> &DVector<R> {
        &self.anchor
    }

    pub fn system(&self) -> &HamiltonianSystem<R> {
        &self.system
    }

    pub fn field(&self) -> &EtherField<R> {
        &self.field
    }

    pub fn horizon(&self) -> R {
        self.horizon
    }

    /// Anchor trajectory point `X^t(y)`.
    pub fn trajectory_point(&self, t: R) -> DVector<R> {
        self.traj.eval(t)
    }

    /// The trajectory segment `[0, t]` as a unit-parametrized path.
    pub fn segment_path(&self, t: R) -> Path<R> {
        let traj = self.traj.clone();
        let system = self.system.clone();
        let d = self.anchor.len();
        Path::from_fn(
            move |s| {
                let p = traj.eval(s * t);
                let v = match system.vector_field(&p) {
                    Ok(v) => v * t,
                    Err(_) => DVector::from_element(d, R::of(f64::NAN)),
                };
                (p, v)
            },
            vec![],
        )
    }

    /// The half-weight map of the trajectory segment `[0, t]`.
    pub fn segment_map(&self, t: R) -> PathMap<R> {
        path_symplectomorphism(&self.field, &self.segment_path(t))
    }

    /// The translocated Hamiltonian `H^t_y(z)`.
    pub fn hamiltonian(&self, t: R, z: &DVector<R>) -> Result<R> {
        let phi_z = self.segment_map(t).evaluate(z)?;
        self.hamiltonian_at_image(t, &phi_z)
    }

    fn hamiltonian_at_image(&self, t: R, phi_z: &DVector<R>) -> Result<R> {
        let w = self.trajectory_point(t);
        let xdot = self.system.vector_field(&w)?;
        let ether = self.field.eval(&w, phi_z)?;
        Ok(self.system.energy(phi_z) - xdot.dot(&ether) / R::of(2.0)
            - self.system.energy(&self.anchor))
    }

    /// Chart gradient of the translocated Hamiltonian in `z`, using the
    /// differential of the segment map (no outer finite differences).
    pub fn gradient(&self, t: R, z: &DVector<R>) -> Result<DVector<R>> {
        let (phi_z, dphi) = self.segment_map(t).evaluate_with_differential(z)?;
        let w = self.trajectory_point(t);
        let xdot = self.system.vector_field(&w)?;
        let grad_h = self.system.grad(&phi_z);
        let ether_grad = self.field.grad_z(&w, &phi_z)?;
        // covector at the image, pulled back through the map differential
        let cov = grad_h - ether_grad.transpose() * xdot / R::of(2.0);
        Ok(dphi.transpose() * cov)
    }

    /// Flow `Z^t_y` of the translocated (time-dependent) system.
    pub fn flow(&self, t: R, x: &DVector<R>) -> Result<DVector<R>> {
        let d = x.len();
        let rhs = |tau: R, z: &DVector<R>| {
            let grad = match self.gradient(tau, z) {
                Ok(g) => g,
                Err(_) => return DVector::from_element(d, R::of(f64::NAN)),
            };
            match self.system.model().poisson_tensor(z) {
                Ok(psi) => psi.transpose() * grad,
                Err(_) => DVector::from_element(d, R::of(f64::NAN)),
            }
        };
        ode::solve(rhs, R::zero(), t, x.clone(), self.system.ode_options())
    }

    /// Hessian of the translocated Hamiltonian at the anchor, from the
    /// analytic gradient (symmetrized finite differences).
    pub fn hessian_at_anchor(&self, t: R) -> Result<DMatrix<R>> {
        let steps = FdSteps {
            h1: R::of(1e-3),
            ..FdSteps::default()
        };
        let mut err = None;
        let jac = fd::jacobian(
            |z| match self.gradient(t, z) {
                Ok(g) => g,
                Err(e) => {
                    err = Some(e);
                    DVector::zeros(self.anchor.len())
                }
            },
            &self.anchor,
            &steps,
        );
        match err {
            Some(e) => Err(e),
            None => Ok((&jac + jac.transpose()) / R::of(2.0)),
        }
    }

    /// Parallel transport along the trajectory segment `[0, t]`.
    pub fn transport(&self, t: R) -> Result<LinearMap<R>> {
        self.system.model().parallel_transport(&self.segment_path(t))
    }
}

/// Residual of the flow factorization: the original flow against the
/// segment map applied after the translocated flow.
pub fn factorization_residual<R: Real>(
    ts: &TranslocatedSystem<R>,
    t: R,
    x: &DVector<R>,
) -> Result<R> {
    let direct = ts.system().flow(t, x)?;
    let via = ts.segment_map(t).evaluate(&ts.flow(t, x)?)?;
    Ok((direct - via).amax())
}

/// Residual of the anchored-Hessian identity: the Hessian of the
/// translocated Hamiltonian against the transported covariant Hessian.
pub fn hessian_residual<R: Real>(ts: &TranslocatedSystem<R>, t: R) -> Result<R> {
    let lhs = ts.hessian_at_anchor(t)?;
    let v = ts.transport(t)?.matrix;
    let end = ts.trajectory_point(t);
    let rhs = v.transpose() * ts.system().covariant_hessian(&end) * &v;
    Ok(linalg::norm_max(&(lhs - rhs)))
}

/// Split of the flow differential at the anchor into a geometric factor
/// (parallel transport) and a dynamic factor.
#[derive(Clone, Debug)]
pub struct MonodromyFactorization<R: Real> {
    /// Parallel transport along the trajectory segment.
    pub geometric: LinearMap<R>,
    /// Solution of the linear anchored system on the tangent space.
    pub dynamic: DMatrix<R>,
    /// Differential of the flow at the anchor, from the variational system.
    pub differential: DMatrix<R>,
}

impl<R: Real> MonodromyFactorization<R> {
    /// `|| dX^t(y) - V W ||`.
    pub fn residual(&self) -> R {
        linalg::norm_max(&(&self.differential - &self.geometric.matrix * &self.dynamic))
    }
}

/// Computes the first-variation factorization at the anchor for time `t`.
pub fn first_variation<R: Real>(
    ts: &TranslocatedSystem<R>,
    t: R,
) -> Result<MonodromyFactorization<R>> {
    let model = ts.system().model().clone();
    let d = model.dim();
    let y = ts.anchor().clone();
    let psi_y = model.poisson_tensor(&y)?;
    let path = ts.segment_path(t);
    // joint system for V (transport) and W (anchored linear system)
    let rhs = |s: R, state: &DVector<R>| {
        let (p, pdot) = path.at(s);
        let v = DMatrix::from_iterator(d, d, state.iter().take(d * d).copied());
        let w = DMatrix::from_iterator(d, d, state.iter().skip(d * d).copied());
        let gamma = model.gamma(&p);
        let mut dv = DMatrix::zeros(d, d);
        for k in 0..d {
            for mcol in 0..d {
                let mut acc = R::zero();
                for j in 0..d {
                    for l in 0..d {
                        acc -= pdot[j] * gamma[(k, j, l)] * v[(l, mcol)];
                    }
                }
                dv[(k, mcol)] = acc;
            }
        }
        let hess = ts.system().covariant_hessian(&p);
        let m = -&psi_y * v.transpose() * hess * &v * t;
        let dw = m * &w;
        let mut out = DVector::zeros(2 * d * d);
        for (i, val) in dv.iter().chain(dw.iter()).enumerate() {
            out[i] = *val;
        }
        out
    };
    let mut state0 = DVector::zeros(2 * d * d);
    for (i, val) in DMatrix::<R>::identity(d, d)
        .iter()
        .chain(DMatrix::<R>::identity(d, d).iter())
        .enumerate()
    {
        state0[i] = *val;
    }
    let state = ode::solve(rhs, R::zero(), R::one(), state0, ts.system().ode_options())?;
    let v = DMatrix::from_iterator(d, d, state.iter().take(d * d).copied());
    let w = DMatrix::from_iterator(d, d, state.iter().skip(d * d).copied());
    let differential = ts.system().flow_differential(t, &y)?;
    Ok(MonodromyFactorization {
        geometric: LinearMap {
            matrix: v,
            source: Point::new(y.clone()),
            target: Point::new(ts.trajectory_point(t)),
        },
        dynamic: w,
        differential,
    })
}

/// The closed dynamic factor available for covariantly quadratic systems:
/// `V exp(-t psi(y) hess H(y))`, to be compared with the flow differential.
pub fn quadratic_monodromy_closed_form<R: Real>(
    ts: &TranslocatedSystem<R>,
    t: R,
) -> Result<DMatrix<R>> {
    let y = ts.anchor().clone();
    let psi_y = ts.system().model().poisson_tensor(&y)?;
    let hess = ts.system().covariant_hessian(&y);
    let v = ts.transport(t)?.matrix;
    let gen = -psi_y * hess * t;
    Ok(v * linalg::expm(&gen))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ether::EtherField;

    fn pt(coords: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(coords)
    }

    fn flat_oscillator() -> (EtherField<f64>, HamiltonianSystem<f64>) {
        let model = ManifoldModel::flat_r2n(1);
        let field = EtherField::flat(model.clone()).unwrap();
        let system = HamiltonianSystem::registry(&model, "oscillator").unwrap();
        (field, system)
    }

    fn sphere_height() -> (EtherField<f64>, HamiltonianSystem<f64>) {
        let model = ManifoldModel::sphere_s2(2.0);
        let field = EtherField::for_model(&model).unwrap();
        let system = HamiltonianSystem::registry(&model, "height").unwrap();
        (field, system)
    }

    #[test]
    fn oscillator_flow_rotates_clockwise() {
        let (_, system) = flat_oscillator();
        let out = system
            .flow(std::f64::consts::FRAC_PI_2, &pt(&[1.0, 0.0]))
            .unwrap();
        assert!((out - pt(&[0.0, -1.0])).amax() < 1e-9);
        let fixed = system.flow(0.0, &pt(&[0.3, 0.4])).unwrap();
        assert!((fixed - pt(&[0.3, 0.4])).amax() < 1e-14);
    }

    #[test]
    fn height_flow_is_a_chart_rotation_with_period_two_pi() {
        let (_, system) = sphere_height();
        let x = pt(&[0.3, 0.1]);
        let out = system.flow(2.0 * std::f64::consts::PI, &x).unwrap();
        assert!((out - &x).amax() < 1e-8);
        // energy is conserved along the way
        assert!(system.energy_drift(1.7, &x).unwrap() < 1e-9);
    }

    #[test]
    fn flat_oscillator_translocation_is_half_square_distance() {
        let (field, system) = flat_oscillator();
        let y = pt(&[1.0, 0.0]);
        let ts = TranslocatedSystem::new(&field, &system, &y, 1.5).unwrap();
        for t in [0.0_f64, 0.4, 1.2] {
            for z in [pt(&[0.3, -0.2]), pt(&[1.4, 0.7])] {
                let got = ts.hamiltonian(t, &z).unwrap();
                let expect = 0.5 * (&z - &y).norm_squared();
                assert!(
                    (got - expect).abs() < 1e-9,
                    "translocated value {got} vs {expect} at t={t}"
                );
            }
        }
    }

    #[test]
    fn anchor_is_stationary() {
        let (field, system) = sphere_height();
        let y = pt(&[0.25, -0.1]);
        let ts = TranslocatedSystem::new(&field, &system, &y, 0.9).unwrap();
        for t in [0.3_f64, 0.9] {
            assert!(ts.hamiltonian(t, &y).unwrap().abs() < 1e-7);
            assert!(ts.gradient(t, &y).unwrap().amax() < 1e-7);
            // the translocated flow keeps the anchor fixed
            assert!((ts.flow(t, &y).unwrap() - &y).amax() < 1e-8);
        }
    }

    #[test]
    fn flow_factorizes_through_segment_map_flat() {
        let (field, system) = flat_oscillator();
        let y = pt(&[1.0, 0.0]);
        let ts = TranslocatedSystem::new(&field, &system, &y, 1.0).unwrap();
        for x in [pt(&[0.8, 0.3]), pt(&[1.2, -0.4])] {
            let r = factorization_residual(&ts, 1.0, &x).unwrap();
            assert!(r < 1e-7, "factorization residual {r}");
        }
    }

    #[test]
    fn flow_factorizes_through_segment_map_sphere() {
        let (field, system) = sphere_height();
        let y = pt(&[0.3, 0.0]);
        let ts = TranslocatedSystem::new(&field, &system, &y, 0.5).unwrap();
        let x = pt(&[0.25, 0.1]);
        let r = factorization_residual(&ts, 0.5, &x).unwrap();
        assert!(r < 1e-6, "factorization residual {r}");
    }

    #[test]
    fn hessian_identity_flat_and_sphere() {
        let (field, system) = flat_oscillator();
        let y = pt(&[1.0, 0.0]);
        let ts = TranslocatedSystem::new(&field, &system, &y, 1.0).unwrap();
        assert!(hessian_residual(&ts, 1.0).unwrap() < 1e-6);
        // t = 0 reduces to the covariant Hessian at the anchor
        assert!(hessian_residual(&ts, 0.0).unwrap() < 1e-6);

        let (field, system) = sphere_height();
        let y = pt(&[0.3, 0.0]);
        let ts = TranslocatedSystem::new(&field, &system, &y, 0.4).unwrap();
        let r = hessian_residual(&ts, 0.4).unwrap();
        assert!(r < 1e-4, "sphere hessian residual {r}");
    }

    #[test]
    fn first_variation_factorizes() {
        let (field, system) = flat_oscillator();
        let y = pt(&[1.0, 0.0]);
        let ts = TranslocatedSystem::new(&field, &system, &y, 2.0 * std::f64::consts::PI).unwrap();
        let fact = first_variation(&ts, 2.0 * std::f64::consts::PI).unwrap();
        // over one oscillator period everything returns to the identity
        let id = DMatrix::identity(2, 2);
        assert!(linalg::norm_max(&(fact.geometric.matrix.clone() - &id)) < 1e-9);
        assert!(linalg::norm_max(&(fact.dynamic.clone() - &id)) < 1e-7);
        assert!(fact.residual() < 1e-7);

        let (field, system) = sphere_height();
        let y = pt(&[0.3, 0.0]);
        let t = 2.0 * std::f64::consts::PI;
        let ts = TranslocatedSystem::new(&field, &system, &y, t).unwrap();
        let fact = first_variation(&ts, t).unwrap();
        assert!(fact.residual() < 1e-5, "monodromy residual {}", fact.residual());
    }

    #[test]
    fn covariant_quadratic_residual_discriminates() {
        let model = ManifoldModel::flat_r2n(1);
        let quad = HamiltonianSystem::registry(&model, "oscillator").unwrap();
        let y = pt(&[1.0, 0.0]);
        assert!(covariant_quadratic_residual(&quad, &y, 1.0, 4).unwrap() < 1e-6);
        // a one-variable cubic conserves its own variable, so both
        // coordinates must enter for the check to discriminate
        let cubic = HamiltonianSystem::new(model.clone(), "cubic", |x| {
            x[0] * x[0] * x[0] + x[1] * x[1] * x[1]
        });
        let r = covariant_quadratic_residual(&cubic, &pt(&[1.0, 0.5]), 0.3, 4).unwrap();
        assert!(r > 0.1, "cubic residual {r} should be visible");
        // the sphere height Hamiltonian is covariantly quadratic
        let sphere = ManifoldModel::sphere_s2(2.0);
        let height = HamiltonianSystem::registry(&sphere, "height").unwrap();
        let r = covariant_quadratic_residual(&height, &pt(&[0.3, 0.0]), 0.8, 4).unwrap();
        assert!(r < 1e-6, "height residual {r}");
    }

    #[test]
    fn quadratic_monodromy_closed_form_matches() {
        let (field, system) = flat_oscillator();
        let y = pt(&[1.0, 0.0]);
        let ts = TranslocatedSystem::new(&field, &system, &y, 1.3).unwrap();
        let closed = quadratic_monodromy_closed_form(&ts, 1.3).unwrap();
        let differential = system.flow_differential(1.3, &y).unwrap();
        assert!(linalg::norm_max(&(closed - differential)) < 1e-7);

        let (field, system) = sphere_height();
        let y = pt(&[0.3, 0.0]);
        let ts = TranslocatedSystem::new(&field, &system, &y, 0.9).unwrap();
        let closed = quadratic_monodromy_closed_form(&ts, 0.9).unwrap();
        let differential = system.flow_differential(0.9, &y).unwrap();
        assert!(
            linalg::norm_max(&(closed - differential)) < 1e-6,
            "closed-form monodromy mismatch"
        );
    }

    #[test]
    fn frozen_snapshot_conserves_its_own_energy() {
        let (field, system) = sphere_height();
        let y = pt(&[0.25, 0.05]);
        let ts = TranslocatedSystem::new(&field, &system, &y, 0.6).unwrap();
        let t_frozen = 0.6;
        let frozen = HamiltonianSystem::new(system.model().clone(), "frozen", {
            let ts = ts.clone();
            move |z: &DVector<f64>| ts.hamiltonian(t_frozen, z).unwrap_or(f64::NAN)
        });
        let x0 = pt(&[0.2, -0.05]);
        let e0 = frozen.energy(&x0);
        let x1 = frozen.flow(0.2, &x0).unwrap();
        assert!((frozen.energy(&x1) - e0).abs() < 1e-7);
    }
}
