//! Holonomy of loops: the loop maps themselves (dynamic), their
//! linearizations at the basepoint (kinematic), and the curvature functions
//! generating the loop-map Lie algebra.

use crate::ether::EtherField;
use crate::fd::{self, FdSteps};
use crate::linalg::{self, Tensor4};
use crate::manifold::LinearMap;
use crate::num::Real;
use crate::path::Path;
use crate::pathmap::{groupoid_compose, path_symplectomorphism, PathMap};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// A closed path with its signed coordinate-plane areas.
///
/// `areas[(j, k)]` is the area enclosed by the projection onto the `(j, k)`
/// chart plane, signed with the `dx^k wedge dx^j` orientation.
#[derive(Clone, Debug)]
pub struct Loop<R: Real> {
    path: Path<R>,
    areas: DMatrix<R>,
}

impl<R: Real> Loop<R> {
    pub fn new(path: Path<R>) -> Result<Self> {
        let gap = (path.end() - path.start()).amax();
        if gap > R::of(1e-12) {
            return Err(Error::EndpointMismatch {
                gap: gap.to_double(),
            });
        }
        let areas = coordinate_areas(&path);
        Ok(Self { path, areas })
    }

    /// Smoothed square loop with one corner at `base`, enclosing area `eps`
    /// in the `(j, k)` plane: `areas[(j, k)] = +eps`.
    pub fn square(base: DVector<R>, eps: R, j: usize, k: usize) -> Result<Self> {
        Self::new(Path::square_loop(base, eps.sqrt(), j, k))
    }

    /// Circle loop through `center + r e_j`.
    pub fn circle(center: DVector<R>, r: R, j: usize, k: usize, ccw: bool) -> Result<Self> {
        Self::new(Path::circle(center, r, j, k, ccw))
    }

    pub fn path(&self) -> &Path<R> {
        &self.path
    }

    pub fn basepoint(&self) -> DVector<R> {
        self.path.start()
    }

    pub fn areas(&self) -> &DMatrix<R> {
        &self.areas
    }
}

/// Signed projection areas `1/2 closed-integral (y^k dy^j - y^j dy^k)`.
fn coordinate_areas<R: Real>(path: &Path<R>) -> DMatrix<R> {
    let d = path.start().len();
    let gl = GaussLegendre::new(16);
    let mut areas = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in (j + 1)..d {
            let integrand = |t: R| {
                let (y, v) = path.at(t);
                (y[k] * v[j] - y[j] * v[k]) / R::of(2.0)
            };
            let mut total = R::zero();
            let mut a = R::zero();
            for &b in path.breakpoints().iter().chain(std::iter::once(&R::one())) {
                if b > a {
                    total += gl.integrate(integrand, a, b, 4);
                    a = b;
                }
            }
            areas[(j, k)] = total;
            areas[(k, j)] = -total;
        }
    }
    areas
}

/// The loop map `[sigma]` of a closed path.
pub fn dynamic_holonomy<R: Real>(field: &EtherField<R>, lp: &Loop<R>) -> PathMap<R> {
    path_symplectomorphism(field, lp.path())
}

/// Linearization of the loop map at the basepoint.
pub fn kinematic_holonomy<R: Real>(field: &EtherField<R>, lp: &Loop<R>) -> Result<LinearMap<R>> {
    dynamic_holonomy(field, lp).differential(&lp.basepoint())
}

/// Rotation angle of a 2x2 near-rotation matrix.
pub fn rotation_angle<R: Real>(m: &DMatrix<R>) -> R {
    let s = (m[(1, 0)] - m[(0, 1)]) / R::of(2.0);
    let c = (m[(0, 0)] + m[(1, 1)]) / R::of(2.0);
    s.atan2(c)
}

/// The family of curvature functions of a marked basepoint: for each index
/// pair, a quarter of the bracket of the field components. These Hamiltonians
/// generate the Lie algebra of the loop maps based there.
#[derive(Clone, Debug)]
pub struct CurvatureFunctions<R: Real> {
    field: EtherField<R>,
    basepoint: DVector<R>,
}

impl<R: Real> CurvatureFunctions<R> {
    pub fn new(field: &EtherField<R>, basepoint: DVector<R>) -> Self {
        Self {
            field: field.clone(),
            basepoint,
        }
    }

    pub fn basepoint(&self) -> &DVector<R> {
        &self.basepoint
    }

    pub fn eval(&self, j: usize, k: usize, z: &DVector<R>) -> Result<R> {
        ether_curvature(&self.field, &self.basepoint, j, k, z)
    }

    pub fn gradient(&self, j: usize, k: usize, z: &DVector<R>) -> Result<DVector<R>> {
        ether_curvature_gradient(&self.field, &self.basepoint, j, k, z)
    }

    /// Hamiltonian vector field of the `(j, k)` function.
    pub fn vector_field(&self, j: usize, k: usize, z: &DVector<R>) -> Result<DVector<R>> {
        curvature_vector_field(&self.field, &self.basepoint, j, k, z)
    }

    /// Residuals of the basepoint identities.
    pub fn diagonal_checks(&self) -> Result<DiagonalCurvatureReport<R>> {
        diagonal_curvature_checks(&self.field, &self.basepoint)
    }
}

/// Curvature function `R_{jk}(z)`: a quarter of the bracket of the field
/// components based at `basepoint`, evaluated at `z`.
pub fn ether_curvature<R: Real>(
    field: &EtherField<R>,
    basepoint: &DVector<R>,
    j: usize,
    k: usize,
    z: &DVector<R>,
) -> Result<R> {
    let grad = field.grad_z(basepoint, z)?;
    let psi = field.model().poisson_tensor(z)?;
    let d = grad.ncols();
    let mut v = R::zero();
    for a in 0..d {
        for b in 0..d {
            v += grad[(k, a)] * psi[(a, b)] * grad[(j, b)];
        }
    }
    Ok(v / R::of(4.0))
}

/// Chart gradient of the curvature function in `z`.
pub fn ether_curvature_gradient<R: Real>(
    field: &EtherField<R>,
    basepoint: &DVector<R>,
    j: usize,
    k: usize,
    z: &DVector<R>,
) -> Result<DVector<R>> {
    let steps = FdSteps::default();
    let mut err = None;
    let g = fd::gradient(
        |zz| match ether_curvature(field, basepoint, j, k, zz) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                R::zero()
            }
        },
        z,
        &steps,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(g),
    }
}

/// Hamiltonian vector field of the curvature function at `z`.
pub fn curvature_vector_field<R: Real>(
    field: &EtherField<R>,
    basepoint: &DVector<R>,
    j: usize,
    k: usize,
    z: &DVector<R>,
) -> Result<DVector<R>> {
    let g = ether_curvature_gradient(field, basepoint, j, k, z)?;
    let psi = field.model().poisson_tensor(z)?;
    Ok(psi.transpose() * g)
}

/// Data of a first-order small-loop comparison.
#[derive(Clone, Debug)]
pub struct SlopeReport<R> {
    pub eps: Vec<R>,
    pub residuals: Vec<R>,
    pub slope: R,
}

/// Least-squares slope of `ln(residual)` against `ln(eps)`.
pub fn fit_log_slope<R: Real>(eps: &[R], residuals: &[R]) -> Result<R> {
    if eps.len() < 2 {
        return Err(Error::Invalid("need at least two sweep points".into()));
    }
    let pts: Vec<(R, R)> = eps
        .iter()
        .zip(residuals)
        .map(|(&e, &r)| (e.ln(), r.max(R::of(1e-300)).ln()))
        .collect();
    let n = R::of(pts.len() as f64);
    let sx = pts.iter().fold(R::zero(), |a, p| a + p.0);
    let sy = pts.iter().fold(R::zero(), |a, p| a + p.1);
    let sxx = pts.iter().fold(R::zero(), |a, p| a + p.0 * p.0);
    let sxy = pts.iter().fold(R::zero(), |a, p| a + p.0 * p.1);
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Shrinks plane loops of area `eps` around `basepoint`, comparing the
/// inverse loop map with the first-order curvature displacement at a test
/// point `z`. The defect must vanish faster than `eps`.
pub fn small_loop_expansion_check<R: Real>(
    field: &EtherField<R>,
    basepoint: &DVector<R>,
    j: usize,
    k: usize,
    eps_list: &[R],
    z: &DVector<R>,
) -> Result<SlopeReport<R>> {
    let xfield = curvature_vector_field(field, basepoint, j, k, z)?;
    let mut residuals = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let lp = Loop::square(basepoint.clone(), eps, j, k)?;
        let inv = dynamic_holonomy(field, &lp).inverse(z)?;
        let predicted = z + &xfield * eps;
        residuals.push((inv - predicted).amax());
    }
    // the sweep should decrease with eps; refuse to fit noise
    let mut sorted: Vec<(R, R)> = eps_list.iter().copied().zip(residuals.clone()).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for w in sorted.windows(2) {
        if w[0].1 > w[1].1 * R::of(1.2) {
            return Err(Error::SlopeFit);
        }
    }
    let slope = fit_log_slope(eps_list, &residuals)?;
    Ok(SlopeReport {
        eps: eps_list.to_vec(),
        residuals,
        slope,
    })
}

/// Residuals of the diagonal identities of the curvature functions at a
/// basepoint: value against the symplectic form, vanishing gradient, the
/// Hessian against the curvature tensor, and membership of the curvature
/// matrices in the symplectic Lie algebra.
#[derive(Clone, Debug)]
pub struct DiagonalCurvatureReport<R> {
    pub value_residual: R,
    pub gradient_residual: R,
    pub hessian_residual: R,
    pub sp_residual: R,
}

pub fn diagonal_curvature_checks<R: Real>(
    field: &EtherField<R>,
    basepoint: &DVector<R>,
) -> Result<DiagonalCurvatureReport<R>> {
    let model = field.model().clone();
    let d = model.dim();
    let omega = model.omega(basepoint);
    let riem: Tensor4<R> = model.curvature_tensor(basepoint)?;

    let mut value_residual = R::zero();
    let mut gradient_residual = R::zero();
    let mut hessian_residual = R::zero();
    let mut sp_residual = R::zero();

    for j in 0..d {
        for k in (j + 1)..d {
            let r0 = ether_curvature(field, basepoint, j, k, basepoint)?;
            value_residual = value_residual.max((r0 - omega[(j, k)]).abs());

            let grad = ether_curvature_gradient(field, basepoint, j, k, basepoint)?;
            gradient_residual = gradient_residual.max(grad.amax());

            // Covariant Hessian of R_{jk} against the curvature coupling
            // omega_{ls} R^s_{mjk}. On both constant-curvature models the
            // Hessian equals omega * R exactly (closed form: on the unit
            // sphere R_{12}(z) = 4 (1 - r^2) / (1 + r^2), Hessian -16 I =
            // omega * R at the center), so that is the coupling asserted.
            let rfun = |zz: &DVector<R>| {
                ether_curvature(field, basepoint, j, k, zz).unwrap_or_else(|_| R::of(f64::NAN))
            };
            let hess = model.covariant_hessian(&rfun, basepoint);
            for l in 0..d {
                for m in 0..d {
                    let mut expect = R::zero();
                    for s in 0..d {
                        expect += omega[(l, s)] * riem[(s, m, j, k)];
                    }
                    hessian_residual = hessian_residual.max((hess[(l, m)] - expect).abs());
                }
            }

            // omega * R_{jk} must be symmetric (sp membership)
            let rmat = DMatrix::from_fn(d, d, |s, m| riem[(s, m, j, k)]);
            let om_r = &omega * rmat;
            sp_residual = sp_residual.max(linalg::norm_max(&(om_r.transpose() - om_r)));
        }
    }

    Ok(DiagonalCurvatureReport {
        value_residual,
        gradient_residual,
        hessian_residual,
        sp_residual,
    })
}

/// Conjugacy of holonomy at different basepoints: for a loop `lam` at the
/// start of `sigma`, compares `[lam]` with
/// `[sigma]^{-1} o [sigma lam sigma^{-1}] o [sigma]` at `z`.
pub fn holonomy_conjugacy_residual<R: Real>(
    field: &EtherField<R>,
    lam: &Loop<R>,
    sigma: &Path<R>,
    z: &DVector<R>,
) -> Result<R> {
    let gap = (lam.basepoint() - sigma.start()).amax();
    if gap > R::of(1e-9) {
        return Err(Error::EndpointMismatch {
            gap: gap.to_double(),
        });
    }
    let lam_map = dynamic_holonomy(field, lam);
    let conj_path = sigma
        .reversed()
        .then(lam.path())
        .and_then(|p| p.then(sigma))?;
    let lam_conj = path_symplectomorphism(field, &conj_path);
    let sigma_map = path_symplectomorphism(field, sigma);
    let lhs = lam_map.evaluate(z)?;
    let rhs = sigma_map.inverse(&lam_conj.evaluate(&sigma_map.evaluate(z)?)?)?;
    Ok((lhs - rhs).amax())
}

/// Convenience: loop maps composed via the groupoid law (`lp` traversed
/// `times` in a row).
pub fn iterated_loop_map<R: Real>(
    field: &EtherField<R>,
    lp: &Loop<R>,
    times: usize,
) -> Result<PathMap<R>> {
    let single = dynamic_holonomy(field, lp);
    let mut acc = single.clone();
    for _ in 1..times {
        acc = groupoid_compose(&single, &acc)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ether::EtherField;
    use crate::manifold::ManifoldModel;

    fn pt(coords: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(coords)
    }

    fn sphere_field() -> EtherField<f64> {
        EtherField::for_model(&ManifoldModel::sphere_s2(2.0)).unwrap()
    }

    fn flat_field() -> EtherField<f64> {
        EtherField::flat(ManifoldModel::flat_r2n(1)).unwrap()
    }

    #[test]
    fn square_loop_area_has_the_declared_sign() {
        let lp: Loop<f64> = Loop::square(pt(&[0.0, 0.0]), 0.04, 0, 1).unwrap();
        assert!((lp.areas()[(0, 1)] - 0.04).abs() < 1e-10);
        assert!((lp.areas()[(1, 0)] + 0.04).abs() < 1e-10);
    }

    #[test]
    fn flat_loop_map_is_identity() {
        let field = flat_field();
        let lp = Loop::circle(pt(&[0.2, 0.1]), 0.3, 0, 1, true).unwrap();
        let m = dynamic_holonomy(&field, &lp);
        for z in [pt(&[0.0, 0.0]), pt(&[1.0, -0.5])] {
            assert!((m.evaluate(&z).unwrap() - &z).amax() < 1e-9);
        }
    }

    #[test]
    fn sphere_loop_fixes_basepoint_but_moves_others() {
        let field = sphere_field();
        let lp = Loop::circle(pt(&[0.0, 0.0]), 0.25, 0, 1, true).unwrap();
        let m = dynamic_holonomy(&field, &lp);
        let base = lp.basepoint();
        assert!((m.evaluate(&base).unwrap() - &base).amax() < 1e-7);
        let z = pt(&[-0.1, 0.15]);
        assert!(
            (m.evaluate(&z).unwrap() - &z).amax() > 1e-4,
            "holonomy map is unexpectedly trivial"
        );
    }

    #[test]
    fn kinematic_holonomy_matches_transport_and_gauss_bonnet() {
        let field = sphere_field();
        let model = field.model().clone();
        let r = 0.0896_f64;
        let area = 4.0 * std::f64::consts::PI * r * r / (1.0 + r * r);
        let lp = Loop::circle(pt(&[0.0, 0.0]), r, 0, 1, true).unwrap();
        let dhol = kinematic_holonomy(&field, &lp).unwrap().matrix;
        let v = model.parallel_transport(lp.path()).unwrap().matrix;
        assert!(linalg::norm_max(&(dhol.clone() - v)) < 1e-5);
        let angle = rotation_angle(&dhol).abs();
        assert!(
            (angle - area).abs() / area < 0.01,
            "holonomy angle {angle} vs enclosed area {area}"
        );
    }

    #[test]
    fn double_traversal_squares_the_holonomy() {
        let field = sphere_field();
        let lp = Loop::circle(pt(&[0.0, 0.0]), 0.2, 0, 1, true).unwrap();
        let single = kinematic_holonomy(&field, &lp).unwrap().matrix;
        let twice = iterated_loop_map(&field, &lp, 2)
            .unwrap()
            .differential(&lp.basepoint())
            .unwrap()
            .matrix;
        assert!(linalg::norm_max(&(twice - &single * &single)) < 1e-6);
    }

    #[test]
    fn flat_curvature_function_is_the_constant_form() {
        let field = flat_field();
        let zero = pt(&[0.0, 0.0]);
        for z in [pt(&[0.0, 0.0]), pt(&[0.7, -0.4]), pt(&[-1.0, 0.3])] {
            let r12 = ether_curvature(&field, &zero, 0, 1, &z).unwrap();
            assert!((r12 - 1.0).abs() < 1e-12);
            let r11 = ether_curvature(&field, &zero, 0, 0, &z).unwrap();
            assert!(r11.abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_identities_flat() {
        let field = flat_field();
        let rep = diagonal_curvature_checks(&field, &pt(&[0.3, 0.1])).unwrap();
        assert!(rep.value_residual < 1e-9);
        assert!(rep.gradient_residual < 1e-9);
        assert!(rep.hessian_residual < 1e-9);
        assert!(rep.sp_residual < 1e-12);
    }

    #[test]
    fn diagonal_identities_sphere_center() {
        let field = sphere_field();
        let rep = diagonal_curvature_checks(&field, &pt(&[0.0, 0.0])).unwrap();
        assert!(rep.value_residual < 1e-8, "value {}", rep.value_residual);
        assert!(rep.gradient_residual < 1e-5, "grad {}", rep.gradient_residual);
        assert!(rep.hessian_residual < 1e-3, "hess {}", rep.hessian_residual);
        assert!(rep.sp_residual < 1e-10, "sp {}", rep.sp_residual);
    }

    #[test]
    fn small_loop_expansion_flat_is_exact() {
        let field = flat_field();
        let zero = pt(&[0.0, 0.0]);
        let z = pt(&[0.4, 0.2]);
        for eps in [0.04_f64, 0.01] {
            let lp = Loop::square(zero.clone(), eps, 0, 1).unwrap();
            let inv = dynamic_holonomy(&field, &lp).inverse(&z).unwrap();
            // the curvature field vanishes on the flat plane
            assert!((inv - &z).amax() < 1e-9);
        }
    }

    #[test]
    fn small_loop_expansion_slope_on_sphere() {
        let field = sphere_field();
        let basepoint = pt(&[0.0, 0.0]);
        let z = pt(&[0.15, 0.1]);
        let eps: Vec<f64> = vec![0.04, 0.02, 0.01, 0.005];
        let rep = small_loop_expansion_check(&field, &basepoint, 0, 1, &eps, &z).unwrap();
        assert!(
            rep.slope >= 1.5,
            "slope {} residuals {:?}",
            rep.slope,
            rep.residuals
        );
    }

    #[test]
    fn zero_area_loop_is_the_identity() {
        let field = sphere_field();
        let lp = Loop::square(pt(&[0.1, 0.05]), 0.0, 0, 1).unwrap();
        let z = pt(&[0.2, -0.1]);
        let inv = dynamic_holonomy(&field, &lp).inverse(&z).unwrap();
        assert!((inv - z).amax() < 1e-12);
    }

    #[test]
    fn holonomy_groups_are_conjugate() {
        let field = sphere_field();
        let x = pt(&[0.0, 0.0]);
        let y = pt(&[0.2, 0.1]);
        let lam = Loop::circle(x.clone() + pt(&[-0.15, 0.0]), 0.15, 0, 1, true).unwrap();
        // loop through x: circle centered so that x lies on it
        let sigma = Path::line(x, y);
        let r = holonomy_conjugacy_residual(&field, &lam, &sigma, &pt(&[0.1, -0.05])).unwrap();
        assert!(r < 1e-6, "conjugacy residual {r}");
    }
}
