//! Property tests: structural invariants that hold for every admissible
//! input, checked over generated samples.

use etherdyn::ether::EtherField;
use etherdyn::holonomy::Loop;
use etherdyn::linalg::norm_max;
use etherdyn::manifold::ManifoldModel;
use etherdyn::path::Path;
use etherdyn::pathmap::{ether_translation, path_symplectomorphism};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn chart_point(radius: f64) -> impl Strategy<Value = DVector<f64>> {
    (-radius..radius, -radius..radius).prop_map(|(a, b)| DVector::from_row_slice(&[a, b]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn form_is_antisymmetric_and_inverts(u in chart_point(0.45)) {
        for model in [
            ManifoldModel::<f64>::sphere_s2(2.0),
            ManifoldModel::<f64>::hyperbolic_h2(0.9),
        ] {
            let om = model.omega(&u);
            prop_assert!(norm_max(&(&om + om.transpose())) < 1e-12);
            let psi = model.poisson_tensor(&u).unwrap();
            prop_assert!(norm_max(&(om * psi - DMatrix::identity(2, 2))) < 1e-12);
        }
    }

    #[test]
    fn connection_preserves_the_form(u in chart_point(0.4)) {
        for model in [
            ManifoldModel::<f64>::sphere_s2(2.0),
            ManifoldModel::<f64>::hyperbolic_h2(0.9),
        ] {
            prop_assert!(model.symplectic_connection_residual(&u) < 1e-6);
        }
    }

    #[test]
    fn flat_field_skew_symmetry(x in chart_point(1.0), z in chart_point(1.0)) {
        let field = EtherField::flat(ManifoldModel::flat_r2n(1)).unwrap();
        // mirror point of z through x in the flat closed form
        let mirrored = &x * 2.0 - &z;
        let a = field.eval(&x, &mirrored).unwrap();
        let b = field.eval(&x, &z).unwrap();
        prop_assert!((a + b).amax() < 1e-12);
    }

    #[test]
    fn curvature_is_antisymmetric_in_the_last_pair(u in chart_point(0.4)) {
        let model = ManifoldModel::<f64>::sphere_s2(2.0);
        let r = model.curvature_tensor(&u).unwrap();
        for s in 0..2 {
            for m in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        prop_assert_eq!(r[(s, m, j, k)], -r[(s, m, k, j)]);
                    }
                }
            }
        }
    }

    #[test]
    fn loop_areas_are_antisymmetric(c in chart_point(0.2), r in 0.05f64..0.3) {
        let lp = Loop::<f64>::circle(c, r, 0, 1, true).unwrap();
        let areas = lp.areas();
        prop_assert!((areas[(0, 1)] + areas[(1, 0)]).abs() < 1e-12);
        // a circle of radius r encloses chart area pi r^2
        let expect = std::f64::consts::PI * r * r;
        prop_assert!((areas[(0, 1)].abs() - expect).abs() < 1e-8);
    }

    #[test]
    fn hermite_paths_are_c1(a in chart_point(0.5), b in chart_point(0.5), v in chart_point(1.0)) {
        let points = vec![a.clone(), (&a + &b) * 0.5, b.clone()];
        let vels = vec![v.clone(), &b - &a, v];
        let p = Path::from_samples(points, vels).unwrap();
        prop_assert!(p.c1_defect(17) < 1e-6);
    }
}

proptest! {
    // ODE-backed properties get fewer cases
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flat_translation_and_half_weight_closed_forms(
        from in chart_point(1.0),
        to in chart_point(1.0),
        z in chart_point(1.0),
    ) {
        let field = EtherField::flat(ManifoldModel::flat_r2n(1)).unwrap();
        let path = Path::line(from.clone(), to.clone());
        let g = ether_translation(&field, &path).evaluate(&z).unwrap();
        prop_assert!((g - (&z + (&to - &from) * 2.0)).amax() < 1e-8);
        let m = path_symplectomorphism(&field, &path).evaluate(&z).unwrap();
        prop_assert!((m - (&z + (&to - &from))).amax() < 1e-8);
    }

    #[test]
    fn flat_reflection_ode_closed_form(x in chart_point(1.0), z in chart_point(1.0)) {
        let field = EtherField::flat(ManifoldModel::flat_r2n(1)).unwrap();
        let s = field.reflect(&x, &z).unwrap();
        prop_assert!((s - (&x * 2.0 - &z)).amax() < 1e-8);
    }
}

#[test]
fn flat_r4_block_form_and_transport() {
    // the flat machinery scales to four chart dimensions
    let model: ManifoldModel<f64> = ManifoldModel::flat_r2n(2);
    let field = EtherField::flat(model.clone()).unwrap();
    let x = DVector::from_row_slice(&[0.1, -0.2, 0.3, 0.4]);
    let z = DVector::from_row_slice(&[-0.5, 0.6, 0.0, 0.2]);
    let s = field.reflect(&x, &z).unwrap();
    assert!((s - (&x * 2.0 - &z)).amax() < 1e-8);
    let path = Path::line(x, z);
    let v = model.parallel_transport(&path).unwrap();
    assert!(norm_max(&(v.matrix - DMatrix::identity(4, 4))) < 1e-12);
}
