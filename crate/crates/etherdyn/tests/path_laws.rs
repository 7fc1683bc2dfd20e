//! Laws of the path maps across models: endpoint and differential
//! identities, groupoid composition, shape independence of the full-weight
//! translation (and shape dependence of the half-weight map), commutation
//! with reflections.

use etherdyn::ether::EtherField;
use etherdyn::linalg::norm_max;
use etherdyn::manifold::ManifoldModel;
use etherdyn::path::Path;
use etherdyn::pathmap::{
    ether_exponential, ether_translation, groupoid_compose, path_symplectomorphism,
    reflection_commutation_residual,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(rng: &mut ChaCha8Rng, model: &ManifoldModel<f64>, shrink: f64) -> DVector<f64> {
    let r = model.sample_radius() * shrink;
    DVector::from_fn(model.dim(), |_, _| rng.gen_range(-r..r))
}

/// Random C^1 path as a Hermite interpolant of sampled points.
fn random_path(rng: &mut ChaCha8Rng, model: &ManifoldModel<f64>) -> Path<f64> {
    let a = sample(rng, model, 0.8);
    let b = sample(rng, model, 0.8);
    let mid = (&a + &b) * 0.5 + sample(rng, model, 0.3);
    let v0 = sample(rng, model, 0.8);
    let v2 = sample(rng, model, 0.8);
    let vmid = (&b - &a) * 1.0;
    Path::from_samples(vec![a, mid, b], vec![v0, vmid, v2]).unwrap()
}

fn curved_fields() -> Vec<EtherField<f64>> {
    vec![
        EtherField::for_model(&ManifoldModel::sphere_s2(2.0)).unwrap(),
        EtherField::for_model(&ManifoldModel::hyperbolic_h2(0.9)).unwrap(),
    ]
}

#[test]
fn endpoint_and_differential_identities_over_random_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for field in &curved_fields() {
        let model = field.model().clone();
        for _ in 0..10 {
            let path = random_path(&mut rng, &model);
            if !path.stays_in(&model, 40) {
                continue;
            }
            let map = path_symplectomorphism(&field, &path);
            let end = map.evaluate(&path.start()).unwrap();
            assert!(
                (end - path.end()).amax() < 1e-7,
                "endpoint identity failed on {}",
                model.name()
            );
            let dm = map.differential(&path.start()).unwrap().matrix;
            let transport = model.parallel_transport(&path).unwrap().matrix;
            assert!(
                norm_max(&(dm - transport)) < 1e-5,
                "differential/transport gap on {}",
                model.name()
            );
        }
    }
}

#[test]
fn translation_is_shape_independent_but_half_weight_is_not() {
    let fields = curved_fields();
    let field = &fields[0];
    let x = DVector::from_row_slice(&[0.05, 0.0]);
    let y = DVector::from_row_slice(&[0.4, 0.1]);
    let straight = Path::line(x.clone(), y.clone());
    // detour enclosing a substantial chart area
    let via = DVector::from_row_slice(&[0.2, 0.45]);
    let detour = Path::line(x.clone(), via.clone())
        .then(&Path::line(via, y.clone()))
        .unwrap();
    let z = DVector::from_row_slice(&[0.15, -0.1]);

    let g1 = ether_translation(field, &straight).evaluate(&z).unwrap();
    let g2 = ether_translation(field, &detour).evaluate(&z).unwrap();
    assert!((g1 - g2).amax() < 1e-7, "translation depends on shape");

    let m1 = path_symplectomorphism(field, &straight).evaluate(&z).unwrap();
    let m2 = path_symplectomorphism(field, &detour).evaluate(&z).unwrap();
    assert!(
        (m1 - m2).amax() > 1e-3,
        "half-weight map unexpectedly shape independent"
    );
}

#[test]
fn groupoid_composition_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for field in &curved_fields() {
        let model = field.model().clone();
        let a = sample(&mut rng, &model, 0.6);
        let b = sample(&mut rng, &model, 0.6);
        let c = sample(&mut rng, &model, 0.6);
        let p1 = Path::line(a, b.clone());
        let p2 = Path::line(b, c);
        let m1 = path_symplectomorphism(field, &p1);
        let m2 = path_symplectomorphism(field, &p2);
        let joint = groupoid_compose(&m2, &m1).unwrap();
        for _ in 0..5 {
            let z = sample(&mut rng, &model, 0.7);
            let via_compose = m2.evaluate(&m1.evaluate(&z).unwrap()).unwrap();
            let via_concat = joint.evaluate(&z).unwrap();
            assert!(
                (via_compose - via_concat).amax() < 1e-7,
                "groupoid law failed on {}",
                model.name()
            );
        }
    }
}

#[test]
fn commutation_with_reflections_over_random_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for field in &curved_fields() {
        let model = field.model().clone();
        for _ in 0..5 {
            let a = sample(&mut rng, &model, 0.5);
            let b = sample(&mut rng, &model, 0.5);
            let z = sample(&mut rng, &model, 0.5);
            let path = Path::line(a, b);
            let r = reflection_commutation_residual(field, &path, &z).unwrap();
            assert!(r < 1e-6, "commutation residual {r} on {}", model.name());
        }
    }
}

#[test]
fn exponential_symmetry_over_random_velocities() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for field in &curved_fields() {
        let model = field.model().clone();
        for _ in 0..5 {
            let x = sample(&mut rng, &model, 0.5);
            let v = sample(&mut rng, &model, 0.6);
            let plus = ether_exponential(field, &x, &v, 1.0).unwrap();
            let minus = ether_exponential(field, &x, &(-&v), 1.0).unwrap();
            let reflected = field.reflect_fast(&x, &plus).unwrap();
            assert!(
                (reflected - minus).amax() < 1e-7,
                "exponential symmetry failed on {}",
                model.name()
            );
        }
    }
}

#[test]
fn half_weight_maps_are_symplectic_and_invertible() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for field in &curved_fields() {
        let model = field.model().clone();
        let path = Path::line(
            sample(&mut rng, &model, 0.5),
            sample(&mut rng, &model, 0.5),
        );
        let map = path_symplectomorphism(field, &path);
        for _ in 0..3 {
            let z = sample(&mut rng, &model, 0.6);
            assert!(map.symplectic_residual(&z).unwrap() < 1e-6);
            let round = map.inverse(&map.evaluate(&z).unwrap()).unwrap();
            assert!((round - z).amax() < 1e-8);
        }
    }
}
