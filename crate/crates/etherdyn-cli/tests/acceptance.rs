//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the worst residual measured at its stated tolerance.

use etherdyn::ether::{zero_curvature_residual, EtherField, EtherStrategy};
use etherdyn::holonomy::{
    diagonal_curvature_checks, fit_log_slope, kinematic_holonomy, rotation_angle,
    small_loop_expansion_check, Loop,
};
use etherdyn::linalg::norm_max;
use etherdyn::manifold::ManifoldModel;
use etherdyn::path::Path;
use etherdyn::pathmap::{
    ether_exponential, ether_translation, groupoid_compose, path_symplectomorphism,
    reflection_commutation_residual,
};
use etherdyn::translocation::{
    covariant_quadratic_residual, factorization_residual, first_variation, generating_phase,
    hamilton_jacobi_residual, hessian_residual, quadratic_monodromy_closed_form, AuxPath,
    HamiltonianSystem, PhaseOptions, TranslocatedSystem,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(rng: &mut ChaCha8Rng, model: &ManifoldModel<f64>, shrink: f64) -> DVector<f64> {
    let r = model.sample_radius() * shrink;
    DVector::from_fn(model.dim(), |_, _| rng.gen_range(-r..r))
}

fn curved_fields() -> Vec<EtherField<f64>> {
    vec![
        EtherField::for_model(&ManifoldModel::sphere_s2(2.0)).unwrap(),
        EtherField::for_model(&ManifoldModel::hyperbolic_h2(0.9)).unwrap(),
    ]
}

struct Criterion {
    name: &'static str,
    items: Vec<(String, f64, f64)>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            items: Vec::new(),
        }
    }

    /// Defect-style item: passes when `residual <= tol`.
    fn le(&mut self, label: impl Into<String>, residual: f64, tol: f64) {
        self.items.push((label.into(), residual, tol));
    }

    /// Floor-style item: passes when `value >= floor` (stored negated).
    fn ge(&mut self, label: impl Into<String>, value: f64, floor: f64) {
        self.items.push((label.into(), -value, -floor));
    }

    fn finish(self) {
        let mut ok = true;
        let mut lines = Vec::new();
        for (label, residual, tol) in &self.items {
            let pass = residual.is_finite() && residual <= tol;
            ok &= pass;
            let (shown, rel, bound) = if *tol < 0.0 {
                (-residual, ">=", -tol)
            } else {
                (*residual, "<=", *tol)
            };
            lines.push(format!(
                "    [{}] {label}: {shown:.4e} {rel} {bound:.1e}",
                if pass { "ok" } else { "FAIL" }
            ));
        }
        println!(
            "{}: {}",
            self.name,
            if ok { "PASS" } else { "FAIL" }
        );
        for l in lines {
            println!("{l}");
        }
        assert!(ok, "{} failed", self.name);
    }
}

#[test]
fn criterion_01_flat_closed_form_equivalence() {
    let mut c = Criterion::new("criterion 1 (flat closed forms via generic machinery)");
    for n in [1usize, 2] {
        let model = ManifoldModel::flat_r2n(n);
        let field = EtherField::flat(model.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut worst = [0.0_f64; 4];
        for _ in 0..20 {
            let x = sample(&mut rng, &model, 1.0);
            let y = sample(&mut rng, &model, 1.0);
            let z = sample(&mut rng, &model, 1.0);
            let v = sample(&mut rng, &model, 1.0);
            worst[0] = worst[0].max((field.reflect(&x, &z).unwrap() - (&x * 2.0 - &z)).amax());
            let path = Path::line(x.clone(), y.clone());
            let g = ether_translation(&field, &path).evaluate(&z).unwrap();
            worst[1] = worst[1].max((g - (&z + (&y - &x) * 2.0)).amax());
            let m = path_symplectomorphism(&field, &path).evaluate(&z).unwrap();
            worst[2] = worst[2].max((m - (&z + (&y - &x))).amax());
            let e = ether_exponential(&field, &x, &v, 1.0).unwrap();
            worst[3] = worst[3].max((e - (&x + &v)).amax());
        }
        let d = model.dim();
        c.le(format!("reflection (d={d})"), worst[0], 1e-8);
        c.le(format!("translation (d={d})"), worst[1], 1e-8);
        c.le(format!("half-weight map (d={d})"), worst[2], 1e-8);
        c.le(format!("exponential (d={d})"), worst[3], 1e-8);
    }
    c.finish();
}

#[test]
fn criterion_02_ether_axioms_on_curved_models() {
    let mut c = Criterion::new("criterion 2 (field axioms on the sphere and the disk)");
    for field in curved_fields() {
        let model = field.model().clone();
        let name = model.name().to_string();
        let mut rng = ChaCha8Rng::seed_from_u64(102);

        let mut invol = 0.0_f64;
        for _ in 0..8 {
            let x = sample(&mut rng, &model, 0.6);
            let z = sample(&mut rng, &model, 0.6);
            let s = field.reflect(&x, &z).unwrap();
            invol = invol.max((field.reflect(&x, &s).unwrap() - z).amax());
        }
        c.le(format!("{name}: double reflection is the identity"), invol, 1e-8);

        let mut sympl = 0.0_f64;
        for _ in 0..4 {
            let x = sample(&mut rng, &model, 0.5);
            let z = sample(&mut rng, &model, 0.5);
            let ds = field.reflection_differential(&x, &z).unwrap();
            let sz = field.reflect_fast(&x, &z).unwrap();
            sympl = sympl.max(norm_max(
                &(ds.transpose() * model.omega(&sz) * &ds - model.omega(&z)),
            ));
            let path = Path::line(x.clone(), sample(&mut rng, &model, 0.35));
            let zz = sample(&mut rng, &model, 0.35);
            sympl = sympl.max(
                path_symplectomorphism(&field, &path)
                    .symplectic_residual(&zz)
                    .unwrap(),
            );
            sympl = sympl.max(
                ether_translation(&field, &path)
                    .symplectic_residual(&zz)
                    .unwrap(),
            );
        }
        c.le(
            format!("{name}: reflections and path maps are symplectic"),
            sympl,
            1e-7,
        );

        let mut skew = 0.0_f64;
        for _ in 0..20 {
            let x = sample(&mut rng, &model, 0.8);
            let z = sample(&mut rng, &model, 0.8);
            let sz = field.reflect_fast(&x, &z).unwrap();
            skew = skew
                .max((field.eval(&x, &sz).unwrap() + field.eval(&x, &z).unwrap()).amax());
        }
        c.le(format!("{name}: skew symmetry under reflection"), skew, 1e-6);

        let mut zc = 0.0_f64;
        for _ in 0..4 {
            let x = sample(&mut rng, &model, 0.7);
            let z = &x + sample(&mut rng, &model, 0.25);
            let d1 = sample(&mut rng, &model, 1.0);
            let d2 = sample(&mut rng, &model, 1.0);
            zc = zc.max(zero_curvature_residual(&field, &x, &z, &d1, &d2).unwrap());
        }
        c.le(format!("{name}: structure-equation residual"), zc, 1e-6);

        // order-3 jet: residual slope 3.0 +- 0.3 at a generic probe
        let jet = EtherField::with_strategy(
            model.clone(),
            EtherStrategy::Jet {
                order: 3,
                radius: 0.2,
            },
        )
        .unwrap();
        let scale = model.sample_radius();
        let x = DVector::from_row_slice(&[0.24 * scale, -0.14 * scale]);
        let dir = DVector::from_row_slice(&[0.6, 0.8]);
        let rhos = [0.0025_f64, 0.005, 0.01, 0.02];
        let e1 = DVector::from_row_slice(&[1.0, 0.0]);
        let e2 = DVector::from_row_slice(&[0.0, 1.0]);
        let residuals: Vec<f64> = rhos
            .iter()
            .map(|&rho| {
                zero_curvature_residual(&jet, &x, &(&x + &dir * rho), &e1, &e2).unwrap()
            })
            .collect();
        let slope = fit_log_slope(&rhos, &residuals).unwrap();
        c.le(format!("{name}: jet residual slope off 3"), (slope - 3.0).abs(), 0.3);
    }
    c.finish();
}

#[test]
fn criterion_03_translation_reflection_law() {
    let mut c = Criterion::new("criterion 3 (translations split into reflections, shape free)");
    for field in curved_fields() {
        let model = field.model().clone();
        let name = model.name().to_string();
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let mut split = 0.0_f64;
        let mut shape = 0.0_f64;
        for _ in 0..10 {
            let x = sample(&mut rng, &model, 0.3);
            let y = sample(&mut rng, &model, 0.3);
            let z = sample(&mut rng, &model, 0.3);
            let g = ether_translation(&field, &Path::line(x.clone(), y.clone()))
                .evaluate(&z)
                .unwrap();
            let via = field
                .reflect_fast(&y, &field.reflect_fast(&x, &z).unwrap())
                .unwrap();
            split = split.max((&g - via).amax());

            let mid = (&x + &y) * 0.5 + sample(&mut rng, &model, 0.2);
            let detour = Path::line(x.clone(), mid.clone())
                .then(&Path::line(mid, y.clone()))
                .unwrap();
            let g2 = ether_translation(&field, &detour).evaluate(&z).unwrap();
            shape = shape.max((g - g2).amax());
        }
        c.le(format!("{name}: double-reflection law"), split, 1e-7);
        c.le(format!("{name}: shape independence"), shape, 1e-7);
    }
    c.finish();
}

#[test]
fn criterion_04_endpoint_and_transport_identities() {
    let mut c = Criterion::new("criterion 4 (endpoint and parallel-transport identities)");
    for field in curved_fields() {
        let model = field.model().clone();
        let name = model.name().to_string();
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        let mut endpoint = 0.0_f64;
        let mut differential = 0.0_f64;
        let mut done = 0;
        while done < 50 {
            let a = sample(&mut rng, &model, 0.8);
            let b = sample(&mut rng, &model, 0.8);
            let mid = (&a + &b) * 0.5 + sample(&mut rng, &model, 0.3);
            let v0 = sample(&mut rng, &model, 0.8);
            let v2 = sample(&mut rng, &model, 0.8);
            let vm = &b - &a;
            let path = Path::from_samples(vec![a, mid, b], vec![v0, vm, v2]).unwrap();
            if !path.stays_in(&model, 40) {
                continue;
            }
            let map = path_symplectomorphism(&field, &path);
            endpoint = endpoint.max((map.evaluate(&path.start()).unwrap() - path.end()).amax());
            let dm = map.differential(&path.start()).unwrap().matrix;
            let v = model.parallel_transport(&path).unwrap().matrix;
            differential = differential.max(norm_max(&(dm - v)));
            done += 1;
        }
        c.le(format!("{name}: 50 paths, endpoint identity"), endpoint, 1e-7);
        c.le(
            format!("{name}: 50 paths, differential vs transport"),
            differential,
            1e-5,
        );
    }
    c.finish();
}

#[test]
fn criterion_05_groupoid_and_commutation() {
    let mut c = Criterion::new("criterion 5 (groupoid law, commutation, shape sensitivity)");
    for field in curved_fields() {
        let model = field.model().clone();
        let name = model.name().to_string();
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        let a = sample(&mut rng, &model, 0.6);
        let b = sample(&mut rng, &model, 0.6);
        let cpt = sample(&mut rng, &model, 0.6);
        let m1 = path_symplectomorphism(&field, &Path::line(a, b.clone()));
        let m2 = path_symplectomorphism(&field, &Path::line(b, cpt));
        let joint = groupoid_compose(&m2, &m1).unwrap();
        let mut comp = 0.0_f64;
        for _ in 0..20 {
            let z = sample(&mut rng, &model, 0.7);
            let via = m2.evaluate(&m1.evaluate(&z).unwrap()).unwrap();
            comp = comp.max((joint.evaluate(&z).unwrap() - via).amax());
        }
        c.le(format!("{name}: groupoid composition"), comp, 1e-7);

        let mut comm = 0.0_f64;
        for _ in 0..5 {
            let x = sample(&mut rng, &model, 0.5);
            let y = sample(&mut rng, &model, 0.5);
            let z = sample(&mut rng, &model, 0.5);
            comm = comm
                .max(reflection_commutation_residual(&field, &Path::line(x, y), &z).unwrap());
        }
        c.le(format!("{name}: reflection commutation"), comm, 1e-6);
    }

    // shape sensitivity of the half-weight map on the sphere
    let field = &curved_fields()[0];
    let x = DVector::from_row_slice(&[0.05, 0.0]);
    let y = DVector::from_row_slice(&[0.4, 0.1]);
    let via = DVector::from_row_slice(&[0.2, 0.45]);
    let z = DVector::from_row_slice(&[0.15, -0.1]);
    let straight = Path::line(x.clone(), y.clone());
    let detour = Path::line(x, via.clone()).then(&Path::line(via, y)).unwrap();
    let m1 = path_symplectomorphism(field, &straight).evaluate(&z).unwrap();
    let m2 = path_symplectomorphism(field, &detour).evaluate(&z).unwrap();
    c.ge("sphere: half-weight map feels the enclosed area", (m1 - m2).amax(), 1e-3);
    c.finish();
}

#[test]
fn criterion_06_holonomy_generators() {
    let mut c = Criterion::new("criterion 6 (loop-map generators and the curvature functions)");
    for field in curved_fields() {
        let model = field.model().clone();
        let name = model.name().to_string();
        let rep = diagonal_curvature_checks(&field, &DVector::zeros(2)).unwrap();
        c.le(format!("{name}: value equals the form"), rep.value_residual, 1e-8);
        c.le(format!("{name}: stationary basepoint"), rep.gradient_residual, 1e-5);
        c.le(
            format!("{name}: Hessian vs curvature coupling"),
            rep.hessian_residual,
            1e-3,
        );

        let z = DVector::from_row_slice(&[0.15 * model.sample_radius(), 0.1]);
        let areas = [0.04, 0.02, 0.01, 0.005];
        let rep = small_loop_expansion_check(&field, &DVector::zeros(2), 0, 1, &areas, &z).unwrap();
        c.ge(format!("{name}: small-loop slope"), rep.slope, 1.5);
    }

    // rotation angle vs enclosed spherical area for small loops
    let field = &curved_fields()[0];
    let area = 0.1_f64;
    let r = (area / (4.0 * std::f64::consts::PI - area)).sqrt();
    let lp = Loop::circle(DVector::zeros(2), r, 0, 1, true).unwrap();
    let m = kinematic_holonomy(field, &lp).unwrap().matrix;
    let angle = rotation_angle(&m).abs();
    c.le("sphere: holonomy angle vs area (relative)", (angle - area).abs() / area, 1e-2);
    c.finish();
}

#[test]
fn criterion_07_translocation() {
    let mut c = Criterion::new("criterion 7 (translocation and monodromy factorizations)");
    let cases: Vec<(EtherField<f64>, HamiltonianSystem<f64>, DVector<f64>, f64)> = vec![
        {
            let model = ManifoldModel::flat_r2n(1);
            (
                EtherField::flat(model.clone()).unwrap(),
                HamiltonianSystem::registry(&model, "oscillator").unwrap(),
                DVector::from_row_slice(&[1.0, 0.0]),
                1.2,
            )
        },
        {
            let model = ManifoldModel::sphere_s2(2.0);
            (
                EtherField::for_model(&model).unwrap(),
                HamiltonianSystem::registry(&model, "height").unwrap(),
                DVector::from_row_slice(&[0.3, 0.0]),
                0.8,
            )
        },
    ];
    for (field, system, y, horizon) in &cases {
        let name = format!("{}/{}", system.model().name(), system.name());
        let ts = TranslocatedSystem::new(field, system, y, *horizon).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(107);

        let mut fact = 0.0_f64;
        for _ in 0..10 {
            let x = y + sample(&mut rng, system.model(), 0.25);
            let t = rng.gen_range(0.05..*horizon);
            fact = fact.max(factorization_residual(&ts, t, &x).unwrap());
        }
        c.le(format!("{name}: flow factorization"), fact, 1e-6);

        let mut anchor = 0.0_f64;
        let mut anchor_grad = 0.0_f64;
        for &t in &[0.3 * horizon, 0.7 * horizon, *horizon] {
            anchor = anchor.max(ts.hamiltonian(t, y).unwrap().abs());
            anchor_grad = anchor_grad.max(ts.gradient(t, y).unwrap().amax());
        }
        c.le(format!("{name}: anchored value"), anchor, 1e-7);
        c.le(format!("{name}: anchored gradient"), anchor_grad, 1e-7);
        c.le(
            format!("{name}: anchored Hessian vs transport"),
            hessian_residual(&ts, *horizon).unwrap(),
            1e-4,
        );
        c.le(
            format!("{name}: first-variation factorization"),
            first_variation(&ts, *horizon).unwrap().residual(),
            1e-5,
        );
        // both registry systems here are covariantly quadratic
        let probe = covariant_quadratic_residual(system, y, *horizon, 5).unwrap();
        c.le(format!("{name}: parallel-Hessian probe"), probe, 1e-6);
        let closed = quadratic_monodromy_closed_form(&ts, *horizon).unwrap();
        let direct = system.flow_differential(*horizon, y).unwrap();
        c.le(
            format!("{name}: closed monodromy factor"),
            norm_max(&(closed - direct)),
            1e-6,
        );
    }

    // flat oscillator translocation in closed form
    let (field, system, y, _) = &cases[0];
    let ts = TranslocatedSystem::new(field, system, y, 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(117);
    let mut worst = 0.0_f64;
    for &t in &[0.0, 0.6, 1.5] {
        for _ in 0..5 {
            let z = sample(&mut rng, system.model(), 1.0);
            let got = ts.hamiltonian(t, &z).unwrap();
            worst = worst.max((got - 0.5 * (&z - y).norm_squared()).abs());
        }
    }
    c.le("flat oscillator: translocated closed form", worst, 1e-9);
    c.finish();
}

#[test]
fn criterion_08_generating_phase() {
    let mut c = Criterion::new("criterion 8 (membrane generating phase)");
    let opts = PhaseOptions::default();

    // flat model with a straight path
    {
        let model = ManifoldModel::flat_r2n(1);
        let field = EtherField::flat(model.clone()).unwrap();
        let sigma = Path::line(
            DVector::from_row_slice(&[0.0, 0.0]),
            DVector::from_row_slice(&[0.8, 0.3]),
        );
        let map = path_symplectomorphism(&field, &sigma);
        let x = DVector::from_row_slice(&[0.3, 0.15]);
        let gp = generating_phase(&field, &map, &x, &opts).unwrap();
        c.le("flat: mesh convergence gap", gp.mesh_gap, 1e-5);
        let ether = field.eval(&x, &gp.fixed_point).unwrap();
        c.le("flat: phase differential identity", (gp.d_phase.clone() + ether).amax(), 1e-4);
        c.le(
            "flat: endpoint evolution identity",
            hamilton_jacobi_residual(&field, &sigma, &x, &opts).unwrap(),
            1e-4,
        );
    }

    // sphere with a short geodesic path
    {
        let model = ManifoldModel::sphere_s2(2.0);
        let field = EtherField::for_model(&model).unwrap();
        let sigma = Path::geodesic(
            &model,
            DVector::from_row_slice(&[0.05, 0.0]),
            DVector::from_row_slice(&[0.25, 0.1]),
        )
        .unwrap();
        let map = path_symplectomorphism(&field, &sigma);
        let x = DVector::from_row_slice(&[0.18, 0.07]);
        let gp = generating_phase(&field, &map, &x, &opts).unwrap();
        c.le("sphere: mesh convergence gap", gp.mesh_gap, 1e-5);
        let ether = field.eval(&x, &gp.fixed_point).unwrap();
        c.le(
            "sphere: phase differential identity",
            (gp.d_phase.clone() + ether).amax(),
            1e-4,
        );
        c.le(
            "sphere: endpoint evolution identity",
            hamilton_jacobi_residual(&field, &sigma, &x, &opts).unwrap(),
            1e-4,
        );
        let bulged = PhaseOptions {
            aux: AuxPath::Bulge(0.1),
            ..PhaseOptions::default()
        };
        let gp2 = generating_phase(&field, &map, &x, &bulged).unwrap();
        c.le(
            "sphere: auxiliary-path independence of the differential",
            (gp.d_phase - gp2.d_phase).amax(),
            1e-5,
        );
    }
    c.finish();
}

#[test]
fn criterion_09_affine_machinery() {
    use etherdyn::affine::{
        conjugate_cartan, conjugate_field, geodesic_inversion_residual, internal_geodesic,
        structural_equation_residual, AffineTranslocation, InternalVectorField,
        InversiveStructure,
    };
    let mut c = Criterion::new("criterion 9 (internal fields and inversive structures)");
    let flat = ManifoldModel::<f64>::flat_r2n(1);
    let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let lin = InversiveStructure::linear(flat.clone(), m.clone()).unwrap();
    let aplus = lin.field();
    let aminus = conjugate_field(&lin, &aplus);
    let mut rng = ChaCha8Rng::seed_from_u64(109);

    let mut roundtrip = 0.0_f64;
    let mut inv_match = 0.0_f64;
    let mut cartan_law = 0.0_f64;
    let mut zc_minus = 0.0_f64;
    let mut geo = 0.0_f64;
    for _ in 0..5 {
        let x = sample(&mut rng, &flat, 0.6);
        let z = sample(&mut rng, &flat, 0.6);
        let exact = InternalVectorField::linear_family(flat.clone(), &m);
        roundtrip = roundtrip.max((exact.inversion(&x, &z).unwrap() - lin.apply(&x, &z)).amax());
        roundtrip = roundtrip.max(norm_max(&(aplus.eval(&x, &z) - exact.eval(&x, &z))));
        inv_match =
            inv_match.max((aminus.inversion(&x, &z).unwrap() - lin.apply_inverse(&x, &z)).amax());
        let predicted = conjugate_cartan(&aplus.cartan(&x)).unwrap();
        cartan_law = cartan_law.max(norm_max(&(predicted - aminus.cartan(&x))));
        let d1 = sample(&mut rng, &flat, 1.0);
        let d2 = sample(&mut rng, &flat, 1.0);
        zc_minus = zc_minus.max(aminus.zero_curvature_residual(&x, &z, &d1, &d2));
        let v = sample(&mut rng, &flat, 0.6);
        geo = geo.max(geodesic_inversion_residual(&lin, &aplus, &aminus, &x, &v).unwrap());
    }
    c.le("linear family: field/inversion round trip", roundtrip, 1e-6);
    c.le("linear family: conjugate inversions invert", inv_match, 1e-8);
    c.le("linear family: diagonal Cartan relation", cartan_law, 1e-8);
    c.le("linear family: conjugate field structure equation", zc_minus, 1e-6);
    c.le("linear family: geodesic inversion law", geo, 1e-7);

    let x = sample(&mut rng, &flat, 0.5);
    let exact = InternalVectorField::linear_family(flat.clone(), &m);
    let gam = lin.gamma_at(&x).unwrap();
    let tor = lin.torsion_at(&x).unwrap();
    let u = sample(&mut rng, &flat, 1.0);
    let v = sample(&mut rng, &flat, 1.0);
    c.le(
        "linear family: first structure equation",
        structural_equation_residual(&exact, &gam, &tor, &x, &u, &v),
        1e-5,
    );

    // curved reconstruction against the model connection
    let sphere = ManifoldModel::<f64>::sphere_s2(2.0);
    let refl = InversiveStructure::reflective(sphere.clone()).unwrap();
    let mut gamma_gap = 0.0_f64;
    for _ in 0..3 {
        let x = sample(&mut rng, &sphere, 0.8);
        let rec = refl.gamma_at(&x).unwrap();
        let gam = sphere.gamma(&x);
        for l in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    gamma_gap = gamma_gap.max((rec[(l, j, k)] - gam[(l, j, k)]).abs());
                }
            }
        }
    }
    c.le("sphere: connection recovered from symmetries", gamma_gap, 1e-5);

    // affine translocation on a linear field, with the closed differential
    let fundamental = InternalVectorField::fundamental_flat(flat.clone());
    let l = DMatrix::from_row_slice(2, 2, &[0.1, 0.4, -0.3, 0.2]);
    let y = DVector::from_row_slice(&[0.5, -0.2]);
    let lc = l.clone();
    let tr = AffineTranslocation::new(&fundamental, move |p| &lc * p, &y, 1.0).unwrap();
    let mut fact = 0.0_f64;
    for _ in 0..5 {
        let x = &y + sample(&mut rng, &flat, 0.3);
        fact = fact.max(tr.factorization_residual(1.0, &x).unwrap());
    }
    c.le("affine translocation: flow factorization", fact, 1e-6);
    let gamma_at = |p: &DVector<f64>| flat.gamma(p);
    let closed = tr.autolinear_differential(1.0, &gamma_at).unwrap();
    let direct = tr.base_flow_differential(1.0).unwrap();
    c.le(
        "affine translocation: closed differential on a linear field",
        norm_max(&(closed - direct)),
        1e-8,
    );
    // internal geodesics of the fundamental flat field are straight
    let xv = sample(&mut rng, &flat, 0.5);
    let vv = sample(&mut rng, &flat, 0.5);
    let e = internal_geodesic(&fundamental, &xv, &vv, 1.0).unwrap();
    c.le("fundamental flat: exponential is affine", (e - (&xv + &vv)).amax(), 1e-9);
    c.finish();
}

#[test]
fn criterion_10_deterministic_reports() {
    let bin = env!("CARGO_BIN_EXE_etherdyn");
    let dir = std::env::temp_dir().join(format!("etherdyn-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let run = || {
        let status = std::process::Command::new(bin)
            .args([
                "--model",
                "sphere-s2",
                "--seed",
                "11",
                "--samples",
                "12",
                "--out",
            ])
            .arg(&dir)
            .arg("check")
            .stdout(std::process::Stdio::null())
            .status()
            .expect("binary runs");
        assert!(status.success(), "check run failed");
        (
            std::fs::read(dir.join("report.json")).unwrap(),
            std::fs::read(dir.join("report.csv")).unwrap(),
        )
    };
    let (json1, csv1) = run();
    let (json2, csv2) = run();
    let ok = json1 == json2 && csv1 == csv2;
    println!(
        "criterion 10 (byte-identical seeded reports): {}",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::fs::remove_dir_all(&dir);
    assert!(ok);
}
