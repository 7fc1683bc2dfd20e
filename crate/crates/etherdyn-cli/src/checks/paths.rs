//! Path-map laws: closed flat forms, endpoint and differential identities,
//! shape (in)dependence, the groupoid law, commutation with reflections,
//! exponential symmetry.

use super::Ctx;
use crate::report::CheckRecord;
use etherdyn::linalg::norm_max;
use etherdyn::path::Path;
use etherdyn::pathmap::{
    ether_exponential, ether_translation, groupoid_compose, path_symplectomorphism,
    reflection_commutation_residual,
};
use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;

fn random_path(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Path<f64> {
    let a = ctx.sample(rng, 0.8);
    let b = ctx.sample(rng, 0.8);
    let mid = (&a + &b) * 0.5 + ctx.sample(rng, 0.3);
    let v0 = ctx.sample(rng, 0.8);
    let v2 = ctx.sample(rng, 0.8);
    let vmid = &b - &a;
    Path::from_samples(vec![a, mid, b], vec![v0, vmid, v2]).expect("three samples")
}

pub fn suite(ctx: &Ctx) -> Vec<CheckRecord> {
    let model = ctx.model.clone();
    let field = &ctx.field;
    let n = ctx.cfg.samples;
    let mut checks = Vec::new();

    if model.is_flat() {
        checks.push(ctx.run(
            "paths.flat_closed_forms",
            "flat-closed-forms",
            "reflection, translation, half-weight map, exponential",
            1e-8,
            |rng| {
                let mut worst = 0.0_f64;
                for _ in 0..n.min(25) {
                    let x = ctx.sample(rng, 1.0);
                    let y = ctx.sample(rng, 1.0);
                    let z = ctx.sample(rng, 1.0);
                    let v = ctx.sample(rng, 1.0);
                    worst = worst.max((field.reflect(&x, &z)? - (&x * 2.0 - &z)).amax());
                    let path = Path::line(x.clone(), y.clone());
                    let g = ether_translation(field, &path).evaluate(&z)?;
                    worst = worst.max((g - (&z + (&y - &x) * 2.0)).amax());
                    let m = path_symplectomorphism(field, &path).evaluate(&z)?;
                    worst = worst.max((m - (&z + (&y - &x))).amax());
                    let e = ether_exponential(field, &x, &v, 1.0)?;
                    worst = worst.max((e - (&x + &v)).amax());
                }
                Ok(worst)
            },
        ));
    }

    checks.push(ctx.run(
        "paths.endpoint_identity",
        "endpoint-transport",
        "half-weight map carries path start to path end",
        1e-7,
        |rng| {
            let mut worst = 0.0_f64;
            let mut done = 0;
            while done < n {
                let path = random_path(ctx, rng);
                if !path.stays_in(&model, 40) {
                    continue;
                }
                let map = path_symplectomorphism(field, &path);
                worst = worst.max((map.evaluate(&path.start())? - path.end()).amax());
                done += 1;
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "paths.differential_transport",
        "endpoint-transport",
        "map differential at the origin equals parallel transport",
        1e-5,
        |rng| {
            let mut worst = 0.0_f64;
            let mut done = 0;
            while done < n {
                let path = random_path(ctx, rng);
                if !path.stays_in(&model, 40) {
                    continue;
                }
                let map = path_symplectomorphism(field, &path);
                let dm = map.differential(&path.start())?.matrix;
                let v = model.parallel_transport(&path)?.matrix;
                worst = worst.max(norm_max(&(dm - v)));
                done += 1;
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "paths.translation_reflection_split",
        "translation-reflections",
        "translation equals the composition of two reflections",
        1e-7,
        |rng| {
            let mut worst = 0.0_f64;
            for _ in 0..8 {
                // a double reflection travels twice the base displacement,
                // so the inputs stay close to the chart center
                let x = ctx.sample(rng, 0.3);
                let y = ctx.sample(rng, 0.3);
                let z = ctx.sample(rng, 0.3);
                let g = ether_translation(field, &Path::line(x.clone(), y.clone())).evaluate(&z)?;
                let via = field.reflect_fast(&y, &field.reflect_fast(&x, &z)?)?;
                worst = worst.max((g - via).amax());
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "paths.translation_shape_independence",
        "translation-shape",
        "straight and detour paths give the same translation",
        1e-7,
        |rng| {
            let mut worst = 0.0_f64;
            for _ in 0..4 {
                // modest excursions: the running translation roughly doubles
                // the base-path displacement, and must stay in the chart
                let x = ctx.sample(rng, 0.4);
                let y = ctx.sample(rng, 0.4);
                let via = (&x + &y) * 0.5 + ctx.sample(rng, 0.25);
                let z = ctx.sample(rng, 0.4);
                let straight = Path::line(x.clone(), y.clone());
                let detour = Path::line(x.clone(), via.clone()).then(&Path::line(via, y.clone()))?;
                let g1 = ether_translation(field, &straight).evaluate(&z)?;
                let g2 = ether_translation(field, &detour).evaluate(&z)?;
                worst = worst.max((g1 - g2).amax());
            }
            Ok(worst)
        },
    ));

    if !model.is_flat() {
        checks.push(ctx.run_floor(
            "paths.half_weight_shape_dependence",
            "path-shape",
            "a detour enclosing area moves some point visibly",
            1e-3,
            |_rng| {
                let x = DVector::from_row_slice(&[0.05, 0.0]);
                let y = DVector::from_row_slice(&[0.4, 0.1]);
                let via = DVector::from_row_slice(&[0.2, 0.45]) * (model.sample_radius() / 0.5);
                let z = DVector::from_row_slice(&[0.15, -0.1]);
                let straight = Path::line(x.clone(), y.clone());
                let detour = Path::line(x, via.clone()).then(&Path::line(via, y))?;
                let m1 = path_symplectomorphism(field, &straight).evaluate(&z)?;
                let m2 = path_symplectomorphism(field, &detour).evaluate(&z)?;
                Ok((m1 - m2).amax())
            },
        ));
    }

    checks.push(ctx.run(
        "paths.groupoid_composition",
        "path-groupoid",
        "concatenated path equals composed maps",
        1e-7,
        |rng| {
            let a = ctx.sample(rng, 0.6);
            let b = ctx.sample(rng, 0.6);
            let c = ctx.sample(rng, 0.6);
            let m1 = path_symplectomorphism(field, &Path::line(a, b.clone()));
            let m2 = path_symplectomorphism(field, &Path::line(b, c));
            let joint = groupoid_compose(&m2, &m1)?;
            let mut worst = 0.0_f64;
            for _ in 0..n.min(20) {
                let z = ctx.sample(rng, 0.7);
                let via = m2.evaluate(&m1.evaluate(&z)?)?;
                worst = worst.max((joint.evaluate(&z)? - via).amax());
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "paths.inverse_path_identity",
        "path-groupoid",
        "a path followed by its reversal acts as the identity",
        1e-7,
        |rng| {
            let a = ctx.sample(rng, 0.6);
            let b = ctx.sample(rng, 0.6);
            let fwd = path_symplectomorphism(field, &Path::line(a, b));
            let back = path_symplectomorphism(field, &fwd.path().reversed());
            let joint = groupoid_compose(&back, &fwd)?;
            let mut worst = 0.0_f64;
            for _ in 0..5 {
                let z = ctx.sample(rng, 0.7);
                worst = worst.max((joint.evaluate(&z)? - z).amax());
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "paths.reflection_commutation",
        "reflection-commutation",
        "half-weight map intertwines the endpoint reflections",
        1e-6,
        |rng| {
            let mut worst = 0.0_f64;
            for _ in 0..5 {
                let a = ctx.sample(rng, 0.5);
                let b = ctx.sample(rng, 0.5);
                let z = ctx.sample(rng, 0.5);
                worst =
                    worst.max(reflection_commutation_residual(field, &Path::line(a, b), &z)?);
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "paths.exponential_symmetry",
        "exponential-reflection",
        "reflection swaps the exponential's velocity sign",
        1e-7,
        |rng| {
            let mut worst = 0.0_f64;
            for _ in 0..5 {
                let x = ctx.sample(rng, 0.5);
                let v = ctx.sample(rng, 0.6);
                let plus = ether_exponential(field, &x, &v, 1.0)?;
                let minus = ether_exponential(field, &x, &(-&v), 1.0)?;
                worst = worst.max((field.reflect_fast(&x, &plus)? - minus).amax());
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "paths.symplectic_maps",
        "symplectic-maps",
        "map differentials preserve the form",
        1e-7,
        |rng| {
            let a = ctx.sample(rng, 0.35);
            let b = ctx.sample(rng, 0.35);
            let path = Path::line(a, b);
            let half = path_symplectomorphism(field, &path);
            let full = ether_translation(field, &path);
            let mut worst = 0.0_f64;
            for _ in 0..4 {
                let z = ctx.sample(rng, 0.35);
                worst = worst.max(half.symplectic_residual(&z)?);
                worst = worst.max(full.symplectic_residual(&z)?);
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "paths.inverse_roundtrip",
        "path-groupoid",
        "inverse undoes evaluate",
        1e-8,
        |rng| {
            let a = ctx.sample(rng, 0.6);
            let b = ctx.sample(rng, 0.6);
            let map = path_symplectomorphism(field, &Path::line(a, b));
            let mut worst = 0.0_f64;
            for _ in 0..5 {
                let z = ctx.sample(rng, 0.6);
                worst = worst.max((map.inverse(&map.evaluate(&z)?)? - z).amax());
            }
            Ok(worst)
        },
    ));

    checks
}
