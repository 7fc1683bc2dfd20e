//! Affine (connection-level) machinery: internal fields, inversive
//! structures, conjugate pairs, and the affine translocation.

use super::Ctx;
use crate::report::CheckRecord;
use etherdyn::affine::{
    conjugate_cartan, conjugate_field, geodesic_inversion_residual, internal_geodesic,
    internal_translation, structural_equation_residual, symplectic_inversive_checks,
    AffineTranslocation, InternalVectorField, InversiveStructure,
};
use etherdyn::linalg::{norm_max, Tensor3};
use etherdyn::manifold::ManifoldModel;
use etherdyn::path::Path;
use nalgebra::{DMatrix, DVector};

/// The configurable constant matrix of the linear family; rotation by a
/// quarter turn in each coordinate pair by default (symplectic, spectrum
/// away from 0 and 1).
pub fn default_linear_matrix(d: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d / 2 {
        m[(2 * i, 2 * i + 1)] = -1.0;
        m[(2 * i + 1, 2 * i)] = 1.0;
    }
    m
}

pub fn suite(ctx: &Ctx) -> Vec<CheckRecord> {
    suite_with_matrix(ctx, None)
}

pub fn suite_with_matrix(ctx: &Ctx, m: Option<DMatrix<f64>>) -> Vec<CheckRecord> {
    let model = ctx.model.clone();
    let d = model.dim();
    let mut checks = Vec::new();

    // the linear family lives on the flat model of matching dimension
    let flat = ManifoldModel::<f64>::flat_r2n(d / 2);
    let m = m.unwrap_or_else(|| default_linear_matrix(d));
    let linear = match InversiveStructure::linear(flat.clone(), m.clone()) {
        Ok(s) => s,
        Err(e) => return vec![CheckRecord::failed("affine.setup", "inversive-structure", e)],
    };
    let lin_field_exact = InternalVectorField::linear_family(flat.clone(), &m);
    let lin_plus = linear.field();
    let lin_minus = conjugate_field(&linear, &lin_plus);

    checks.push(ctx.run(
        "affine.roundtrip_field_inversions",
        "field-inversion-roundtrip",
        "field -> inversions -> field reproduces the family",
        1e-6,
        |rng| {
            let mut worst = 0.0_f64;
            for _ in 0..5 {
                let x = ctx.sample(rng, 0.6);
                let z = ctx.sample(rng, 0.6);
                // inversions generated by the exact field match the family
                let via_ode = lin_field_exact.inversion(&x, &z)?;
                worst = worst.max((via_ode - linear.apply(&x, &z)).amax());
                // and the reconstructed field matches the exact one
                worst = worst.max(norm_max(
                    &(lin_plus.eval(&x, &z) - lin_field_exact.eval(&x, &z)),
                ));
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "affine.translation_reflection_split",
        "internal-translations",
        "translation equals forward inversion after inverse inversion",
        1e-6,
        |rng| {
            let mut worst = 0.0_f64;
            for _ in 0..4 {
                let from = ctx.sample(rng, 0.6);
                let to = ctx.sample(rng, 0.6);
                let z = ctx.sample(rng, 0.6);
                let g = internal_translation(&lin_field_exact, &Path::line(from.clone(), to.clone()))
                    .evaluate(&z)?;
                let via = linear.apply(&to, &linear.apply_inverse(&from, &z));
                worst = worst.max((g - via).amax());
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "affine.conjugate_inversions",
        "conjugate-field",
        "conjugate field generates the inverse inversions",
        1e-8,
        |rng| {
            let mut worst = 0.0_f64;
            for _ in 0..4 {
                let x = ctx.sample(rng, 0.6);
                let z = ctx.sample(rng, 0.6);
                let via_ode = lin_minus.inversion(&x, &z)?;
                worst = worst.max((via_ode - linear.apply_inverse(&x, &z)).amax());
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "affine.conjugate_cartan",
        "conjugate-field",
        "diagonal Cartan relation of the internal pair",
        1e-8,
        |rng| {
            let x = ctx.sample(rng, 0.6);
            let predicted = conjugate_cartan(&lin_field_exact.cartan(&x))?;
            let direct = DMatrix::identity(d, d) - m.clone().try_inverse().expect("invertible");
            Ok(norm_max(&(predicted - direct)))
        },
    ));

    checks.push(ctx.run(
        "affine.conjugate_zero_curvature",
        "zero-curvature",
        "conjugate field solves the structure equation",
        1e-6,
        |rng| {
            let mut worst = 0.0_f64;
            for _ in 0..3 {
                let x = ctx.sample(rng, 0.6);
                let z = ctx.sample(rng, 0.6);
                let d1 = ctx.sample(rng, 1.0);
                let d2 = ctx.sample(rng, 1.0);
                worst = worst.max(lin_minus.zero_curvature_residual(&x, &z, &d1, &d2));
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "affine.structural_equation",
        "structural-equation",
        "Cartan field satisfies the first structure equation",
        1e-5,
        |rng| {
            let x = ctx.sample(rng, 0.6);
            let gamma = linear.gamma_at(&x)?;
            let torsion = linear.torsion_at(&x)?;
            let u = ctx.sample(rng, 1.0);
            let v = ctx.sample(rng, 1.0);
            let mut worst =
                structural_equation_residual(&lin_field_exact, &gamma, &torsion, &x, &u, &v);
            if model.has_closed_reflections() && !model.is_flat() {
                let refl = InversiveStructure::reflective(model.clone())?;
                let a = refl.field();
                let xc = ctx.sample(rng, 0.5);
                let g = refl.gamma_at(&xc)?;
                let t = refl.torsion_at(&xc)?;
                worst = worst.max(structural_equation_residual(&a, &g, &t, &xc, &u, &v));
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "affine.boundary_condition",
        "boundary-conditions",
        "adjoint covariant derivative vanishes on the diagonal",
        1e-5,
        |rng| {
            let x = ctx.sample(rng, 0.6);
            let mut worst =
                lin_field_exact.boundary_condition_residual(&x, &linear.gamma_at(&x)?);
            if model.has_closed_reflections() && !model.is_flat() {
                let refl = InversiveStructure::reflective(model.clone())?;
                let xc = ctx.sample(rng, 0.5);
                worst = worst.max(
                    refl.field()
                        .boundary_condition_residual(&xc, &model.gamma(&xc)),
                );
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "affine.geodesic_inversion",
        "internal-geodesics",
        "forward inversion swaps the two exponentials",
        1e-7,
        |rng| {
            let mut worst = 0.0_f64;
            for _ in 0..4 {
                let x = ctx.sample(rng, 0.5);
                let v = ctx.sample(rng, 0.5);
                worst =
                    worst.max(geodesic_inversion_residual(&linear, &lin_plus, &lin_minus, &x, &v)?);
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "affine.fundamental_flat_exponential",
        "internal-geodesics",
        "flat fundamental exponentials are straight lines",
        1e-9,
        |rng| {
            let fundamental = InternalVectorField::fundamental_flat(flat.clone());
            let x = ctx.sample(rng, 0.8);
            let v = ctx.sample(rng, 0.8);
            let e = internal_geodesic(&fundamental, &x, &v, 1.0)?;
            Ok((e - (&x + &v)).amax())
        },
    ));

    checks.push(ctx.run_floor(
        "affine.skew_symmetry_discriminates",
        "skew-symmetry-affine",
        "the rotation family visibly violates the involutive law",
        1e-2,
        |rng| {
            let x = ctx.sample(rng, 0.6);
            let z = ctx.sample(rng, 0.6);
            Ok(lin_plus.skew_symmetry_residual(&linear, &x, &z))
        },
    ));

    checks.push(ctx.run(
        "affine.symplectic_inversive",
        "inversive-symplectic",
        "form preservation, cyclic torsion, Hamiltonian inversion, diagonal law",
        1e-5,
        |rng| {
            let samples: Vec<_> = (0..2)
                .map(|_| (ctx.sample(rng, 0.5), ctx.sample(rng, 0.5)))
                .collect();
            let rep = symplectic_inversive_checks(&linear, &samples)?;
            Ok(rep
                .nabla_omega
                .max(rep.cyclic_torsion)
                .max(rep.hamiltonian_inversion)
                .max(rep.diagonal_second_derivative))
        },
    ));

    checks.push(ctx.run_floor(
        "affine.cartan_spectrum_margin",
        "inversive-structure",
        "Cartan spectrum stays away from 0 and 1",
        0.1,
        |rng| {
            let x = ctx.sample(rng, 0.6);
            let mut margin = lin_plus.cartan_spectrum_margin(&x);
            if model.has_closed_reflections() && !model.is_flat() {
                let refl = InversiveStructure::reflective(model.clone())?;
                margin = margin.min(refl.field().cartan_spectrum_margin(&ctx.sample(rng, 0.5)));
            }
            Ok(margin)
        },
    ));

    if model.has_closed_reflections() && !model.is_flat() {
        checks.push(ctx.run(
            "affine.gamma_reconstruction",
            "inversive-structure",
            "connection recovered from the model symmetries",
            1e-5,
            |rng| {
                let refl = InversiveStructure::reflective(model.clone())?;
                let mut worst = 0.0_f64;
                for _ in 0..3 {
                    let x = ctx.sample(rng, 0.8);
                    let rec = refl.gamma_at(&x)?;
                    let gam = model.gamma(&x);
                    for l in 0..d {
                        for j in 0..d {
                            for k in 0..d {
                                worst = worst.max((rec[(l, j, k)] - gam[(l, j, k)]).abs());
                            }
                        }
                    }
                }
                Ok(worst)
            },
        ));
        checks.push(ctx.run(
            "affine.involutive_skew_symmetry",
            "skew-symmetry-affine",
            "the reflective field satisfies the involutive law",
            1e-6,
            |rng| {
                let refl = InversiveStructure::reflective(model.clone())?;
                let a = refl.field();
                let x = ctx.sample(rng, 0.5);
                let z = ctx.sample(rng, 0.5);
                Ok(a.skew_symmetry_residual(&refl, &x, &z))
            },
        ));
    }

    // affine translocation: a linear field on the flat model, the chart
    // rotation field on curved models with reflections
    checks.push(ctx.run(
        "affine.translocation_factorization",
        "affine-translocation",
        "flow factorizes through the trajectory path map",
        1e-6,
        |rng| {
            let mut worst = 0.0_f64;
            {
                let fundamental = InternalVectorField::fundamental_flat(flat.clone());
                let l = DMatrix::from_fn(d, d, |i, j| {
                    0.3 * ((i + 2 * j + 1) as f64 / (d * d) as f64) - if i == j { 0.1 } else { 0.0 }
                });
                let y = ctx.sample(rng, 0.5);
                let lc = l.clone();
                let tr = AffineTranslocation::new(&fundamental, move |x| &lc * x, &y, 1.0)?;
                let x = &y + ctx.sample(rng, 0.3);
                worst = worst.max(tr.factorization_residual(1.0, &x)?);
                worst = worst.max(tr.translocated_field(0.7, &y)?.amax());
            }
            if model.name() == "sphere-s2" {
                let refl = InversiveStructure::reflective(model.clone())?;
                let a = refl.field();
                let y = DVector::from_row_slice(&[0.3, 0.0]);
                let tr =
                    AffineTranslocation::new(&a, |x| DVector::from_row_slice(&[x[1], -x[0]]), &y, 0.6)?;
                let x = DVector::from_row_slice(&[0.25, 0.1]);
                worst = worst.max(tr.factorization_residual(0.6, &x)?);
            }
            Ok(worst)
        },
    ));

    checks.push(ctx.run(
        "affine.autolinear_differential",
        "affine-monodromy",
        "closed-form differential for auto-linear fields",
        1e-8,
        |rng| {
            let fundamental = InternalVectorField::fundamental_flat(flat.clone());
            let l = DMatrix::from_fn(d, d, |i, j| if i == j { 0.2 } else { 0.05 * (i as f64 - j as f64) });
            let y = ctx.sample(rng, 0.5);
            let lc = l.clone();
            let tr = AffineTranslocation::new(&fundamental, move |x| &lc * x, &y, 1.0)?;
            let gamma_at = |x: &DVector<f64>| -> Tensor3<f64> { flat.gamma(x) };
            // consistency holds exactly for a linear field
            let res = tr.consistency_residual(1.0, 3, &gamma_at);
            if res > 1e-8 {
                return Ok(res);
            }
            let closed = tr.autolinear_differential(1.0, &gamma_at)?;
            let direct = tr.base_flow_differential(1.0)?;
            Ok(norm_max(&(closed - direct)))
        },
    ));

    checks.push(ctx.run(
        "affine.anchored_linearization",
        "affine-translocation",
        "anchored linearization equals the conjugated field derivative",
        1e-6,
        |rng| {
            let fundamental = InternalVectorField::fundamental_flat(flat.clone());
            let l = DMatrix::from_fn(d, d, |i, j| 0.1 + 0.2 * ((i * d + j) as f64) / (d * d) as f64);
            let y = ctx.sample(rng, 0.4);
            let lc = l.clone();
            let tr = AffineTranslocation::new(&fundamental, move |x| &lc * x, &y, 0.8)?;
            let gamma_at = |x: &DVector<f64>| -> Tensor3<f64> { flat.gamma(x) };
            let got = tr.anchored_linearization(0.7)?;
            let expect = tr.transported_linearization(0.7, &gamma_at)?;
            Ok(norm_max(&(got - expect)))
        },
    ));

    checks
}
