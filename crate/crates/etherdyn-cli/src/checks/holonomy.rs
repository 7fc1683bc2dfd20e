//! Loop maps, their linearizations, and the curvature functions.

use super::Ctx;
use crate::report::CheckRecord;
use etherdyn::holonomy::{
    diagonal_curvature_checks, dynamic_holonomy, ether_curvature, holonomy_conjugacy_residual,
    iterated_loop_map, kinematic_holonomy, rotation_angle, small_loop_expansion_check, Loop,
    SlopeReport,
};
use etherdyn::linalg::norm_max;
use etherdyn::path::Path;
use nalgebra::DVector;

pub fn suite(ctx: &Ctx) -> Vec<CheckRecord> {
    let basepoint = DVector::zeros(ctx.model.dim());
    let (records, _) = suite_with_sweep(ctx, &basepoint, "circle");
    records
}

/// The holonomy checks plus the area-sweep table behind the slope check.
/// Loops are centered around `basepoint`; `family` picks circles or
/// smoothed squares for the plain loop checks.
pub fn suite_with_sweep(
    ctx: &Ctx,
    basepoint: &DVector<f64>,
    family: &str,
) -> (Vec<CheckRecord>, Option<SlopeReport<f64>>) {
    let model = ctx.model.clone();
    let field = &ctx.field;
    let mut checks = Vec::new();
    let mut sweep: Option<SlopeReport<f64>> = None;
    let mk_loop = |center: DVector<f64>, size: f64| -> Result<Loop<f64>, etherdyn::Error> {
        match family {
            "square" => Loop::square(center, size * size, 0, 1),
            _ => Loop::circle(center, size, 0, 1, true),
        }
    };

    if model.is_flat() {
        checks.push(ctx.run(
            "holonomy.flat_loop_identity",
            "dynamic-holonomy",
            "every flat loop map is the identity",
            1e-9,
            |rng| {
                let lp = mk_loop(ctx.sample(rng, 0.4), 0.3)?;
                let m = dynamic_holonomy(field, &lp);
                let mut worst = 0.0_f64;
                for _ in 0..5 {
                    let z = ctx.sample(rng, 1.0);
                    worst = worst.max((m.evaluate(&z)? - z).amax());
                }
                Ok(worst)
            },
        ));
    } else {
        checks.push(ctx.run(
            "holonomy.basepoint_fixed",
            "dynamic-holonomy",
            "loop map fixes its basepoint",
            1e-7,
            |rng| {
                let center = basepoint + ctx.sample(rng, 0.2);
                let lp = mk_loop(center, 0.2 * model.sample_radius())?;
                let m = dynamic_holonomy(field, &lp);
                let base = lp.basepoint();
                Ok((m.evaluate(&base)? - base).amax())
            },
        ));
        checks.push(ctx.run_floor(
            "holonomy.nontrivial_away_from_basepoint",
            "dynamic-holonomy",
            "a curved loop map moves some other point",
            1e-4,
            |rng| {
                let lp = mk_loop(basepoint.clone(), 0.5 * model.sample_radius())?;
                let m = dynamic_holonomy(field, &lp);
                let z = ctx.sample(rng, 0.4);
                Ok((m.evaluate(&z)? - z).amax())
            },
        ));
    }

    checks.push(ctx.run(
        "holonomy.kinematic_vs_transport",
        "kinematic-holonomy",
        "loop-map differential equals parallel transport",
        1e-5,
        |rng| {
            let center = basepoint + ctx.sample(rng, 0.15);
            let lp = mk_loop(center, 0.3 * model.sample_radius())?;
            let dhol = kinematic_holonomy(field, &lp)?.matrix;
            let v = model.parallel_transport(lp.path())?.matrix;
            Ok(norm_max(&(dhol - v)))
        },
    ));

    if model.name() == "sphere-s2" {
        checks.push(ctx.run(
            "holonomy.gauss_bonnet_angle",
            "kinematic-holonomy",
            "rotation angle vs enclosed spherical area (relative)",
            0.01,
            |_rng| {
                // chart circle around the origin of spherical area 0.1
                let area = 0.1_f64;
                let r = (area / (4.0 * std::f64::consts::PI - area)).sqrt();
                let lp = Loop::circle(DVector::zeros(2), r, 0, 1, true)?;
                let m = kinematic_holonomy(field, &lp)?.matrix;
                let angle = rotation_angle(&m).abs();
                Ok((angle - area).abs() / area)
            },
        ));
    }

    checks.push(ctx.run(
        "holonomy.double_traversal",
        "dynamic-holonomy",
        "a doubled loop squares the holonomy",
        1e-6,
        |_rng| {
            let lp = mk_loop(basepoint.clone(), 0.4 * model.sample_radius())?;
            let single = kinematic_holonomy(field, &lp)?.matrix;
            let twice = iterated_loop_map(field, &lp, 2)?
                .differential(&lp.basepoint())?
                .matrix;
            Ok(norm_max(&(twice - &single * &single)))
        },
    ));

    checks.push(ctx.run(
        "holonomy.curvature_function_antisymmetry",
        "curvature-functions",
        "swapping the index pair flips the sign",
        1e-15,
        |rng| {
            let mut worst = 0.0_f64;
            for _ in 0..5 {
                let z = ctx.sample(rng, 0.6);
                let a = ether_curvature(field, basepoint, 0, 1, &z)?;
                let b = ether_curvature(field, basepoint, 1, 0, &z)?;
                worst = worst.max((a + b).abs());
                worst = worst.max(ether_curvature(field, basepoint, 0, 0, &z)?.abs());
            }
            Ok(worst)
        },
    ));

    let diag = diagonal_curvature_checks(field, basepoint);
    match diag {
        Ok(rep) => {
            checks.push(CheckRecord::at_most(
                "holonomy.curvature_value_diagonal",
                "holonomy-generators",
                "curvature functions equal the form at the basepoint",
                rep.value_residual,
                1e-8,
            ));
            checks.push(CheckRecord::at_most(
                "holonomy.curvature_gradient_diagonal",
                "holonomy-generators",
                "curvature functions are stationary at the basepoint",
                rep.gradient_residual,
                1e-5,
            ));
            checks.push(CheckRecord::at_most(
                "holonomy.curvature_hessian_diagonal",
                "holonomy-generators",
                "Hessian equals the form-curvature coupling",
                rep.hessian_residual,
                1e-3,
            ));
            checks.push(CheckRecord::at_most(
                "holonomy.sp_membership",
                "holonomy-generators",
                "curvature matrices lie in the symplectic algebra",
                rep.sp_residual,
                1e-10,
            ));
        }
        Err(e) => checks.push(CheckRecord::failed(
            "holonomy.curvature_value_diagonal",
            "holonomy-generators",
            e,
        )),
    }

    if !ctx.cfg.areas.is_empty() && !model.is_flat() {
        let mut rec = ctx.run_floor(
            "holonomy.small_loop_slope",
            "small-loop-expansion",
            "",
            1.5,
            |rng| {
                let z = basepoint + ctx.sample(rng, 0.35);
                let rep =
                    small_loop_expansion_check(field, basepoint, 0, 1, &ctx.cfg.areas, &z)?;
                sweep = Some(rep.clone());
                Ok(rep.slope)
            },
        );
        rec.inputs = format!("areas {:?} (pass iff slope >= 1.5)", ctx.cfg.areas);
        checks.push(rec);
    } else if !ctx.cfg.areas.is_empty() {
        checks.push(ctx.run(
            "holonomy.small_loop_flat",
            "small-loop-expansion",
            "flat loop maps match the identity prediction",
            1e-9,
            |rng| {
                let z = ctx.sample(rng, 1.0);
                let mut worst = 0.0_f64;
                for &eps in &ctx.cfg.areas {
                    if eps == 0.0 {
                        continue;
                    }
                    let lp = Loop::square(basepoint.clone(), eps, 0, 1)?;
                    let inv = dynamic_holonomy(field, &lp).inverse(&z)?;
                    worst = worst.max((inv - &z).amax());
                }
                Ok(worst)
            },
        ));
    }

    checks.push(ctx.run(
        "holonomy.conjugacy",
        "holonomy-conjugacy",
        "holonomy at two basepoints is conjugate through the joining map",
        1e-6,
        |rng| {
            let x = basepoint.clone();
            let y = basepoint + ctx.sample(rng, 0.3);
            let r = 0.3 * model.sample_radius();
            let mut center = x.clone();
            center[0] -= r;
            let lam = Loop::circle(center, r, 0, 1, true)?;
            let sigma = Path::line(x, y);
            let z = ctx.sample(rng, 0.4);
            holonomy_conjugacy_residual(field, &lam, &sigma, &z)
        },
    ));

    (checks, sweep)
}

/// Sweep table for the holonomy subcommand CSV.
pub fn sweep_csv(model: &str, rep: &SlopeReport<f64>) -> String {
    let mut out = String::from("model,j,k,eps,residual,slope\n");
    for (e, r) in rep.eps.iter().zip(&rep.residuals) {
        out.push_str(&format!("{model},0,1,{e:e},{r:e},{:e}\n", rep.slope));
    }
    out
}
