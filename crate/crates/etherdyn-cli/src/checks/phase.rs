//! Generating-phase checks: the membrane area as a generating function.

use super::Ctx;
use crate::report::CheckRecord;
use etherdyn::path::Path;
use etherdyn::pathmap::path_symplectomorphism;
use etherdyn::translocation::{
    generating_phase, hamilton_jacobi_residual, AuxPath, PhaseOptions,
};
use nalgebra::DVector;

/// Named parametric path families for the probe path.
#[derive(Clone, Debug)]
pub enum PathSpec {
    /// Model-appropriate default: straight when flat, a geodesic arc
    /// otherwise.
    Auto,
    Line {
        from: DVector<f64>,
        to: DVector<f64>,
    },
    Geodesic {
        from: DVector<f64>,
        velocity: DVector<f64>,
    },
}

fn probe_path(ctx: &Ctx, spec: &PathSpec) -> Result<Path<f64>, etherdyn::Error> {
    let model = &ctx.model;
    match spec {
        PathSpec::Line { from, to } => Ok(Path::line(from.clone(), to.clone())),
        PathSpec::Geodesic { from, velocity } => {
            Path::geodesic(model, from.clone(), velocity.clone())
        }
        PathSpec::Auto => {
            if model.is_flat() {
                Ok(Path::line(
                    DVector::zeros(model.dim()),
                    DVector::from_fn(model.dim(), |i, _| if i == 0 { 0.8 } else { 0.3 }),
                ))
            } else {
                let scale = model.sample_radius();
                let p0 = DVector::from_row_slice(&[0.1 * scale, 0.0]);
                let v = DVector::from_row_slice(&[0.5 * scale, 0.2 * scale]);
                Path::geodesic(model, p0, v)
            }
        }
    }
}

pub fn suite(ctx: &Ctx) -> Vec<CheckRecord> {
    suite_at(ctx, None, &PathSpec::Auto)
}

pub fn suite_at(
    ctx: &Ctx,
    probe_override: Option<DVector<f64>>,
    spec: &PathSpec,
) -> Vec<CheckRecord> {
    let field = &ctx.field;
    let model = ctx.model.clone();
    let opts = PhaseOptions::default();
    let mut checks = Vec::new();

    let sigma = match probe_path(ctx, spec) {
        Ok(p) => p,
        Err(e) => return vec![CheckRecord::failed("phase.setup", "generating-phase", e)],
    };
    let map = path_symplectomorphism(field, &sigma);
    let probe = probe_override.unwrap_or_else(|| {
        let mut rng = ctx.rng("phase.probe");
        let (mid, _) = sigma.at(0.5);
        mid + ctx.sample(&mut rng, 0.15)
    });

    if model.is_flat() {
        checks.push(ctx.run(
            "phase.flat_oracle",
            "generating-phase",
            "membrane area matches the shoelace closed form",
            1e-8,
            |rng| {
                let a = sigma.end() - sigma.start();
                let omega = model.omega(&sigma.start());
                let mut worst = 0.0_f64;
                for _ in 0..2 {
                    let x = ctx.sample(rng, 0.6);
                    let gp = generating_phase(field, &map, &x, &opts)?;
                    // translation by a: fixed point at x - a/2, phase
                    // x^T omega a for the constant block form
                    let expect_fixed = &x - &a * 0.5;
                    worst = worst.max((gp.fixed_point.clone() - expect_fixed).amax());
                    let expect_phase = (x.transpose() * &omega * &a)[(0, 0)];
                    worst = worst.max((gp.phase - expect_phase).abs());
                }
                Ok(worst)
            },
        ));
    }

    checks.push(ctx.run(
        "phase.fixed_point",
        "generating-phase",
        "reflected map fixed point found by damped Newton",
        1e-9,
        |_rng| {
            let gp = generating_phase(field, &map, &probe, &opts)?;
            let back = field.reflect_fast(&probe, &gp.image_fixed_point)?;
            Ok((back - gp.fixed_point).amax())
        },
    ));

    checks.push(ctx.run(
        "phase.mesh_convergence",
        "generating-phase",
        "two consecutive mesh levels agree",
        1e-5,
        |_rng| {
            let gp = generating_phase(field, &map, &probe, &opts)?;
            Ok(gp.mesh_gap)
        },
    ));

    checks.push(ctx.run(
        "phase.differential_identity",
        "generating-phase",
        "phase differential equals minus the field at the fixed point",
        1e-4,
        |_rng| {
            let gp = generating_phase(field, &map, &probe, &opts)?;
            let ether = field.eval(&probe, &gp.fixed_point)?;
            Ok((gp.d_phase + ether).amax())
        },
    ));

    checks.push(ctx.run(
        "phase.hamilton_jacobi",
        "hamilton-jacobi",
        "endpoint variation obeys the evolution identity",
        1e-4,
        |_rng| hamilton_jacobi_residual(field, &sigma, &probe, &opts),
    ));

    checks.push(ctx.run(
        "phase.aux_path_independence",
        "generating-phase",
        "phase differential agrees across auxiliary-path choices",
        1e-5,
        |_rng| {
            let bulged = PhaseOptions {
                aux: AuxPath::Bulge(0.1),
                ..PhaseOptions::default()
            };
            let a = generating_phase(field, &map, &probe, &opts)?;
            let b = generating_phase(field, &map, &probe, &bulged)?;
            Ok((a.d_phase - b.d_phase).amax())
        },
    ));

    checks
}
