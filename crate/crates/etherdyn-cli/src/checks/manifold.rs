//! Model-level invariants: the form, the connection, derived tensors and
//! parallel transport.

use super::Ctx;
use crate::report::CheckRecord;
use etherdyn::linalg::norm_max;
use etherdyn::path::Path;
use nalgebra::DMatrix;

pub fn suite(ctx: &Ctx) -> Vec<CheckRecord> {
    let model = ctx.model.clone();
    let d = model.dim();
    let id = DMatrix::<f64>::identity(d, d);

    vec![
        ctx.run(
            "manifold.form_antisymmetry",
            "symplectic-form",
            "100 chart points",
            1e-12,
            |rng| {
                let mut worst = 0.0_f64;
                for _ in 0..100 {
                    let x = ctx.sample(rng, 1.0);
                    let om = model.omega(&x);
                    worst = worst.max(norm_max(&(&om + om.transpose())));
                }
                Ok(worst)
            },
        ),
        ctx.run(
            "manifold.form_inverse",
            "poisson-inverse",
            "100 chart points",
            1e-12,
            |rng| {
                let mut worst = 0.0_f64;
                for _ in 0..100 {
                    let x = ctx.sample(rng, 1.0);
                    let prod = model.omega(&x) * model.poisson_tensor(&x)?;
                    worst = worst.max(norm_max(&(prod - &id)));
                }
                Ok(worst)
            },
        ),
        ctx.run(
            "manifold.connection_preserves_form",
            "symplectic-connection",
            "20 chart points, finite differences",
            1e-6,
            |rng| {
                let mut worst = 0.0_f64;
                for _ in 0..20 {
                    let x = ctx.sample(rng, 0.9);
                    worst = worst.max(model.symplectic_connection_residual(&x));
                }
                Ok(worst)
            },
        ),
        ctx.run(
            "manifold.torsion_free",
            "connection",
            "10 chart points",
            1e-14,
            |rng| {
                let mut worst = 0.0_f64;
                for _ in 0..10 {
                    let x = ctx.sample(rng, 0.9);
                    worst = worst.max(model.torsion(&x).norm_max());
                }
                Ok(worst)
            },
        ),
        ctx.run(
            "manifold.curvature_antisymmetry",
            "curvature-tensor",
            "10 chart points",
            1e-14,
            |rng| {
                let mut worst = 0.0_f64;
                for _ in 0..10 {
                    let x = ctx.sample(rng, 0.9);
                    let r = model.curvature_tensor(&x)?;
                    for s in 0..d {
                        for m in 0..d {
                            for j in 0..d {
                                for k in 0..d {
                                    worst = worst.max((r[(s, m, j, k)] + r[(s, m, k, j)]).abs());
                                }
                            }
                        }
                    }
                }
                Ok(worst)
            },
        ),
        ctx.run(
            "manifold.transport_composition",
            "parallel-transport",
            "5 two-leg paths",
            1e-8,
            |rng| {
                let mut worst = 0.0_f64;
                for _ in 0..5 {
                    let a = ctx.sample(rng, 0.7);
                    let b = ctx.sample(rng, 0.7);
                    let c = ctx.sample(rng, 0.7);
                    let p1 = Path::line(a, b.clone());
                    let p2 = Path::line(b, c);
                    let whole = p1.then(&p2)?;
                    let v1 = model.parallel_transport(&p1)?.matrix;
                    let v2 = model.parallel_transport(&p2)?.matrix;
                    let v = model.parallel_transport(&whole)?.matrix;
                    worst = worst.max(norm_max(&(v - v2 * v1)));
                }
                Ok(worst)
            },
        ),
        ctx.run(
            "manifold.transport_symplectic",
            "parallel-transport",
            "5 paths",
            1e-7,
            |rng| {
                let mut worst = 0.0_f64;
                for _ in 0..5 {
                    let a = ctx.sample(rng, 0.8);
                    let b = ctx.sample(rng, 0.8);
                    let v = model.parallel_transport(&Path::line(a, b))?;
                    worst = worst.max(v.symplectic_residual(&model));
                }
                Ok(worst)
            },
        ),
        ctx.run(
            "manifold.transport_reversal",
            "parallel-transport",
            "forward then backward",
            1e-8,
            |rng| {
                let a = ctx.sample(rng, 0.8);
                let b = ctx.sample(rng, 0.8);
                let fwd = Path::line(a, b);
                let round = fwd.then(&fwd.reversed())?;
                let v = model.parallel_transport(&round)?.matrix;
                Ok(norm_max(&(v - &id)))
            },
        ),
    ]
}
