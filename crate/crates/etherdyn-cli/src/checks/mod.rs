//! Check suites: the library invariants as named, seeded, timed records.

pub mod affine;
pub mod ether;
pub mod holonomy;
pub mod manifold;
pub mod paths;
pub mod phase;
pub mod transloc;

use crate::config::RunConfig;
use crate::report::{fnv1a, CheckRecord};
use etherdyn::ether::{EtherField, EtherStrategy};
use etherdyn::manifold::ManifoldModel;
use etherdyn::ode::OdeOptions;
use etherdyn::translocation::HamiltonianSystem;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

pub struct Ctx {
    pub cfg: RunConfig,
    pub model: ManifoldModel<f64>,
    pub field: EtherField<f64>,
}

impl Ctx {
    pub fn new(cfg: &RunConfig) -> Result<Self, String> {
        let model = match (cfg.model.as_str(), cfg.cap) {
            ("sphere-s2", Some(cap)) => ManifoldModel::<f64>::sphere_s2(cap),
            ("hyperbolic-h2", Some(cap)) => ManifoldModel::<f64>::hyperbolic_h2(cap),
            _ => ManifoldModel::<f64>::by_name(&cfg.model).map_err(|e| e.to_string())?,
        };
        let strategy = match cfg.strategy.as_str() {
            "auto" => None,
            "closed" => Some(EtherStrategy::ClosedForm),
            "line-integral" => Some(EtherStrategy::LineIntegral {
                nodes: cfg.quad_nodes,
                panels: cfg.quad_panels,
            }),
            "jet" => Some(EtherStrategy::Jet {
                order: 3,
                radius: cfg.jet_radius,
            }),
            other => return Err(format!("unknown strategy `{other}`")),
        };
        let mut field = match strategy {
            None => EtherField::for_model(&model).map_err(|e| e.to_string())?,
            Some(s) => EtherField::with_strategy(model.clone(), s).map_err(|e| e.to_string())?,
        };
        field.set_ode_options(OdeOptions::with_tol(cfg.ode_rtol, cfg.ode_atol));
        Ok(Self {
            cfg: cfg.clone(),
            model,
            field,
        })
    }

    /// Deterministic per-check generator: the stream depends on the run seed
    /// and the check id, not on execution order.
    pub fn rng(&self, check_id: &str) -> ChaCha8Rng {
        let mut bytes = check_id.as_bytes().to_vec();
        bytes.extend_from_slice(&self.cfg.seed.to_le_bytes());
        ChaCha8Rng::seed_from_u64(fnv1a(&bytes))
    }

    /// Uniform sample inside the model's test box.
    pub fn sample(&self, rng: &mut ChaCha8Rng, shrink: f64) -> DVector<f64> {
        let r = self.model.sample_radius() * shrink;
        DVector::from_fn(self.model.dim(), |_, _| rng.gen_range(-r..r))
    }

    pub fn system(&self) -> Result<HamiltonianSystem<f64>, String> {
        let name = self.cfg.hamiltonian_for(self.model.name());
        HamiltonianSystem::registry(&self.model, &name).map_err(|e| e.to_string())
    }

    /// Runs a residual computation and wraps it into a timed record.
    pub fn run(
        &self,
        check_id: &str,
        eq_tag: &str,
        inputs: &str,
        threshold: f64,
        body: impl FnOnce(&mut ChaCha8Rng) -> Result<f64, etherdyn::Error>,
    ) -> CheckRecord {
        let mut rng = self.rng(check_id);
        let start = Instant::now();
        let mut rec = match body(&mut rng) {
            Ok(residual) => CheckRecord::at_most(check_id, eq_tag, inputs, residual, threshold),
            Err(e) => CheckRecord::failed(check_id, eq_tag, e),
        };
        rec.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        rec
    }

    /// Like [`run`] for checks that must exceed a floor (slopes, margins).
    pub fn run_floor(
        &self,
        check_id: &str,
        eq_tag: &str,
        inputs: &str,
        floor: f64,
        body: impl FnOnce(&mut ChaCha8Rng) -> Result<f64, etherdyn::Error>,
    ) -> CheckRecord {
        let mut rng = self.rng(check_id);
        let start = Instant::now();
        let mut rec = match body(&mut rng) {
            Ok(value) => CheckRecord::at_least(check_id, eq_tag, inputs, value, floor),
            Err(e) => CheckRecord::failed(check_id, eq_tag, e),
        };
        rec.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        rec
    }
}

/// The `check` subcommand: every module suite that applies to the model.
pub fn full_suite(ctx: &Ctx) -> Vec<CheckRecord> {
    let mut all = Vec::new();
    all.extend(manifold::suite(ctx));
    all.extend(ether::suite(ctx));
    all.extend(paths::suite(ctx));
    all.extend(holonomy::suite(ctx));
    all.extend(transloc::suite(ctx));
    all.extend(phase::suite(ctx));
    all.extend(affine::suite(ctx));
    all
}
