//! Command-line harness: runs the invariant suites per module, parameter
//! sweeps, and writes machine-readable reports (JSON + CSV). Exit status is
//! 0 when every check passes, 1 on check failures, 2 on configuration
//! errors.

mod checks;
mod config;
mod report;

use checks::Ctx;
use clap::{Parser, Subcommand};
use config::RunConfig;
use nalgebra::DVector;
use report::{CheckRecord, Report};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "etherdyn", version, about = "Dynamic geometry on symplectic and affine manifolds: invariant suites and sweeps")]
struct Cli {
    /// Key=value config file; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for report.json / report.csv (also via
    /// ETHERDYN_OUT_DIR).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Model name: flat-r2, flat-r4, sphere-s2, hyperbolic-h2.
    #[arg(long, global = true)]
    model: Option<String>,

    /// Field strategy: auto, closed, line-integral, jet.
    #[arg(long, global = true)]
    strategy: Option<String>,

    /// Hamiltonian from the registry (auto picks one per model).
    #[arg(long, global = true)]
    hamiltonian: Option<String>,

    /// Chart domain cap for the curved models.
    #[arg(long, global = true)]
    cap: Option<f64>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Loop-area sweep, comma separated.
    #[arg(long, global = true)]
    areas: Option<String>,

    /// Time sweep, comma separated.
    #[arg(long, global = true)]
    times: Option<String>,

    /// Include wall times in the report artifacts (breaks byte-for-byte
    /// reproducibility of the files).
    #[arg(long, global = true)]
    timings: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every module invariant suite for the selected model.
    Check,
    /// Integrate a Hamiltonian flow and emit the trajectory.
    Flow {
        /// Final time.
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Start point, comma separated; a seeded sample when omitted.
        #[arg(long)]
        x: Option<String>,
    },
    /// Loop holonomy residuals and the area-sweep slope table.
    Holonomy {
        /// Loop basepoint, comma separated (chart origin by default).
        #[arg(long)]
        basepoint: Option<String>,
        /// Loop family: circle or square.
        #[arg(long, default_value = "circle")]
        loop_family: String,
    },
    /// Translocation checks around an anchor point.
    Translocate {
        /// Anchor point, comma separated; a seeded sample when omitted.
        #[arg(long)]
        y: Option<String>,
    },
    /// Generating-phase checks at a probe point.
    Phase {
        /// Probe point, comma separated; near the path midpoint by default.
        #[arg(long)]
        x: Option<String>,
        /// Path family: auto, line, geodesic.
        #[arg(long, default_value = "auto")]
        path_family: String,
        /// Path start (line and geodesic families).
        #[arg(long)]
        from: Option<String>,
        /// Path end (line family).
        #[arg(long)]
        to: Option<String>,
        /// Initial velocity (geodesic family).
        #[arg(long)]
        velocity: Option<String>,
    },
    /// Internal-field and inversive-structure checks.
    Affine {
        /// Linear-family matrix, rows separated by ';', entries by ','.
        #[arg(long)]
        m: Option<String>,
    },
}

fn parse_vec(s: &str) -> Result<DVector<f64>, String> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    vals.map(DVector::from_vec)
        .map_err(|e| format!("bad vector `{s}`: {e}"))
}

fn parse_matrix(s: &str) -> Result<nalgebra::DMatrix<f64>, String> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| format!("bad matrix `{s}`: {e}"))
        })
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix `{s}` is not square"));
    }
    Ok(nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    if cli.config.is_none() {
        if let Ok(dir) = std::env::var("ETHERDYN_OUT_DIR") {
            cfg.out_dir = PathBuf::from(dir);
        }
    } else if let Ok(dir) = std::env::var("ETHERDYN_OUT_DIR") {
        // env var still applies unless the file or a flag set the directory
        if cfg.out_dir == RunConfig::default().out_dir {
            cfg.out_dir = PathBuf::from(dir);
        }
    }
    let mut set = |k: &str, v: String| -> Result<(), String> {
        cfg.set(k, &v).map_err(|e| e.to_string())
    };
    if let Some(v) = &cli.model {
        set("model", v.clone())?;
    }
    if let Some(v) = &cli.strategy {
        set("strategy", v.clone())?;
    }
    if let Some(v) = &cli.hamiltonian {
        set("hamiltonian", v.clone())?;
    }
    if let Some(v) = cli.cap {
        set("cap", v.to_string())?;
    }
    if let Some(v) = cli.seed {
        set("seed", v.to_string())?;
    }
    if let Some(v) = cli.samples {
        set("samples", v.to_string())?;
    }
    if let Some(v) = &cli.areas {
        set("areas", v.clone())?;
    }
    if let Some(v) = &cli.times {
        set("times", v.clone())?;
    }
    if cli.timings {
        set("timings", "true".to_string())?;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<(Report, Vec<(String, String)>), String> {
    let ctx = Ctx::new(cfg)?;
    let mut artifacts: Vec<(String, String)> = Vec::new();
    let (name, records): (&str, Vec<CheckRecord>) = match &cli.cmd {
        Cmd::Check => ("check", checks::full_suite(&ctx)),
        Cmd::Flow { t, x } => {
            let system = ctx.system()?;
            let x0 = match x {
                Some(s) => parse_vec(s)?,
                None => {
                    let mut rng = ctx.rng("flow.start");
                    ctx.sample(&mut rng, 0.7)
                }
            };
            let mut recs = Vec::new();
            match system.trajectory(&x0, *t) {
                Ok(traj) => {
                    let mut csv = String::from("t");
                    for i in 0..ctx.model.dim() {
                        csv.push_str(&format!(",x{}", i + 1));
                    }
                    csv.push_str(",energy\n");
                    let steps = 100;
                    for i in 0..=steps {
                        let tau = t * (i as f64) / steps as f64;
                        let p = traj.eval(tau);
                        csv.push_str(&format!("{tau:e}"));
                        for v in p.iter() {
                            csv.push_str(&format!(",{v:e}"));
                        }
                        csv.push_str(&format!(",{:e}\n", system.energy(&p)));
                    }
                    artifacts.push(("trajectory.csv".into(), csv));
                }
                Err(e) => {
                    recs.push(CheckRecord::failed(
                        "flow.trajectory",
                        "external-hamiltonian",
                        e,
                    ));
                    return Ok((Report::new("flow", cfg, recs), artifacts));
                }
            }
            recs.push(ctx.run(
                "flow.energy_drift",
                "external-hamiltonian",
                "energy along the trajectory",
                1e-8,
                |_rng| system.energy_drift(*t, &x0),
            ));
            recs.push(ctx.run(
                "flow.symplectic_differential",
                "external-hamiltonian",
                "flow differential preserves the form",
                1e-6,
                |_rng| {
                    let j = system.flow_differential(*t, &x0)?;
                    let end = system.flow(*t, &x0)?;
                    let pulled = j.transpose() * ctx.model.omega(&end) * &j;
                    Ok(etherdyn::linalg::norm_max(&(pulled - ctx.model.omega(&x0))))
                },
            ));
            ("flow", recs)
        }
        Cmd::Holonomy {
            basepoint,
            loop_family,
        } => {
            let bp = match basepoint {
                Some(s) => parse_vec(s)?,
                None => DVector::zeros(ctx.model.dim()),
            };
            let (recs, sweep) = checks::holonomy::suite_with_sweep(&ctx, &bp, loop_family);
            if let Some(rep) = sweep {
                artifacts.push((
                    "holonomy_sweep.csv".into(),
                    checks::holonomy::sweep_csv(ctx.model.name(), &rep),
                ));
            }
            ("holonomy", recs)
        }
        Cmd::Translocate { y } => {
            let anchor = match y {
                Some(s) => Some(parse_vec(s)?),
                None => None,
            };
            ("translocate", checks::transloc::suite_at(&ctx, anchor))
        }
        Cmd::Phase {
            x,
            path_family,
            from,
            to,
            velocity,
        } => {
            let probe = match x {
                Some(s) => Some(parse_vec(s)?),
                None => None,
            };
            let need = |o: &Option<String>, what: &str| -> Result<DVector<f64>, String> {
                match o {
                    Some(s) => parse_vec(s),
                    None => Err(format!("path family `{path_family}` needs --{what}")),
                }
            };
            let spec = match path_family.as_str() {
                "auto" => checks::phase::PathSpec::Auto,
                "line" => checks::phase::PathSpec::Line {
                    from: need(from, "from")?,
                    to: need(to, "to")?,
                },
                "geodesic" => checks::phase::PathSpec::Geodesic {
                    from: need(from, "from")?,
                    velocity: need(velocity, "velocity")?,
                },
                other => return Err(format!("unknown path family `{other}`")),
            };
            ("phase", checks::phase::suite_at(&ctx, probe, &spec))
        }
        Cmd::Affine { m } => {
            let matrix = match m {
                Some(s) => Some(parse_matrix(s)?),
                None => None,
            };
            ("affine", checks::affine::suite_with_matrix(&ctx, matrix))
        }
    };
    Ok((Report::new(name, cfg, records), artifacts))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &cfg) {
        Ok((report, artifacts)) => {
            if let Err(e) = report.write(&cfg.out_dir) {
                eprintln!("cannot write report: {e}");
                return ExitCode::from(2);
            }
            for (name, contents) in &artifacts {
                if let Err(e) = std::fs::write(cfg.out_dir.join(name), contents) {
                    eprintln!("cannot write {name}: {e}");
                    return ExitCode::from(2);
                }
            }
            let mut out = std::io::stdout().lock();
            let _ = report.print_summary(&mut out);
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
    }
}
