//! Run configuration: a flat key=value file with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, serde::Serialize)]
pub struct RunConfig {
    pub model: String,
    /// Chart domain cap override for the curved models.
    pub cap: Option<f64>,
    pub strategy: String,
    pub hamiltonian: String,
    pub seed: u64,
    pub samples: usize,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub fd_step: f64,
    pub fd_step2: f64,
    pub jet_radius: f64,
    pub quad_nodes: usize,
    pub quad_panels: usize,
    /// Loop-area sweep for the holonomy subcommand.
    pub areas: Vec<f64>,
    /// Time sweep for the translocation subcommand.
    pub times: Vec<f64>,
    pub out_dir: PathBuf,
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: "sphere-s2".into(),
            cap: None,
            strategy: "auto".into(),
            hamiltonian: "auto".into(),
            seed: 0,
            samples: 50,
            ode_rtol: 1e-10,
            ode_atol: 1e-10,
            fd_step: 1e-5,
            fd_step2: 1e-3,
            jet_radius: 0.2,
            quad_nodes: 16,
            quad_panels: 4,
            areas: vec![0.04, 0.02, 0.01, 0.005],
            times: vec![0.25, 0.5, 1.0],
            out_dir: PathBuf::from("out"),
            timings: false,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse_list(v: &str) -> Result<Vec<f64>, ConfigError> {
    if v.trim().is_empty() {
        return Ok(vec![]);
    }
    v.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("bad number `{p}` in list")))
        })
        .collect()
}

impl RunConfig {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key=value", lineno + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut cfg = Self::default();
        for (k, v) in map {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |what: &str| ConfigError(format!("bad value `{value}` for {what}"));
        match key {
            "model" => self.model = value.to_string(),
            "cap" => self.cap = Some(value.parse().map_err(|_| bad("cap"))?),
            "strategy" => self.strategy = value.to_string(),
            "hamiltonian" => self.hamiltonian = value.to_string(),
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "samples" => self.samples = value.parse().map_err(|_| bad("samples"))?,
            "ode_rtol" => self.ode_rtol = value.parse().map_err(|_| bad("ode_rtol"))?,
            "ode_atol" => self.ode_atol = value.parse().map_err(|_| bad("ode_atol"))?,
            "fd_step" => self.fd_step = value.parse().map_err(|_| bad("fd_step"))?,
            "fd_step2" => self.fd_step2 = value.parse().map_err(|_| bad("fd_step2"))?,
            "jet_radius" => self.jet_radius = value.parse().map_err(|_| bad("jet_radius"))?,
            "quad_nodes" => self.quad_nodes = value.parse().map_err(|_| bad("quad_nodes"))?,
            "quad_panels" => self.quad_panels = value.parse().map_err(|_| bad("quad_panels"))?,
            "areas" => self.areas = parse_list(value)?,
            "times" => self.times = parse_list(value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "timings" => self.timings = value.parse().map_err(|_| bad("timings"))?,
            _ => return Err(ConfigError(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("ode_rtol", self.ode_rtol),
            ("ode_atol", self.ode_atol),
            ("fd_step", self.fd_step),
            ("fd_step2", self.fd_step2),
            ("jet_radius", self.jet_radius),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError(format!("{name} must be positive, got {v}")));
            }
        }
        if self.quad_nodes < 2 {
            return Err(ConfigError("quad_nodes must be at least 2".into()));
        }
        if self.quad_panels == 0 {
            return Err(ConfigError("quad_panels must be positive".into()));
        }
        if self.samples == 0 {
            return Err(ConfigError("samples must be positive".into()));
        }
        if let Some(cap) = self.cap {
            if !(cap > 0.0) {
                return Err(ConfigError(format!("cap must be positive, got {cap}")));
            }
        }
        if self.areas.iter().any(|&a| a < 0.0) {
            return Err(ConfigError("areas must be non-negative".into()));
        }
        Ok(())
    }

    /// Default Hamiltonian for a model when the config says `auto`.
    pub fn hamiltonian_for(&self, model: &str) -> String {
        if self.hamiltonian != "auto" {
            return self.hamiltonian.clone();
        }
        match model {
            "sphere-s2" => "height".into(),
            "hyperbolic-h2" => "quadratic".into(),
            _ => "oscillator".into(),
        }
    }
}
