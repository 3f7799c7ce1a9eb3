//! Experiment configuration: TOML file, then environment variables and
//! flags on top.
//!
//! File format (every key optional):
//!
//! ```toml
//! seed = 7
//! format = "csv"            # or "json"
//! output = "out.csv"        # stdout when absent
//! threads = 4
//! tol = 1e-8                # relative tolerance of the cooperation integrals
//!
//! [env]                     # micrometre-based units
//! r1_um = 50.0
//! count = 100.0             # expected bacteria λπR1²; or density_per_um2
//! eta = 5
//! k = 10.0                  # 1/s
//! q = 1000.0                # molecules/s
//! d = 5.5e-10               # m²/s
//! r0_um = 0.757
//!
//! [sim]
//! realizations = 1000
//! dt = 2.6e-5               # s
//! sample_time = 1.0         # s
//! bacteria_diffusion = 0.0  # m²/s
//! engine = "snapshot"       # or "stepped"
//!
//! [sweep]
//! param = "eta"             # any [env] or [sim] key
//! values = [1, 2, 3]
//! ```

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use quorum_core::params::{density_for_count, per_um2_to_per_m2, EnvParams, UM};
use quorum_core::simulator::{default_dt, Engine, SimConfig, DEFAULT_SAMPLE_TIME};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EngineArg {
    Snapshot,
    Stepped,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Snapshot => Engine::Snapshot,
            EngineArg::Stepped => Engine::Stepped,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct EnvArgs {
    /// Population radius R1 (µm)
    #[arg(long, env = "QUORUM_R1_UM", global = true)]
    pub r1_um: Option<f64>,
    /// Expected number of bacteria λπR1²
    #[arg(long, env = "QUORUM_COUNT", global = true, conflicts_with = "density_per_um2")]
    pub count: Option<f64>,
    /// Bacteria density λ (1/µm²)
    #[arg(long, env = "QUORUM_DENSITY_PER_UM2", global = true)]
    pub density_per_um2: Option<f64>,
    /// Detection threshold η
    #[arg(long, env = "QUORUM_ETA", global = true)]
    pub eta: Option<u32>,
    /// Degradation rate k (1/s)
    #[arg(long, env = "QUORUM_K", global = true)]
    pub k: Option<f64>,
    /// Emission rate q (molecules/s)
    #[arg(long, env = "QUORUM_Q", global = true)]
    pub q: Option<f64>,
    /// Molecule diffusion coefficient D (m²/s)
    #[arg(long, env = "QUORUM_D", global = true)]
    pub d: Option<f64>,
    /// Receiver radius R0 (µm)
    #[arg(long, env = "QUORUM_R0_UM", global = true)]
    pub r0_um: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct SimArgs {
    /// Number of independent realizations
    #[arg(long, env = "QUORUM_REALIZATIONS", global = true)]
    pub realizations: Option<u64>,
    /// Time step Δt (s)
    #[arg(long, env = "QUORUM_DT", global = true)]
    pub dt: Option<f64>,
    /// Sampling instant t (s)
    #[arg(long, env = "QUORUM_SAMPLE_TIME", global = true)]
    pub sample_time: Option<f64>,
    /// Diffusion coefficient of the bacteria D_b (m²/s)
    #[arg(long, env = "QUORUM_BACTERIA_DIFFUSION", global = true)]
    pub bacteria_diffusion: Option<f64>,
    /// Simulation engine
    #[arg(long, env = "QUORUM_ENGINE", global = true)]
    pub engine: Option<EngineArg>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub tol: Option<f64>,
    #[serde(default)]
    pub env: EnvArgs,
    #[serde(default)]
    pub sim: SimArgs,
    pub sweep: Option<Sweep>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Global options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; flags and QUORUM_* variables override it
    #[arg(long, env = "QUORUM_CONFIG", global = true)]
    pub config: Option<PathBuf>,
    /// Master seed
    #[arg(long, env = "QUORUM_SEED", global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, env = "QUORUM_THREADS", global = true)]
    pub threads: Option<usize>,
    /// Relative tolerance of the cooperation field integrals
    #[arg(long, env = "QUORUM_TOL", global = true)]
    pub tol: Option<f64>,
    /// Output file (stdout when absent); a manifest goes next to it
    #[arg(long, short, env = "QUORUM_OUTPUT", global = true)]
    pub output: Option<PathBuf>,
    /// Output format
    #[arg(long, env = "QUORUM_FORMAT", global = true)]
    pub format: Option<Format>,
    /// Sweep parameter name (an env or sim key), used with --values
    #[arg(long, env = "QUORUM_SWEEP", global = true, requires = "values")]
    pub sweep: Option<String>,
    /// Comma-separated sweep values
    #[arg(long, env = "QUORUM_VALUES", global = true, value_delimiter = ',', num_args = 0.., requires = "sweep")]
    pub values: Option<Vec<f64>>,
    #[command(flatten)]
    pub env: EnvArgs,
    #[command(flatten)]
    pub sim: SimArgs,
}

/// Fully resolved configuration; serialized into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub command: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub tol: Option<f64>,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub env: EnvArgs,
    pub sim: SimArgs,
    pub sweep: Option<Sweep>,
}

pub const ENV_KEYS: [&str; 8] = ["r1_um", "count", "density_per_um2", "eta", "k", "q", "d", "r0_um"];
pub const SIM_KEYS: [&str; 5] = ["realizations", "dt", "sample_time", "bacteria_diffusion", "engine"];

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

impl Resolved {
    pub fn new(command: &str, g: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &g.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let e = &g.env;
        let fe = &file.env;
        let mut env = EnvArgs {
            r1_um: pick(&e.r1_um, &fe.r1_um),
            count: pick(&e.count, &fe.count),
            density_per_um2: pick(&e.density_per_um2, &fe.density_per_um2),
            eta: pick(&e.eta, &fe.eta),
            k: pick(&e.k, &fe.k),
            q: pick(&e.q, &fe.q),
            d: pick(&e.d, &fe.d),
            r0_um: pick(&e.r0_um, &fe.r0_um),
        };
        // A flag for one density form overrides the other form from the file.
        if e.count.is_some() {
            env.density_per_um2 = None;
        } else if e.density_per_um2.is_some() {
            env.count = None;
        }
        if env.count.is_some() && env.density_per_um2.is_some() {
            return Err(CliError::Config("give either count or density_per_um2, not both".into()));
        }
        let s = &g.sim;
        let fs = &file.sim;
        let sim = SimArgs {
            realizations: pick(&s.realizations, &fs.realizations),
            dt: pick(&s.dt, &fs.dt),
            sample_time: pick(&s.sample_time, &fs.sample_time),
            bacteria_diffusion: pick(&s.bacteria_diffusion, &fs.bacteria_diffusion),
            engine: pick(&s.engine, &fs.engine),
        };
        let sweep = match (&g.sweep, &g.values) {
            (Some(p), Some(v)) => Some(Sweep {
                param: p.clone(),
                values: v.clone(),
            }),
            _ => file.sweep.clone(),
        };
        if let Some(sw) = &sweep {
            if sw.values.is_empty() {
                return Err(CliError::Config(format!("sweep over '{}' has an empty value list", sw.param)));
            }
            if !ENV_KEYS.contains(&sw.param.as_str()) && !SIM_KEYS.contains(&sw.param.as_str()) || sw.param == "engine" {
                return Err(CliError::Config(format!(
                    "unknown sweep parameter '{}'; expected one of {} or {}",
                    sw.param,
                    ENV_KEYS.join(", "),
                    SIM_KEYS[..4].join(", ")
                )));
            }
        }
        let tol = pick(&g.tol, &file.tol);
        if let Some(t) = tol {
            if !(t > 0.0 && t < 1e-2) {
                return Err(CliError::Config(format!("tol must lie in (0, 1e-2), got {t}")));
            }
        }
        let threads = pick(&g.threads, &file.threads);
        if threads == Some(0) {
            return Err(CliError::Config("threads must be >= 1".into()));
        }
        let r = Resolved {
            command: command.to_string(),
            seed: pick(&g.seed, &file.seed).unwrap_or(1),
            threads,
            tol,
            format: pick(&g.format, &file.format).unwrap_or_default(),
            output: pick(&g.output, &file.output),
            env,
            sim,
            sweep,
        };
        r.env_params()?;
        Ok(r)
    }

    /// Copy with one sweep parameter set.
    pub fn with_param(&self, name: &str, v: f64) -> Result<Self, CliError> {
        let mut r = self.clone();
        let int = |v: f64| -> Result<u64, CliError> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(CliError::Config(format!("{name} must be a non-negative integer, got {v}")))
            }
        };
        match name {
            "r1_um" => r.env.r1_um = Some(v),
            "count" => {
                r.env.count = Some(v);
                r.env.density_per_um2 = None;
            }
            "density_per_um2" => {
                r.env.density_per_um2 = Some(v);
                r.env.count = None;
            }
            "eta" => r.env.eta = Some(int(v)? as u32),
            "k" => r.env.k = Some(v),
            "q" => r.env.q = Some(v),
            "d" => r.env.d = Some(v),
            "r0_um" => r.env.r0_um = Some(v),
            "realizations" => r.sim.realizations = Some(int(v)?),
            "dt" => r.sim.dt = Some(v),
            "sample_time" => r.sim.sample_time = Some(v),
            "bacteria_diffusion" => r.sim.bacteria_diffusion = Some(v),
            _ => return Err(CliError::Config(format!("unknown sweep parameter '{name}'"))),
        }
        r.env_params()?;
        Ok(r)
    }

    /// Environment in SI units. Without count or density the reference
    /// count of 100 bacteria is kept when R1 changes.
    pub fn env_params(&self) -> Result<EnvParams, CliError> {
        let e = &self.env;
        let mut p = EnvParams::reference();
        let count = p.expected_count();
        if let Some(v) = e.d {
            p.diffusion = v;
        }
        if let Some(v) = e.k {
            p.degradation = v;
        }
        if let Some(v) = e.q {
            p.emission_rate = v;
        }
        if let Some(v) = e.r0_um {
            p.rx_radius = v * UM;
        }
        if let Some(v) = e.r1_um {
            p.pop_radius = v * UM;
        }
        p.density = match (e.count, e.density_per_um2) {
            (_, Some(d)) => per_um2_to_per_m2(d),
            (Some(c), None) => density_for_count(c, p.pop_radius),
            (None, None) => density_for_count(count, p.pop_radius),
        };
        if let Some(v) = e.eta {
            p.threshold = v;
        }
        p.check(quorum_core::Purpose::Channel)?;
        Ok(p)
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let env = self.env_params()?;
        let s = &self.sim;
        let t = s.sample_time.unwrap_or(DEFAULT_SAMPLE_TIME);
        let mut c = SimConfig::new(env).with_times(t).with_seed(self.seed);
        c.dt = s.dt.unwrap_or_else(|| default_dt(&env));
        if let Some(n) = s.realizations {
            c.realizations = n;
        }
        if let Some(db) = s.bacteria_diffusion {
            c.bacteria_diffusion = db;
        }
        if let Some(e) = s.engine {
            c.engine = e.into();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn eta(&self) -> u32 {
        self.env.eta.unwrap_or(10)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(f: impl FnOnce(&mut GlobalArgs)) -> Result<Resolved, CliError> {
        let mut g = GlobalArgs::default();
        f(&mut g);
        Resolved::new("stats", &g)
    }

    #[test]
    fn defaults_are_reference_environment() {
        let r = resolve(|_| {}).unwrap();
        assert_eq!(r.env_params().unwrap(), EnvParams::reference());
        assert_eq!(r.seed, 1);
    }

    #[test]
    fn r1_alone_keeps_count() {
        let r = resolve(|g| g.env.r1_um = Some(150.0)).unwrap();
        let p = r.env_params().unwrap();
        assert!((p.expected_count() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(resolve(|g| g.tol = Some(0.5)), Err(CliError::Config(_))));
        assert!(matches!(resolve(|g| g.threads = Some(0)), Err(CliError::Config(_))));
        assert!(matches!(resolve(|g| g.env.k = Some(-1.0)), Err(CliError::Config(_))));
        let r = resolve(|_| {}).unwrap();
        assert!(r.with_param("eta", 2.5).is_err());
        assert!(r.with_param("engine", 1.0).is_err());
    }

    #[test]
    fn with_param_sets_one_key() {
        let r = resolve(|_| {}).unwrap().with_param("density_per_um2", 0.05).unwrap();
        assert_eq!(r.env.count, None);
        assert!((r.env_params().unwrap().density - 0.05e12).abs() < 1e-3);
        let r = r.with_param("realizations", 7.0).unwrap();
        assert_eq!(r.sim_config().unwrap().realizations, 7);
    }
}
