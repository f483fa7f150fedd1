//! Experiment configuration files.
//!
//! A config is a TOML document with top-level keys `experiment`, `ensemble`,
//! `seed`, `out` and a `[params]` table whose keys depend on the experiment
//! (see `docs/formats.md`). Relative paths are resolved against the
//! directory of the config file.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use projwalk_core::MatrixEnsemble;

pub const EXPERIMENTS: [&str; 8] = ["lyapunov", "stationary", "spectrum", "tilt", "llt", "zeroone", "example1", "fourier"];

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, thiserror::Error)]
#[error("config error at `{key}`: {msg}")]
pub struct ConfigError {
    pub key: String,
    pub msg: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, msg: impl Into<String>) -> Self {
        ConfigError { key: key.into(), msg: msg.into() }
    }
}

type CResult<T> = std::result::Result<T, ConfigError>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: String,
    ensemble: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(default)]
    params: toml::Table,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub ensemble_path: PathBuf,
    pub seed: u64,
    pub out: PathBuf,
    pub params: Params,
    /// The `[params]` table as written.
    pub params_raw: toml::Table,
}

/// Angle grid for `d = 2`, point cloud otherwise. Given as `[params.grid]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridParams {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub grid_seed: u64,
    /// Cell offset of the dual angle grid.
    #[serde(default)]
    pub dual_offset: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { m: default_m(), count: default_count(), grid_seed: 0, dual_offset: 0.0 }
    }
}

fn default_m() -> usize {
    512
}
fn default_count() -> usize {
    2000
}
fn default_burn_in() -> usize {
    200
}
fn default_true() -> bool {
    true
}
fn default_fd_step() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovParams {
    pub n: usize,
    pub replicas: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub variance: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryParams {
    pub n: usize,
    pub replicas: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    pub x0: Option<Vec<f64>>,
    /// Functional for the bracket histogram; defaults to `e_1^*`.
    pub y: Option<Vec<f64>>,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_bins() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub s: Vec<f64>,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default = "default_true")]
    pub consistency: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltParams {
    pub s: f64,
    pub n: usize,
    pub replicas: usize,
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LltParams {
    pub ns: Vec<usize>,
    pub replicas: usize,
    pub a1: f64,
    pub a2: f64,
    pub f: Vec<f64>,
    pub v: Vec<f64>,
    /// Taken from finite differences of `kappa` when absent.
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroOneParams {
    /// Load the measure from a file instead of simulating it.
    pub measure: Option<PathBuf>,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub replicas: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    pub x0: Option<Vec<f64>>,
    pub y: Vec<f64>,
    /// Levels `t` of `log delta(y, x)`.
    #[serde(default)]
    pub levels: Vec<f64>,
    pub hs: Option<Vec<f64>>,
    /// Thresholds for the hyperplane masses `nu(delta(y, .) <= t)`.
    pub hyperplane_ts: Option<Vec<f64>>,
    /// Signature `p` of a quadratic form whose zero set is tested.
    pub quadratic_p: Option<usize>,
    pub eta_candidates: Option<Vec<f64>>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_gap")]
    pub gap: f64,
}

fn default_k_max() -> usize {
    10
}
fn default_gap() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example1Params {
    #[serde(default = "default_e1_n")]
    pub n: usize,
    #[serde(default = "default_e1_replicas")]
    pub replicas: usize,
    #[serde(default = "default_e1_burn_in")]
    pub burn_in: usize,
    pub x0: Option<Vec<f64>>,
    /// Half-width of the concentration band around `1/sqrt(2)`.
    #[serde(default = "default_gap")]
    pub band: f64,
    pub hs: Option<Vec<f64>>,
    /// Second level `t` expected to carry no mass.
    #[serde(default = "default_off_level")]
    pub off_level: f64,
}

fn default_e1_n() -> usize {
    100
}
fn default_e1_replicas() -> usize {
    1000
}
fn default_e1_burn_in() -> usize {
    500
}
fn default_off_level() -> f64 {
    0.3f64.ln()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierParams {
    pub ns: Vec<usize>,
    #[serde(default)]
    pub l: f64,
    /// Half-width of the triangular test function.
    #[serde(default = "default_support")]
    pub support: f64,
    #[serde(default)]
    pub x_index: usize,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_budget")]
    pub node_budget: usize,
}

fn default_support() -> f64 {
    1.0
}
fn default_budget() -> usize {
    projwalk_core::transferop::fourier::DEFAULT_NODE_BUDGET
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Params {
    Lyapunov(LyapunovParams),
    Stationary(StationaryParams),
    Spectrum(SpectrumParams),
    Tilt(TiltParams),
    Llt(LltParams),
    ZeroOne(ZeroOneParams),
    Example1(Example1Params),
    Fourier(FourierParams),
}

fn parse_params<T: DeserializeOwned>(table: &toml::Table) -> CResult<T> {
    T::deserialize(table.clone()).map_err(|e| {
        let msg = e.message().to_string();
        let key = backticked(&msg).map(|k| format!("params.{k}")).unwrap_or_else(|| "params".into());
        ConfigError::new(key, msg)
    })
}

/// First backtick-quoted word in a serde message (the field it refers to).
fn backticked(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}

fn check(cond: bool, key: &str, msg: &str) -> CResult<()> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::new(format!("params.{key}"), msg))
    }
}

fn check_vec(v: &Option<Vec<f64>>, key: &str) -> CResult<()> {
    if let Some(v) = v {
        check(v.iter().all(|x| x.is_finite()) && v.iter().any(|x| *x != 0.0), key, "must be a finite nonzero vector")?;
    }
    Ok(())
}

fn check_grid(g: &GridParams) -> CResult<()> {
    check(g.m >= 2, "grid.m", "must be at least 2")?;
    check(g.count >= 2, "grid.count", "must be at least 2")?;
    check((0.0..1.0).contains(&g.dual_offset), "grid.dual_offset", "must lie in [0, 1)")
}

fn check_hs(hs: &Option<Vec<f64>>, key: &str) -> CResult<()> {
    if let Some(hs) = hs {
        check(
            !hs.is_empty() && hs.iter().all(|h| *h > 0.0) && hs.windows(2).all(|w| w[1] < w[0]),
            key,
            "must be positive and strictly decreasing",
        )?;
    }
    Ok(())
}

impl Params {
    fn parse(experiment: &str, table: &toml::Table) -> CResult<Self> {
        let p = match experiment {
            "lyapunov" => {
                let p: LyapunovParams = parse_params(table)?;
                check(p.n >= 1, "n", "must be at least 1")?;
                check(p.replicas >= 1, "replicas", "must be at least 1")?;
                check(!p.variance || p.replicas >= 2, "replicas", "variance needs at least 2 replicas")?;
                check_vec(&p.x0, "x0")?;
                Params::Lyapunov(p)
            }
            "stationary" => {
                let p: StationaryParams = parse_params(table)?;
                check(p.n >= 1, "n", "must be at least 1")?;
                check(p.replicas >= 1, "replicas", "must be at least 1")?;
                check(p.bins >= 1, "bins", "must be at least 1")?;
                check_vec(&p.x0, "x0")?;
                check_vec(&p.y, "y")?;
                Params::Stationary(p)
            }
            "spectrum" => {
                let p: SpectrumParams = parse_params(table)?;
                check(!p.s.is_empty(), "s", "needs at least one value")?;
                check(p.s.iter().all(|s| s.is_finite()), "s", "values must be finite")?;
                check_grid(&p.grid)?;
                Params::Spectrum(p)
            }
            "tilt" => {
                let p: TiltParams = parse_params(table)?;
                check(p.s.is_finite(), "s", "must be finite")?;
                check(p.n >= 1, "n", "must be at least 1")?;
                check(p.replicas >= 2, "replicas", "must be at least 2")?;
                check(p.fd_step > 0.0, "fd_step", "must be positive")?;
                check_vec(&p.x0, "x0")?;
                check_grid(&p.grid)?;
                Params::Tilt(p)
            }
            "llt" => {
                let p: LltParams = parse_params(table)?;
                check(!p.ns.is_empty() && p.ns.iter().all(|n| *n >= 1), "ns", "needs values >= 1")?;
                check(p.replicas >= 1, "replicas", "must be at least 1")?;
                check(p.a1 <= p.a2, "a2", "must not be below a1")?;
                check(p.sigma.is_none_or(|s| s > 0.0), "sigma", "must be positive")?;
                check(p.fd_step > 0.0, "fd_step", "must be positive")?;
                check_vec(&Some(p.f.clone()), "f")?;
                check_vec(&Some(p.v.clone()), "v")?;
                check_grid(&p.grid)?;
                Params::Llt(p)
            }
            "zeroone" => {
                let p: ZeroOneParams = parse_params(table)?;
                if p.measure.is_none() {
                    check(p.n >= 1, "n", "must be at least 1 when no measure file is given")?;
                    check(p.replicas >= 1, "replicas", "must be at least 1 when no measure file is given")?;
                }
                check_vec(&p.x0, "x0")?;
                check_vec(&Some(p.y.clone()), "y")?;
                check(p.levels.iter().all(|t| t.is_finite() && *t <= 0.0), "levels", "must be finite and nonpositive")?;
                check_hs(&p.hs, "hs")?;
                check_hs(&p.hyperplane_ts, "hyperplane_ts")?;
                if let Some(c) = &p.eta_candidates {
                    check(!c.is_empty() && c.iter().all(|e| *e > 0.0), "eta_candidates", "must be positive")?;
                }
                check(p.k_max >= 1, "k_max", "must be at least 1")?;
                check(p.gap > 0.0, "gap", "must be positive")?;
                Params::ZeroOne(p)
            }
            "example1" => {
                let p: Example1Params = parse_params(table)?;
                check(p.n >= 1, "n", "must be at least 1")?;
                check(p.replicas >= 1, "replicas", "must be at least 1")?;
                check(p.band > 0.0, "band", "must be positive")?;
                check(p.off_level.is_finite() && p.off_level <= 0.0, "off_level", "must be finite and nonpositive")?;
                check_vec(&p.x0, "x0")?;
                check_hs(&p.hs, "hs")?;
                Params::Example1(p)
            }
            "fourier" => {
                let p: FourierParams = parse_params(table)?;
                check(p.ns.len() >= 2 && p.ns.iter().all(|n| *n >= 1), "ns", "needs at least two values >= 1")?;
                check(p.support > 0.0, "support", "must be positive")?;
                check(p.sigma.is_none_or(|s| s > 0.0), "sigma", "must be positive")?;
                check(p.fd_step > 0.0, "fd_step", "must be positive")?;
                check(p.node_budget >= 5, "node_budget", "must be at least 5")?;
                check_grid(&p.grid)?;
                Params::Fourier(p)
            }
            other => {
                return Err(ConfigError::new(
                    "experiment",
                    format!("unknown experiment '{other}', expected one of {}", EXPERIMENTS.join(", ")),
                ))
            }
        };
        Ok(p)
    }
}

impl ExperimentConfig {
    /// Parses and validates a config. `seed` and `out` override the file.
    pub fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> CResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text, path.parent().unwrap_or(Path::new(".")), seed, out)
    }

    pub fn from_str(text: &str, base: &Path, seed: Option<u64>, out: Option<PathBuf>) -> CResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            ConfigError::new(backticked(&msg).unwrap_or("config").to_string(), msg.clone())
        })?;
        let mut params = Params::parse(&raw.experiment, &raw.params)?;
        let ensemble_path = base.join(&raw.ensemble);
        if !ensemble_path.is_file() {
            return Err(ConfigError::new("ensemble", format!("file {} does not exist", ensemble_path.display())));
        }
        if let Params::ZeroOne(ZeroOneParams { measure: Some(m), .. }) = &mut params {
            *m = base.join(&*m);
            if !m.is_file() {
                return Err(ConfigError::new("params.measure", format!("file {} does not exist", m.display())));
            }
        }
        let out = out.unwrap_or_else(|| base.join(raw.out.unwrap_or_else(|| PathBuf::from("out").join(&raw.experiment))));
        Ok(ExperimentConfig {
            experiment: raw.experiment,
            ensemble_path,
            seed: seed.or(raw.seed).unwrap_or(DEFAULT_SEED),
            out,
            params,
            params_raw: raw.params,
        })
    }

    /// Reads the ensemble file; parse failures are reported against `ensemble`.
    pub fn ensemble(&self) -> CResult<MatrixEnsemble> {
        let text = std::fs::read_to_string(&self.ensemble_path)
            .map_err(|e| ConfigError::new("ensemble", format!("cannot read {}: {e}", self.ensemble_path.display())))?;
        MatrixEnsemble::from_toml_str(&text).map_err(|e| ConfigError::new("ensemble", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backtick_extraction() {
        assert_eq!(backticked("unknown field `nn`, expected one of `n`"), Some("nn"));
        assert_eq!(backticked("nothing"), None);
    }
}
