use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "PELLCLASS_CACHE_DIR";

pub const DEFAULT_X: f64 = 1e5;
pub const DEFAULT_ALPHA: f64 = 0.25;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_PRIMES: u64 = pellclass::model::DEFAULT_P_TRUNC;
pub const DEFAULT_TOL: f64 = pellclass::classno::DEFAULT_L_TOL;
pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_CACHE: &str = "cache";

/// Effective settings of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub x: f64,
    pub alpha: f64,
    pub seed: u64,
    /// Prime cutoff for Euler products.
    pub primes: u64,
    /// Relative tolerance of `L(1, chi_d)`.
    pub tol: f64,
    pub out: PathBuf,
    pub workers: usize,
    /// Cache directory.
    pub cache: PathBuf,
}

/// Optional settings, as given on the command line or in a config file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub x: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub primes: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub cache: Option<PathBuf>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields of `self` take precedence over those of `lower`.
    pub fn over(self, lower: PartialConfig) -> PartialConfig {
        PartialConfig {
            x: self.x.or(lower.x),
            alpha: self.alpha.or(lower.alpha),
            seed: self.seed.or(lower.seed),
            primes: self.primes.or(lower.primes),
            tol: self.tol.or(lower.tol),
            out: self.out.or(lower.out),
            workers: self.workers.or(lower.workers),
            cache: self.cache.or(lower.cache),
        }
    }

    /// Fill the gaps with defaults and validate.
    pub fn resolve(self) -> CliResult<RunConfig> {
        let cache_default = std::env::var_os(CACHE_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE));
        let workers_default = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let cfg = RunConfig {
            x: self.x.unwrap_or(DEFAULT_X),
            alpha: self.alpha.unwrap_or(DEFAULT_ALPHA),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            primes: self.primes.unwrap_or(DEFAULT_PRIMES),
            tol: self.tol.unwrap_or(DEFAULT_TOL),
            out: self.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            workers: self.workers.unwrap_or(workers_default),
            cache: self.cache.unwrap_or(cache_default),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(self.x >= 2.0 && self.x <= 1e9) {
            return Err(CliError::Config(format!("--x {} outside [2, 1e9]", self.x)));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(CliError::Config(format!("--alpha {} outside (0, 1/2)", self.alpha)));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(CliError::Config(format!("--tol {} must lie in (0, 1)", self.tol)));
        }
        if self.primes < 2 {
            return Err(CliError::Config(format!("--primes {} must be at least 2", self.primes)));
        }
        if self.workers == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn euler(&self) -> pellclass::model::EulerProductConfig {
        pellclass::model::EulerProductConfig::new(self.primes)
    }

    /// Cache file for this `(x, alpha)`.
    pub fn cache_file(&self) -> PathBuf {
        self.cache.join(format!("family_x{}_a{}.pcache", self.x, self.alpha))
    }

    /// Settings echoed at the top of every run.
    pub fn header(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
