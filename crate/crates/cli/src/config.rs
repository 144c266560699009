//! Run configuration: built-in defaults, then a `key = value` file, then
//! command-line flags, all parsed through the same key table.

use nvlab_core::lvalue::KernelConfig;
use nvlab_core::mollifier::{MollifierSpec, PolySpec};
use nvlab_core::weights::WeightConfig;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    #[error("bad value {value:?} for {key}: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err("expected csv or json".into()),
        }
    }
}

/// Every recognised key with its default.
pub const KEYS: &[(&str, &str)] = &[
    ("Q", "200"),
    ("eta1", "0"),
    ("eta2", "0"),
    ("eps_split", "0.05"),
    ("a", "1"),
    ("D", "1"),
    ("theta1", "0.15"),
    ("theta2", "0.15"),
    ("poly1", "0,1"),
    ("poly2", "0,1"),
    ("tau_nv", "1e-8"),
    ("threads", "0"),
    ("cache", ""),
    ("out", "out"),
    ("format", "csv"),
    ("force", "false"),
    ("seed", "0"),
    ("suite", "all"),
    ("degree", "6"),
    ("fast_kernel", "false"),
    ("c0", "1"),
    ("x_min", "0.001"),
    ("x_max", "10"),
    ("points", "200"),
    ("bench_sizes", "4,8,16,32"),
    ("bench_trials", "3"),
];

/// Dashes and underscores are interchangeable and case is ignored, so
/// `tau-nv`, `tau_nv` and `q` all resolve.
pub fn normalize_key(raw: &str) -> Result<&'static str, ConfigError> {
    let k = raw.trim().replace('-', "_");
    KEYS.iter()
        .map(|(name, _)| *name)
        .find(|name| name.eq_ignore_ascii_case(&k))
        .ok_or(ConfigError::UnknownKey(raw.trim().to_string()))
}

/// Ordered key/value layers; later inserts win.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Settings {
    pub fn defaults() -> Settings {
        Settings {
            values: KEYS.iter().map(|(k, v)| (*k, v.to_string())).collect(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = normalize_key(key)?;
        self.values.insert(key, value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    /// Layer the contents of a config file on top.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax {
                path: origin.to_string(),
                line: i + 1,
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_text(&text, &path.display().to_string())
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let value = self.get(key);
        value.parse::<T>().map_err(|e| ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: e.to_string(),
        })
    }

    fn bad(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::BadValue {
            key: key.to_string(),
            value: self.get(key).to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub weights: WeightConfig,
    pub theta1: f64,
    pub theta2: f64,
    pub poly1: PolySpec,
    pub poly2: PolySpec,
    pub kernel: KernelConfig,
    pub tau_nv: f64,
    pub threads: usize,
    pub cache: Option<PathBuf>,
    pub out: PathBuf,
    pub format: Format,
    pub force: bool,
    pub seed: u64,
    pub suite: String,
    pub degree: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub bench_sizes: Vec<u64>,
    pub bench_trials: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_settings(&Settings::defaults()).expect("defaults parse")
    }
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<RunConfig, ConfigError> {
        let poly = |key: &str| PolySpec::parse(s.get(key)).map_err(|e| s.bad(key, e.to_string()));
        let fast_kernel: bool = s.parse("fast_kernel")?;
        let kernel = KernelConfig {
            c0: s.parse("c0")?,
            interpolate: fast_kernel,
            ..KernelConfig::default()
        };
        let cache = match s.get("cache") {
            "" => None,
            p => Some(PathBuf::from(p)),
        };
        let bench_sizes = s
            .get("bench_sizes")
            .split(',')
            .map(|v| v.trim().parse::<u64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| s.bad("bench_sizes", e.to_string()))?;
        let mut weights = WeightConfig::new(
            s.parse("Q")?,
            s.parse("eta1")?,
            s.parse("eta2")?,
            s.parse("a")?,
            s.parse("D")?,
        );
        weights.eps_split = s.parse("eps_split")?;
        let cfg = RunConfig {
            weights,
            theta1: s.parse("theta1")?,
            theta2: s.parse("theta2")?,
            poly1: poly("poly1")?,
            poly2: poly("poly2")?,
            kernel,
            tau_nv: s.parse("tau_nv")?,
            threads: s.parse("threads")?,
            cache,
            out: PathBuf::from(s.get("out")),
            format: s.parse("format")?,
            force: s.parse("force")?,
            seed: s.parse("seed")?,
            suite: s.get("suite").to_string(),
            degree: s.parse("degree")?,
            x_min: s.parse("x_min")?,
            x_max: s.parse("x_max")?,
            points: s.parse("points")?,
            bench_sizes,
            bench_trials: s.parse("bench_trials")?,
        };
        if !(cfg.tau_nv > 0.0) {
            return Err(s.bad("tau_nv", "must be positive"));
        }
        if !(cfg.x_min > 0.0 && cfg.x_max > cfg.x_min) || cfg.points < 2 {
            return Err(s.bad("x_min", "need 0 < x_min < x_max and points ≥ 2"));
        }
        if cfg.bench_sizes.contains(&0) {
            return Err(s.bad("bench_sizes", "sizes must be positive"));
        }
        Ok(cfg)
    }

    pub fn mollifier(&self) -> nvlab_core::Result<MollifierSpec> {
        MollifierSpec::new(
            self.theta1,
            self.theta2,
            self.poly1.clone(),
            self.poly2.clone(),
            self.weights.q_scale,
        )
    }
}
