//! `key=value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message} (key `{key}`)")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Vaidya,
    Ellipsoid,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vaidya" => Ok(Method::Vaidya),
            "ellipsoid" => Ok(Method::Ellipsoid),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Vaidya => "vaidya",
            Method::Ellipsoid => "ellipsoid",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub n: usize,
    pub mu: f64,
    pub max_oracle_calls: usize,
    /// Certificate schedule for Vaidya runs; 0 disables certificates.
    pub cert_every: usize,
    pub lp_alpha: f64,
    pub vaidya_eps: f64,
    pub vaidya_gamma: f64,
    /// Newton step budget per re-centering.
    pub vaidya_newton_steps: usize,
    pub out: PathBuf,
    /// Unused by the deterministic benchmark.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: Method::Vaidya,
            n: 10,
            mu: 0.1,
            max_oracle_calls: 2000,
            cert_every: 10,
            lp_alpha: 0.5,
            vaidya_eps: 5e-3,
            vaidya_gamma: 1.0,
            vaidya_newton_steps: 50,
            out: PathBuf::from("run.csv"),
            seed: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "method",
    "n",
    "mu",
    "max_oracle_calls",
    "cert_every",
    "lp_alpha",
    "vaidya_eps",
    "vaidya_gamma",
    "vaidya_newton_steps",
    "out",
    "seed",
];

fn parse_value<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("cannot parse `{value}`: {e}"))
}

impl ExperimentConfig {
    /// Sets one key; the error is a message without location.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "method" => self.method = value.parse()?,
            "n" => self.n = parse_value(value)?,
            "mu" => self.mu = parse_value(value)?,
            "max_oracle_calls" => self.max_oracle_calls = parse_value(value)?,
            "cert_every" => self.cert_every = parse_value(value)?,
            "lp_alpha" => self.lp_alpha = parse_value(value)?,
            "vaidya_eps" => self.vaidya_eps = parse_value(value)?,
            "vaidya_gamma" => self.vaidya_gamma = parse_value(value)?,
            "vaidya_newton_steps" => self.vaidya_newton_steps = parse_value(value)?,
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = parse_value(value)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Validation(m));
        if self.n == 0 {
            return fail("n must be at least 1".into());
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return fail(format!("mu must be positive, got {}", self.mu));
        }
        if !(0.0..1.0).contains(&self.lp_alpha) {
            return fail(format!(
                "lp_alpha must lie in [0, 1), got {}",
                self.lp_alpha
            ));
        }
        if !(self.vaidya_eps > 0.0 && self.vaidya_eps < 1.0) {
            return fail(format!(
                "vaidya_eps must lie in (0, 1), got {}",
                self.vaidya_eps
            ));
        }
        if !(self.vaidya_gamma > 0.0 && self.vaidya_gamma.is_finite()) {
            return fail(format!(
                "vaidya_gamma must be positive, got {}",
                self.vaidya_gamma
            ));
        }
        Ok(())
    }

    /// Parses `key=value` lines over the defaults. Blank lines and text after
    /// `#` are ignored. Does not validate.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        for (line, key, value) in entries(text)? {
            cfg.set(&key, &value)
                .map_err(|message| ConfigError::Parse {
                    line,
                    key: key.clone(),
                    message,
                })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&read(path)?)
    }
}

pub(crate) fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `(line number, key, value)` for each non-empty line.
pub(crate) fn entries(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: i + 1,
                key: line.to_string(),
                message: "expected key=value".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::Parse {
                line: i + 1,
                key: key.to_string(),
                message: "unknown key".into(),
            });
        }
        out.push((i + 1, key.to_string(), value.to_string()));
    }
    Ok(out)
}
