//! Run configuration: `key = value` files with `#` comments, overridable from
//! the command line.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::adaptive::AdaptiveConfig;
use crate::burgers::{BurgersParams, ConvolutionMethod};
use crate::monte_carlo::McConfig;

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Full,
    Markovian,
    Memory,
    Adaptive,
    Mc,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::Markovian => "markovian",
            Mode::Memory => "memory",
            Mode::Adaptive => "adaptive",
            Mode::Mc => "mc",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Mode::Full),
            "markovian" => Ok(Mode::Markovian),
            "memory" => Ok(Mode::Memory),
            "adaptive" => Ok(Mode::Adaptive),
            "mc" => Ok(Mode::Mc),
            other => Err(format!(
                "unknown mode `{other}` (expected full, markovian, memory, adaptive or mc)"
            )),
        }
    }
}

/// Where a setting came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Default,
    Line(usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag => write!(f, "command line"),
        }
    }
}

/// A configuration problem, located by key and origin when possible.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{}", location(.key, .origin), .message)]
pub struct ConfigError {
    pub key: Option<String>,
    pub origin: Option<Origin>,
    pub message: String,
}

fn location(key: &Option<String>, origin: &Option<Origin>) -> String {
    match (key, origin) {
        (Some(k), Some(Origin::Default)) | (Some(k), None) => format!("`{k}`: "),
        (Some(k), Some(o)) => format!("{o}: `{k}`: "),
        (None, Some(o)) => format!("{o}: "),
        (None, None) => String::new(),
    }
}

/// Every setting of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub nu: f64,
    pub n_modes: usize,
    pub n_pc: usize,
    pub lambda: usize,
    pub dt: f64,
    pub t_end: f64,
    pub t0: Option<f64>,
    pub n0: usize,
    pub lambda_stat: usize,
    pub alpha0: f64,
    pub alpha1: f64,
    pub warmup: usize,
    pub confirm_window: usize,
    pub stride: usize,
    pub history_cap: usize,
    pub observer_stride: usize,
    pub samples: usize,
    pub seed: u64,
    pub antithetic: bool,
    pub convolution: ConvolutionMethod,
    /// Output path prefix.
    pub out: PathBuf,
    origins: HashMap<&'static str, Origin>,
}

/// Recognized keys, in manifest order.
pub const KEYS: &[&str] = &[
    "mode",
    "nu",
    "n_modes",
    "n_pc",
    "lambda",
    "dt",
    "t_end",
    "t0",
    "n0",
    "lambda_stat",
    "alpha0",
    "alpha1",
    "warmup",
    "confirm_window",
    "stride",
    "history_cap",
    "observer_stride",
    "samples",
    "seed",
    "antithetic",
    "convolution",
    "out",
];

impl RunConfig {
    /// Defaults for every key; `mode` has no default and must be supplied.
    fn defaults(mode: Mode) -> Self {
        Self {
            mode,
            nu: 0.03,
            n_modes: 196,
            n_pc: 7,
            lambda: 2,
            dt: 0.001,
            t_end: 3.0,
            t0: None,
            n0: 1,
            lambda_stat: 2,
            alpha0: 1.0,
            alpha1: 1.0,
            warmup: 50,
            confirm_window: 25,
            stride: 1,
            history_cap: 100_000,
            observer_stride: 10,
            samples: 2000,
            seed: 0,
            antithetic: false,
            convolution: ConvolutionMethod::Direct,
            out: PathBuf::from("mzuq_run"),
            origins: HashMap::new(),
        }
    }

    /// Parses a configuration file's text with no overrides.
    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_sources(Some(text), &[])
    }

    /// Builds a validated configuration from an optional file and `(key, value)`
    /// overrides, which take precedence.
    pub fn from_sources(file: Option<&str>, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut entries: Vec<(String, String, Origin)> = Vec::new();
        if let Some(text) = file {
            let mut seen: HashMap<String, usize> = HashMap::new();
            for (idx, raw) in text.lines().enumerate() {
                let line_no = idx + 1;
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(ConfigError {
                        key: None,
                        origin: Some(Origin::Line(line_no)),
                        message: format!("expected `key = value`, found `{line}`"),
                    });
                };
                let key = key.trim().to_string();
                if let Some(first) = seen.insert(key.clone(), line_no) {
                    return Err(ConfigError {
                        key: Some(key),
                        origin: Some(Origin::Line(line_no)),
                        message: format!("duplicate key (first set on line {first})"),
                    });
                }
                entries.push((key, value.trim().to_string(), Origin::Line(line_no)));
            }
        }
        for (key, value) in overrides {
            entries.push((key.clone(), value.clone(), Origin::Flag));
        }

        let mode_entry = entries.iter().rev().find(|(k, _, _)| k == "mode");
        let mode = match mode_entry {
            Some((_, v, origin)) => v.parse::<Mode>().map_err(|message| ConfigError {
                key: Some("mode".into()),
                origin: Some(*origin),
                message,
            })?,
            None => {
                return Err(ConfigError {
                    key: Some("mode".into()),
                    origin: None,
                    message: "missing required key".into(),
                })
            }
        };
        let mut cfg = Self::defaults(mode);
        for (key, value, origin) in &entries {
            cfg.set(key, value).map_err(|message| ConfigError {
                key: Some(key.clone()),
                origin: Some(*origin),
                message,
            })?;
            let canonical = KEYS.iter().find(|k| **k == key.as_str()).expect("set accepted the key");
            cfg.origins.insert(canonical, *origin);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: FromStr>(value: &str, what: &str) -> Result<T, String> {
            value
                .parse::<T>()
                .map_err(|_| format!("expected {what}, found `{value}`"))
        }
        const REAL: &str = "a real number";
        const INT: &str = "a non-negative integer";
        match key {
            "mode" => self.mode = value.parse()?,
            "nu" => self.nu = parse(value, REAL)?,
            "n_modes" => self.n_modes = parse(value, INT)?,
            "n_pc" => self.n_pc = parse(value, INT)?,
            "lambda" => self.lambda = parse(value, INT)?,
            "dt" => self.dt = parse(value, REAL)?,
            "t_end" => self.t_end = parse(value, REAL)?,
            "t0" => self.t0 = Some(parse(value, REAL)?),
            "n0" => self.n0 = parse(value, INT)?,
            "lambda_stat" => self.lambda_stat = parse(value, INT)?,
            "alpha0" => self.alpha0 = parse(value, REAL)?,
            "alpha1" => self.alpha1 = parse(value, REAL)?,
            "warmup" => self.warmup = parse(value, INT)?,
            "confirm_window" => self.confirm_window = parse(value, INT)?,
            "stride" => self.stride = parse(value, INT)?,
            "history_cap" => self.history_cap = parse(value, INT)?,
            "observer_stride" => self.observer_stride = parse(value, INT)?,
            "samples" => self.samples = parse(value, INT)?,
            "seed" => self.seed = parse(value, "a 64-bit unsigned integer")?,
            "antithetic" => self.antithetic = parse(value, "true or false")?,
            "convolution" => {
                self.convolution = value.parse().map_err(|e| match e {
                    crate::MzError::InvalidArgument(msg) => msg,
                    other => other.to_string(),
                })?
            }
            "out" => {
                if value.is_empty() {
                    return Err("output prefix must not be empty".into());
                }
                self.out = PathBuf::from(value)
            }
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    fn origin(&self, key: &'static str) -> Origin {
        self.origins.get(key).copied().unwrap_or(Origin::Default)
    }

    fn invalid(&self, key: &'static str, message: String) -> ConfigError {
        ConfigError {
            key: Some(key.into()),
            origin: Some(self.origin(key)),
            message,
        }
    }

    /// Checks every cross-key invariant.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(self.invalid(key, format!("must be positive and finite, got {v}")))
            }
        };
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        if self.t_end < self.dt {
            return Err(self.invalid("t_end", format!("shorter than one step (dt = {})", self.dt)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(self.invalid("nu", format!("must be non-negative, got {}", self.nu)));
        }
        if self.n_modes < 4 || self.n_modes % 2 != 0 {
            return Err(self.invalid("n_modes", format!("must be even and at least 4, got {}", self.n_modes)));
        }
        if self.mode != Mode::Mc {
            if self.n_pc < 2 {
                return Err(self.invalid("n_pc", format!("need at least 2 chaos orders, got {}", self.n_pc)));
            }
            if self.n_pc > crate::basis::MAX_LEGENDRE_ORDER {
                return Err(self.invalid(
                    "n_pc",
                    format!("at most {} chaos orders are supported", crate::basis::MAX_LEGENDRE_ORDER),
                ));
            }
            if self.lambda == 0 || self.lambda > self.n_pc {
                return Err(self.invalid(
                    "lambda",
                    format!("must satisfy 1 <= lambda <= n_pc, got lambda={} n_pc={}", self.lambda, self.n_pc),
                ));
            }
            if self.lambda_stat == 0 || self.lambda_stat > self.n_pc {
                return Err(self.invalid(
                    "lambda_stat",
                    format!("must satisfy 1 <= lambda_stat <= n_pc, got {}", self.lambda_stat),
                ));
            }
        }
        if self.observer_stride == 0 {
            return Err(self.invalid("observer_stride", "must be at least 1".into()));
        }
        match self.mode {
            Mode::Memory => {
                match self.t0 {
                    None => return Err(self.invalid("t0", "required when mode = memory".into())),
                    Some(t0) => positive("t0", t0)?,
                }
                if self.n0 == 0 {
                    return Err(self.invalid("n0", "must be at least 1".into()));
                }
                if self.lambda >= self.n_pc {
                    return Err(self.invalid("lambda", "memory needs unresolved orders (lambda < n_pc)".into()));
                }
            }
            Mode::Adaptive => {
                if self.lambda >= self.n_pc {
                    return Err(self.invalid("lambda", "adaptive runs need lambda < n_pc".into()));
                }
                if self.n0 != 1 {
                    return Err(self.invalid("n0", "adaptive runs use a single memory subinterval".into()));
                }
                if self.stride == 0 {
                    return Err(self.invalid("stride", "must be at least 1".into()));
                }
                if self.confirm_window == 0 {
                    return Err(self.invalid("confirm_window", "must be at least 1".into()));
                }
                if self.history_cap < 2 {
                    return Err(self.invalid("history_cap", "must hold at least 2 samples".into()));
                }
            }
            Mode::Mc => {
                if self.samples < 2 {
                    return Err(self.invalid("samples", format!("need at least 2, got {}", self.samples)));
                }
                if self.antithetic && self.samples % 2 != 0 {
                    return Err(self.invalid("samples", "antithetic sampling needs an even count".into()));
                }
            }
            Mode::Full | Mode::Markovian => {}
        }
        Ok(())
    }

    pub fn params(&self) -> BurgersParams {
        BurgersParams {
            nu: self.nu,
            alpha0: self.alpha0,
            alpha1: self.alpha1,
        }
    }

    pub fn adaptive(&self) -> AdaptiveConfig {
        AdaptiveConfig {
            n_modes: self.n_modes,
            n_pc: self.n_pc,
            lambda: self.lambda,
            params: self.params(),
            dt: self.dt,
            t_end: self.t_end,
            lambda_stat: self.lambda_stat,
            warmup: self.warmup,
            confirm_window: self.confirm_window,
            stride: self.stride,
            history_cap: self.history_cap,
            observer_stride: self.observer_stride,
            convolution: self.convolution,
        }
    }

    pub fn monte_carlo(&self) -> McConfig {
        McConfig {
            n_samples: self.samples,
            seed: self.seed,
            n_modes: self.n_modes,
            nu: self.nu,
            dt: self.dt,
            t_end: self.t_end,
            antithetic: self.antithetic,
        }
    }

    /// `key = value` lines for every resolved setting.
    pub fn resolved_lines(&self) -> Vec<String> {
        KEYS.iter()
            .map(|&key| {
                let value = match key {
                    "mode" => self.mode.as_str().to_string(),
                    "nu" => self.nu.to_string(),
                    "n_modes" => self.n_modes.to_string(),
                    "n_pc" => self.n_pc.to_string(),
                    "lambda" => self.lambda.to_string(),
                    "dt" => self.dt.to_string(),
                    "t_end" => self.t_end.to_string(),
                    "t0" => self.t0.map_or_else(|| "none".into(), |v| v.to_string()),
                    "n0" => self.n0.to_string(),
                    "lambda_stat" => self.lambda_stat.to_string(),
                    "alpha0" => self.alpha0.to_string(),
                    "alpha1" => self.alpha1.to_string(),
                    "warmup" => self.warmup.to_string(),
                    "confirm_window" => self.confirm_window.to_string(),
                    "stride" => self.stride.to_string(),
                    "history_cap" => self.history_cap.to_string(),
                    "observer_stride" => self.observer_stride.to_string(),
                    "samples" => self.samples.to_string(),
                    "seed" => self.seed.to_string(),
                    "antithetic" => self.antithetic.to_string(),
                    "convolution" => match self.convolution {
                        ConvolutionMethod::Direct => "direct".into(),
                        ConvolutionMethod::Fft => "fft".into(),
                    },
                    "out" => self.out.display().to_string(),
                    _ => unreachable!("every key is listed"),
                };
                format!("{key} = {value}")
            })
            .collect()
    }
}
