//! Resolved run configuration: defaults, then a `key = value` file, then
//! command-line flags.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use navier_core::branch::SolverConfig;
use navier_core::NonlinearityFamily;
use serde::Serialize;

use crate::LabError;

pub const KEYS: &[&str] = &[
    "family",
    "N",
    "n",
    "m_max",
    "tol",
    "max_newton",
    "max_log_step",
    "stop_after_fold",
    "out",
    "jobs",
    "q",
    "alpha",
    "beta",
    "steps",
    "families",
    "dims",
    "dump_fields",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub family: String,
    #[serde(rename = "N")]
    pub dim: usize,
    pub n: usize,
    /// `None` picks a per-family default, see [`RunConfig::m_max_for`].
    pub m_max: Option<f64>,
    pub tol: f64,
    pub max_newton: usize,
    pub max_log_step: f64,
    pub stop_after_fold: Option<usize>,
    pub out: PathBuf,
    /// Worker threads for `sweep`; 0 uses every core.
    pub jobs: usize,
    pub q: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub steps: usize,
    pub families: Vec<String>,
    pub dims: String,
    pub dump_fields: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::default();
        Self {
            family: "exp".into(),
            dim: 3,
            n: 1024,
            m_max: None,
            tol: solver.newton_tol,
            max_newton: solver.max_newton,
            max_log_step: solver.max_log_step,
            stop_after_fold: None,
            out: PathBuf::from("."),
            jobs: 0,
            q: 1.0,
            alpha: None,
            beta: None,
            steps: 10_000,
            families: vec!["exp".into(), "power:p=2".into(), "mems:p=2".into()],
            dims: "3..8".into(),
            dump_fields: false,
        }
    }
}

fn usage(msg: impl Into<String>) -> LabError {
    LabError::Usage(msg.into())
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, LabError> {
    value.trim().parse().map_err(|_| usage(format!("invalid value for `{key}`: {value:?}")))
}

fn parse_optional_count(key: &str, value: &str) -> Result<Option<usize>, LabError> {
    match value.trim() {
        "none" | "" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), LabError> {
        let v = value.trim();
        match key {
            "family" => self.family = v.to_string(),
            "N" => self.dim = parse(key, v)?,
            "n" => self.n = parse(key, v)?,
            "m_max" => self.m_max = Some(parse(key, v)?),
            "tol" => self.tol = parse(key, v)?,
            "max_newton" => self.max_newton = parse(key, v)?,
            "max_log_step" => self.max_log_step = parse(key, v)?,
            "stop_after_fold" => self.stop_after_fold = parse_optional_count(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "jobs" => self.jobs = parse(key, v)?,
            "q" => self.q = parse(key, v)?,
            "alpha" => self.alpha = Some(parse(key, v)?),
            "beta" => self.beta = Some(parse(key, v)?),
            "steps" => self.steps = parse(key, v)?,
            "families" => self.families = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            "dims" => self.dims = v.to_string(),
            "dump_fields" => self.dump_fields = parse(key, v)?,
            _ => return Err(usage(format!("unknown configuration key `{key}` (known: {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text with `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<(), LabError> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1)))?;
            self.set(key.trim(), value).map_err(|e| usage(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Applies flag overrides, in key order.
    pub fn apply_overrides(&mut self, overrides: &BTreeMap<&'static str, String>) -> Result<(), LabError> {
        for (key, value) in overrides {
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn family(&self) -> Result<NonlinearityFamily, LabError> {
        self.family.parse().map_err(|e| usage(format!("{e}")))
    }

    pub fn families(&self) -> Result<Vec<NonlinearityFamily>, LabError> {
        self.families.iter().map(|s| s.parse().map_err(|e| usage(format!("{e}")))).collect()
    }

    /// `a..b` (inclusive) or a single dimension.
    pub fn dims(&self) -> Result<RangeInclusive<usize>, LabError> {
        let s = self.dims.trim();
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse("dims", a)?, parse("dims", b.trim_start_matches('='))?),
            None => {
                let d = parse("dims", s)?;
                (d, d)
            }
        };
        if lo < 2 || hi < lo {
            return Err(usage(format!("dims must be a range within 2.. , got {s:?}")));
        }
        Ok(lo..=hi)
    }

    /// Explicit `m_max`, else `0.99` for MEMS and `12` otherwise.
    pub fn m_max_for(&self, family: &NonlinearityFamily) -> f64 {
        self.m_max.unwrap_or(match family {
            NonlinearityFamily::Mems { .. } => 0.99,
            _ => 12.0,
        })
    }

    pub fn solver(&self) -> Result<SolverConfig, LabError> {
        let config = SolverConfig {
            newton_tol: self.tol,
            max_newton: self.max_newton,
            max_log_step: self.max_log_step,
            stop_after_fold: self.stop_after_fold,
            ..SolverConfig::default()
        };
        config.validate().map_err(|e| usage(format!("{e}")))?;
        Ok(config)
    }

    /// Checks that the grid settings are usable before any compute.
    pub fn validate_grid(&self) -> Result<(), LabError> {
        if self.dim < 2 {
            return Err(usage(format!("N must be at least 2, got {}", self.dim)));
        }
        if self.n < 8 {
            return Err(usage(format!("n must be at least 8, got {}", self.n)));
        }
        if let Some(m) = self.m_max {
            if !(m > 0.0 && m.is_finite()) {
                return Err(usage(format!("m_max must be positive, got {m}")));
            }
        }
        Ok(())
    }
}
