//! Experiment settings merged from flags, an optional JSON file and defaults.

use std::path::{Path, PathBuf};

use hfbgeo::checks::{expand_spec, parse_spec};
use hfbgeo::hfbopt::{HfbParams, ModeConvention};
use serde::Deserialize;

use crate::Failure;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SpecValue {
    Text(String),
    List(Vec<f64>),
}

/// Every setting any subcommand reads. Unset fields fall through to the next
/// layer.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub n: Option<usize>,
    pub spec: Option<SpecValue>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    #[serde(alias = "in")]
    pub input: Option<PathBuf>,
    pub points: Option<usize>,
    #[serde(alias = "L")]
    pub sites: Option<usize>,
    pub t: Option<f64>,
    #[serde(alias = "U")]
    pub u: Option<f64>,
    pub mu: Option<f64>,
    pub convention: Option<ModeConvention>,
    pub step: Option<f64>,
    pub max_iter: Option<usize>,
    pub grad_tol: Option<f64>,
    pub restarts: Option<usize>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Settings { $($f: $hi.$f.or($lo.$f)),* }
    };
}

pub const DEFAULT_SPEC: &str = "0.4,0.2,0";

impl Settings {
    /// Fields set here win over fields set in `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        overlay!(
            self, lower, n, spec, trials, seed, tol, out, input, points, sites, t, u, mu, convention, step,
            max_iter, grad_tol, restarts
        )
    }

    pub fn load(path: &Path) -> Result<Settings, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::Config(format!("malformed JSON in config {}: {e}", path.display())))
    }

    pub fn n(&self, default: usize) -> Result<usize, Failure> {
        match self.n.unwrap_or(default) {
            0 => Err(Failure::Config("n must be at least 1".into())),
            n => Ok(n),
        }
    }

    /// Trial counts are passed through unchecked so that zero reaches the
    /// library and reports `NoTrials`.
    pub fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn tol(&self, default: f64) -> Result<f64, Failure> {
        positive("tol", self.tol.unwrap_or(default))
    }

    pub fn spectrum(&self, n: usize) -> Result<Vec<f64>, Failure> {
        let lambda = match &self.spec {
            None => parse_spec(DEFAULT_SPEC, n),
            Some(SpecValue::Text(s)) => parse_spec(s, n),
            Some(SpecValue::List(v)) => expand_spec(v, n),
        };
        lambda.map_err(|e| Failure::Config(e.to_string()))
    }

    pub fn hfb_params(&self) -> Result<HfbParams, Failure> {
        let d = HfbParams::default();
        Ok(HfbParams {
            step: positive("step", self.step.unwrap_or(d.step))?,
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            grad_tol: positive("grad_tol", self.grad_tol.unwrap_or(d.grad_tol))?,
            seed: self.seed(),
            restarts: self.restarts.unwrap_or(d.restarts),
            ..d
        })
    }
}

fn positive(name: &str, x: f64) -> Result<f64, Failure> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::Config(format!("{name} must be positive and finite, got {x}")))
    }
}
