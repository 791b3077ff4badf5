//! Experiment configuration: per-experiment defaults, a partial TOML layer
//! and command-line overrides, merged in that order.

use crate::error::{invalid, LabError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Fully resolved configuration; this is what `config.toml` echoes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    /// `torus2`, `torus3`, `sphere2`, `sphere3`, or `all` where supported.
    pub model: String,
    /// Slope expression: `3/5`, `sqrt(1/2)`, `0.5`.
    pub c: String,
    pub epsilon: f64,
    pub lambda_max: f64,
    /// `sharp` (uses `epsilon`), `bump:<a>`, `comb:<a>,<spacing>,<teeth>`,
    /// `mollified:<T>,<eps>`.
    pub window: String,
    /// Second window where an experiment compares two.
    pub reference_window: String,
    /// Mollifier parameters `T` for the smoothing scan.
    pub t_values: Vec<f64>,
    /// Half-range of the trace grid.
    pub t_max: f64,
    /// Trace grid spacing; `0` selects `pi / (2 lambda_max)`.
    pub t_step: f64,
    /// `smooth` or `band:<low>`.
    pub taper: String,
    pub k_mad: f64,
    pub rel_floor: f64,
    pub eps_grid: Vec<f64>,
    pub degrees: Vec<u64>,
    /// Calibration range `[top / fit_span, top]`.
    pub fit_span: f64,
    pub seed: u64,
    pub deterministic: bool,
    /// Worker threads, `0` for all cores.
    pub jobs: usize,
    pub out: PathBuf,
}

/// Every field optional; the layer read from a config file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartialConfig {
    pub experiment: Option<String>,
    pub model: Option<String>,
    pub c: Option<String>,
    pub epsilon: Option<f64>,
    pub lambda_max: Option<f64>,
    pub window: Option<String>,
    pub reference_window: Option<String>,
    pub t_values: Option<Vec<f64>>,
    pub t_max: Option<f64>,
    pub t_step: Option<f64>,
    pub taper: Option<String>,
    pub k_mad: Option<f64>,
    pub rel_floor: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
    pub degrees: Option<Vec<u64>>,
    pub fit_span: Option<f64>,
    pub seed: Option<u64>,
    pub deterministic: Option<bool>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| LabError::Serialization(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Fields set in `other` win.
    pub fn overlay(self, other: PartialConfig) -> PartialConfig {
        macro_rules! pick {
            ($($f:ident),*) => { PartialConfig { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            experiment, model, c, epsilon, lambda_max, window, reference_window, t_values, t_max, t_step,
            taper, k_mad, rel_floor, eps_grid, degrees, fit_span, seed, deterministic, jobs, out
        )
    }
}

fn offset_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let h = (hi - lo) / count as f64;
    (0..count).map(|k| lo + (k as f64 + 0.5) * h).collect()
}

impl ExperimentConfig {
    /// Defaults of a registered experiment.
    pub fn defaults_for(name: &str) -> Result<Self> {
        if super::find_experiment(name).is_none() {
            return Err(LabError::UnknownExperiment(name.to_string()));
        }
        let mut cfg = ExperimentConfig {
            experiment: name.to_string(),
            model: "torus2".into(),
            c: "sqrt(1/2)".into(),
            epsilon: 0.25,
            lambda_max: 3000.0,
            window: "sharp".into(),
            reference_window: "bump:1".into(),
            t_values: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            t_max: 4.0 * std::f64::consts::PI,
            t_step: 0.0,
            taper: "smooth".into(),
            k_mad: 6.0,
            rel_floor: 0.01,
            eps_grid: Vec::new(),
            degrees: Vec::new(),
            fit_span: 10.0,
            seed: 7,
            deterministic: false,
            jobs: 0,
            out: PathBuf::from(format!("runs/{name}")),
        };
        match name {
            "torus-fuzzy-components" => {
                cfg.c = "3/5".into();
                cfg.lambda_max = 1500.0;
                cfg.window = "bump:12.5pi".into();
            }
            "sphere-jump-scaling" => {
                cfg.model = "sphere2".into();
                cfg.c = "1/2".into();
                cfg.lambda_max = 2048.0;
                cfg.degrees = vec![64, 96, 128, 192, 256, 384, 512, 768, 1024, 1536, 2048];
            }
            "zonal-meridian" => {
                cfg.model = "sphere2".into();
                cfg.c = "1/2".into();
                cfg.lambda_max = 2000.0;
                cfg.degrees = (500..=2000).step_by(100).collect();
            }
            "sojourn-detect" => {
                cfg.c = "3/5".into();
                cfg.lambda_max = 800.0;
                cfg.window = "comb:pi/5,3pi/2,3".into();
                cfg.taper = "band:0.25".into();
            }
            "epsilon-staircase" => {
                cfg.model = "sphere2".into();
                cfg.c = "1/2".into();
                cfg.lambda_max = 200.0;
                let mut grid = offset_grid(0.0, 1.0, 20);
                grid.extend(offset_grid(1.0, 3.0, 20));
                cfg.eps_grid = grid;
                cfg.degrees = vec![200];
            }
            "tauberian-smoothing" => {
                cfg.lambda_max = 1500.0;
            }
            "forbidden-decay" => {
                cfg.c = "13/10".into();
                cfg.lambda_max = 200.0;
            }
            "biangle-solve" => {
                cfg.model = "all".into();
                cfg.c = "3/5".into();
                cfg.lambda_max = 0.0;
            }
            "clairaut-return" => {
                cfg.model = "sphere2".into();
                cfg.c = "1/2".into();
                cfg.lambda_max = 0.0;
            }
            _ => {}
        }
        Ok(cfg)
    }

    /// Defaults for the named experiment, overlaid with `partial`.
    pub fn resolve(partial: PartialConfig) -> Result<Self> {
        let name = partial
            .experiment
            .clone()
            .ok_or_else(|| LabError::InvalidParameter("no experiment named".into()))?;
        let mut cfg = Self::defaults_for(&name)?;
        // A model switch on the trace experiment moves to that model's defaults.
        if name == "sojourn-detect" && partial.model.as_deref().is_some_and(|m| m.starts_with("sphere")) {
            cfg.model = "sphere2".into();
            cfg.c = "1/2".into();
            cfg.lambda_max = 400.0;
            cfg.window = "bump:1.5pi".into();
            cfg.taper = "smooth".into();
            cfg.t_max = 2.0 * std::f64::consts::PI;
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = partial.$f { cfg.$f = v; })* };
        }
        set!(
            model, c, epsilon, lambda_max, window, reference_window, t_values, t_max, t_step, taper, k_mad,
            rel_floor, eps_grid, degrees, fit_span, seed, deterministic, jobs, out
        );
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !["torus2", "torus3", "sphere2", "sphere3", "all"].contains(&self.model.as_str()) {
            return invalid(format!("unknown model `{}`", self.model));
        }
        if !(self.lambda_max.is_finite() && self.lambda_max >= 0.0) {
            return invalid(format!("lambda_max must be finite and nonnegative, got {}", self.lambda_max));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.t_max >= 0.0 && self.t_step >= 0.0 && self.t_max.is_finite() && self.t_step.is_finite()) {
            return invalid("t_max and t_step must be finite and nonnegative");
        }
        if self.t_values.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return invalid("t_values must be positive");
        }
        if self.eps_grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return invalid("eps_grid must be positive");
        }
        if !(self.fit_span >= 10.0) {
            return invalid("fit_span must be at least 10");
        }
        if !(self.k_mad > 0.0 && self.rel_floor >= 0.0) {
            return invalid("k_mad must be positive and rel_floor nonnegative");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Serialization(format!("config: {e}")))
    }

    /// Re-read a written config.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| LabError::Serialization(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
