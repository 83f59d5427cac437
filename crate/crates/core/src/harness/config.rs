use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{AffordanceConfig, PunishConfig};
use crate::error::{Error, Result};
use crate::kitchen::{DomainKind, SaladTask, SALAD_LAYOUTS, SOUP_LAYOUTS};
use crate::mentalizer::TomConfig;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Conditions {
    /// The second agent sees a uniform order distribution instead of the orders.
    pub order_blind_agent2: bool,
    pub swapped_integration: bool,
    /// One agent, no partner.
    pub solo: bool,
}

impl Conditions {
    /// Short label used in file names and records.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.solo {
            parts.push("solo");
        }
        if self.order_blind_agent2 {
            parts.push("order_blind");
        }
        if self.swapped_integration {
            parts.push("swapped");
        }
        if parts.is_empty() {
            "standard".into()
        } else {
            parts.join("_")
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Gains {
    pub prediction: f64,
    pub evidence: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            prediction: 0.5,
            evidence: 0.5,
        }
    }
}

/// Everything that determines a sweep's results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub domain: DomainKind,
    /// Built-in layout names or paths to layout files. Empty means every
    /// built-in layout of the domain.
    pub layouts: Vec<String>,
    /// Salad only: keep layouts of this task.
    pub task: Option<SaladTask>,
    pub sp_grid: Vec<f64>,
    pub episodes_per_cell: usize,
    /// Defaults to 400 (soup) or 100 (salad).
    pub max_steps: Option<u32>,
    pub conditions: Conditions,
    pub seed: u64,
    pub tom: TomConfig,
    pub gains: Gains,
    pub punish: PunishConfig,
    pub affordance: AffordanceConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: DomainKind::Soup,
            layouts: Vec::new(),
            task: None,
            sp_grid: sp_range(0.0, 1.0, 0.1),
            episodes_per_cell: 20,
            max_steps: None,
            conditions: Conditions::default(),
            seed: 0,
            tom: TomConfig::default(),
            gains: Gains::default(),
            punish: PunishConfig::default(),
            affordance: AffordanceConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.sp_grid.is_empty() {
            return Err(Error::config("sp_grid is empty"));
        }
        if let Some(sp) = self.sp_grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::config(format!("sp value {sp} outside [0, 1]")));
        }
        if self.episodes_per_cell == 0 {
            return Err(Error::config("episodes_per_cell must be at least 1"));
        }
        if self.max_steps == Some(0) {
            return Err(Error::config("max_steps must be at least 1"));
        }
        if self.task.is_some() && self.domain != DomainKind::Salad {
            return Err(Error::config("task only applies to the salad domain"));
        }
        if self.conditions.solo && self.conditions.order_blind_agent2 {
            return Err(Error::config("order_blind_agent2 needs a second agent"));
        }
        self.tom.validate()?;
        for (name, g) in [("gains.prediction", self.gains.prediction), ("gains.evidence", self.gains.evidence)] {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::config(format!("{name} must be in [0, 1], got {g}")));
            }
        }
        let p = self.punish;
        if !(p.factor > 0.0 && p.factor <= 1.0 && p.floor > 0.0 && p.floor <= 1.0 && p.decay >= 0.0) {
            return Err(Error::config("punish factor and floor must be in (0, 1], decay >= 0"));
        }
        Ok(())
    }

    pub fn steps_limit(&self) -> u32 {
        self.max_steps.unwrap_or(match self.domain {
            DomainKind::Soup => 400,
            DomainKind::Salad => 100,
        })
    }

    /// Layout names after defaulting.
    pub fn layout_names(&self) -> Vec<String> {
        if !self.layouts.is_empty() {
            return self.layouts.clone();
        }
        match self.domain {
            DomainKind::Soup => SOUP_LAYOUTS.iter().map(|s| s.to_string()).collect(),
            DomainKind::Salad => SALAD_LAYOUTS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// SP pairs in row-major order; a single `(0, 0)` cell for solo runs.
    pub fn sp_pairs(&self) -> Vec<(f64, f64)> {
        if self.conditions.solo {
            return vec![(0.0, 0.0)];
        }
        self.sp_grid
            .iter()
            .flat_map(|a| self.sp_grid.iter().map(move |b| (*a, *b)))
            .collect()
    }
}

/// `start..=stop` in increments of `step`, rounded to 10 decimals.
pub fn sp_range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|k| ((start + k as f64 * step) * 1e10).round() / 1e10)
        .collect()
}

/// Parses `start:stop:step`.
pub fn parse_sp_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: std::result::Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
    match nums {
        Ok(v) if v.len() == 3 && v[2] > 0.0 && v[1] >= v[0] => Ok(sp_range(v[0], v[1], v[2])),
        _ => Err(Error::config(format!("bad sp grid `{spec}`, expected start:stop:step"))),
    }
}
