//! TOML run configuration.
//!
//! Every section is optional and falls back to the defaults below. A
//! top-level `preset = "name"` starts from that preset; any sections given
//! alongside it are merged over the preset key by key.
//!
//! ```toml
//! [wavenumbers]          # k1 = 1, k2 = 2
//! [interface]            # kind = "flat"
//! [obstacle]             # kind = "none"
//! [measurement]          # a = 20, b = 1.55, n = 401
//! [forward]              # h_vol = 0.1, m = 128, quadrature_order = 8
//! [grid]                 # x1_range = [-5, 5], x2_range = [-8.5, 1.5], steps 0.06
//! [inversion]            # mode = "fixed_alpha", alpha = 1e-6
//! [noise]                # level = 0, seed = 0
//! [run]                  # out = "lsm-out", threads = 0 (all cores)
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{ForwardDiscretization, Scenario};
use crate::geometry::{InterfaceProfile, MeasurementLine, ObstacleCurve, SamplingGrid};
use crate::greens::WaveNumbers;
use crate::inversion::{NormConvention, RegularizationPolicy, DEFAULT_ALPHA, DEFAULT_TAU};

use super::presets::Preset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x1_range: [f64; 2],
    pub x2_range: [f64; 2],
    pub step_x1: f64,
    pub step_x2: f64,
    /// Heights at which the grid is cut into separately normalized bands.
    pub split_x2: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = SamplingGrid::default();
        Self {
            x1_range: g.x1_range,
            x2_range: g.x2_range,
            step_x1: g.step_x1,
            step_x2: g.step_x2,
            split_x2: vec![],
        }
    }
}

impl GridConfig {
    pub fn grid(&self) -> SamplingGrid {
        SamplingGrid {
            x1_range: self.x1_range,
            x2_range: self.x2_range,
            step_x1: self.step_x1,
            step_x2: self.step_x2,
        }
    }

    /// The bands to image, upper first.
    pub fn bands(&self) -> Vec<SamplingGrid> {
        self.grid().split_at(&self.split_x2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizationMode {
    #[default]
    FixedAlpha,
    Morozov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InversionConfig {
    pub mode: RegularizationMode,
    pub alpha: f64,
    /// Relative noise level for the discrepancy target; `[noise] level` if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub morozov_level: Option<f64>,
    pub tau: f64,
    pub root_tol: f64,
    pub norm: NormConvention,
    /// Cut-off for the binary mask output.
    pub threshold: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            mode: RegularizationMode::FixedAlpha,
            alpha: DEFAULT_ALPHA,
            morozov_level: None,
            tau: DEFAULT_TAU,
            root_tol: 1e-3,
            norm: NormConvention::Weighted,
            threshold: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub level: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            out: PathBuf::from("lsm-out"),
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub wavenumbers: WaveNumbers,
    pub interface: InterfaceProfile,
    pub obstacle: ObstacleCurve,
    pub measurement: MeasurementLine,
    pub forward: ForwardDiscretization,
    pub grid: GridConfig,
    pub inversion: InversionConfig,
    pub noise: NoiseConfig,
    pub run: RunSection,
}

impl RunConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            wavenumbers: self.wavenumbers,
            interface: self.interface.clone(),
            obstacle: self.obstacle.clone(),
            measurement: self.measurement,
            discretization: self.forward.clone(),
        }
    }

    pub fn policy(&self) -> RegularizationPolicy {
        match self.inversion.mode {
            RegularizationMode::FixedAlpha => RegularizationPolicy::FixedAlpha {
                alpha: self.inversion.alpha,
            },
            RegularizationMode::Morozov => RegularizationPolicy::Morozov {
                noise_level: self.inversion.morozov_level.unwrap_or(self.noise.level),
                tau: self.inversion.tau,
                root_tol: self.inversion.root_tol,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario().validate()?;
        self.grid.grid().validate()?;
        if self.grid.split_x2.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("grid.split_x2", "finite heights"));
        }
        if self.grid.x2_range[1] >= self.measurement.b {
            return Err(Error::validation("grid.x2_range", "below the measurement height"));
        }
        self.policy().validate().map_err(|e| match (self.inversion.mode, e) {
            (RegularizationMode::Morozov, Error::Validation { field, .. }) if field == "inversion.noise_level" => {
                Error::validation("inversion.morozov_level", "in (0, 1) (or set noise.level)")
            }
            (_, e) => e,
        })?;
        if !(self.inversion.threshold > 0.0 && self.inversion.threshold <= 1.0) {
            return Err(Error::validation("inversion.threshold", "in (0, 1]"));
        }
        if !(self.noise.level >= 0.0 && self.noise.level < 1.0) {
            return Err(Error::validation("noise.level", "in [0, 1)"));
        }
        if i64::try_from(self.noise.seed).is_err() {
            return Err(Error::validation("noise.seed", format!("<= {}", i64::MAX)));
        }
        Ok(())
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_error(text: &str, e: toml::de::Error) -> Error {
    Error::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    }
}

/// Merges `over` into `base`, recursing into tables.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                // A new tagged variant replaces the section instead of mixing fields.
                if o.contains_key("kind") && b.get("kind") != o.get("kind") {
                    *b = o;
                } else {
                    merge(b, o);
                }
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut table: toml::Table = text.parse().map_err(|e| parse_error(text, e))?;
    let config = match table.remove("preset") {
        None => toml::from_str::<RunConfig>(text).map_err(|e| parse_error(text, e))?,
        Some(toml::Value::String(name)) => {
            let preset: Preset = name.parse()?;
            let mut base = toml::Table::try_from(preset.config()).map_err(|e| Error::Config(e.to_string()))?;
            merge(&mut base, table);
            RunConfig::deserialize(base).map_err(|e| Error::Config(format!("preset {name} overrides: {}", e.message())))?
        }
        Some(_) => {
            let line = text.lines().position(|l| l.trim_start().starts_with("preset")).map_or(0, |i| i + 1);
            return Err(Error::Parse {
                line,
                message: "preset must be a string".into(),
            });
        }
    };
    config.validate()?;
    Ok(config)
}

/// Full TOML form with every default spelled out.
pub fn emit_config(config: &RunConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::Config(e.to_string()))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
