use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Value;

use super::CliError;
use crate::scenario::{preset, GridPoint, Preset, ScenarioConfig};

/// Run file as written by the user. A `[scenario]` table is laid over the
/// selected preset (or the defaults) key by key; arrays are replaced whole.
///
/// ```toml
/// preset = "ramp_fig6b"
/// out_csv = "ramp.csv"
///
/// [scenario]
/// seed = 7
/// aps.step_v = 0.5
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub out_csv: Option<PathBuf>,
    #[serde(default)]
    pub scenario: toml::Table,
}

/// Same shape with the overlay typed, used only to report bad keys and
/// values against the file's own line numbers.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct StrictRunConfig {
    preset: Option<String>,
    out_csv: Option<PathBuf>,
    #[serde(default)]
    scenario: ScenarioConfig,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let diag = |e: toml::de::Error| CliError::Config(format!("{origin}: {e}"));
        toml::from_str::<StrictRunConfig>(text).map_err(diag)?;
        toml::from_str(text).map_err(diag)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }
}

/// Command-line overrides applied after the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub segments_per_turn: Option<usize>,
    pub no_adaptive_control: bool,
}

fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Table(b), Value::Table(o)) => {
            for (key, value) in o {
                match b.get_mut(key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        b.insert(key.clone(), value.clone());
                    }
                }
            }
        }
        (slot, value) => *slot = value.clone(),
    }
}

fn overlay(base: &ScenarioConfig, table: &toml::Table, ov: &Overrides) -> Result<ScenarioConfig, CliError> {
    let mut tree = Value::try_from(base).map_err(|e| CliError::Config(e.to_string()))?;
    merge(&mut tree, &Value::Table(table.clone()));
    let mut cfg: ScenarioConfig = tree
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("[scenario]: {}", e.message())))?;
    if let Some(seed) = ov.seed {
        cfg.seed = seed;
    }
    if let Some(n) = ov.segments_per_turn {
        cfg.magnetics.segments_per_turn = n;
    }
    if ov.no_adaptive_control {
        cfg.adaptive_control = false;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

/// What a run file resolves to.
#[derive(Debug, Clone)]
pub enum Resolved {
    Single(ScenarioConfig),
    Grid(Vec<GridPoint>),
}

pub fn resolve(file: &RunConfig, ov: &Overrides) -> Result<Resolved, CliError> {
    let name = ov.preset.as_ref().or(file.preset.as_ref());
    let base = match name {
        Some(n) => preset(n).map_err(|e| CliError::Config(e.to_string()))?,
        None => Preset::Single(ScenarioConfig::default()),
    };
    match base {
        Preset::Single(c) => Ok(Resolved::Single(overlay(&c, &file.scenario, ov)?)),
        Preset::Grid(points) => points
            .into_iter()
            .map(|p| {
                Ok(GridPoint {
                    config: overlay(&p.config, &file.scenario, ov)?,
                    ..p
                })
            })
            .collect::<Result<_, CliError>>()
            .map(Resolved::Grid),
    }
}
