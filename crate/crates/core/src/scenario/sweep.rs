use rayon::prelude::*;
use toml::Value;

use super::{run, ScenarioConfig, ScenarioError, Summary};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub summary: Summary,
}

fn set_path(root: &mut Value, path: &str, new: Value) -> Result<(), ScenarioError> {
    let bad = || ScenarioError::InvalidParameterPath(path.to_string());
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad());
    }
    let (last, parents) = parts.split_last().ok_or_else(bad)?;
    let mut node = root;
    for part in parents {
        node = match node {
            Value::Table(t) => t.get_mut(*part).ok_or_else(bad)?,
            Value::Array(a) => a.get_mut(part.parse::<usize>().map_err(|_| bad())?).ok_or_else(bad)?,
            _ => return Err(bad()),
        };
    }
    let slot = match node {
        // Absent optional keys may be set; unknown keys are rejected when
        // the table is deserialized again.
        Value::Table(t) => t.entry(last.to_string()).or_insert(Value::Float(0.0)),
        Value::Array(a) => a.get_mut(last.parse::<usize>().map_err(|_| bad())?).ok_or_else(bad)?,
        _ => return Err(bad()),
    };
    let new = match (&*slot, new) {
        (Value::Integer(_), Value::Float(f)) => {
            if f.fract() != 0.0 || !f.is_finite() {
                return Err(ScenarioError::InvalidConfig(format!("{path} needs an integer, got {f}")));
            }
            Value::Integer(f as i64)
        }
        (_, v) => v,
    };
    *slot = new;
    Ok(())
}

/// Copy of `cfg` with the value at dotted `path` replaced, e.g.
/// `aps.v_v` or `trajectory.keyframes.0.capsule.position_m.2`.
pub fn apply_override(cfg: &ScenarioConfig, path: &str, value: Value) -> Result<ScenarioConfig, ScenarioError> {
    let mut tree = Value::try_from(cfg).map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
    set_path(&mut tree, path, value)?;
    let out: ScenarioConfig = tree
        .try_into()
        .map_err(|e: toml::de::Error| ScenarioError::InvalidParameterPath(format!("{path}: {}", e.message())))?;
    out.validate()?;
    Ok(out)
}

/// Runs `cfg` once per value of the parameter at `path`, in parallel.
/// Rows come back in the order of `values`.
pub fn sweep(cfg: &ScenarioConfig, path: &str, values: &[f64]) -> Result<Vec<SweepRow>, ScenarioError> {
    let configs = values
        .iter()
        .map(|&v| apply_override(cfg, path, Value::Float(v)))
        .collect::<Result<Vec<_>, _>>()?;
    configs
        .par_iter()
        .zip(values.par_iter())
        .map(|(c, &value)| run(c).map(|out| SweepRow { value, summary: out.summary }))
        .collect()
}
