use serde::{Deserialize, Serialize};

use super::{CircuitError, RxBranch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RectifierMode {
    /// Linear load r_ac = (8/pi^2) R_load / eta; dc power = eta x ac power.
    #[default]
    EquivalentResistance,
    /// v_out = max(0, v_ac - 2 v_drop). The phasor solve still uses r_ac.
    DiodeDrop,
}

/// Behavioral full-wave rectifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectifierModel {
    pub mode: RectifierMode,
    pub eta: f64,
    pub v_drop_v: f64,
}

impl Default for RectifierModel {
    fn default() -> Self {
        Self {
            mode: RectifierMode::EquivalentResistance,
            eta: 0.85,
            v_drop_v: 0.3,
        }
    }
}

impl RectifierModel {
    pub fn validate(&self) -> Result<(), CircuitError> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(CircuitError::InvalidComponent(format!("rectifier eta {}", self.eta)));
        }
        if !(self.v_drop_v >= 0.0 && self.v_drop_v.is_finite()) {
            return Err(CircuitError::InvalidComponent(format!("rectifier v_drop {}", self.v_drop_v)));
        }
        Ok(())
    }
}

/// Dc output voltage and power for an ac input amplitude at the rectifier.
///
/// In diode-drop mode the dc power is capped at the ac power the linear
/// solve delivers to r_ac, so the rectifier never creates energy.
pub fn rectify(v_ac_amplitude: f64, branch: &RxBranch) -> (f64, f64) {
    let v = v_ac_amplitude.max(0.0);
    let rect = &branch.rectifier;
    let r_load = branch.r_load_ohm;
    let p_ac = 0.5 * v * v / branch.r_ac();
    match rect.mode {
        RectifierMode::EquivalentResistance => {
            let p_out = rect.eta * p_ac;
            ((p_out * r_load).sqrt(), p_out)
        }
        RectifierMode::DiodeDrop => {
            let v_out = (v - 2.0 * rect.v_drop_v).max(0.0);
            let p_out = (v_out * v_out / r_load).min(p_ac);
            ((p_out * r_load).sqrt(), p_out)
        }
    }
}
