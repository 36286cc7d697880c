//! Load-shift keying: the receiver's three-level modulator and the
//! transmitter's shunt-envelope demodulator.
//!
//! Signals are simulated at baseband: the synthesized series is the
//! post-mixer envelope of the shunt voltage, not the 1.7 MHz carrier.

mod demod;
mod filter;

pub use demod::{
    agc, decision_latency, demodulate, synthesize_shunt, DemodReport, Demodulator, LatencyReport,
};
pub use filter::{BandPass, Biquad};

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LskError {
    #[error("invalid lsk configuration: {0}")]
    InvalidConfig(String),
    #[error("series of {duration_s} s is shorter than the {window_s} s decision window")]
    WindowTooShort { duration_s: f64, window_s: f64 },
    #[error("agc input is all zeros")]
    AllZeroInput,
}

/// Comparator thresholds, applied to V'_OUT = divider_ratio * V_OUT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulatorConfig {
    pub divider_ratio: f64,
    pub v_l_v: f64,
    pub v_h_v: f64,
    pub hysteresis_v: f64,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
}

impl Default for ModulatorConfig {
    /// Output band 3.15-3.45 V around 3.3 V through a 1:2 divider.
    fn default() -> Self {
        Self {
            divider_ratio: 0.5,
            v_l_v: 1.575,
            v_h_v: 1.725,
            hysteresis_v: 0.05,
            f_low_hz: 15e3,
            f_high_hz: 35e3,
        }
    }
}

impl ModulatorConfig {
    pub fn validate(&self) -> Result<(), LskError> {
        let ok = self.divider_ratio > 0.0
            && self.divider_ratio.is_finite()
            && self.v_l_v < self.v_h_v
            && self.hysteresis_v > 0.0
            && self.f_low_hz > 0.0
            && self.f_low_hz < self.f_high_hz
            && self.v_h_v.is_finite()
            && self.f_high_hz.is_finite();
        if ok {
            Ok(())
        } else {
            Err(LskError::InvalidConfig(format!("modulator {self:?}")))
        }
    }

    /// Regulation band in terms of the rectified output voltage.
    pub fn output_band_v(&self) -> (f64, f64) {
        (self.v_l_v / self.divider_ratio, self.v_h_v / self.divider_ratio)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Below,
    InBand,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatorState {
    pub band: Band,
    pub f_m_hz: f64,
    /// Oscillator phase in [0, 2 pi).
    pub phase_rad: f64,
}

impl Default for ModulatorState {
    fn default() -> Self {
        Self {
            band: Band::Below,
            f_m_hz: 0.0,
            phase_rad: 0.0,
        }
    }
}

impl ModulatorState {
    /// Whether C_M is switched in at this instant (first half of each
    /// oscillator period).
    pub fn c_m_engaged(&self) -> bool {
        self.f_m_hz > 0.0 && self.phase_rad < std::f64::consts::PI
    }

    /// Average C_M duty over many periods.
    pub fn duty(&self) -> f64 {
        if self.f_m_hz > 0.0 {
            0.5
        } else {
            0.0
        }
    }
}

fn band_frequency(band: Band, cfg: &ModulatorConfig) -> f64 {
    match band {
        Band::Below => 0.0,
        Band::InBand => cfg.f_low_hz,
        Band::Above => cfg.f_high_hz,
    }
}

/// Advances the comparator pair and the oscillator by `dt_s`.
///
/// A threshold is crossed upward at threshold + hysteresis/2 and downward at
/// threshold - hysteresis/2. Negative inputs are treated as 0.
pub fn modulator_step(v_out: f64, cfg: &ModulatorConfig, state: &ModulatorState, dt_s: f64) -> ModulatorState {
    let v = v_out.max(0.0) * cfg.divider_ratio;
    let half = cfg.hysteresis_v / 2.0;
    let above_l = match state.band {
        Band::Below => v >= cfg.v_l_v + half,
        Band::InBand | Band::Above => v >= cfg.v_l_v - half,
    };
    let above_h = match state.band {
        Band::Above => v >= cfg.v_h_v - half,
        Band::Below | Band::InBand => v >= cfg.v_h_v + half,
    };
    let band = match (above_l, above_h) {
        (_, true) => Band::Above,
        (true, false) => Band::InBand,
        (false, false) => Band::Below,
    };
    let f_m_hz = band_frequency(band, cfg);
    ModulatorState {
        band,
        f_m_hz,
        phase_rad: (state.phase_rad + TAU * f_m_hz * dt_s.max(0.0)).rem_euclid(TAU),
    }
}

/// Transmitter-side classification of the backscattered tone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToneDecision {
    #[default]
    None,
    LowTone,
    HighTone,
}

impl ToneDecision {
    pub fn as_str(&self) -> &'static str {
        match self {
            ToneDecision::None => "none",
            ToneDecision::LowTone => "low_tone",
            ToneDecision::HighTone => "high_tone",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(ToneDecision::None),
            "low_tone" => Some(ToneDecision::LowTone),
            "high_tone" => Some(ToneDecision::HighTone),
            _ => None,
        }
    }

    /// The tone the modulator emits at frequency `f_m_hz`.
    pub fn expected_for(f_m_hz: f64, cfg: &ModulatorConfig) -> Self {
        if f_m_hz == cfg.f_high_hz {
            ToneDecision::HighTone
        } else if f_m_hz == cfg.f_low_hz {
            ToneDecision::LowTone
        } else {
            ToneDecision::None
        }
    }
}

impl fmt::Display for ToneDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Demodulation chain settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DemodConfig {
    pub sample_rate_hz: f64,
    pub agc_target_v: f64,
    /// Band-pass filter order (order of the band-pass transfer function).
    pub bpf_order: usize,
    pub bpf_ripple_db: f64,
    pub bpf_bandwidth_hz: f64,
    pub decision_window_s: f64,
    pub energy_ratio_threshold: f64,
    pub f_low_hz: f64,
    pub f_high_hz: f64,
}

impl Default for DemodConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 1e6,
            agc_target_v: 1.0,
            bpf_order: 4,
            bpf_ripple_db: 0.5,
            bpf_bandwidth_hz: 6e3,
            decision_window_s: 2e-3,
            energy_ratio_threshold: 3.0,
            f_low_hz: 15e3,
            f_high_hz: 35e3,
        }
    }
}

impl DemodConfig {
    pub fn validate(&self) -> Result<(), LskError> {
        let err = |m: &str| Err(LskError::InvalidConfig(m.to_string()));
        if !(self.sample_rate_hz > 2.0 * (self.f_high_hz + self.bpf_bandwidth_hz)) {
            return err("sample_rate_hz must exceed 2 (f_high + bandwidth)");
        }
        if self.bpf_order < 2 || self.bpf_order % 2 != 0 {
            return err("bpf_order must be even and at least 2");
        }
        if !(self.bpf_ripple_db > 0.0 && self.bpf_bandwidth_hz > 0.0 && self.agc_target_v > 0.0) {
            return err("ripple, bandwidth and agc target must be positive");
        }
        if !(self.f_low_hz > self.bpf_bandwidth_hz / 2.0 && self.f_low_hz < self.f_high_hz) {
            return err("tone frequencies must be ordered and clear of dc");
        }
        if !(self.decision_window_s * self.sample_rate_hz >= 64.0) {
            return err("decision window too short for the sample rate");
        }
        if !(self.energy_ratio_threshold > 1.0) {
            return err("energy_ratio_threshold must exceed 1");
        }
        Ok(())
    }

    pub fn window_samples(&self) -> usize {
        (self.decision_window_s * self.sample_rate_hz).round() as usize
    }
}
