//! Time-stepped co-simulation of the whole link over scripted motion.

mod engine;
mod presets;
mod summary;
mod sweep;
mod trajectory;

pub use engine::{run, Diagnostics, RunOutput};
pub use presets::{preset, rotation_sweep, GridPoint, Preset, PRESET_NAMES};
pub use summary::{Summary, SummaryConfig};
pub use sweep::{apply_override, sweep, SweepRow};
pub use trajectory::{Keyframe, Perturbation, PoseSpec, PoseTrack, Respiration, Trajectory};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{CircuitError, RectifierModel, RxBranch, TxCircuit, DEFAULT_RX_TRIM_CAPACITANCE_F};
use crate::control::ApsModel;
use crate::lsk::{DemodConfig, LskError, ModulatorConfig, ToneDecision};
use crate::magnetics::{CoilSpec, CouplingMethod, FilamentOptions, MagneticsError};
use crate::safety::{SafetyError, SarLimit};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown preset '{0}' (known: ramp_fig6b, robot_fig7, static_grid_fig9, dynamic_fig10, rotation_sweep)")]
    UnknownPreset(String),
    #[error("invalid parameter path '{0}'")]
    InvalidParameterPath(String),
    #[error("at t = {t_s} s: {source}")]
    Magnetics { t_s: f64, source: MagneticsError },
    #[error("at t = {t_s} s: {source}")]
    Circuit { t_s: f64, source: CircuitError },
    #[error("at t = {t_s} s: {source}")]
    Safety { t_s: f64, source: SafetyError },
    #[error(transparent)]
    Lsk(#[from] LskError),
    #[error("SAR limit exceeded at t = {t_s} s (windowed mean i^2 = {mean_i2_a2} A^2)")]
    SarHardStop { t_s: f64, mean_i2_a2: f64 },
}

impl ScenarioError {
    /// True for errors raised by a numerical kernel rather than by the
    /// configuration.
    pub fn is_solver_error(&self) -> bool {
        matches!(self, ScenarioError::Magnetics { .. } | ScenarioError::Circuit { .. })
    }
}

/// Tx coil and the three receiver windings (capsule x, y, z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoilsConfig {
    pub tx: CoilSpec,
    pub rx: [CoilSpec; 3],
}

impl Default for CoilsConfig {
    fn default() -> Self {
        Self {
            tx: CoilSpec::tx_default(),
            rx: [CoilSpec::rx_default("x"), CoilSpec::rx_default("y"), CoilSpec::rx_default("z")],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MagneticsConfig {
    pub method: CouplingMethod,
    pub segments_per_turn: usize,
    /// Enables adaptive refinement up to this resolution.
    pub max_segments_per_turn: Option<usize>,
    pub convergence_rel_tol: f64,
    pub min_separation_m: f64,
}

impl Default for MagneticsConfig {
    fn default() -> Self {
        Self {
            method: CouplingMethod::Filament,
            segments_per_turn: 48,
            max_segments_per_turn: None,
            convergence_rel_tol: 5e-3,
            min_separation_m: 1e-3,
        }
    }
}

impl MagneticsConfig {
    pub fn filament_options(&self) -> FilamentOptions {
        FilamentOptions {
            segments_per_turn: self.segments_per_turn,
            min_separation_m: self.min_separation_m,
            max_segments_per_turn: self.max_segments_per_turn,
            convergence_rel_tol: self.convergence_rel_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TxCircuitConfig {
    pub f0_hz: f64,
    /// Defaults to the value resonating with the Tx coil at f0.
    pub c_tx_f: Option<f64>,
    pub r_sh_ohm: f64,
}

impl Default for TxCircuitConfig {
    fn default() -> Self {
        Self {
            f0_hz: 1.7e6,
            c_tx_f: None,
            r_sh_ohm: 0.4 / 6.0,
        }
    }
}

/// Matching network and load, shared by all three axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RxCircuitConfig {
    pub c_p_f: f64,
    pub c_s_f: f64,
    pub c_m_f: f64,
    pub c_par_f: f64,
    pub r_load_ohm: f64,
    pub rectifier: RectifierModel,
}

impl Default for RxCircuitConfig {
    fn default() -> Self {
        Self {
            c_p_f: 1.12e-9,
            c_s_f: 120e-12,
            c_m_f: 280e-12,
            c_par_f: DEFAULT_RX_TRIM_CAPACITANCE_F,
            r_load_ohm: 120.0,
            rectifier: RectifierModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub loop_period_s: f64,
    /// Horizon passed to the SAR headroom interlock.
    pub sar_horizon_s: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            loop_period_s: 0.1,
            sar_horizon_s: 360.0,
        }
    }
}

/// Everything one run needs. Units are SI and spelled out in key names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration_s: f64,
    pub step_s: f64,
    pub seed: u64,
    /// Abort the run as soon as the windowed SAR mean exceeds the limit.
    pub hard_sar_stop: bool,
    /// Synthesize and filter the shunt envelope every step instead of using
    /// the expected-energy shortcut.
    pub full_dsp: bool,
    /// Let every axis's modulator drive its C_M, not only the strongest.
    pub multi_axis_lsk: bool,
    pub adaptive_control: bool,
    pub coils: CoilsConfig,
    pub magnetics: MagneticsConfig,
    pub tx_circuit: TxCircuitConfig,
    pub rx_circuit: RxCircuitConfig,
    pub modulator: ModulatorConfig,
    pub demod: DemodConfig,
    /// `aps.v_v` is the starting (or, without adaptive control, fixed)
    /// supply voltage.
    pub aps: ApsModel,
    pub controller: ControllerConfig,
    pub sar: SarLimit,
    pub perturbation: Perturbation,
    pub summary: SummaryConfig,
    pub trajectory: Trajectory,
}

impl Default for ScenarioConfig {
    /// Static coaxial capsule 9 cm from the Tx coil, control on.
    fn default() -> Self {
        Self {
            name: "static_coaxial_9cm".into(),
            duration_s: 20.0,
            step_s: 0.01,
            seed: 1,
            hard_sar_stop: false,
            full_dsp: false,
            multi_axis_lsk: false,
            adaptive_control: true,
            coils: CoilsConfig::default(),
            magnetics: MagneticsConfig::default(),
            tx_circuit: TxCircuitConfig::default(),
            rx_circuit: RxCircuitConfig::default(),
            modulator: ModulatorConfig::default(),
            demod: DemodConfig::default(),
            aps: ApsModel::default(),
            controller: ControllerConfig::default(),
            sar: SarLimit::default(),
            perturbation: Perturbation::default(),
            summary: SummaryConfig::default(),
            trajectory: Trajectory::fixed(PoseSpec::at(0.0, 0.0, 0.09)),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: String| Err(ScenarioError::InvalidConfig(m));
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(format!("duration_s = {}", self.duration_s));
        }
        if !(self.step_s > 0.0 && self.step_s <= self.controller.loop_period_s) {
            return bad(format!(
                "step_s = {} must be positive and no longer than controller.loop_period_s = {}",
                self.step_s, self.controller.loop_period_s
            ));
        }
        if !(self.controller.sar_horizon_s > 0.0 && self.controller.sar_horizon_s <= self.sar.window_s) {
            return bad("controller.sar_horizon_s must lie in (0, sar.window_s]".into());
        }
        for c in std::iter::once(&self.coils.tx).chain(&self.coils.rx) {
            c.validate().map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
        }
        self.tx_circuit().validate().map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
        for b in self.rx_branches() {
            b.validate().map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
        }
        self.modulator.validate()?;
        self.demod.validate()?;
        self.aps.validate().map_err(ScenarioError::InvalidConfig)?;
        self.sar.validate().map_err(|e| ScenarioError::InvalidConfig(e.to_string()))?;
        self.perturbation.validate()?;
        self.summary.validate()?;
        self.trajectory.validate()
    }

    pub fn tx_circuit(&self) -> TxCircuit {
        let coil = self.coils.tx.clone();
        TxCircuit {
            v_in_v: self.aps.v_v,
            c_tx_f: self
                .tx_circuit
                .c_tx_f
                .unwrap_or_else(|| TxCircuit::resonant_c_tx(coil.self_inductance_h, self.tx_circuit.f0_hz)),
            r_sh_ohm: self.tx_circuit.r_sh_ohm,
            f0_hz: self.tx_circuit.f0_hz,
            coil,
        }
    }

    pub fn rx_branches(&self) -> [RxBranch; 3] {
        let r = &self.rx_circuit;
        std::array::from_fn(|i| RxBranch {
            coil: self.coils.rx[i].clone(),
            c_p_f: r.c_p_f,
            c_s_f: r.c_s_f,
            c_m_f: r.c_m_f,
            c_par_f: r.c_par_f,
            r_load_ohm: r.r_load_ohm,
            rectifier: r.rectifier,
        })
    }

    /// Number of engine steps.
    pub fn step_count(&self) -> usize {
        (self.duration_s / self.step_s).round() as usize
    }
}

/// One engine step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioRecord {
    pub t_s: f64,
    /// Tx-to-capsule center distance.
    pub d_m: f64,
    pub k: [f64; 3],
    pub v_in_v: f64,
    /// Tx current amplitude, rms over the LSK cycle.
    pub i_tx_a: f64,
    pub v_out_v: [f64; 3],
    pub p_out_w: [f64; 3],
    pub p_total_out_w: f64,
    pub p_in_w: f64,
    pub f_m_hz: f64,
    pub tone: ToneDecision,
    pub sar_mean_i2_a2: f64,
    pub sar_margin: f64,
    pub sar_compliant: bool,
}

impl ScenarioRecord {
    pub fn is_finite(&self) -> bool {
        [self.t_s, self.d_m, self.v_in_v, self.i_tx_a, self.p_total_out_w, self.p_in_w, self.f_m_hz, self.sar_mean_i2_a2, self.sar_margin]
            .iter()
            .chain(&self.k)
            .chain(&self.v_out_v)
            .chain(&self.p_out_w)
            .all(|v| v.is_finite())
    }
}
