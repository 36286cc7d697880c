//! Transmitter-side adaptive power control: bang-hold-bang stepping of the
//! APS voltage driven by the demodulated tone.

use serde::{Deserialize, Serialize};

use crate::lsk::ToneDecision;

/// Adjustable power supply feeding the half-bridge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApsModel {
    pub v_min_v: f64,
    pub v_max_v: f64,
    pub step_v: f64,
    pub slew_v_per_s: f64,
    /// Present output voltage.
    pub v_v: f64,
}

impl Default for ApsModel {
    fn default() -> Self {
        Self {
            v_min_v: 3.5,
            v_max_v: 60.0,
            step_v: 0.25,
            slew_v_per_s: 50.0,
            v_v: 3.5,
        }
    }
}

impl ApsModel {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.v_min_v > 0.0
            && self.v_min_v < self.v_max_v
            && self.v_max_v.is_finite()
            && self.step_v > 0.0
            && self.slew_v_per_s > 0.0
            && (self.v_min_v..=self.v_max_v).contains(&self.v_v);
        if ok {
            Ok(())
        } else {
            Err(format!("invalid aps model {self:?}"))
        }
    }

    /// Moves the output toward `target_v` at no more than the slew rate.
    pub fn slew_toward(&mut self, target_v: f64, dt_s: f64) -> f64 {
        let max = self.slew_v_per_s * dt_s;
        let target = target_v.clamp(self.v_min_v, self.v_max_v);
        self.v_v += (target - self.v_v).clamp(-max, max);
        self.v_v
    }

    /// Loop periods needed to climb from `from_v` to the top of the range.
    pub fn ramp_periods(&self, from_v: f64) -> f64 {
        ((self.v_max_v - from_v) / self.step_v).ceil().max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub v_cmd_v: f64,
    pub last_decision: ToneDecision,
    pub loop_period_s: f64,
    /// Set when the last step asked for a voltage outside the allowed range.
    pub saturation_flag: bool,
}

impl ControllerState {
    pub fn new(v_cmd_v: f64, loop_period_s: f64) -> Self {
        Self {
            v_cmd_v,
            last_decision: ToneDecision::None,
            loop_period_s,
            saturation_flag: false,
        }
    }
}

/// One loop period: none raises the command by a step, low_tone holds,
/// high_tone lowers it. The step is limited by what the APS can slew in a
/// period, and the result is clamped to the APS range and to `ceiling_v`
/// (the SAR interlock; pass infinity when unconstrained).
pub fn control_step(decision: ToneDecision, state: &ControllerState, aps: &ApsModel, ceiling_v: f64) -> ControllerState {
    let step = aps.step_v.min(aps.slew_v_per_s * state.loop_period_s);
    let requested = match decision {
        ToneDecision::None => state.v_cmd_v + step,
        ToneDecision::LowTone => state.v_cmd_v,
        ToneDecision::HighTone => state.v_cmd_v - step,
    };
    let upper = aps.v_max_v.min(ceiling_v).max(aps.v_min_v);
    let v_cmd_v = requested.clamp(aps.v_min_v, upper);
    ControllerState {
        v_cmd_v,
        last_decision: decision,
        loop_period_s: state.loop_period_s,
        saturation_flag: v_cmd_v != requested,
    }
}

/// Priority merge when several axes modulate at once. high_tone wins, since
/// over-power is the direction that matters for safety; an axis showing no
/// tone does not mask another axis's low_tone, as the transmitter sees the
/// superposed tones.
pub fn combine_decisions(decisions: &[ToneDecision]) -> ToneDecision {
    if decisions.contains(&ToneDecision::HighTone) {
        ToneDecision::HighTone
    } else if decisions.contains(&ToneDecision::LowTone) {
        ToneDecision::LowTone
    } else {
        ToneDecision::None
    }
}

/// What a plant reports back at a given APS voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantResponse {
    pub decision: ToneDecision,
    pub p_out_w: f64,
}

/// Anything the loop can be closed around.
pub trait Plant {
    type Error;
    fn respond(&mut self, t_s: f64, v_in_v: f64) -> Result<PlantResponse, Self::Error>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopRow {
    pub t_s: f64,
    pub v_in_v: f64,
    pub decision: ToneDecision,
    pub p_out_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopLog {
    pub rows: Vec<LoopRow>,
    /// Still reading none after ten times the expected ramp time.
    pub never_converged: bool,
    pub saturated: bool,
}

/// Runs the loop once per period for `duration_s`, starting from the APS's
/// present output.
pub fn closed_loop_run<P: Plant>(plant: &mut P, aps: &ApsModel, loop_period_s: f64, duration_s: f64) -> Result<ClosedLoopLog, P::Error> {
    let mut aps = *aps;
    let mut state = ControllerState::new(aps.v_v, loop_period_s);
    let give_up = 10.0 * aps.ramp_periods(aps.v_v).max(1.0) * loop_period_s;
    let periods = (duration_s / loop_period_s).round() as usize;
    let mut rows = Vec::with_capacity(periods);
    let mut saturated = false;
    let mut ever_left_none = false;
    for n in 0..periods {
        let t_s = n as f64 * loop_period_s;
        let v_in_v = aps.slew_toward(state.v_cmd_v, loop_period_s);
        let r = plant.respond(t_s, v_in_v)?;
        ever_left_none |= r.decision != ToneDecision::None;
        rows.push(LoopRow {
            t_s,
            v_in_v,
            decision: r.decision,
            p_out_w: r.p_out_w,
        });
        state = control_step(r.decision, &state, &aps, f64::INFINITY);
        saturated |= state.saturation_flag;
    }
    let never_converged = !ever_left_none && periods as f64 * loop_period_s >= give_up;
    Ok(ClosedLoopLog {
        rows,
        never_converged,
        saturated,
    })
}
