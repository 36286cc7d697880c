//! SAR budget: sliding-window mean of the squared Tx current amplitude
//! against an equivalent constant-current limit.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SafetyError {
    #[error("time went backwards: {t_s} s after {last_s} s")]
    NonMonotoneTime { t_s: f64, last_s: f64 },
    #[error("invalid sar update: {0}")]
    InvalidUpdate(String),
    #[error("invalid sar limit: {0}")]
    InvalidLimit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SarLimit {
    pub i_max_const_a: f64,
    pub window_s: f64,
}

impl Default for SarLimit {
    fn default() -> Self {
        Self {
            i_max_const_a: 14.5,
            window_s: 360.0,
        }
    }
}

impl SarLimit {
    pub fn validate(&self) -> Result<(), SafetyError> {
        if self.i_max_const_a > 0.0 && self.i_max_const_a.is_finite() && self.window_s > 0.0 && self.window_s.is_finite() {
            Ok(())
        } else {
            Err(SafetyError::InvalidLimit(format!("{self:?}")))
        }
    }

    /// Energy budget of one window, i_max^2 * window.
    pub fn budget(&self) -> f64 {
        self.i_max_const_a.powi(2) * self.window_s
    }
}

/// One rectangle of the i^2 history: `i2` held over [start, start + dt].
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    start: f64,
    dt: f64,
    i2: f64,
}

impl Piece {
    fn end(&self) -> f64 {
        self.start + self.dt
    }
}

/// Relative tolerance for the compliance comparison.
const COMPLIANCE_RTOL: f64 = 1e-9;

/// Windowed i^2 integral with incremental (compensated) updates.
#[derive(Debug, Clone)]
pub struct SarWindowState {
    pub limit: SarLimit,
    pieces: VecDeque<Piece>,
    sum: f64,
    compensation: f64,
    /// End of the latest contribution.
    now: f64,
    started: bool,
}

impl SarWindowState {
    pub fn new(limit: SarLimit) -> Self {
        Self {
            limit,
            pieces: VecDeque::new(),
            sum: 0.0,
            compensation: 0.0,
            now: 0.0,
            started: false,
        }
    }

    fn add(&mut self, v: f64) {
        // Neumaier summation.
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    /// Time covered so far.
    pub fn now(&self) -> f64 {
        self.now
    }

    /// Integral of i^2 over the window ending now, A^2 s.
    pub fn integral(&self) -> f64 {
        let full = self.sum + self.compensation;
        // The oldest piece may straddle the window start.
        match self.pieces.front() {
            Some(p) if p.start < self.now - self.limit.window_s => {
                let outside = (self.now - self.limit.window_s - p.start).min(p.dt);
                (full - p.i2 * outside).max(0.0)
            }
            _ => full.max(0.0),
        }
    }

    /// From-scratch recomputation of [`SarWindowState::integral`].
    pub fn recompute_integral(&self) -> f64 {
        let from = self.now - self.limit.window_s;
        self.pieces
            .iter()
            .map(|p| p.i2 * (p.end().min(self.now) - p.start.max(from)).max(0.0))
            .sum()
    }

    /// Windowed mean of i^2. Before a full window has elapsed the window is
    /// padded with zeros before the first sample.
    pub fn mean_i2(&self) -> f64 {
        self.integral() / self.limit.window_s
    }
}

/// Appends `i_amplitude` held for `dt_s` starting at `t_s`.
///
/// Left-rectangle integration: the current sampled at `t_s` is taken as
/// constant over the step.
pub fn sar_update(state: &mut SarWindowState, t_s: f64, i_amplitude_a: f64, dt_s: f64) -> Result<(), SafetyError> {
    if !(dt_s > 0.0 && dt_s.is_finite() && t_s.is_finite() && i_amplitude_a.is_finite()) {
        return Err(SafetyError::InvalidUpdate(format!("t = {t_s}, i = {i_amplitude_a}, dt = {dt_s}")));
    }
    if state.started && t_s < state.now - 1e-9 * state.now.abs().max(1.0) {
        return Err(SafetyError::NonMonotoneTime { t_s, last_s: state.now });
    }
    state.started = true;
    let start = if state.pieces.is_empty() { t_s } else { t_s.max(state.now) };
    let piece = Piece {
        start,
        dt: dt_s,
        i2: i_amplitude_a * i_amplitude_a,
    };
    state.add(piece.i2 * piece.dt);
    state.pieces.push_back(piece);
    state.now = piece.end();
    let from = state.now - state.limit.window_s;
    while let Some(p) = state.pieces.front().copied() {
        if p.end() > from {
            break;
        }
        state.add(-p.i2 * p.dt);
        state.pieces.pop_front();
    }
    if state.pieces.is_empty() {
        state.sum = 0.0;
        state.compensation = 0.0;
    }
    Ok(())
}

pub fn sar_compliant(state: &SarWindowState) -> bool {
    state.mean_i2() <= state.limit.i_max_const_a.powi(2) * (1.0 + COMPLIANCE_RTOL)
}

/// True when the windowed mean sits on the limit within the comparison
/// tolerance.
pub fn sar_at_boundary(state: &SarWindowState) -> bool {
    let lim = state.limit.i_max_const_a.powi(2);
    (state.mean_i2() - lim).abs() <= lim * COMPLIANCE_RTOL
}

/// 1 - mean(i^2) / i_max^2.
pub fn sar_margin(state: &SarWindowState) -> f64 {
    1.0 - state.mean_i2() / state.limit.i_max_const_a.powi(2)
}

/// Largest constant amplitude that can be held for the next `horizon_s`
/// seconds with every window ending inside the horizon compliant.
///
/// A window ending s seconds ahead holds s i^2 of new energy plus the last
/// W - s seconds of history, so i^2 = min over s of (I^2 W - T(W - s)) / s.
/// The bound is piecewise of the form (a - b s)/s between history
/// breakpoints, hence its minimum lies at a breakpoint or at the horizon.
/// Returns 0 when the history alone already breaks the budget.
pub fn sar_headroom(state: &SarWindowState, horizon_s: f64) -> f64 {
    let w = state.limit.window_s;
    let h = horizon_s.clamp(f64::MIN_POSITIVE, w);
    let budget = state.limit.budget();
    let held = state.integral();
    if held > budget * (1.0 + COMPLIANCE_RTOL) {
        return 0.0;
    }
    // Sweep s forward, tracking the history energy that has left the
    // window by then.
    let base = state.now - w;
    let bound = |s: f64, left: f64| (budget - held + left) / s;
    let mut left = 0.0;
    let mut best = f64::INFINITY;
    for p in &state.pieces {
        let a = (p.start - base).max(0.0);
        if a >= h {
            break;
        }
        if a > 0.0 {
            best = best.min(bound(a, left));
        }
        let b = (p.end() - base).min(h);
        if b <= 0.0 {
            continue;
        }
        left += p.i2 * (b - a);
        best = best.min(bound(b, left));
    }
    best = best.min(bound(h, left));
    best.max(0.0).sqrt()
}
