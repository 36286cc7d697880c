//! Steady-state phasor model of the resonant link.
//!
//! The half-bridge drives a series tank (L_TX, R_TX, R_SH, C_TX) at the
//! fundamental of its square wave. Each capsule axis is a coil (L_RX, ESR)
//! loaded by a parallel-series matching network: C_P (plus a parasitic
//! trim C_PAR) across the coil terminals, then C_S in series to the
//! rectifier input, where the LSK switch can add C_M in parallel. The
//! rectifier is linearised as an equivalent ac resistance.
//!
//! All amplitudes are peak values; powers are 1/2 Re(V I*).

mod rectifier;

pub use rectifier::{rectify, RectifierMode, RectifierModel};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::magnetics::{CoilSpec, CouplingSet};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    #[error("singular link system (|Z| = {magnitude:.3e} ohm)")]
    SingularSystem { magnitude: f64 },
    #[error("invalid component: {0}")]
    InvalidComponent(String),
}

/// Calibrated parasitic capacitance across each receiver coil's terminals.
///
/// With the measured coil (6.5 uH) and the published C_P/C_S values, the
/// unloaded matching network resonates near 1.77 MHz; about 111 pF of
/// extra shunt capacitance (pads, ASIC input, board traces) brings the
/// unmodulated branch onto 1.7 MHz. See [`resonant_trim_capacitance`].
pub const DEFAULT_RX_TRIM_CAPACITANCE_F: f64 = 110e-12;

/// Transmitter side of the link.
#[derive(Debug, Clone, PartialEq)]
pub struct TxCircuit {
    /// APS output voltage feeding the half-bridge.
    pub v_in_v: f64,
    pub c_tx_f: f64,
    pub r_sh_ohm: f64,
    /// Drive (carrier) frequency.
    pub f0_hz: f64,
    pub coil: CoilSpec,
}

impl TxCircuit {
    /// Series capacitance resonating with `l_h` at `f_hz`: 1/((2 pi f)^2 L).
    pub fn resonant_c_tx(l_h: f64, f_hz: f64) -> f64 {
        1.0 / ((TAU * f_hz).powi(2) * l_h)
    }

    /// Bench transmitter at 1.7 MHz: six 0.4 ohm shunt resistors in
    /// parallel and C_TX tuned to the coil.
    pub fn with_v_in(v_in_v: f64) -> Self {
        let coil = CoilSpec::tx_default();
        let f0_hz = 1.7e6;
        Self {
            v_in_v,
            c_tx_f: Self::resonant_c_tx(coil.self_inductance_h, f0_hz),
            r_sh_ohm: 0.4 / 6.0,
            f0_hz,
            coil,
        }
    }

    pub fn omega(&self) -> f64 {
        TAU * self.f0_hz
    }

    /// Unloaded series impedance of the Tx loop.
    pub fn series_impedance(&self) -> Complex64 {
        let w = self.omega();
        Complex64::new(self.coil.esr_ohm + self.r_sh_ohm, w * self.coil.self_inductance_h)
            + capacitor_impedance(self.c_tx_f, w)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        self.coil
            .validate()
            .map_err(|e| CircuitError::InvalidComponent(e.to_string()))?;
        let ok = self.v_in_v.is_finite()
            && self.v_in_v >= 0.0
            && self.f0_hz.is_finite()
            && self.f0_hz > 0.0
            && self.c_tx_f > 0.0
            && self.r_sh_ohm.is_finite()
            && self.r_sh_ohm >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(CircuitError::InvalidComponent("tx circuit".into()))
        }
    }
}

/// One receiver axis: coil, matching network, LSK capacitor and rectifier.
#[derive(Debug, Clone, PartialEq)]
pub struct RxBranch {
    pub coil: CoilSpec,
    pub c_p_f: f64,
    pub c_s_f: f64,
    pub c_m_f: f64,
    /// Extra shunt capacitance across the coil terminals.
    pub c_par_f: f64,
    pub r_load_ohm: f64,
    pub rectifier: RectifierModel,
}

impl RxBranch {
    pub fn with_coil(coil: CoilSpec) -> Self {
        Self {
            coil,
            c_p_f: 1.12e-9,
            c_s_f: 120e-12,
            c_m_f: 280e-12,
            c_par_f: DEFAULT_RX_TRIM_CAPACITANCE_F,
            r_load_ohm: 120.0,
            rectifier: RectifierModel::default(),
        }
    }

    pub fn default_axis(label: &str) -> Self {
        Self::with_coil(CoilSpec::rx_default(label))
    }

    pub fn default_set() -> [RxBranch; 3] {
        [
            Self::default_axis("x"),
            Self::default_axis("y"),
            Self::default_axis("z"),
        ]
    }

    /// Equivalent ac resistance of the rectifier, (8/pi^2) R_load / eta.
    pub fn r_ac(&self) -> f64 {
        8.0 / (PI * PI) * self.r_load_ohm / self.rectifier.eta
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        self.coil
            .validate()
            .map_err(|e| CircuitError::InvalidComponent(e.to_string()))?;
        self.rectifier.validate()?;
        let caps_ok = [self.c_p_f, self.c_s_f, self.c_m_f, self.c_par_f]
            .iter()
            .all(|c| !c.is_nan() && *c >= 0.0);
        if !caps_ok || !(self.r_load_ohm > 0.0 && self.r_load_ohm.is_finite()) || !(self.c_s_f > 0.0) {
            return Err(CircuitError::InvalidComponent(format!("rx branch `{}`", self.coil.label)));
        }
        Ok(())
    }

    fn network(&self, with_c_m: bool, w: f64) -> BranchNetwork {
        let r_ac = Complex64::new(self.r_ac(), 0.0);
        let z_load = if with_c_m {
            1.0 / (1.0 / r_ac + Complex64::new(0.0, w * self.c_m_f))
        } else {
            r_ac
        };
        let z_series = capacitor_impedance(self.c_s_f, w) + z_load;
        let y_shunt = Complex64::new(0.0, w * (self.c_p_f + self.c_par_f));
        let z_net = 1.0 / (y_shunt + 1.0 / z_series);
        let z_coil = Complex64::new(self.coil.esr_ohm, w * self.coil.self_inductance_h);
        BranchNetwork {
            z_loop: z_coil + z_net,
            z_net,
            z_series,
            z_load,
        }
    }
}

struct BranchNetwork {
    /// Everything the induced EMF drives: coil plus network.
    z_loop: Complex64,
    /// Network seen from the coil terminals.
    z_net: Complex64,
    /// C_S plus the rectifier input.
    z_series: Complex64,
    /// Rectifier input, with C_M when engaged.
    z_load: Complex64,
}

fn capacitor_impedance(c: f64, w: f64) -> Complex64 {
    if c.is_infinite() {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, -1.0 / (w * c))
    }
}

/// Fundamental of the 0-to-V_IN half-bridge square wave: (2/pi) V_IN at phase 0.
pub fn drive_phasor(tx: &TxCircuit) -> Complex64 {
    Complex64::new(2.0 / PI * tx.v_in_v, 0.0)
}

/// Impedance driven by the induced EMF of one receiver axis at `f_hz`:
/// coil ESR + j omega L in series with C_P || (C_S + (r_ac || C_M)).
pub fn rx_input_impedance(branch: &RxBranch, with_c_m: bool, f_hz: f64) -> Complex64 {
    branch.network(with_c_m, TAU * f_hz).z_loop
}

/// Parasitic shunt capacitance that makes the unmodulated branch loop
/// purely resistive at `f_hz`, or `None` if no non-negative value exists.
pub fn resonant_trim_capacitance(branch: &RxBranch, f_hz: f64) -> Option<f64> {
    let reactance = |c: f64| {
        let mut b = branch.clone();
        b.c_par_f = c;
        rx_input_impedance(&b, false, f_hz).im
    };
    let (mut lo, mut hi) = (0.0, 10e-9);
    if reactance(lo) > 0.0 || reactance(hi) < 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if reactance(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// One steady-state solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSolution {
    pub i_tx: Complex64,
    /// Shunt voltage amplitude, |I_TX| R_SH.
    pub v_sh: f64,
    pub i_rx: [Complex64; 3],
    /// Rectifier input voltage amplitude per axis.
    pub v_ac: [f64; 3],
    pub v_out: [f64; 3],
    pub p_out: [f64; 3],
    /// Ac power into each rectifier (dc output plus rectifier loss).
    pub p_rect_in: [f64; 3],
    pub p_total_out: f64,
    pub p_in: f64,
    /// Dissipation in R_TX + R_SH.
    pub p_loss_tx: f64,
    /// Dissipation in each receiver coil's ESR.
    pub p_loss_rx: [f64; 3],
    pub lsk_engaged: [bool; 3],
}

impl LinkSolution {
    pub fn i_tx_amplitude(&self) -> f64 {
        self.i_tx.norm()
    }

    /// p_in minus every dissipation term, relative to p_in.
    pub fn power_balance_residual(&self) -> f64 {
        let dissipated = self.p_loss_tx
            + self.p_loss_rx.iter().sum::<f64>()
            + self.p_rect_in.iter().sum::<f64>();
        if self.p_in == 0.0 {
            dissipated.abs()
        } else {
            (self.p_in - dissipated).abs() / self.p_in.abs()
        }
    }
}

const SINGULAR_OHM: f64 = 1e-12;

/// Solves the link with each axis reflected into the Tx loop as
/// (omega M_i)^2 / Z_rx,i. Rx-to-Rx coupling is neglected.
pub fn solve_link(
    tx: &TxCircuit,
    branches: &[RxBranch; 3],
    couplings: &CouplingSet,
    lsk_states: [bool; 3],
) -> Result<LinkSolution, CircuitError> {
    let w = tx.omega();
    let nets: [BranchNetwork; 3] = std::array::from_fn(|i| branches[i].network(lsk_states[i], w));
    let reflected: Complex64 = (0..3)
        .map(|i| Complex64::new((w * couplings.m[i]).powi(2), 0.0) / nets[i].z_loop)
        .sum();
    let z_mesh = tx.series_impedance() + reflected;
    if z_mesh.norm() < SINGULAR_OHM || !z_mesh.is_finite() {
        return Err(CircuitError::SingularSystem {
            magnitude: z_mesh.norm(),
        });
    }
    let v = drive_phasor(tx);
    let i_tx = v / z_mesh;
    let i_rx = std::array::from_fn(|i| -Complex64::new(0.0, w * couplings.m[i]) * i_tx / nets[i].z_loop);
    Ok(assemble(tx, branches, &nets, v, i_tx, i_rx, lsk_states))
}

/// Full 4x4 mesh solve including Rx-to-Rx mutual inductances
/// `rx_cross_h[i][j]` (symmetric, diagonal ignored).
pub fn solve_link_coupled(
    tx: &TxCircuit,
    branches: &[RxBranch; 3],
    couplings: &CouplingSet,
    rx_cross_h: &[[f64; 3]; 3],
    lsk_states: [bool; 3],
) -> Result<LinkSolution, CircuitError> {
    let w = tx.omega();
    let nets: [BranchNetwork; 3] = std::array::from_fn(|i| branches[i].network(lsk_states[i], w));
    let jw = |m: f64| Complex64::new(0.0, w * m);
    let mut z = Matrix4::<Complex64>::zeros();
    z[(0, 0)] = tx.series_impedance();
    for i in 0..3 {
        z[(0, i + 1)] = jw(couplings.m[i]);
        z[(i + 1, 0)] = jw(couplings.m[i]);
        for j in 0..3 {
            z[(i + 1, j + 1)] = if i == j { nets[i].z_loop } else { jw(0.5 * (rx_cross_h[i][j] + rx_cross_h[j][i])) };
        }
    }
    let v = drive_phasor(tx);
    let rhs = Vector4::new(v, Complex64::default(), Complex64::default(), Complex64::default());
    let lu = z.lu();
    let det = lu.determinant();
    if det.norm() < SINGULAR_OHM.powi(4) || !det.is_finite() {
        return Err(CircuitError::SingularSystem { magnitude: det.norm() });
    }
    let i = lu.solve(&rhs).ok_or(CircuitError::SingularSystem { magnitude: det.norm() })?;
    Ok(assemble(tx, branches, &nets, v, i[0], [i[1], i[2], i[3]], lsk_states))
}

fn assemble(
    tx: &TxCircuit,
    branches: &[RxBranch; 3],
    nets: &[BranchNetwork; 3],
    v: Complex64,
    i_tx: Complex64,
    i_rx: [Complex64; 3],
    lsk_engaged: [bool; 3],
) -> LinkSolution {
    let mut v_ac = [0.0; 3];
    let mut v_out = [0.0; 3];
    let mut p_out = [0.0; 3];
    let mut p_rect_in = [0.0; 3];
    let mut p_loss_rx = [0.0; 3];
    for k in 0..3 {
        let b = &branches[k];
        let net = &nets[k];
        let v_terminal = i_rx[k] * net.z_net;
        let i_series = v_terminal / net.z_series;
        let v_rect = i_series * net.z_load;
        v_ac[k] = v_rect.norm();
        p_rect_in[k] = 0.5 * v_ac[k] * v_ac[k] / b.r_ac();
        let (vo, po) = rectify(v_ac[k], b);
        v_out[k] = vo;
        p_out[k] = po;
        p_loss_rx[k] = 0.5 * i_rx[k].norm_sqr() * b.coil.esr_ohm;
    }
    LinkSolution {
        i_tx,
        v_sh: i_tx.norm() * tx.r_sh_ohm,
        i_rx,
        v_ac,
        v_out,
        p_out,
        p_rect_in,
        p_total_out: p_out.iter().sum(),
        p_in: 0.5 * (v * i_tx.conj()).re,
        p_loss_tx: 0.5 * i_tx.norm_sqr() * (tx.coil.esr_ohm + tx.r_sh_ohm),
        p_loss_rx,
        lsk_engaged,
    }
}

/// Link with its optional Rx cross-coupling override; picks the solve route.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    pub tx: TxCircuit,
    pub branches: [RxBranch; 3],
    pub rx_cross_h: Option<[[f64; 3]; 3]>,
}

impl LinkModel {
    pub fn new(tx: TxCircuit, branches: [RxBranch; 3]) -> Self {
        Self {
            tx,
            branches,
            rx_cross_h: None,
        }
    }

    pub fn solve(&self, couplings: &CouplingSet, lsk: [bool; 3]) -> Result<LinkSolution, CircuitError> {
        match &self.rx_cross_h {
            Some(cross) => solve_link_coupled(&self.tx, &self.branches, couplings, cross, lsk),
            None => solve_link(&self.tx, &self.branches, couplings, lsk),
        }
    }

    /// Supply voltage at which the unmodulated link delivers `p_total_w`
    /// in total, by bisection on the monotone drive response. None when
    /// even `v_cap_v` falls short.
    pub fn v_in_for_power(&self, couplings: &CouplingSet, p_total_w: f64, v_cap_v: f64) -> Result<Option<f64>, CircuitError> {
        let p_at = |v: f64| -> Result<f64, CircuitError> {
            let mut m = self.clone();
            m.tx.v_in_v = v;
            Ok(m.solve(couplings, [false; 3])?.p_total_out)
        };
        if p_at(v_cap_v)? < p_total_w {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0.0, v_cap_v);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p_at(mid)? < p_total_w {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        Ok(Some(hi))
    }
}

/// Time-averaged link under LSK modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct LskAverage {
    /// C_M disconnected on every axis.
    pub unmodulated: LinkSolution,
    /// C_M connected on every modulating axis.
    pub engaged: LinkSolution,
    pub p_out_avg: [f64; 3],
    pub p_total_out_avg: f64,
    pub p_in_avg: f64,
    /// Rectifier output with the modulation ripple averaged out,
    /// sqrt(<p_out> R_load).
    pub v_out_avg: [f64; 3],
    /// sqrt(<|I_TX|^2>): the amplitude that sets tissue exposure.
    pub i_tx_rms_amplitude: f64,
    /// |I_TX| with the modulating axes engaged / released.
    pub i_on: f64,
    pub i_off: f64,
    /// |I_TX| with only axis k engaged, for each modulating axis.
    pub i_axis_on: [Option<f64>; 3],
}

impl LskAverage {
    /// Relative Tx current modulation depth, |i_on - i_off| / max.
    pub fn depth(&self) -> f64 {
        let hi = self.i_on.max(self.i_off);
        if hi == 0.0 {
            0.0
        } else {
            (self.i_on - self.i_off).abs() / hi
        }
    }
}

/// Averages the link over the LSK cycle. Each modulating axis has C_M
/// engaged for a `duty` fraction of its period; with several modulating
/// axes the square waves are treated as independent, so every engage
/// pattern is weighted by duty^k (1 - duty)^(m - k).
pub fn lsk_averaged_solution(
    link: &LinkModel,
    couplings: &CouplingSet,
    modulating: [bool; 3],
    duty: f64,
) -> Result<LskAverage, CircuitError> {
    if !(0.0..=1.0).contains(&duty) {
        return Err(CircuitError::InvalidComponent(format!("LSK duty {duty} outside [0, 1]")));
    }
    let unmodulated = link.solve(couplings, [false; 3])?;
    let engaged = if modulating.iter().any(|&m| m) {
        link.solve(couplings, modulating)?
    } else {
        unmodulated.clone()
    };
    let active: Vec<usize> = (0..3).filter(|&k| modulating[k]).collect();
    let mut p_out_avg = [0.0; 3];
    let mut p_in_avg = 0.0;
    let mut i2_avg = 0.0;
    for pattern in 0u32..(1 << active.len()) {
        let mut states = [false; 3];
        let mut weight = 1.0;
        for (bit, &axis) in active.iter().enumerate() {
            let on = pattern & (1 << bit) != 0;
            states[axis] = on;
            weight *= if on { duty } else { 1.0 - duty };
        }
        if weight == 0.0 {
            continue;
        }
        let sol = if states == [false; 3] {
            unmodulated.clone()
        } else if states == modulating {
            engaged.clone()
        } else {
            link.solve(couplings, states)?
        };
        for k in 0..3 {
            p_out_avg[k] += weight * sol.p_out[k];
        }
        p_in_avg += weight * sol.p_in;
        i2_avg += weight * sol.i_tx.norm_sqr();
    }
    let mut i_axis_on = [None; 3];
    for &axis in &active {
        let mut states = [false; 3];
        states[axis] = true;
        let amp = if active.len() == 1 {
            engaged.i_tx_amplitude()
        } else {
            link.solve(couplings, states)?.i_tx_amplitude()
        };
        i_axis_on[axis] = Some(amp);
    }
    let v_out_avg = std::array::from_fn(|k| (p_out_avg[k] * link.branches[k].r_load_ohm).sqrt());
    Ok(LskAverage {
        i_on: engaged.i_tx_amplitude(),
        i_off: unmodulated.i_tx_amplitude(),
        unmodulated,
        engaged,
        p_total_out_avg: p_out_avg.iter().sum(),
        p_out_avg,
        p_in_avg,
        v_out_avg,
        i_tx_rms_amplitude: i2_avg.sqrt(),
        i_axis_on,
    })
}

#[cfg(test)]
mod tests;
