use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ScenarioConfig, ScenarioError, ScenarioRecord, Summary};
use crate::circuit::{lsk_averaged_solution, LinkModel, LskAverage};
use crate::control::{combine_decisions, control_step, ControllerState};
use crate::lsk::{decision_latency, modulator_step, synthesize_shunt, Demodulator, LatencyReport, ModulatorState, ToneDecision};
use crate::magnetics::{coupling_set, CouplingSet, PlacedCoil, Pose};
use crate::safety::{sar_compliant, sar_headroom, sar_margin, sar_update, SarWindowState};

/// Side information gathered during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Band-pass coefficients used by the demodulator.
    pub filter_coefficients: Vec<String>,
    pub latency: LatencyReport,
    /// Control periods whose command hit a limit.
    pub saturated_periods: usize,
    /// The decision read none for the whole run although it lasted ten
    /// times the expected ramp time.
    pub never_converged: bool,
    /// Coupling evaluations skipped because the relative pose repeated.
    pub coupling_cache_hits: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ScenarioRecord>,
    pub summary: Summary,
    pub diagnostics: Diagnostics,
}

/// Tone seen by the transmitter for one step.
fn step_decision<R: rand::Rng>(
    cfg: &ScenarioConfig,
    demod: &Demodulator,
    avg: &LskAverage,
    modulators: &[ModulatorState; 3],
    modulating: [bool; 3],
    rng: &mut R,
) -> Result<ToneDecision, ScenarioError> {
    let r_sh = cfg.tx_circuit.r_sh_ohm;
    let noise_a = cfg.perturbation.shunt_noise_rms_a;
    let i_off = avg.i_off;
    let classify = |levels: (f64, f64), f_m: f64, rng: &mut R| -> Result<ToneDecision, ScenarioError> {
        if cfg.full_dsp {
            let x = synthesize_shunt(levels, f_m, cfg.demod.decision_window_s, &cfg.demod, noise_a, r_sh, rng)?;
            Ok(demod.analyze(&x).decision)
        } else {
            Ok(demod.analytic((r_sh * levels.0, r_sh * levels.1), f_m, r_sh * noise_a).decision)
        }
    };
    let active: Vec<usize> = (0..3).filter(|&k| modulating[k]).collect();
    if active.is_empty() {
        return classify((i_off, i_off), 0.0, rng);
    }
    // Each modulating axis is classified on its own contribution; the
    // superposed tones are merged by priority.
    let mut decisions = Vec::with_capacity(active.len());
    for &k in &active {
        let i_on = avg.i_axis_on[k].unwrap_or(avg.i_on);
        decisions.push(classify((i_on, i_off), modulators[k].f_m_hz, rng)?);
    }
    Ok(combine_decisions(&decisions))
}

fn argmax(v: &[f64; 3]) -> usize {
    (0..3).fold(0, |best, k| if v[k] > v[best] { k } else { best })
}

/// Runs the co-simulation described by `cfg`.
///
/// Per step: sample the trajectory, add respiration, evaluate couplings,
/// advance the modulators on the previous step's outputs, solve the
/// LSK-averaged link, demodulate, update the SAR window and, every control
/// period, step the controller. The APS slews toward the new command during
/// the remainder of the step, so a command issued at step n is first seen at
/// step n + 1.
pub fn run(cfg: &ScenarioConfig) -> Result<RunOutput, ScenarioError> {
    cfg.validate()?;
    let track = cfg.trajectory.track()?;
    let demod = Demodulator::new(&cfg.demod)?;
    let filter_coefficients = demod.coefficient_report();
    for line in &filter_coefficients {
        info!("{line}");
    }
    let latency = decision_latency(&demod);
    info!(
        "demodulator latency bound {:.3} ms (window {:.3} ms + group delay {:.3} ms)",
        latency.bound_s * 1e3,
        latency.window_s * 1e3,
        latency.group_delay_s * 1e3
    );

    let opts = cfg.magnetics.filament_options();
    let mut link = LinkModel::new(cfg.tx_circuit(), cfg.rx_branches());
    let mut aps = cfg.aps;
    let mut ctrl = ControllerState::new(aps.v_v, cfg.controller.loop_period_s);
    let mut sar = SarWindowState::new(cfg.sar);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut modulators = [ModulatorState::default(); 3];
    let mut prev_v_out = [0.0; 3];
    let mut cache: Option<(Pose, Pose, CouplingSet)> = None;
    let mut cache_hits = 0;
    let mut saturated_periods = 0;
    let mut ever_tone = false;

    let dt = cfg.step_s;
    let steps = cfg.step_count();
    let period_steps = ((cfg.controller.loop_period_s / dt).round() as usize).max(1);
    let mut records = Vec::with_capacity(steps);

    for n in 0..steps {
        let t_s = n as f64 * dt;
        let (tx_pose, mut capsule) = track.sample(t_s);
        capsule.position += cfg.perturbation.respiration.displacement(t_s);

        let coupling = match &cache {
            Some((tp, cp, c)) if *tp == tx_pose && *cp == capsule => {
                cache_hits += 1;
                *c
            }
            _ => {
                let tx = PlacedCoil::new(cfg.coils.tx.clone(), tx_pose);
                let c = coupling_set(&tx, &capsule, &cfg.coils.rx, cfg.magnetics.method, &opts)
                    .map_err(|source| ScenarioError::Magnetics { t_s, source })?
                    .scaled(cfg.perturbation.field_attenuation);
                cache = Some((tx_pose, capsule, c));
                c
            }
        };

        for (m, &v) in modulators.iter_mut().zip(&prev_v_out) {
            *m = modulator_step(v, &cfg.modulator, m, dt);
        }
        let modulating: [bool; 3] = if cfg.multi_axis_lsk {
            std::array::from_fn(|k| modulators[k].f_m_hz > 0.0)
        } else {
            let lead = argmax(&prev_v_out);
            std::array::from_fn(|k| k == lead && modulators[k].f_m_hz > 0.0)
        };

        link.tx.v_in_v = aps.v_v;
        let avg = lsk_averaged_solution(&link, &coupling, modulating, 0.5)
            .map_err(|source| ScenarioError::Circuit { t_s, source })?;
        let tone = step_decision(cfg, &demod, &avg, &modulators, modulating, &mut rng)?;
        ever_tone |= tone != ToneDecision::None;

        sar_update(&mut sar, t_s, avg.i_tx_rms_amplitude, dt).map_err(|source| ScenarioError::Safety { t_s, source })?;
        let compliant = sar_compliant(&sar);

        let f_m_hz = (0..3).filter(|&k| modulating[k]).map(|k| modulators[k].f_m_hz).fold(0.0, f64::max);
        records.push(ScenarioRecord {
            t_s,
            d_m: (capsule.position - tx_pose.position).norm(),
            k: coupling.k,
            v_in_v: aps.v_v,
            i_tx_a: avg.i_tx_rms_amplitude,
            v_out_v: avg.v_out_avg,
            p_out_w: avg.p_out_avg,
            p_total_out_w: avg.p_total_out_avg,
            p_in_w: avg.p_in_avg,
            f_m_hz,
            tone,
            sar_mean_i2_a2: sar.mean_i2(),
            sar_margin: sar_margin(&sar),
            sar_compliant: compliant,
        });
        if cfg.hard_sar_stop && !compliant {
            return Err(ScenarioError::SarHardStop {
                t_s,
                mean_i2_a2: sar.mean_i2(),
            });
        }

        if cfg.adaptive_control && (n + 1) % period_steps == 0 {
            let i_now = avg.i_tx_rms_amplitude;
            let headroom = sar_headroom(&sar, cfg.controller.sar_horizon_s);
            // |I_TX| is linear in V_IN at a fixed pose.
            let ceiling = if i_now > 0.0 { aps.v_v * headroom / i_now } else { f64::INFINITY };
            ctrl = control_step(tone, &ctrl, &aps, ceiling);
            if ctrl.saturation_flag {
                saturated_periods += 1;
            }
            debug!("t = {t_s:.2} s tone {tone} -> v_cmd {:.3} V", ctrl.v_cmd_v);
        }
        if cfg.adaptive_control {
            aps.slew_toward(ctrl.v_cmd_v, dt);
        }
        prev_v_out = avg.v_out_avg;
    }

    let ramp_time = aps.ramp_periods(cfg.aps.v_v).max(1.0) * cfg.controller.loop_period_s;
    let never_converged = cfg.adaptive_control && !ever_tone && cfg.duration_s >= 10.0 * ramp_time;
    let summary = Summary::from_records(&records, &cfg.summary);
    Ok(RunOutput {
        records,
        summary,
        diagnostics: Diagnostics {
            filter_coefficients,
            latency,
            saturated_periods,
            never_converged,
            coupling_cache_hits: cache_hits,
        },
    })
}
