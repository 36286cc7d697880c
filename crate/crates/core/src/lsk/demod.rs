use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

use super::{BandPass, DemodConfig, LskError, ToneDecision};

/// Baseband shunt-voltage envelope for one C_M modulation pattern.
///
/// The envelope sits at `r_sh * i_on` during the first half of each
/// modulation period and at `r_sh * i_off` during the second; `f_m_hz = 0`
/// holds it at `r_sh * i_off`. White Gaussian noise of `noise_rms_a`
/// (referred to the Tx current) is added per sample.
pub fn synthesize_shunt<R: Rng + ?Sized>(
    levels_a: (f64, f64),
    f_m_hz: f64,
    duration_s: f64,
    cfg: &DemodConfig,
    noise_rms_a: f64,
    r_sh_ohm: f64,
    rng: &mut R,
) -> Result<Vec<f64>, LskError> {
    if duration_s < cfg.decision_window_s {
        return Err(LskError::WindowTooShort {
            duration_s,
            window_s: cfg.decision_window_s,
        });
    }
    let n = (duration_s * cfg.sample_rate_hz).round() as usize;
    let (v_on, v_off) = (r_sh_ohm * levels_a.0, r_sh_ohm * levels_a.1);
    let sigma = (r_sh_ohm * noise_rms_a).abs();
    // Time spent in the on half, in cycles, up to `x` cycles.
    let on_time = |x: f64| x.floor() * 0.5 + x.fract().min(0.5);
    let cycles_per_sample = f_m_hz / cfg.sample_rate_hz;
    let normal = Normal::new(0.0, sigma).map_err(|e| LskError::InvalidConfig(e.to_string()))?;
    Ok((0..n)
        .map(|i| {
            // Each sample is the envelope averaged over its interval, which
            // keeps edge timing jitter out of the spectrum.
            let level = if f_m_hz > 0.0 {
                let a = i as f64 * cycles_per_sample;
                let frac_on = (on_time(a + cycles_per_sample) - on_time(a)) / cycles_per_sample;
                v_off + (v_on - v_off) * frac_on
            } else {
                v_off
            };
            if sigma > 0.0 {
                level + normal.sample(rng)
            } else {
                level
            }
        })
        .collect())
}

/// Power-tracking AGC: divides by the square root of an exponential moving
/// average of x^2 (time constant decision_window / 8), seeded from the
/// opening samples. The output is invariant to the input's scale.
pub fn agc(samples: &[f64], cfg: &DemodConfig) -> Result<Vec<f64>, LskError> {
    let tau = (cfg.window_samples() / 8).max(1);
    let alpha = 1.0 / tau as f64;
    let mean_sq = |s: &[f64]| s.iter().map(|v| v * v).sum::<f64>() / s.len().max(1) as f64;
    let mut p = mean_sq(&samples[..tau.min(samples.len())]);
    if p == 0.0 {
        p = mean_sq(samples);
    }
    if !(p > 0.0) {
        return Err(LskError::AllZeroInput);
    }
    Ok(samples
        .iter()
        .map(|&x| {
            p += alpha * (x * x - p);
            if x == 0.0 {
                0.0
            } else {
                cfg.agc_target_v * x / p.sqrt()
            }
        })
        .collect())
}

/// Energies behind one tone decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodReport {
    pub decision: ToneDecision,
    pub energy_low: f64,
    pub energy_high: f64,
    /// Mean energy of the reference bands.
    pub noise_floor: f64,
    pub ratio_low: f64,
    pub ratio_high: f64,
}

impl DemodReport {
    fn none() -> Self {
        Self {
            decision: ToneDecision::None,
            energy_low: 0.0,
            energy_high: 0.0,
            noise_floor: 0.0,
            ratio_low: 0.0,
            ratio_high: 0.0,
        }
    }
}

/// Tone classifier: one band-pass per tone plus reference bands, clear of
/// both tones' odd harmonics, that estimate the noise floor.
#[derive(Debug, Clone)]
pub struct Demodulator {
    pub cfg: DemodConfig,
    pub low: BandPass,
    pub high: BandPass,
    pub reference: Vec<BandPass>,
}

/// Number of reference bands used for the noise floor.
const REFERENCE_BANDS: usize = 4;

impl Demodulator {
    pub fn new(cfg: &DemodConfig) -> Result<Self, LskError> {
        cfg.validate()?;
        let bp = |f: f64| BandPass::chebyshev(f, cfg.bpf_bandwidth_hz, cfg.bpf_order, cfg.bpf_ripple_db, cfg.sample_rate_hz);
        let bw = cfg.bpf_bandwidth_hz;
        let nyq = cfg.sample_rate_hz / 2.0;
        let clear_of_lines = |f: f64| {
            [cfg.f_low_hz, cfg.f_high_hz].iter().all(|&tone| {
                (0..)
                    .map(|h| (2 * h + 1) as f64 * tone)
                    .take_while(|&line| line < f + 2.0 * bw + tone)
                    .all(|line| (f - line).abs() >= 2.0 * bw)
            })
        };
        let mut centers: Vec<f64> = Vec::new();
        let mut f = cfg.f_high_hz + 2.0 * bw;
        while centers.len() < REFERENCE_BANDS && f + bw < 0.9 * nyq {
            if clear_of_lines(f) && centers.last().is_none_or(|&c| f - c >= 2.0 * bw) {
                centers.push(f);
            }
            f += bw / 2.0;
        }
        if centers.is_empty() {
            return Err(LskError::InvalidConfig("no room for noise reference bands below nyquist".into()));
        }
        Ok(Self {
            cfg: *cfg,
            low: bp(cfg.f_low_hz),
            high: bp(cfg.f_high_hz),
            reference: centers.into_iter().map(bp).collect(),
        })
    }

    fn decide(&self, energy_low: f64, energy_high: f64, noise_floor: f64) -> DemodReport {
        let floor = noise_floor.max(1e-12 * self.cfg.agc_target_v.powi(2));
        let (ratio_low, ratio_high) = (energy_low / floor, energy_high / floor);
        let (best, ratio) = if ratio_high > ratio_low {
            (ToneDecision::HighTone, ratio_high)
        } else {
            (ToneDecision::LowTone, ratio_low)
        };
        DemodReport {
            decision: if ratio >= self.cfg.energy_ratio_threshold { best } else { ToneDecision::None },
            energy_low,
            energy_high,
            noise_floor,
            ratio_low,
            ratio_high,
        }
    }

    /// AGC, mean removal, band-pass energies after a settling quarter
    /// window, then the ratio test.
    pub fn analyze(&self, samples: &[f64]) -> DemodReport {
        let Ok(mut x) = agc(samples, &self.cfg) else {
            return DemodReport::none();
        };
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let skip = (self.cfg.window_samples() / 4).min(x.len().saturating_sub(1));
        let energy = |f: &BandPass| {
            let y = f.apply(&x);
            let tail = &y[skip..];
            tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64
        };
        let floor = self.reference.iter().map(energy).sum::<f64>() / self.reference.len() as f64;
        self.decide(energy(&self.low), energy(&self.high), floor)
    }

    /// Expected-value counterpart of [`Demodulator::analyze`]: the energies
    /// a long window would measure for a square envelope between
    /// `levels_v = (v_on, v_off)` at `f_m_hz` with white noise `noise_rms_v`.
    pub fn analytic(&self, levels_v: (f64, f64), f_m_hz: f64, noise_rms_v: f64) -> DemodReport {
        let (v_on, v_off) = levels_v;
        let var = noise_rms_v * noise_rms_v;
        let ms = if f_m_hz > 0.0 { 0.5 * (v_on * v_on + v_off * v_off) } else { v_off * v_off } + var;
        if !(ms > 0.0) {
            return DemodReport::none();
        }
        let scale2 = self.cfg.agc_target_v.powi(2) / ms;
        let swing = (v_on - v_off).abs();
        let nyq = self.cfg.sample_rate_hz / 2.0;
        // Odd harmonics of the square envelope, amplitude 2 swing / (h pi).
        let band = |f: &BandPass| {
            let mut tone = 0.0;
            if f_m_hz > 0.0 {
                let mut h = 1.0;
                while h * f_m_hz < nyq {
                    tone += 0.5 * (2.0 * swing / (h * PI)).powi(2) * f.response(h * f_m_hz).norm_sqr();
                    h += 2.0;
                }
            }
            scale2 * (tone + var * f.noise_gain())
        };
        let floor = self.reference.iter().map(band).sum::<f64>() / self.reference.len() as f64;
        self.decide(band(&self.low), band(&self.high), floor)
    }

    /// Filter coefficients, one line per section.
    pub fn coefficient_report(&self) -> Vec<String> {
        std::iter::once(&self.low)
            .chain(std::iter::once(&self.high))
            .chain(&self.reference)
            .flat_map(|f| f.coefficient_lines())
            .collect()
    }
}

/// Classifies one series with a freshly designed chain.
pub fn demodulate(samples: &[f64], cfg: &DemodConfig) -> Result<ToneDecision, LskError> {
    Ok(Demodulator::new(cfg)?.analyze(samples).decision)
}

/// Worst-case time from a tone appearing to it being reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyReport {
    pub window_s: f64,
    /// Larger of the two tone filters' group delays at their centers.
    pub group_delay_s: f64,
    pub bound_s: f64,
}

pub fn decision_latency(demod: &Demodulator) -> LatencyReport {
    let gd = demod
        .low
        .group_delay(demod.cfg.f_low_hz)
        .max(demod.high.group_delay(demod.cfg.f_high_hz));
    LatencyReport {
        window_s: demod.cfg.decision_window_s,
        group_delay_s: gd,
        bound_s: demod.cfg.decision_window_s + gd,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const R_SH: f64 = 0.4 / 6.0;

    fn cfg() -> DemodConfig {
        DemodConfig::default()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn reference_bands_avoid_harmonics() {
        let d = Demodulator::new(&cfg()).unwrap();
        let centers: Vec<f64> = d.reference.iter().map(|f| f.center_hz).collect();
        assert_eq!(centers, vec![59e3, 89e3, 119e3, 149e3]);
    }

    #[test]
    fn constant_envelope_without_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = synthesize_shunt((5.0, 5.0), 0.0, 2e-3, &cfg(), 0.0, R_SH, &mut rng).unwrap();
        assert!(x.iter().all(|&v| v == x[0]));
        assert_eq!(x.len(), 2000);
        assert_eq!(demodulate(&x, &cfg()).unwrap(), ToneDecision::None);
    }

    #[test]
    fn short_duration_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = synthesize_shunt((1.0, 1.0), 0.0, 1e-3, &cfg(), 0.0, R_SH, &mut rng).unwrap_err();
        assert!(matches!(e, LskError::WindowTooShort { .. }));
    }

    #[test]
    fn square_envelope_fundamental_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = synthesize_shunt((1.0, 0.0), 15e3, 20e-3, &cfg(), 0.0, 1.0, &mut rng).unwrap();
        let power = |f: f64| {
            let w = 2.0 * PI * f / 1e6;
            let c: num_complex::Complex64 = x
                .iter()
                .enumerate()
                .map(|(n, v)| v * num_complex::Complex64::from_polar(1.0, -w * n as f64))
                .sum();
            c.norm_sqr()
        };
        let (f1, f3) = (power(15e3), power(45e3));
        assert!(f1 > 5.0 * f3, "{f1} {f3}");
        assert!(power(30e3) < 1e-3 * f1);
    }

    #[test]
    fn agc_scale_invariance_and_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = synthesize_shunt((5.2, 5.0), 15e3, 4e-3, &cfg(), 0.01, R_SH, &mut rng).unwrap();
        let base = agc(&x, &cfg()).unwrap();
        for c in [1e-3, 0.5, 100.0, 1e3] {
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            let y = agc(&scaled, &cfg()).unwrap();
            let worst = y.iter().zip(&base).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-6, "c = {c}: {worst}");
        }
        assert!((rms(&base) - 1.0).abs() < 0.01);
    }

    #[test]
    fn agc_unit_rms_sine_is_unchanged_in_level() {
        let x: Vec<f64> = (0..4000).map(|n| 2f64.sqrt() * (2.0 * PI * 15e3 * n as f64 / 1e6).sin()).collect();
        let y = agc(&x, &cfg()).unwrap();
        assert!((rms(&y[500..]) - 1.0).abs() < 0.01, "{}", rms(&y[500..]));
    }

    #[test]
    fn agc_follows_a_tenfold_ramp() {
        let n = cfg().window_samples();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let x: Vec<f64> = (0..2 * n)
            .map(|i| {
                let gain = 1.0 + 9.0 * (i as f64 / n as f64).min(1.0);
                gain * (1.0 + noise.sample(&mut rng))
            })
            .collect();
        let y = agc(&x, &cfg()).unwrap();
        assert!((rms(&y[n..]) - 1.0).abs() < 0.1, "{}", rms(&y[n..]));
    }

    #[test]
    fn agc_rejects_all_zero_input() {
        assert_eq!(agc(&[0.0; 100], &cfg()).unwrap_err(), LskError::AllZeroInput);
    }

    #[test]
    fn clean_tones_are_classified() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = Demodulator::new(&cfg()).unwrap();
        let low = synthesize_shunt((4.75, 5.0), 15e3, 2e-3, &cfg(), 0.0, R_SH, &mut rng).unwrap();
        assert_eq!(d.analyze(&low).decision, ToneDecision::LowTone);
        let high = synthesize_shunt((4.75, 5.0), 35e3, 2e-3, &cfg(), 0.0, R_SH, &mut rng).unwrap();
        assert_eq!(d.analyze(&high).decision, ToneDecision::HighTone);
    }

    #[test]
    fn analytic_path_agrees_with_samples() {
        let d = Demodulator::new(&cfg()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (i_on, i_off, sigma) = (4.9, 5.0, 2e-3);
        let x = synthesize_shunt((i_on, i_off), 15e3, 20e-3, &cfg(), sigma, R_SH, &mut rng).unwrap();
        let measured = d.analyze(&x);
        let expected = d.analytic((R_SH * i_on, R_SH * i_off), 15e3, R_SH * sigma);
        assert_eq!(measured.decision, expected.decision);
        assert!((measured.energy_low / expected.energy_low - 1.0).abs() < 0.15);
        assert!((measured.noise_floor / expected.noise_floor - 1.0).abs() < 0.25, "{measured:?} {expected:?}");
        let none = d.analytic((R_SH * 5.0, R_SH * 5.0), 0.0, R_SH * sigma);
        assert_eq!(none.decision, ToneDecision::None);
    }

    #[test]
    fn latency_bound_holds_for_tone_onset() {
        let d = Demodulator::new(&cfg()).unwrap();
        let l = decision_latency(&d);
        assert!(l.group_delay_s > 0.0 && l.bound_s > l.window_s);
        // Tone switched on at sample `onset`; slide a window forward in
        // 50 us steps until the tone is reported.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fs = d.cfg.sample_rate_hz;
        let onset = 4000;
        let quiet = synthesize_shunt((5.0, 5.0), 0.0, 4e-3, &d.cfg, 1e-3, R_SH, &mut rng).unwrap();
        let tone = synthesize_shunt((4.8, 5.0), 35e3, 8e-3, &d.cfg, 1e-3, R_SH, &mut rng).unwrap();
        let x: Vec<f64> = quiet.into_iter().chain(tone).collect();
        let w = d.cfg.window_samples();
        let detected = (0..)
            .map(|k| onset + k * 50)
            .find(|&end| d.analyze(&x[end - w..end]).decision == ToneDecision::HighTone)
            .unwrap();
        let measured = (detected - onset) as f64 / fs;
        assert!(measured <= l.bound_s, "{measured} > {}", l.bound_s);
    }

    #[test]
    fn deterministic_given_seed() {
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            synthesize_shunt((4.9, 5.0), 15e3, 2e-3, &cfg(), 0.05, R_SH, &mut rng).unwrap()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn coefficients_are_reported() {
        let d = Demodulator::new(&cfg()).unwrap();
        assert_eq!(d.coefficient_report().len(), 2 * (2 + d.reference.len()));
    }
}
