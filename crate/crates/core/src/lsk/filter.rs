//! Chebyshev type-I band-pass design as cascaded biquads.

use num_complex::Complex64;
use std::f64::consts::PI;

/// One second-order section, a[0] = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + self.b[1] * z_inv + self.b[2] * z2) / (self.a[0] + self.a[1] * z_inv + self.a[2] * z2)
    }
}

/// Digital band-pass filter with its design parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPass {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    pub order: usize,
    pub ripple_db: f64,
    pub sample_rate_hz: f64,
    pub sections: Vec<Biquad>,
    noise_gain: f64,
}

impl BandPass {
    /// Chebyshev type-I band-pass of total order `order` (even), passband
    /// ripple `ripple_db`, ripple-edge bandwidth `bandwidth_hz` centered at
    /// `center_hz`. Bilinear transform with pre-warped band edges; gain set
    /// so the passband ripple peaks at 0 dB.
    pub fn chebyshev(center_hz: f64, bandwidth_hz: f64, order: usize, ripple_db: f64, sample_rate_hz: f64) -> Self {
        assert!(order >= 2 && order % 2 == 0, "band-pass order must be even: {order}");
        let n = order / 2;
        let fs = sample_rate_hz;
        let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
        let w1 = warp(center_hz - bandwidth_hz / 2.0);
        let w2 = warp(center_hz + bandwidth_hz / 2.0);
        let w0 = (w1 * w2).sqrt();
        let bw = w2 - w1;

        let eps = (10f64.powf(ripple_db / 10.0) - 1.0).sqrt();
        let mu = (1.0 / eps).asinh() / n as f64;
        let mut sections = Vec::with_capacity(n);
        for k in 1..=n {
            let theta = (2 * k - 1) as f64 * PI / (2 * n) as f64;
            let p = Complex64::new(-mu.sinh() * theta.sin(), mu.cosh() * theta.cos());
            // Each prototype pole maps to two band-pass poles; conjugate
            // prototype poles supply the conjugates, so keeping those in the
            // upper half plane gives one biquad each.
            let disc = (p * p * bw * bw - 4.0 * w0 * w0).sqrt();
            for s in [(p * bw + disc) / 2.0, (p * bw - disc) / 2.0] {
                if s.im <= 0.0 {
                    continue;
                }
                let z = (2.0 * fs + s) / (2.0 * fs - s);
                sections.push(Biquad {
                    b: [1.0, 0.0, -1.0],
                    a: [1.0, -2.0 * z.re, z.norm_sqr()],
                });
            }
        }
        assert_eq!(sections.len(), n, "unexpected band-pass pole layout");

        let mut filter = Self {
            center_hz,
            bandwidth_hz,
            order,
            ripple_db,
            sample_rate_hz,
            sections,
            noise_gain: 0.0,
        };
        // The prototype's Omega = 0 point maps to the geometric center; its
        // gain is 1/sqrt(1 + eps^2) for even prototype orders, 1 for odd.
        let f_mid = fs / PI * (w0 / (2.0 * fs)).atan();
        let target = if n % 2 == 0 { 1.0 / (1.0 + eps * eps).sqrt() } else { 1.0 };
        let g = target / filter.response(f_mid).norm();
        for c in filter.sections[0].b.iter_mut() {
            *c *= g;
        }
        filter.noise_gain = filter.integrate_noise_gain();
        filter
    }

    /// Complex frequency response at `f_hz`.
    pub fn response(&self, f_hz: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * f_hz / self.sample_rate_hz);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    pub fn gain_db(&self, f_hz: f64) -> f64 {
        20.0 * self.response(f_hz).norm().log10()
    }

    /// Group delay (s) at `f_hz` from a central difference of the phase.
    pub fn group_delay(&self, f_hz: f64) -> f64 {
        let h = 1e-3 * self.bandwidth_hz;
        let ratio = self.response(f_hz + h) / self.response(f_hz - h);
        -ratio.arg() / (2.0 * PI * 2.0 * h)
    }

    /// Noise-equivalent bandwidth as a fraction of Nyquist: the in-band
    /// power of unit-variance white noise after filtering.
    pub fn noise_gain(&self) -> f64 {
        self.noise_gain
    }

    fn integrate_noise_gain(&self) -> f64 {
        let nyq = self.sample_rate_hz / 2.0;
        let n = 20_000;
        let df = nyq / n as f64;
        (0..n).map(|i| self.response((i as f64 + 0.5) * df).norm_sqr()).sum::<f64>() / n as f64
    }

    /// Runs the cascade over `x` from rest (direct form II transposed).
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let (mut z1, mut z2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = s.b[0] * input + z1;
                z1 = s.b[1] * input - s.a[1] * out + z2;
                z2 = s.b[2] * input - s.a[2] * out;
                *v = out;
            }
        }
        y
    }

    /// One line per section, for run logs.
    pub fn coefficient_lines(&self) -> Vec<String> {
        self.sections
            .iter()
            .enumerate()
            .map(|(i, s)| {
                format!(
                    "bpf {:.0} Hz sos{i}: b = [{:.17e}, {:.17e}, {:.17e}] a = [1, {:.17e}, {:.17e}]",
                    self.center_hz, s.b[0], s.b[1], s.b[2], s.a[1], s.a[2]
                )
            })
            .collect()
    }
}
