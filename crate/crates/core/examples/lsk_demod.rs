//! Tx-side LSK demodulation: synthesize the shunt voltage for each tone
//! state, run the band-pass chain and print the energies and decision.

use capsule_wpt::lsk::{decision_latency, synthesize_shunt, DemodConfig, Demodulator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let cfg = DemodConfig::default();
    let demod = Demodulator::new(&cfg).unwrap();
    for line in demod.coefficient_report() {
        println!("{line}");
    }
    let lat = decision_latency(&demod);
    println!("latency bound {:.3} ms\n", lat.bound_s * 1e3);

    let r_sh = 0.4 / 6.0;
    let i_off = 5.88;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("{:>8} {:>8} {:>11} {:>11} {:>11} {:>10}", "f_m_Hz", "depth", "E_low", "E_high", "floor", "decision");
    for (f_m, depth) in [(0.0, 0.0), (15e3, 0.02), (35e3, 0.02), (15e3, 0.005), (35e3, 0.001)] {
        let i_on = i_off * (1.0 - depth);
        let x = synthesize_shunt((i_on, i_off), f_m, cfg.decision_window_s, &cfg, 3e-4, r_sh, &mut rng).unwrap();
        let r = demod.analyze(&x);
        println!(
            "{:>8.0} {:>8.3} {:>11.3e} {:>11.3e} {:>11.3e} {:>10}",
            f_m, depth, r.energy_low, r.energy_high, r.noise_floor, r.decision
        );
    }
}
