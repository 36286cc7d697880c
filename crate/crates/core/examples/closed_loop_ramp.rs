//! Adaptive power control while the capsule moves from 6.5 to 11 cm and
//! back: the supply follows the distance to keep about 100 mW received.

use capsule_wpt::scenario::{preset, run};

fn main() {
    let cfg = preset("ramp_fig6b").unwrap().into_single().unwrap();
    let out = run(&cfg).unwrap();
    println!("{:>6} {:>7} {:>8} {:>8} {:>9} {:>9}", "t_s", "d_cm", "v_in_V", "i_tx_A", "p_out_mW", "tone");
    for r in out.records.iter().step_by(250) {
        println!(
            "{:>6.1} {:>7.2} {:>8.2} {:>8.3} {:>9.2} {:>9}",
            r.t_s,
            r.d_m * 100.0,
            r.v_in_v,
            r.i_tx_a,
            r.p_total_out_w * 1e3,
            r.tone
        );
    }
    let s = &out.summary;
    println!(
        "\nafter {} s: mean {:.1} mW, {:.1}% of samples within 100 mW +/- 25%, max |i_tx| {:.2} A",
        cfg.summary.settle_s,
        s.mean_p_total_out_w * 1e3,
        100.0 * s.fraction_in_target,
        s.max_i_tx_a
    );
}
