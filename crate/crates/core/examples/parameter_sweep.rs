//! Closed-loop summaries over capsule distance, run in parallel.

use capsule_wpt::scenario::{sweep, ScenarioConfig};

fn main() {
    let mut cfg = ScenarioConfig::default();
    cfg.duration_s = 15.0;
    cfg.summary.settle_s = 8.0;
    let distances = [0.06, 0.07, 0.08, 0.09, 0.10, 0.11, 0.12];
    let rows = sweep(&cfg, "trajectory.keyframes.0.capsule.position_m.2", &distances).unwrap();
    println!("{:>6} {:>10} {:>9} {:>9} {:>10}", "d_cm", "p_out_mW", "v_in_V", "i_tx_A", "in_band_%");
    for r in rows {
        let s = r.summary;
        println!(
            "{:>6.1} {:>10.2} {:>9.2} {:>9.3} {:>10.1}",
            r.value * 100.0,
            s.mean_p_total_out_w * 1e3,
            s.final_v_in_v,
            s.mean_i_tx_a,
            100.0 * s.fraction_in_target
        );
    }
}
