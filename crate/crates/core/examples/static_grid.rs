//! Static operating points for thin and thick tissue and a lateral
//! offset, at four supply voltages each.

use capsule_wpt::scenario::{preset, run, Preset};

fn main() {
    let Preset::Grid(points) = preset("static_grid_fig9").unwrap() else {
        unreachable!()
    };
    println!("{:<14} {:>6} {:>7} {:>10} {:>9} {:>8}", "variant", "d_cm", "v_in_V", "p_out_mW", "p_in_W", "i_tx_A");
    for p in points {
        let s = run(&p.config).unwrap().summary;
        println!(
            "{:<14} {:>6.1} {:>7.1} {:>10.2} {:>9.2} {:>8.3}",
            p.variant,
            p.distance_m * 100.0,
            p.v_in_v,
            s.mean_p_total_out_w * 1e3,
            s.mean_p_in_w,
            s.max_i_tx_a
        );
    }
}
