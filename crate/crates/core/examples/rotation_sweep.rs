//! Capsule turned from aligned to a quarter turn at 9 cm: the z winding
//! loses its coupling while y picks it up, open loop and with control.

use capsule_wpt::scenario::{rotation_sweep, run};

fn main() {
    let mut cfg = rotation_sweep(0.09, 30.0);
    cfg.adaptive_control = false;
    cfg.aps.v_v = 10.0;
    let open = run(&cfg).unwrap();
    let aligned = open.records[0].p_total_out_w;
    println!("open loop at {} V", cfg.aps.v_v);
    println!("{:>7} {:>10} {:>10} {:>10} {:>8}", "deg", "p_y_mW", "p_z_mW", "total_mW", "total_%");
    for r in open.records.iter().step_by(300).chain(open.records.last()) {
        println!(
            "{:>7.1} {:>10.3} {:>10.3} {:>10.3} {:>8.2}",
            90.0 * r.t_s / cfg.duration_s,
            r.p_out_w[1] * 1e3,
            r.p_out_w[2] * 1e3,
            r.p_total_out_w * 1e3,
            100.0 * r.p_total_out_w / aligned
        );
    }

    let closed = run(&rotation_sweep(0.09, 30.0)).unwrap();
    let s = &closed.summary;
    println!(
        "\nwith control: mean total {:.1} mW (min {:.1}, max {:.1}), max |i_tx| {:.2} A",
        s.mean_p_total_out_w * 1e3,
        s.min_p_total_out_w * 1e3,
        s.max_p_total_out_w * 1e3,
        s.max_i_tx_a
    );
}
