//! Sliding-window exposure budget: a burst above the constant limit, the
//! headroom left afterwards, and recovery as the burst leaves the window.

use capsule_wpt::safety::{sar_compliant, sar_headroom, sar_margin, sar_update, SarLimit, SarWindowState};

fn main() {
    let limit = SarLimit::default();
    let mut state = SarWindowState::new(limit);
    let dt = 1.0;
    println!("{:>6} {:>7} {:>9} {:>11} {:>10}", "t_s", "i_A", "margin", "headroom_A", "compliant");
    for k in 0..900 {
        let t = k as f64 * dt;
        let i = match t {
            t if t < 120.0 => 10.0,
            t if t < 180.0 => 20.0,
            _ => 12.0,
        };
        sar_update(&mut state, t, i, dt).unwrap();
        if k % 60 == 59 {
            println!(
                "{:>6.0} {:>7.1} {:>9.4} {:>11.3} {:>10}",
                t + dt,
                i,
                sar_margin(&state),
                sar_headroom(&state, limit.window_s),
                sar_compliant(&state)
            );
        }
    }
}
