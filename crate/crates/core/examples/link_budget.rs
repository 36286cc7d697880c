//! Supply voltage, Tx current and input power needed for 100 mW at the
//! capsule, coaxial, over the working distance range.

use capsule_wpt::circuit::{lsk_averaged_solution, LinkModel, RxBranch, TxCircuit};
use capsule_wpt::magnetics::{coupling_set, CoilSpec, CouplingMethod, FilamentOptions, PlacedCoil, Pose};

fn main() {
    let tx = PlacedCoil::new(CoilSpec::tx_default(), Pose::identity());
    let rx = ["x", "y", "z"].map(CoilSpec::rx_default);
    let opts = FilamentOptions::with_segments(96);
    let mut link = LinkModel::new(TxCircuit::with_v_in(0.0), RxBranch::default_set());

    println!("Q_tx = {:.2}, Q_rx = {:.2}", tx.spec.quality_factor(1.7e6), rx[2].quality_factor(1.7e6));
    println!("{:>6} {:>9} {:>9} {:>9} {:>10} {:>10}", "d_cm", "v_in_V", "i_tx_A", "p_in_W", "eff_%", "lsk_loss_%");
    let mut p_in = Vec::new();
    for d in [0.065, 0.075, 0.09, 0.10, 0.11] {
        let c = coupling_set(&tx, &Pose::at(0.0, 0.0, d), &rx, CouplingMethod::Filament, &opts).unwrap();
        let Some(v) = link.v_in_for_power(&c, 0.1, 60.0).unwrap() else {
            println!("{:>6.1} unreachable below 60 V", d * 100.0);
            continue;
        };
        link.tx.v_in_v = v;
        let sol = link.solve(&c, [false; 3]).unwrap();
        let lsk = lsk_averaged_solution(&link, &c, [false, false, true], 0.5).unwrap();
        println!(
            "{:>6.1} {:>9.3} {:>9.3} {:>9.3} {:>10.3} {:>10.2}",
            d * 100.0,
            v,
            sol.i_tx_amplitude(),
            sol.p_in,
            100.0 * sol.p_total_out / sol.p_in,
            100.0 * (1.0 - lsk.p_total_out_avg / sol.p_total_out)
        );
        p_in.push((d, sol.p_in));
    }
    let at = |d: f64| p_in.iter().find(|p| p.0 == d).map(|p| p.1).unwrap();
    println!("p_in(11 cm) / p_in(6.5 cm) = {:.2}", at(0.11) / at(0.065));
}
