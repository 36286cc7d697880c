//! Mutual inductance and coupling between the Tx coil and the capsule's
//! z winding along the coil axis, by three methods.

use capsule_wpt::magnetics::{
    coaxial_loops_mutual, coupling_set, CoilSpec, CouplingMethod, FilamentOptions, PlacedCoil, Pose,
};

fn analytic(tx: &CoilSpec, rx: &CoilSpec, d: f64) -> f64 {
    let turns: f64 = (0..tx.turns)
        .map(|i| {
            let offset = (i as f64 - (tx.turns as f64 - 1.0) / 2.0) * tx.turn_pitch_m;
            coaxial_loops_mutual(tx.radius_m, rx.radius_m, d + offset)
        })
        .sum();
    turns * rx.turns as f64
}

fn main() {
    let tx = PlacedCoil::new(CoilSpec::tx_default(), Pose::identity());
    let rx = ["x", "y", "z"].map(CoilSpec::rx_default);
    let opts = FilamentOptions::with_segments(128);

    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>10}", "d_cm", "analytic_H", "filament_H", "dipole_H", "uniform_H", "k_z");
    for step in 0..=16 {
        let d = 0.02 + 0.03 * step as f64;
        let capsule = Pose::at(0.0, 0.0, d);
        let m = |method| coupling_set(&tx, &capsule, &rx, method, &opts).map(|c| c.m[2]);
        let filament = coupling_set(&tx, &capsule, &rx, CouplingMethod::Filament, &opts).unwrap();
        let dipole = m(CouplingMethod::Dipole).map_or("-".to_string(), |v| format!("{v:.4e}"));
        println!(
            "{:>6.1} {:>12.4e} {:>12.4e} {:>12} {:>12.4e} {:>10.3e}",
            d * 100.0,
            analytic(&tx.spec, &rx[2], d),
            filament.m[2],
            dipole,
            m(CouplingMethod::UniformField).unwrap(),
            filament.k[2]
        );
    }
}
