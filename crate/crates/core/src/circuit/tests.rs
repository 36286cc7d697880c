use super::*;
use crate::magnetics::coaxial_loops_mutual;
use proptest::prelude::*;

const F0: f64 = 1.7e6;

/// Coaxial Tx-to-z-axis mutual for the default coils, from the analytic
/// loop formula summed over the stacked Tx turns.
fn coaxial_m(d: f64) -> f64 {
    let tx = CoilSpec::tx_default();
    let rx = CoilSpec::rx_default("z");
    (0..tx.turns)
        .map(|i| {
            let offset = (i as f64 - (tx.turns as f64 - 1.0) / 2.0) * tx.turn_pitch_m;
            coaxial_loops_mutual(tx.radius_m, rx.radius_m, d + offset)
        })
        .sum::<f64>()
        * rx.turns as f64
}

fn z_only(m: f64) -> CouplingSet {
    CouplingSet::from_mutuals([0.0, 0.0, m], 16.7e-6, &[
        CoilSpec::rx_default("x"),
        CoilSpec::rx_default("y"),
        CoilSpec::rx_default("z"),
    ])
}

fn default_link(v_in: f64) -> LinkModel {
    LinkModel::new(TxCircuit::with_v_in(v_in), RxBranch::default_set())
}

#[test]
fn drive_phasor_is_fundamental_of_square_wave() {
    assert_eq!(drive_phasor(&TxCircuit::with_v_in(0.0)).norm(), 0.0);
    assert!((drive_phasor(&TxCircuit::with_v_in(PI / 2.0)).norm() - 1.0).abs() < 1e-15);
    let d = drive_phasor(&TxCircuit::with_v_in(48.0));
    assert!((d.re - 30.5577).abs() < 1e-4);
    assert_eq!(d.im, 0.0);
}

#[test]
fn default_c_tx_resonates_at_f0() {
    let tx = TxCircuit::with_v_in(10.0);
    assert!((tx.c_tx_f - 525e-12).abs() < 1e-12, "{}", tx.c_tx_f);
    assert!(tx.series_impedance().im.abs() < 1e-9);
}

#[test]
fn default_branch_is_near_resistive_at_f0() {
    let z = rx_input_impedance(&RxBranch::default_axis("z"), false, F0);
    assert!(z.im.abs() / z.norm() <= 0.2, "{z}");
}

#[test]
fn trim_capacitance_matches_frozen_default() {
    let mut b = RxBranch::default_axis("z");
    b.c_par_f = 0.0;
    let untrimmed = rx_input_impedance(&b, false, F0);
    // Without the trim the branch is capacitive at f0 (resonance ~1.77 MHz).
    assert!(untrimmed.im < 0.0 && untrimmed.im.abs() / untrimmed.norm() > 0.8);
    let c = resonant_trim_capacitance(&b, F0).unwrap();
    assert!((c - 110.739e-12).abs() < 0.005e-12, "{c}");
    assert!((c - DEFAULT_RX_TRIM_CAPACITANCE_F).abs() / c < 0.01);
}

#[test]
fn c_m_detunes_branch() {
    let b = RxBranch::default_axis("z");
    let off = rx_input_impedance(&b, false, F0).norm();
    let on = rx_input_impedance(&b, true, F0).norm();
    let change = (on - off) / off;
    // Independent evaluation of the same network gives -3.729 %.
    assert!((change + 0.03729).abs() < 2e-4, "{change}");
}

#[test]
fn degenerate_network_is_coil_plus_r_ac() {
    let mut b = RxBranch::default_axis("z");
    b.c_s_f = f64::INFINITY;
    b.c_p_f = 0.0;
    b.c_par_f = 0.0;
    let z = rx_input_impedance(&b, false, F0);
    let expected = Complex64::new(b.coil.esr_ohm + b.r_ac(), TAU * F0 * b.coil.self_inductance_h);
    assert!((z - expected).norm() < 1e-9);
}

#[test]
fn decoupled_link_delivers_nothing() {
    let link = default_link(10.0);
    let sol = link.solve(&CouplingSet::zero(), [false; 3]).unwrap();
    assert_eq!(sol.p_total_out, 0.0);
    let expected = drive_phasor(&link.tx) / link.tx.series_impedance();
    assert!((sol.i_tx - expected).norm() < 1e-12);
}

#[test]
fn hundred_milliwatts_at_9cm_within_current_limit() {
    // Frozen from an independent evaluation of the same model:
    // V_IN = 7.6317 V gives 100 mW with |I_TX| = 5.8845 A, P_IN = 14.295 W.
    let m = coaxial_m(0.09);
    let sol = default_link(7.6317).solve(&z_only(m), [false; 3]).unwrap();
    assert!((sol.p_total_out - 0.1).abs() < 1e-4, "{}", sol.p_total_out);
    assert!((sol.i_tx_amplitude() - 5.8845).abs() < 1e-3);
    assert!((sol.p_in - 14.295).abs() < 1e-2);
    assert!(sol.i_tx_amplitude() <= 14.5);
}

#[test]
fn doubling_mutual_quadruples_power_in_weak_coupling() {
    let m = coaxial_m(0.30);
    let link = default_link(10.0);
    let p1 = link.solve(&z_only(m), [false; 3]).unwrap().p_total_out;
    let p2 = link.solve(&z_only(2.0 * m), [false; 3]).unwrap().p_total_out;
    assert!((p2 / p1 - 4.0).abs() / 4.0 < 0.05, "{}", p2 / p1);
}

#[test]
fn singular_mesh_is_reported() {
    let mut tx = TxCircuit::with_v_in(5.0);
    tx.coil.esr_ohm = 1e-15;
    tx.r_sh_ohm = 0.0;
    let err = solve_link(&tx, &RxBranch::default_set(), &CouplingSet::zero(), [false; 3]).unwrap_err();
    assert!(matches!(err, CircuitError::SingularSystem { .. }));
}

#[test]
fn coupled_mesh_matches_reflected_route_without_cross_terms() {
    let m = coaxial_m(0.07);
    let c = CouplingSet::from_mutuals([0.3 * m, -0.2 * m, m], 16.7e-6, &[
        CoilSpec::rx_default("x"),
        CoilSpec::rx_default("y"),
        CoilSpec::rx_default("z"),
    ]);
    let tx = TxCircuit::with_v_in(12.0);
    let br = RxBranch::default_set();
    for lsk in [[false; 3], [false, true, true]] {
        let a = solve_link(&tx, &br, &c, lsk).unwrap();
        let b = solve_link_coupled(&tx, &br, &c, &[[0.0; 3]; 3], lsk).unwrap();
        assert!((a.i_tx - b.i_tx).norm() / a.i_tx.norm() < 1e-12);
        for k in 0..3 {
            assert!((a.p_out[k] - b.p_out[k]).abs() <= 1e-12 * a.p_total_out.max(1e-30));
        }
    }
}

#[test]
fn cross_coupling_keeps_power_balance() {
    let m = coaxial_m(0.07);
    let c = CouplingSet::from_mutuals([0.5 * m, 0.5 * m, m], 16.7e-6, &[
        CoilSpec::rx_default("x"),
        CoilSpec::rx_default("y"),
        CoilSpec::rx_default("z"),
    ]);
    let cross = [[0.0, 2e-7, 1e-7], [2e-7, 0.0, 3e-7], [1e-7, 3e-7, 0.0]];
    let sol = solve_link_coupled(&TxCircuit::with_v_in(12.0), &RxBranch::default_set(), &c, &cross, [true, false, false]).unwrap();
    assert!(sol.power_balance_residual() < 1e-9);
}

#[test]
fn lsk_duty_zero_matches_unmodulated() {
    let link = default_link(8.0);
    let c = z_only(coaxial_m(0.09));
    let avg = lsk_averaged_solution(&link, &c, [false, false, true], 0.0).unwrap();
    let plain = link.solve(&c, [false; 3]).unwrap();
    assert_eq!(avg.p_out_avg, plain.p_out);
    assert_eq!(avg.p_in_avg, plain.p_in);
}

#[test]
fn lsk_half_duty_penalty_at_9cm() {
    let link = default_link(8.0);
    let c = z_only(coaxial_m(0.09));
    let avg = lsk_averaged_solution(&link, &c, [false, false, true], 0.5).unwrap();
    let reduction = 1.0 - avg.p_total_out_avg / avg.unmodulated.p_total_out;
    // Independent evaluation: P_on / P_off = 0.89318, so 5.34 % at 50 % duty.
    assert!((reduction - 0.0534).abs() < 5e-4, "{reduction}");
    assert!((0.03..=0.20).contains(&reduction));
    assert_ne!(avg.i_on, avg.i_off);
}

#[test]
fn lsk_depth_at_k_one_percent() {
    let m = 0.01 * (16.7e-6_f64 * 6.5e-6).sqrt();
    let avg = lsk_averaged_solution(&default_link(5.0), &z_only(m), [false, false, true], 0.5).unwrap();
    assert!(avg.depth() >= 0.01, "{}", avg.depth());
    assert!((avg.depth() - 0.010584).abs() < 1e-4);
}

#[test]
fn lsk_rejects_bad_duty() {
    assert!(lsk_averaged_solution(&default_link(5.0), &CouplingSet::zero(), [true; 3], 1.5).is_err());
}

#[test]
fn multi_axis_average_weights_every_pattern() {
    let m = coaxial_m(0.08);
    let c = z_only(m);
    let c = CouplingSet { m: [0.6 * m, 0.0, 0.8 * m], ..c };
    let link = default_link(8.0);
    let avg = lsk_averaged_solution(&link, &c, [true, false, true], 0.5).unwrap();
    let mut expect = 0.0;
    for s in [[false, false, false], [true, false, false], [false, false, true], [true, false, true]] {
        expect += 0.25 * link.solve(&c, s).unwrap().p_total_out;
    }
    assert!((avg.p_total_out_avg - expect).abs() < 1e-15);
    assert!(avg.i_axis_on[0].is_some() && avg.i_axis_on[1].is_none());
}

#[test]
fn received_power_peaks_near_f0() {
    let c = z_only(coaxial_m(0.09));
    let mut best = (0.0, 0.0);
    for k in 0..=400 {
        let f = F0 * (0.9 + 0.2 * k as f64 / 400.0);
        let mut link = default_link(8.0);
        link.tx.f0_hz = f;
        let p = link.solve(&c, [false; 3]).unwrap().p_total_out;
        if p > best.1 {
            best = (f, p);
        }
    }
    assert!((best.0 - F0).abs() / F0 <= 0.02, "peak at {}", best.0);
}

#[test]
fn rectifier_examples() {
    let b = RxBranch::default_axis("z");
    assert_eq!(rectify(0.0, &b), (0.0, 0.0));
    let mut d = b.clone();
    d.rectifier.mode = RectifierMode::DiodeDrop;
    assert_eq!(rectify(0.5, &d).0, 0.0);
    // 3.3 V across 120 ohm.
    let v_ac = 3.3 * 4.0 / (PI * b.rectifier.eta);
    let (v_out, p_out) = rectify(v_ac, &b);
    assert!((v_out - 3.3).abs() < 1e-12);
    assert!((p_out - 0.09075).abs() < 1e-12);
    // Diode mode never outputs more than the ac input power.
    let (_, p) = rectify(10.0, &d);
    assert!(p <= 0.5 * 100.0 / d.r_ac() + 1e-15);
}

fn arb_link() -> impl Strategy<Value = (LinkModel, CouplingSet, [bool; 3])> {
    (
        3.5f64..60.0,
        1.5e6f64..1.9e6,
        prop::array::uniform3(-2e-7f64..2e-7),
        prop::array::uniform3(any::<bool>()),
        prop::array::uniform3(30.0f64..500.0),
        prop::array::uniform3(0.5f64..1.0),
        prop::array::uniform3(0.5e-9f64..2e-9),
        any::<bool>(),
    )
        .prop_map(|(v, f, m, lsk, r_load, eta, c_p, diode)| {
            let mut link = default_link(v);
            link.tx.f0_hz = f;
            for k in 0..3 {
                link.branches[k].r_load_ohm = r_load[k];
                link.branches[k].rectifier.eta = eta[k];
                link.branches[k].c_p_f = c_p[k];
                if diode {
                    link.branches[k].rectifier.mode = RectifierMode::DiodeDrop;
                }
            }
            let c = CouplingSet::from_mutuals(m, 16.7e-6, &[
                CoilSpec::rx_default("x"),
                CoilSpec::rx_default("y"),
                CoilSpec::rx_default("z"),
            ]);
            (link, c, lsk)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn power_balance_and_passivity((link, c, lsk) in arb_link()) {
        let sol = link.solve(&c, lsk).unwrap();
        prop_assert!(sol.power_balance_residual() < 1e-9, "residual {}", sol.power_balance_residual());
        prop_assert!(sol.p_total_out <= sol.p_in);
    }

    #[test]
    fn power_grows_with_drive(v in 3.5f64..59.0, dv in 0.01f64..1.0, m in 1e-9f64..1e-7) {
        let c = z_only(m);
        let lo = default_link(v).solve(&c, [false; 3]).unwrap().p_total_out;
        let hi = default_link(v + dv).solve(&c, [false; 3]).unwrap().p_total_out;
        prop_assert!(hi > lo);
    }

    #[test]
    fn weak_coupling_power_scales_with_m_squared(m in 1e-10f64..2e-9, s in 1.1f64..3.0) {
        let link = default_link(10.0);
        let z_refl = (TAU * F0 * m * s).powi(2) / rx_input_impedance(&link.branches[2], false, F0).norm();
        prop_assume!(z_refl < 0.01 * link.tx.series_impedance().norm());
        let p1 = link.solve(&z_only(m), [false; 3]).unwrap().p_total_out;
        let p2 = link.solve(&z_only(s * m), [false; 3]).unwrap().p_total_out;
        prop_assert!(((p2 / p1) / (s * s) - 1.0).abs() < 0.05);
    }
}

#[test]
fn supply_for_target_power() {
    let link = default_link(0.0);
    let v = link.v_in_for_power(&z_only(coaxial_m(0.09)), 0.1, 60.0).unwrap().unwrap();
    assert!((v - 7.6317).abs() < 1e-3, "{v}");
    let p_in = |d: f64| {
        let c = z_only(coaxial_m(d));
        let v = link.v_in_for_power(&c, 0.1, 60.0).unwrap().unwrap();
        default_link(v).solve(&c, [false; 3]).unwrap().p_in
    };
    let ratio = p_in(0.11) / p_in(0.065);
    assert!((ratio - 3.55).abs() < 0.01, "{ratio}");
    assert_eq!(link.v_in_for_power(&z_only(coaxial_m(0.5)), 0.1, 60.0).unwrap(), None);
}
