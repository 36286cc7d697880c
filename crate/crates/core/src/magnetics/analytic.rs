//! Closed-form results for circular loops.

use super::MU0;
use std::f64::consts::PI;

/// Complete elliptic integral of the first kind, K(m), parameter m = k^2.
///
/// Arithmetic-geometric mean iteration; converges quadratically, so a
/// handful of rounds reach machine precision for m < 1.
pub fn ellip_k(m: f64) -> f64 {
    assert!((0.0..1.0).contains(&m), "parameter out of range: {m}");
    let (mut a, mut b) = (1.0_f64, (1.0 - m).sqrt());
    while (a - b).abs() > 1e-15 * a {
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    PI / (2.0 * a)
}

/// Complete elliptic integral of the second kind, E(m), parameter m = k^2.
pub fn ellip_e(m: f64) -> f64 {
    assert!((0.0..1.0).contains(&m), "parameter out of range: {m}");
    let (mut a, mut b) = (1.0_f64, (1.0 - m).sqrt());
    let mut sum = 0.5 * m;
    let mut weight = 0.5;
    while (a - b).abs() > 1e-15 * a {
        let c = 0.5 * (a - b);
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
        weight *= 2.0;
        sum += weight * c * c;
    }
    PI / (2.0 * a) * (1.0 - sum)
}

/// Mutual inductance (H) of two coaxial single-turn circular loops with
/// radii `a`, `b` and axial separation `d`:
/// M = mu0 sqrt(ab) [(2/k - k) K(k^2) - (2/k) E(k^2)], k^2 = 4ab/((a+b)^2 + d^2).
pub fn coaxial_loops_mutual(a: f64, b: f64, d: f64) -> f64 {
    let m = 4.0 * a * b / ((a + b).powi(2) + d * d);
    let k = m.sqrt();
    MU0 * (a * b).sqrt() * ((2.0 / k - k) * ellip_k(m) - 2.0 / k * ellip_e(m))
}

/// Axial flux density (T/A) on the axis of a single loop of radius `a`, at
/// axial offset `z` from its plane.
pub fn on_axis_loop_field(a: f64, z: f64) -> f64 {
    MU0 * a * a / (2.0 * (a * a + z * z).powf(1.5))
}
