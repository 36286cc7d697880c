use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::{
    dipole_mutual_inductance, field_at, mutual_inductance, CoilSpec, FilamentOptions,
    MagneticsError, PlacedCoil, Pose,
};

/// How Tx-to-Rx mutual inductances are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMethod {
    /// Neumann double sum over both filaments.
    #[default]
    Filament,
    /// Point magnetic dipoles.
    Dipole,
    /// Tx field evaluated at the capsule center and treated as uniform over
    /// the 1 cm cube.
    UniformField,
}

/// Tx-to-axis mutual inductances and the matching coupling coefficients,
/// indexed x, y, z in the capsule frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingSet {
    pub m: [f64; 3],
    pub k: [f64; 3],
}

impl CouplingSet {
    pub fn from_mutuals(m: [f64; 3], l_tx: f64, rx: &[CoilSpec; 3]) -> Self {
        let k = std::array::from_fn(|i| m[i] / (l_tx * rx[i].self_inductance_h).sqrt());
        Self { m, k }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Uniform scaling of every mutual (and so every k), used for the
    /// tissue field-attenuation factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            m: self.m.map(|v| v * factor),
            k: self.k.map(|v| v * factor),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().chain(&self.k).all(|v| v.is_finite())
    }
}

/// Orientation of receiver winding `axis` (0 = x, 1 = y, 2 = z) relative to
/// the capsule frame: the winding's local z maps onto the capsule axis.
pub fn rx_axis_frame(axis: usize) -> UnitQuaternion<f64> {
    use std::f64::consts::FRAC_PI_2;
    match axis {
        0 => UnitQuaternion::from_axis_angle(&Vector3::y_axis(), FRAC_PI_2),
        1 => UnitQuaternion::from_axis_angle(&Vector3::x_axis(), -FRAC_PI_2),
        2 => UnitQuaternion::identity(),
        _ => panic!("receiver axis index out of range: {axis}"),
    }
}

fn axis_coil(spec: &CoilSpec, capsule: &Pose, axis: usize) -> PlacedCoil {
    PlacedCoil::new(spec.clone(), capsule.rotated_locally(&rx_axis_frame(axis)))
}

/// Flux (Wb) linked by each receiver winding in a uniform field `b`:
/// flux_i = N_i A_i (B . u_i). Because the winding normals are orthonormal,
/// sum_i (flux_i / N_i A_i)^2 = |B|^2 for any capsule orientation.
pub fn uniform_field_flux(b: &Vector3<f64>, rx: &[CoilSpec; 3], capsule: &Pose) -> [f64; 3] {
    std::array::from_fn(|i| {
        let normal = capsule.orientation * (rx_axis_frame(i) * Vector3::z());
        rx[i].moment_area() * b.dot(&normal)
    })
}

/// Mutual inductance between the Tx coil and each receiver winding.
/// Rx-to-Rx coupling is not computed here.
pub fn coupling_set(
    tx: &PlacedCoil,
    capsule: &Pose,
    rx: &[CoilSpec; 3],
    method: CouplingMethod,
    opts: &FilamentOptions,
) -> Result<CouplingSet, MagneticsError> {
    if !capsule.is_finite() {
        return Err(MagneticsError::InvalidPose);
    }
    let m = match method {
        CouplingMethod::Filament => {
            let mut m = [0.0; 3];
            for (i, slot) in m.iter_mut().enumerate() {
                *slot = mutual_inductance(tx, &axis_coil(&rx[i], capsule, i), opts)?;
            }
            m
        }
        CouplingMethod::Dipole => {
            let mut m = [0.0; 3];
            for (i, slot) in m.iter_mut().enumerate() {
                *slot = dipole_mutual_inductance(tx, &axis_coil(&rx[i], capsule, i))?;
            }
            m
        }
        CouplingMethod::UniformField => {
            for spec in rx {
                spec.validate()?;
            }
            let b = field_at(tx, &capsule.position, opts.segments_per_turn)?;
            uniform_field_flux(&b, rx, capsule)
        }
    };
    Ok(CouplingSet::from_mutuals(m, tx.spec.self_inductance_h, rx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn rx() -> [CoilSpec; 3] {
        [
            CoilSpec::rx_default("x"),
            CoilSpec::rx_default("y"),
            CoilSpec::rx_default("z"),
        ]
    }

    fn tx() -> PlacedCoil {
        PlacedCoil::new(CoilSpec::tx_default(), Pose::identity())
    }

    #[test]
    fn axis_frames_map_z_to_each_axis() {
        let expected = [Vector3::x(), Vector3::y(), Vector3::z()];
        for (i, e) in expected.iter().enumerate() {
            assert!((rx_axis_frame(i) * Vector3::z() - e).norm() < 1e-15);
        }
    }

    #[test]
    fn aligned_capsule_couples_through_z() {
        let opts = FilamentOptions::with_segments(128);
        let c = coupling_set(&tx(), &Pose::at(0.0, 0.0, 0.09), &rx(), CouplingMethod::Filament, &opts)
            .unwrap();
        assert!(c.k[2].abs() > 0.0);
        assert!(c.k[0].abs() <= 0.02 * c.k[2].abs());
        assert!(c.k[1].abs() <= 0.02 * c.k[2].abs());
        assert!(c.k.iter().all(|k| k.abs() < 1.0));
    }

    #[test]
    fn quarter_turn_about_x_moves_coupling_to_y() {
        let opts = FilamentOptions::with_segments(128);
        let before = coupling_set(&tx(), &Pose::at(0.0, 0.0, 0.09), &rx(), CouplingMethod::Filament, &opts)
            .unwrap();
        let rot = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), FRAC_PI_2);
        let after = coupling_set(
            &tx(),
            &Pose::at(0.0, 0.0, 0.09).with_orientation(rot),
            &rx(),
            CouplingMethod::Filament,
            &opts,
        )
        .unwrap();
        let rel = (after.k[1].abs() - before.k[2].abs()).abs() / before.k[2].abs();
        assert!(rel < 1e-3, "{rel}");
        assert!(after.k[2].abs() < 1e-3 * before.k[2].abs());
        assert!(before.k[1].abs() < 1e-3 * before.k[2].abs());
    }

    #[test]
    fn far_capsule_is_weakly_coupled() {
        let opts = FilamentOptions::with_segments(64);
        let c = coupling_set(&tx(), &Pose::at(0.0, 0.0, 1.0), &rx(), CouplingMethod::Filament, &opts)
            .unwrap();
        assert!(c.k.iter().all(|k| k.abs() < 1e-4));
    }

    #[test]
    fn uniform_flux_zero_field_and_aligned_field() {
        let r = rx();
        assert_eq!(uniform_field_flux(&Vector3::zeros(), &r, &Pose::identity()), [0.0; 3]);
        let f = uniform_field_flux(&Vector3::new(0.0, 0.0, 1e-3), &r, &Pose::identity());
        assert!(f[0].abs() < 1e-15 * f[2]);
        assert!(f[1].abs() < 1e-15 * f[2]);
        assert!(f[2] > 0.0);
    }

    #[test]
    fn uniform_field_method_agrees_with_filament_at_distance() {
        let opts = FilamentOptions::with_segments(256);
        let pose = Pose::at(0.0, 0.0, 0.09);
        let fil = coupling_set(&tx(), &pose, &rx(), CouplingMethod::Filament, &opts).unwrap();
        let uni = coupling_set(&tx(), &pose, &rx(), CouplingMethod::UniformField, &opts).unwrap();
        assert!((fil.m[2] - uni.m[2]).abs() / fil.m[2].abs() < 0.01);
    }
}
