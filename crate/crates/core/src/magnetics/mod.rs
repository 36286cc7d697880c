//! Coil geometry, mutual inductance and coupling coefficients.
//!
//! The transmitter is a large multi-turn loop; the capsule carries three
//! orthogonal windings on a 1 cm cube, each modeled as an equivalent
//! circular loop of equal area. Mutual inductances come from a segment
//! midpoint Neumann sum over the filament polylines, with a magnetic
//! dipole approximation and an analytic coaxial-loop formula available as
//! fast far-field and cross-check routes.
//!
//! Self-inductance and ESR are configuration values taken from bench
//! measurements; they are never computed from the filaments.

mod analytic;
mod coupling;
mod filament;

pub use analytic::{coaxial_loops_mutual, ellip_e, ellip_k, on_axis_loop_field};
pub use coupling::{coupling_set, rx_axis_frame, uniform_field_flux, CouplingMethod, CouplingSet};
pub use filament::{
    discretize_coil, dipole_mutual_inductance, field_at, mutual_inductance, Filament,
    FilamentOptions,
};

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vacuum permeability (H/m).
pub const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Side of the capsule's receiver cube (m).
pub const RX_CUBE_SIDE_M: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MagneticsError {
    #[error("invalid coil `{label}`: {reason}")]
    InvalidCoil { label: String, reason: String },
    #[error("non-finite pose")]
    InvalidPose,
    #[error("segments_per_turn must be at least 8, got {0}")]
    TooFewSegments(usize),
    #[error("filaments closer than the {guard_m} m separation guard (min {min_m} m)")]
    CoilsTooClose { min_m: f64, guard_m: f64 },
    #[error("mutual inductance did not converge: last doubling changed the result by {rel_change:.3e} at {segments} segments/turn")]
    NonConvergent { rel_change: f64, segments: usize },
    #[error("dipole approximation needs separation >= {required_m} m, got {separation_m} m")]
    TooClose { separation_m: f64, required_m: f64 },
}

/// Geometric and electrical description of one coil.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoilSpec {
    pub label: String,
    pub radius_m: f64,
    pub turns: u32,
    /// Axial spacing between consecutive turns. Zero stacks the turns on
    /// one plane.
    pub turn_pitch_m: f64,
    pub self_inductance_h: f64,
    pub esr_ohm: f64,
}

impl CoilSpec {
    /// Transmitter coil: 20 cm diameter, 6 turns of litz wire, 16.7 uH, 0.73 ohm.
    ///
    /// The 3 mm pitch is a calibration value (bundle diameter of the litz
    /// wire), not a measured one.
    pub fn tx_default() -> Self {
        Self {
            label: "tx".into(),
            radius_m: 0.10,
            turns: 6,
            turn_pitch_m: 3.0e-3,
            self_inductance_h: 16.7e-6,
            esr_ohm: 0.73,
        }
    }

    /// One receiver winding on the 1 cm cube, as an equal-area circular loop.
    ///
    /// 6.5 uH and 2.9 ohm are the measured values. The 20-turn count is a
    /// calibration value: with it, 100 mW into the load at 9 cm needs about
    /// 5.9 A in the Tx coil.
    pub fn rx_default(label: &str) -> Self {
        Self {
            label: label.into(),
            radius_m: RX_CUBE_SIDE_M / std::f64::consts::PI.sqrt(),
            turns: 20,
            turn_pitch_m: 0.0,
            self_inductance_h: 6.5e-6,
            esr_ohm: 2.9,
        }
    }

    pub fn validate(&self) -> Result<(), MagneticsError> {
        let bad = |reason: &str| MagneticsError::InvalidCoil {
            label: self.label.clone(),
            reason: reason.to_string(),
        };
        let fields = [
            self.radius_m,
            self.turn_pitch_m,
            self.self_inductance_h,
            self.esr_ohm,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite field"));
        }
        if self.radius_m <= 0.0 {
            return Err(bad("radius must be positive"));
        }
        if self.turns == 0 {
            return Err(bad("turns must be at least 1"));
        }
        if self.turn_pitch_m < 0.0 {
            return Err(bad("turn pitch must be non-negative"));
        }
        if self.self_inductance_h <= 0.0 {
            return Err(bad("self inductance must be positive"));
        }
        if self.esr_ohm <= 0.0 {
            return Err(bad("ESR must be positive"));
        }
        Ok(())
    }

    /// Turns times loop area (m^2), the coil's magnetic moment per ampere.
    pub fn moment_area(&self) -> f64 {
        self.turns as f64 * std::f64::consts::PI * self.radius_m * self.radius_m
    }

    /// Q = omega L / ESR at frequency `f_hz`.
    pub fn quality_factor(&self, f_hz: f64) -> f64 {
        2.0 * std::f64::consts::PI * f_hz * self.self_inductance_h / self.esr_ohm
    }
}

/// Rigid placement in the world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vector3::new(x, y, z), UnitQuaternion::identity())
    }

    pub fn with_orientation(mut self, orientation: UnitQuaternion<f64>) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn is_finite(&self) -> bool {
        let q = self.orientation.quaternion();
        self.position.iter().all(|v| v.is_finite())
            && q.coords.iter().all(|v| v.is_finite())
            && (q.norm() - 1.0).abs() <= 1e-9
    }

    /// Maps a point from this pose's local frame to the world frame.
    pub fn transform_point(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.orientation * local + self.position
    }

    /// World-frame direction of the local z axis.
    pub fn normal(&self) -> Vector3<f64> {
        self.orientation * Vector3::z()
    }

    /// Composes this pose with a rotation applied in its local frame.
    pub fn rotated_locally(&self, local: &UnitQuaternion<f64>) -> Self {
        Self {
            position: self.position,
            orientation: self.orientation * local,
        }
    }
}

/// A coil together with its placement.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedCoil {
    pub spec: CoilSpec,
    pub pose: Pose,
}

impl PlacedCoil {
    pub fn new(spec: CoilSpec, pose: Pose) -> Self {
        Self { spec, pose }
    }
}
