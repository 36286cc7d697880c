use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::ScenarioError;
use crate::magnetics::Pose;

/// Pose as written in configuration files.
///
/// `rotation_xyz_deg` holds roll, pitch and yaw about the fixed x, y and z
/// axes, applied in that order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub position_m: [f64; 3],
    #[serde(default)]
    pub rotation_xyz_deg: [f64; 3],
}

impl PoseSpec {
    pub fn at(x: f64, y: f64, z: f64) -> Self {
        Self {
            position_m: [x, y, z],
            rotation_xyz_deg: [0.0; 3],
        }
    }

    pub fn rotated(mut self, rx_deg: f64, ry_deg: f64, rz_deg: f64) -> Self {
        self.rotation_xyz_deg = [rx_deg, ry_deg, rz_deg];
        self
    }

    pub fn to_pose(&self) -> Pose {
        let [rx, ry, rz] = self.rotation_xyz_deg.map(f64::to_radians);
        let [x, y, z] = self.position_m;
        Pose::new(Vector3::new(x, y, z), UnitQuaternion::from_euler_angles(rx, ry, rz))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keyframe {
    pub t_s: f64,
    pub tx: PoseSpec,
    pub capsule: PoseSpec,
}

/// Keyframed motion: positions interpolate linearly, orientations by slerp.
/// Before the first and after the last keyframe the pose is held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub keyframes: Vec<Keyframe>,
}

#[derive(Debug, Clone)]
struct ResolvedKeyframe {
    t: f64,
    tx: Pose,
    capsule: Pose,
}

/// Trajectory with poses converted once, ready for sampling.
#[derive(Debug, Clone)]
pub struct PoseTrack {
    frames: Vec<ResolvedKeyframe>,
}

fn lerp_pose(a: &Pose, b: &Pose, u: f64) -> Pose {
    let position = a.position + (b.position - a.position) * u;
    let orientation = a
        .orientation
        .try_slerp(&b.orientation, u, 1e-12)
        .unwrap_or(if u < 0.5 { a.orientation } else { b.orientation });
    Pose::new(position, orientation)
}

impl Trajectory {
    /// Capsule held at `capsule` below a fixed Tx at the origin.
    pub fn fixed(capsule: PoseSpec) -> Self {
        Self {
            keyframes: vec![Keyframe {
                t_s: 0.0,
                tx: PoseSpec::at(0.0, 0.0, 0.0),
                capsule,
            }],
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.keyframes.is_empty() {
            return Err(ScenarioError::InvalidConfig("trajectory has no keyframes".into()));
        }
        for w in self.keyframes.windows(2) {
            if !(w[1].t_s > w[0].t_s) {
                return Err(ScenarioError::InvalidConfig(format!(
                    "keyframe times must increase strictly ({} then {})",
                    w[0].t_s, w[1].t_s
                )));
            }
        }
        for k in &self.keyframes {
            let finite = k.t_s.is_finite()
                && k.tx.position_m.iter().chain(&k.tx.rotation_xyz_deg).all(|v| v.is_finite())
                && k.capsule.position_m.iter().chain(&k.capsule.rotation_xyz_deg).all(|v| v.is_finite());
            if !finite {
                return Err(ScenarioError::InvalidConfig(format!("non-finite keyframe at t = {}", k.t_s)));
            }
        }
        Ok(())
    }

    pub fn track(&self) -> Result<PoseTrack, ScenarioError> {
        self.validate()?;
        Ok(PoseTrack {
            frames: self
                .keyframes
                .iter()
                .map(|k| ResolvedKeyframe {
                    t: k.t_s,
                    tx: k.tx.to_pose(),
                    capsule: k.capsule.to_pose(),
                })
                .collect(),
        })
    }

    pub fn end_time(&self) -> f64 {
        self.keyframes.last().map_or(0.0, |k| k.t_s)
    }
}

impl PoseTrack {
    /// (tx pose, capsule pose) at time `t_s`.
    pub fn sample(&self, t_s: f64) -> (Pose, Pose) {
        let f = &self.frames;
        let i = f.partition_point(|k| k.t <= t_s);
        if i == 0 {
            return (f[0].tx, f[0].capsule);
        }
        if i == f.len() {
            let last = &f[f.len() - 1];
            return (last.tx, last.capsule);
        }
        let (a, b) = (&f[i - 1], &f[i]);
        let u = (t_s - a.t) / (b.t - a.t);
        (lerp_pose(&a.tx, &b.tx, u), lerp_pose(&a.capsule, &b.capsule, u))
    }
}

/// Breathing motion of the capsule, a sinusoidal displacement along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Respiration {
    pub enabled: bool,
    pub amplitude_m: f64,
    pub frequency_hz: f64,
    pub axis: [f64; 3],
}

impl Default for Respiration {
    fn default() -> Self {
        Self {
            enabled: false,
            amplitude_m: 0.005,
            frequency_hz: 0.25,
            axis: [0.0, 0.0, 1.0],
        }
    }
}

impl Respiration {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let axis = Vector3::from(self.axis);
        if !(self.amplitude_m >= 0.0 && self.frequency_hz >= 0.0 && axis.norm() > 0.0 && axis.iter().all(|v| v.is_finite())) {
            return Err(ScenarioError::InvalidConfig(format!("respiration {self:?}")));
        }
        Ok(())
    }

    pub fn displacement(&self, t_s: f64) -> Vector3<f64> {
        if !self.enabled {
            return Vector3::zeros();
        }
        Vector3::from(self.axis).normalize() * (self.amplitude_m * (TAU * self.frequency_hz * t_s).sin())
    }
}

/// Disturbances applied on top of the scripted trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Perturbation {
    pub respiration: Respiration,
    /// Multiplier on every Tx-to-Rx mutual inductance, standing in for
    /// tissue losses between the coils.
    pub field_attenuation: f64,
    /// White noise on the sensed Tx current envelope, A rms.
    pub shunt_noise_rms_a: f64,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            respiration: Respiration::default(),
            field_attenuation: 1.0,
            // 20 uV across the shunt.
            shunt_noise_rms_a: 3e-4,
        }
    }
}

impl Perturbation {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.respiration.validate()?;
        if !(self.field_attenuation >= 0.0 && self.field_attenuation.is_finite() && self.shunt_noise_rms_a >= 0.0 && self.shunt_noise_rms_a.is_finite()) {
            return Err(ScenarioError::InvalidConfig(format!(
                "field_attenuation {} / shunt_noise_rms_a {}",
                self.field_attenuation, self.shunt_noise_rms_a
            )));
        }
        Ok(())
    }
}
