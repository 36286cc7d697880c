//! Ready-made scenarios mirroring the bench and in-vivo experiments.

use super::{Keyframe, PoseSpec, ScenarioConfig, ScenarioError, Trajectory};
use crate::magnetics::CouplingMethod;

pub const PRESET_NAMES: [&str; 5] = ["ramp_fig6b", "robot_fig7", "static_grid_fig9", "dynamic_fig10", "rotation_sweep"];

/// One static operating point of a grid preset.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub label: String,
    pub variant: String,
    pub distance_m: f64,
    pub v_in_v: f64,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Single(ScenarioConfig),
    /// Independent static runs, one per grid point.
    Grid(Vec<GridPoint>),
}

impl Preset {
    pub fn into_single(self) -> Option<ScenarioConfig> {
        match self {
            Preset::Single(c) => Some(c),
            Preset::Grid(_) => None,
        }
    }
}

fn frame(t_s: f64, capsule: PoseSpec) -> Keyframe {
    Keyframe {
        t_s,
        tx: PoseSpec::at(0.0, 0.0, 0.0),
        capsule,
    }
}

pub fn preset(name: &str) -> Result<Preset, ScenarioError> {
    match name {
        "ramp_fig6b" => Ok(Preset::Single(ramp_fig6b())),
        "robot_fig7" => Ok(Preset::Single(robot_fig7())),
        "static_grid_fig9" => Ok(Preset::Grid(static_grid_fig9())),
        "dynamic_fig10" => Ok(Preset::Single(dynamic_fig10())),
        "rotation_sweep" => Ok(Preset::Single(rotation_sweep(0.09, 30.0))),
        other => Err(ScenarioError::UnknownPreset(other.to_string())),
    }
}

/// Coaxial capsule moved 6.5 -> 11 cm at 0.2 cm/s and back at 0.1 cm/s
/// with adaptive control on: 22.5 s out, 45 s back.
fn ramp_fig6b() -> ScenarioConfig {
    let out_s = (0.11 - 0.065) / 0.002;
    let back_s = (0.11 - 0.065) / 0.001;
    ScenarioConfig {
        name: "ramp_fig6b".into(),
        duration_s: out_s + back_s,
        trajectory: Trajectory {
            keyframes: vec![
                frame(0.0, PoseSpec::at(0.0, 0.0, 0.065)),
                frame(out_s, PoseSpec::at(0.0, 0.0, 0.11)),
                frame(out_s + back_s, PoseSpec::at(0.0, 0.0, 0.065)),
            ],
        },
        ..ScenarioConfig::default()
    }
}

/// Bench robot test at constant input (about 57 W at 9 cm aligned) with
/// control off: a quarter turn about x near 17 s, a retreat to 11 cm over
/// 46-55 s and a quarter turn about y near 63 s.
fn robot_fig7() -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        name: "robot_fig7".into(),
        duration_s: 80.0,
        adaptive_control: false,
        trajectory: Trajectory {
            keyframes: vec![
                frame(0.0, PoseSpec::at(0.0, 0.0, 0.09)),
                frame(15.0, PoseSpec::at(0.0, 0.0, 0.09)),
                frame(19.0, PoseSpec::at(0.0, 0.0, 0.09).rotated(90.0, 0.0, 0.0)),
                frame(30.0, PoseSpec::at(0.0, 0.0, 0.09).rotated(90.0, 0.0, 0.0)),
                frame(34.0, PoseSpec::at(0.0, 0.0, 0.09)),
                frame(46.0, PoseSpec::at(0.0, 0.0, 0.09)),
                frame(55.0, PoseSpec::at(0.0, 0.0, 0.11)),
                frame(61.0, PoseSpec::at(0.0, 0.0, 0.11)),
                frame(65.0, PoseSpec::at(0.0, 0.0, 0.11).rotated(0.0, 90.0, 0.0)),
                frame(80.0, PoseSpec::at(0.0, 0.0, 0.11).rotated(0.0, 90.0, 0.0)),
            ],
        },
        ..ScenarioConfig::default()
    };
    cfg.aps.v_v = 15.2;
    cfg.summary.settle_s = 0.0;
    cfg
}

/// Static in-vivo grid: thin and thick abdominal wall (tissue attenuation
/// 1.0 and 0.75) over three distances, and a 10 cm lateral offset over
/// three shorter heights, each at four supply voltages.
fn static_grid_fig9() -> Vec<GridPoint> {
    let variants: [(&str, f64, f64, [f64; 3]); 3] = [
        ("thin_wall", 1.0, 0.0, [0.065, 0.09, 0.11]),
        ("thick_wall", 0.75, 0.0, [0.065, 0.09, 0.11]),
        ("lateral_10cm", 1.0, 0.10, [0.04, 0.065, 0.09]),
    ];
    let mut points = Vec::new();
    for (variant, attenuation, lateral_m, distances) in variants {
        for d in distances {
            for v_in in [6.0, 9.0, 12.0, 15.0] {
                let mut cfg = ScenarioConfig {
                    name: format!("static_grid_fig9/{variant}/d{:.0}mm/v{v_in:.0}", d * 1e3),
                    duration_s: 1.0,
                    adaptive_control: false,
                    trajectory: Trajectory::fixed(PoseSpec::at(lateral_m, 0.0, d)),
                    ..ScenarioConfig::default()
                };
                cfg.perturbation.field_attenuation = attenuation;
                cfg.aps.v_v = v_in;
                cfg.summary.settle_s = 0.0;
                points.push(GridPoint {
                    label: cfg.name.clone(),
                    variant: variant.to_string(),
                    distance_m: d,
                    v_in_v: v_in,
                    config: cfg,
                });
            }
        }
    }
    points
}

/// 85 s in-vivo movement pattern with breathing, control off, supply set
/// for about 5.8 A in the Tx coil. Larger distance and misalignment near
/// 27, 41 and 77 s, closest approach near 58 s.
fn dynamic_fig10() -> ScenarioConfig {
    let p = PoseSpec::at;
    let mut cfg = ScenarioConfig {
        name: "dynamic_fig10".into(),
        duration_s: 85.0,
        adaptive_control: false,
        trajectory: Trajectory {
            keyframes: vec![
                frame(0.0, p(0.0, 0.0, 0.09)),
                frame(10.0, p(0.02, 0.0, 0.09).rotated(30.0, 0.0, 0.0)),
                frame(27.0, p(0.04, 0.0, 0.10).rotated(60.0, 0.0, 20.0)),
                frame(35.0, p(0.0, 0.02, 0.09).rotated(20.0, 40.0, 0.0)),
                frame(41.0, p(0.0, 0.04, 0.10).rotated(0.0, 70.0, 0.0)),
                frame(50.0, p(0.0, 0.0, 0.085).rotated(0.0, 30.0, 45.0)),
                frame(58.0, p(0.0, 0.0, 0.075).rotated(10.0, 10.0, 0.0)),
                frame(68.0, p(0.02, 0.02, 0.09).rotated(45.0, 0.0, 60.0)),
                frame(77.0, p(0.04, 0.03, 0.105).rotated(80.0, 20.0, 0.0)),
                frame(85.0, p(0.0, 0.0, 0.09)),
            ],
        },
        ..ScenarioConfig::default()
    };
    cfg.aps.v_v = 7.6;
    cfg.perturbation.respiration.enabled = true;
    cfg.summary.settle_s = 0.0;
    cfg
}

/// Capsule at `d_m` on the Tx axis turned 0 -> 90 degrees about x at a
/// constant rate over `duration_s`, evaluated with the uniform-field
/// coupling. Starts with control on; set `adaptive_control` and `aps.v_v`
/// for an open-loop sweep.
pub fn rotation_sweep(d_m: f64, duration_s: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        name: format!("rotation_sweep_d{:.0}mm", d_m * 1e3),
        duration_s,
        trajectory: Trajectory {
            keyframes: vec![
                frame(0.0, PoseSpec::at(0.0, 0.0, d_m)),
                frame(duration_s, PoseSpec::at(0.0, 0.0, d_m).rotated(90.0, 0.0, 0.0)),
            ],
        },
        ..ScenarioConfig::default()
    };
    cfg.magnetics.method = CouplingMethod::UniformField;
    cfg.summary.settle_s = 0.0;
    cfg
}
