use nalgebra::Vector3;

use super::{MagneticsError, PlacedCoil, MU0};

const MU0_OVER_4PI: f64 = MU0 / (4.0 * std::f64::consts::PI);

/// Discretized coil: one closed polygon per turn, in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Filament {
    pub turns: Vec<Vec<Vector3<f64>>>,
}

impl Filament {
    pub fn segment_count(&self) -> usize {
        self.turns.iter().map(Vec::len).sum()
    }

    /// All vertices, turn by turn.
    pub fn points(&self) -> impl Iterator<Item = &Vector3<f64>> {
        self.turns.iter().flatten()
    }

    /// Closed-polygon segments as (start, end) pairs.
    pub fn segments(&self) -> impl Iterator<Item = (Vector3<f64>, Vector3<f64>)> + '_ {
        self.turns.iter().flat_map(|turn| {
            let n = turn.len();
            (0..n).map(move |k| (turn[k], turn[(k + 1) % n]))
        })
    }

    pub fn arc_length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }
}

/// Numerical settings for the Neumann sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilamentOptions {
    pub segments_per_turn: usize,
    /// Minimum allowed distance between segment midpoints of the two coils.
    pub min_separation_m: f64,
    /// When set, keep doubling the discretization until consecutive results
    /// agree within `convergence_rel_tol`, up to this many segments per turn.
    pub max_segments_per_turn: Option<usize>,
    pub convergence_rel_tol: f64,
}

impl Default for FilamentOptions {
    fn default() -> Self {
        Self {
            segments_per_turn: 256,
            min_separation_m: 1e-3,
            max_segments_per_turn: None,
            convergence_rel_tol: 5e-3,
        }
    }
}

impl FilamentOptions {
    pub fn with_segments(segments_per_turn: usize) -> Self {
        Self {
            segments_per_turn,
            ..Self::default()
        }
    }

    pub fn checked(segments_per_turn: usize, max_segments_per_turn: usize) -> Self {
        Self {
            segments_per_turn,
            max_segments_per_turn: Some(max_segments_per_turn),
            ..Self::default()
        }
    }
}

fn check_inputs(coil: &PlacedCoil, segments_per_turn: usize) -> Result<(), MagneticsError> {
    if segments_per_turn < 8 {
        return Err(MagneticsError::TooFewSegments(segments_per_turn));
    }
    coil.spec.validate()?;
    if !coil.pose.is_finite() {
        return Err(MagneticsError::InvalidPose);
    }
    Ok(())
}

fn turn_polygon(coil: &PlacedCoil, offset: f64, segments_per_turn: usize) -> Vec<Vector3<f64>> {
    let r = coil.spec.radius_m;
    (0..segments_per_turn)
        .map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / segments_per_turn as f64;
            let local = Vector3::new(r * phi.cos(), r * phi.sin(), offset);
            coil.pose.transform_point(&local)
        })
        .collect()
}

fn turn_offset(index: u32, turns: u32, pitch: f64) -> f64 {
    (index as f64 - (turns as f64 - 1.0) / 2.0) * pitch
}

/// Stacked-loop polyline for a coil: `turns` closed polygons centered on
/// the pose origin, normal along the pose's local z axis, consecutive turn
/// planes `turn_pitch_m` apart.
pub fn discretize_coil(coil: &PlacedCoil, segments_per_turn: usize) -> Result<Filament, MagneticsError> {
    check_inputs(coil, segments_per_turn)?;
    let spec = &coil.spec;
    let turns = (0..spec.turns)
        .map(|i| turn_polygon(coil, turn_offset(i, spec.turns, spec.turn_pitch_m), segments_per_turn))
        .collect();
    Ok(Filament { turns })
}

/// Midpoint/direction form of a filament.
struct Segments {
    mid: Vec<Vector3<f64>>,
    dl: Vec<Vector3<f64>>,
    weight: f64,
}

/// Turn polygons for the kernels. Coincident turns collapse to a single
/// polygon carrying the turn count as its weight.
fn weighted_polygons(coil: &PlacedCoil, segments_per_turn: usize) -> (Filament, f64) {
    let spec = &coil.spec;
    if spec.turn_pitch_m == 0.0 {
        let turns = vec![turn_polygon(coil, 0.0, segments_per_turn)];
        (Filament { turns }, spec.turns as f64)
    } else {
        let turns = (0..spec.turns)
            .map(|i| turn_polygon(coil, turn_offset(i, spec.turns, spec.turn_pitch_m), segments_per_turn))
            .collect();
        (Filament { turns }, 1.0)
    }
}

impl Segments {
    fn build(coil: &PlacedCoil, segments_per_turn: usize) -> Self {
        let (filament, weight) = weighted_polygons(coil, segments_per_turn);
        let (mid, dl) = filament
            .segments()
            .map(|(a, b)| ((a + b) * 0.5, b - a))
            .unzip();
        Self { mid, dl, weight }
    }
}

/// Returns (M, sum of |dl.dl|/r) so callers can judge cancellation.
fn neumann_sum(a: &Segments, b: &Segments, guard: f64) -> Result<(f64, f64), MagneticsError> {
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut min_r2 = f64::INFINITY;
    for (ma, dla) in a.mid.iter().zip(&a.dl) {
        for (mb, dlb) in b.mid.iter().zip(&b.dl) {
            let r2 = (ma - mb).norm_squared();
            min_r2 = min_r2.min(r2);
            let dot = dla.dot(dlb);
            let inv_r = 1.0 / r2.sqrt();
            sum += dot * inv_r;
            abs_sum += dot.abs() * inv_r;
        }
    }
    if min_r2.sqrt() < guard {
        return Err(MagneticsError::CoilsTooClose {
            min_m: min_r2.sqrt(),
            guard_m: guard,
        });
    }
    let w = MU0_OVER_4PI * a.weight * b.weight;
    Ok((w * sum, w * abs_sum))
}

fn mutual_at(coil_a: &PlacedCoil, coil_b: &PlacedCoil, n: usize, guard: f64) -> Result<(f64, f64), MagneticsError> {
    let a = Segments::build(coil_a, n);
    let b = Segments::build(coil_b, n);
    neumann_sum(&a, &b, guard)
}

/// Mutual inductance (H) between two placed coils by the double line
/// integral M = mu0/4pi sum_i sum_j (dl_i . dl_j) / |r_i - r_j| over
/// segment midpoints.
///
/// With `max_segments_per_turn` set, the discretization is doubled until two
/// consecutive results agree within the configured relative tolerance
/// (judged against the absolute-value sum when the net result cancels to
/// near zero).
pub fn mutual_inductance(
    coil_a: &PlacedCoil,
    coil_b: &PlacedCoil,
    opts: &FilamentOptions,
) -> Result<f64, MagneticsError> {
    check_inputs(coil_a, opts.segments_per_turn)?;
    check_inputs(coil_b, opts.segments_per_turn)?;
    let mut n = opts.segments_per_turn;
    let (mut m, _) = mutual_at(coil_a, coil_b, n, opts.min_separation_m)?;
    let Some(cap) = opts.max_segments_per_turn else {
        return Ok(m);
    };
    let mut last_rel = f64::NAN;
    while 2 * n <= cap {
        let (m2, abs2) = mutual_at(coil_a, coil_b, 2 * n, opts.min_separation_m)?;
        n *= 2;
        let change = (m2 - m).abs();
        if change <= opts.convergence_rel_tol * m2.abs() || change <= 1e-9 * abs2 {
            return Ok(m2);
        }
        last_rel = change / m2.abs().max(f64::MIN_POSITIVE);
        m = m2;
    }
    Err(MagneticsError::NonConvergent {
        rel_change: last_rel,
        segments: n,
    })
}

/// Dipole-dipole mutual inductance, using each coil's turns x area moment:
/// M = mu0/(4 pi d^3) m_a m_b [3 (u_a.r)(u_b.r) - u_a.u_b].
pub fn dipole_mutual_inductance(coil_a: &PlacedCoil, coil_b: &PlacedCoil) -> Result<f64, MagneticsError> {
    for c in [coil_a, coil_b] {
        c.spec.validate()?;
        if !c.pose.is_finite() {
            return Err(MagneticsError::InvalidPose);
        }
    }
    let sep = coil_b.pose.position - coil_a.pose.position;
    let d = sep.norm();
    let required = 3.0 * coil_a.spec.radius_m.max(coil_b.spec.radius_m);
    if d < required {
        return Err(MagneticsError::TooClose {
            separation_m: d,
            required_m: required,
        });
    }
    let r_hat = sep / d;
    let ua = coil_a.pose.normal();
    let ub = coil_b.pose.normal();
    let geometry = 3.0 * ua.dot(&r_hat) * ub.dot(&r_hat) - ua.dot(&ub);
    Ok(MU0_OVER_4PI * coil_a.spec.moment_area() * coil_b.spec.moment_area() * geometry / d.powi(3))
}

/// Magnetic flux density (T per ampere of coil current) at `point`, summing
/// the exact straight-segment Biot-Savart field over the coil's filament.
pub fn field_at(
    coil: &PlacedCoil,
    point: &Vector3<f64>,
    segments_per_turn: usize,
) -> Result<Vector3<f64>, MagneticsError> {
    check_inputs(coil, segments_per_turn)?;
    let (filament, weight) = weighted_polygons(coil, segments_per_turn);
    let mut b = Vector3::zeros();
    for (start, end) in filament.segments() {
        let r1 = point - start;
        let r2 = point - end;
        let n1 = r1.norm();
        let n2 = r2.norm();
        let denom = n1 * n2 * (n1 * n2 + r1.dot(&r2));
        if denom.abs() < 1e-300 {
            continue;
        }
        b += r1.cross(&r2) * ((n1 + n2) / denom);
    }
    Ok(b * (MU0_OVER_4PI * weight))
}
