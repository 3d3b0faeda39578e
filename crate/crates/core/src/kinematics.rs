//! Jerk- and friction-ellipse-limited state propagation.
//!
//! A control is an acceleration setpoint `(a, b)` inside the friction
//! ellipse. Each step moves the current acceleration toward the setpoint at
//! no more than the jerk limits, clips to the hard acceleration bounds and
//! the (piecewise) friction ellipse, and then integrates speed, yaw and
//! position over the step.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{FsmError, Result};

/// Below this speed a bicycle does not rotate and a point mass uses this
/// speed as the divisor of `b / s`.
pub const STOPPED_SPEED_EPS: f64 = 0.1;

const ELLIPSE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicState {
    /// East position of the agent center [m].
    pub x: f64,
    /// North position of the agent center [m].
    pub y: f64,
    /// Counterclockwise from east [rad].
    pub yaw: f64,
    /// Forward speed [m/s].
    pub speed: f64,
    /// Longitudinal acceleration [m/s²].
    pub accel_long: f64,
    /// Lateral acceleration, positive to the left [m/s²].
    pub accel_lat: f64,
}

impl KinematicState {
    pub fn at_rest(x: f64, y: f64, yaw: f64) -> Self {
        KinematicState {
            x,
            y,
            yaw,
            ..Default::default()
        }
    }

    pub fn cruising(x: f64, y: f64, yaw: f64, speed: f64) -> Self {
        KinematicState {
            x,
            y,
            yaw,
            speed,
            ..Default::default()
        }
    }
}

/// One regime of kinematic limits. Jerk limits are stored as positive
/// magnitudes: `jerk_decel` bounds how fast acceleration can fall and
/// `jerk_accel` how fast it can rise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicProfile {
    pub speed_min: f64,
    pub speed_max: f64,
    /// Strongest deceleration (negative).
    pub accel_min: f64,
    pub accel_max: f64,
    /// Maximum absolute lateral acceleration.
    pub lat_accel_max: f64,
    pub jerk_decel: f64,
    pub jerk_accel: f64,
    /// Lateral jerk limit.
    pub jerk_lat: f64,
    /// Time the ego needs before it may use the surprising limits. Only the
    /// normal ego profile carries a value.
    #[serde(default)]
    pub replanning_delay: Option<f64>,
}

impl KinematicProfile {
    /// Light-vehicle limits for expected behavior (90th percentile).
    pub fn light_vehicle_normal() -> Self {
        KinematicProfile {
            speed_min: 0.0,
            speed_max: 40.0,
            accel_min: -2.2,
            accel_max: 2.5,
            lat_accel_max: 1.8,
            jerk_decel: 1.8,
            jerk_accel: 1.3,
            jerk_lat: 0.8,
            replanning_delay: Some(1.0),
        }
    }

    /// Light-vehicle limits for initiator / responder behavior (99.99th percentile).
    pub fn light_vehicle_surprising() -> Self {
        KinematicProfile {
            speed_min: 0.0,
            speed_max: 40.0,
            accel_min: -7.3,
            accel_max: 6.9,
            lat_accel_max: 6.3,
            jerk_decel: 6.0,
            jerk_accel: 5.3,
            jerk_lat: 4.5,
            replanning_delay: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.accel_min < 0.0
            && self.accel_max > 0.0
            && self.lat_accel_max > 0.0
            && self.jerk_decel > 0.0
            && self.jerk_accel > 0.0
            && self.jerk_lat > 0.0
            && self.speed_min >= 0.0
            && self.speed_min < self.speed_max
            && self.replanning_delay.is_none_or(|r| r >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(FsmError::config(format!(
                "invalid kinematic profile {self:?}"
            )))
        }
    }

    /// Longitudinal semi-axis of the friction ellipse on the side of `a`.
    fn long_axis(&self, a: f64) -> f64 {
        if a > 0.0 {
            self.accel_max
        } else {
            -self.accel_min
        }
    }

    /// `(a/a±)² + (b/b)²`; at most 1 inside the ellipse.
    pub fn ellipse_value(&self, a: f64, b: f64) -> f64 {
        let u = a / self.long_axis(a);
        let v = b / self.lat_accel_max;
        u * u + v * v
    }

    pub fn in_ellipse(&self, a: f64, b: f64) -> bool {
        self.ellipse_value(a, b) <= 1.0 + ELLIPSE_TOL
    }

    /// True when every limit of `self` is at least as tight as `other`'s,
    /// which makes this ellipse a subset of the other.
    pub fn is_within(&self, other: &KinematicProfile) -> bool {
        self.accel_min >= other.accel_min
            && self.accel_max <= other.accel_max
            && self.lat_accel_max <= other.lat_accel_max
            && self.jerk_decel <= other.jerk_decel
            && self.jerk_accel <= other.jerk_accel
            && self.jerk_lat <= other.jerk_lat
            && self.speed_min >= other.speed_min
            && self.speed_max <= other.speed_max
    }

    /// Point on the friction-ellipse perimeter at parametric angle `theta`
    /// (0 = full acceleration, π/2 = full left, π = full braking).
    pub fn perimeter_point(&self, theta: f64) -> ControlTarget {
        let (s, c) = theta.sin_cos();
        let a = if c >= 0.0 {
            c * self.accel_max
        } else {
            -c * self.accel_min
        };
        ControlTarget {
            target_a: a,
            target_b: s * self.lat_accel_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlTarget {
    pub target_a: f64,
    pub target_b: f64,
}

impl ControlTarget {
    pub fn new(target_a: f64, target_b: f64) -> Self {
        ControlTarget { target_a, target_b }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Bicycle,
    PointMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentBody {
    pub length: f64,
    pub width: f64,
    /// Only used by the bicycle model.
    #[serde(default = "default_wheelbase")]
    pub wheelbase: f64,
    pub model: ModelKind,
    /// Only used by the point-mass model.
    #[serde(default = "default_max_yaw_rate")]
    pub max_yaw_rate: f64,
}

fn default_wheelbase() -> f64 {
    2.8
}

fn default_max_yaw_rate() -> f64 {
    2.0 * PI
}

impl AgentBody {
    pub fn car() -> Self {
        AgentBody {
            length: 4.8,
            width: 2.0,
            wheelbase: 2.8,
            model: ModelKind::Bicycle,
            max_yaw_rate: default_max_yaw_rate(),
        }
    }

    pub fn pedestrian() -> Self {
        AgentBody {
            length: 0.6,
            width: 0.6,
            wheelbase: 0.6,
            model: ModelKind::PointMass,
            max_yaw_rate: default_max_yaw_rate(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut ok = self.width > 0.0 && self.length >= self.width;
        if self.model == ModelKind::Bicycle {
            ok &= self.wheelbase > 0.0 && self.wheelbase <= self.length;
        } else {
            ok &= self.max_yaw_rate > 0.0;
        }
        if ok {
            Ok(())
        } else {
            Err(FsmError::validation(format!("invalid agent body {self:?}")))
        }
    }
}

/// Applies the jerk window, the hard acceleration bounds and the friction
/// ellipse to a requested setpoint, in that order.
///
/// The lateral jerk limit bounds the change of signed `b`. When the
/// jerk-limited request falls outside the ellipse it is scaled radially
/// toward the origin; if the previous acceleration was itself feasible and
/// the radial point would leave the jerk box, the request is instead pulled
/// back along the segment from the previous acceleration.
pub fn clip_acceleration(
    prev: &KinematicState,
    target: ControlTarget,
    profile: &KinematicProfile,
    dt: f64,
) -> (f64, f64) {
    let a_lo = prev.accel_long - dt * profile.jerk_decel;
    let a_hi = prev.accel_long + dt * profile.jerk_accel;
    let b_lo = prev.accel_lat - dt * profile.jerk_lat;
    let b_hi = prev.accel_lat + dt * profile.jerk_lat;

    let a = target
        .target_a
        .clamp(a_lo, a_hi)
        .clamp(profile.accel_min, profile.accel_max);
    let b = target
        .target_b
        .clamp(b_lo, b_hi)
        .clamp(-profile.lat_accel_max, profile.lat_accel_max);

    let e = profile.ellipse_value(a, b);
    if e <= 1.0 {
        return (a, b);
    }
    let scale = e.sqrt().recip();
    let (ra, rb) = (a * scale, b * scale);

    let in_box = |x: f64, y: f64| {
        x >= a_lo - 1e-12 && x <= a_hi + 1e-12 && y >= b_lo - 1e-12 && y <= b_hi + 1e-12
    };
    let prev_ok = profile.ellipse_value(prev.accel_long, prev.accel_lat) <= 1.0;
    if !prev_ok || in_box(ra, rb) {
        return (ra, rb);
    }

    // prev is inside both the box and the convex ellipse, so the boundary
    // crossing along prev -> (a, b) lies in both.
    let (pa, pb) = (prev.accel_long, prev.accel_lat);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if profile.ellipse_value(pa + mid * (a - pa), pb + mid * (b - pb)) <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (pa + lo * (a - pa), pb + lo * (b - pb))
}

/// Propagates one agent by `dt` under a control setpoint.
///
/// Speed is integrated with the mean of the old and new acceleration and
/// position with the mean speed and mid-step heading, so jerk ramps and
/// constant-deceleration stops are integrated exactly. A stop inside the
/// step is resolved analytically.
pub fn step(
    state: &KinematicState,
    control: ControlTarget,
    profile: &KinematicProfile,
    body: &AgentBody,
    dt: f64,
) -> KinematicState {
    let (mut a1, b1) = clip_acceleration(state, control, profile, dt);
    let s0 = state.speed;
    let a_mean = 0.5 * (state.accel_long + a1);
    let s_raw = s0 + dt * a_mean;

    let (s1, travel) = if s_raw < profile.speed_min {
        a1 = a1.max(0.0);
        let lo = profile.speed_min;
        if a_mean < 0.0 && s0 > lo {
            let t_hit = (s0 - lo) / -a_mean;
            (lo, 0.5 * (s0 + lo) * t_hit + lo * (dt - t_hit).max(0.0))
        } else {
            (lo, 0.5 * (s0 + lo) * dt)
        }
    } else if s_raw > profile.speed_max {
        a1 = a1.min(0.0);
        let hi = profile.speed_max;
        if a_mean > 0.0 && s0 < hi {
            let t_hit = (hi - s0) / a_mean;
            (hi, 0.5 * (s0 + hi) * t_hit + hi * (dt - t_hit).max(0.0))
        } else {
            (hi, 0.5 * (s0 + hi) * dt)
        }
    } else {
        (s_raw, 0.5 * (s0 + s_raw) * dt)
    };

    let s_mid = 0.5 * (s0 + s1);
    let b_mean = 0.5 * (state.accel_lat + b1);
    let yaw_rate = match body.model {
        ModelKind::Bicycle => {
            if s_mid < STOPPED_SPEED_EPS {
                0.0
            } else {
                // curvature b/s² is capped at 1/wheelbase
                let cap = s_mid / body.wheelbase;
                (b_mean / s_mid).clamp(-cap, cap)
            }
        }
        ModelKind::PointMass => {
            (b_mean / s_mid.max(STOPPED_SPEED_EPS)).clamp(-body.max_yaw_rate, body.max_yaw_rate)
        }
    };
    let yaw1 = state.yaw + dt * yaw_rate;
    let heading = state.yaw + 0.5 * dt * yaw_rate;

    KinematicState {
        x: state.x + travel * heading.cos(),
        y: state.y + travel * heading.sin(),
        yaw: yaw1,
        speed: s1,
        accel_long: a1,
        accel_lat: b1,
    }
}

/// `n_per` fixed controls evenly spaced around the ellipse perimeter.
pub fn sample_perimeter_controls(profile: &KinematicProfile, n_per: usize) -> Vec<ControlTarget> {
    (0..n_per)
        .map(|i| profile.perimeter_point(perimeter_angle(i, n_per)))
        .collect()
}

pub fn perimeter_angle(i: usize, n_per: usize) -> f64 {
    2.0 * PI * i as f64 / n_per as f64
}

/// Uniform draw from the ellipse interior by rejection from its bounding
/// rectangle.
pub fn sample_interior_control<R: Rng + ?Sized>(
    profile: &KinematicProfile,
    rng: &mut R,
) -> ControlTarget {
    loop {
        let a = rng.random_range(profile.accel_min..profile.accel_max);
        let b = rng.random_range(-profile.lat_accel_max..profile.lat_accel_max);
        if profile.ellipse_value(a, b) < 1.0 {
            return ControlTarget::new(a, b);
        }
    }
}

pub fn sample_interior_controls<R: Rng + ?Sized>(
    profile: &KinematicProfile,
    n_int: usize,
    rng: &mut R,
) -> Vec<ControlTarget> {
    (0..n_int)
        .map(|_| sample_interior_control(profile, rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn normal() -> KinematicProfile {
        KinematicProfile::light_vehicle_normal()
    }

    fn accel_state(a: f64, b: f64) -> KinematicState {
        KinematicState {
            speed: 10.0,
            accel_long: a,
            accel_lat: b,
            ..Default::default()
        }
    }

    #[test]
    fn clip_respects_jerk_window() {
        let (a, b) = clip_acceleration(
            &accel_state(0.0, 0.0),
            ControlTarget::new(5.0, 0.0),
            &normal(),
            0.1,
        );
        assert_abs_diff_eq!(a, 0.13, epsilon = 1e-12);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn clip_identity_at_origin() {
        let out = clip_acceleration(
            &accel_state(0.0, 0.0),
            ControlTarget::default(),
            &normal(),
            0.1,
        );
        assert_eq!(out, (0.0, 0.0));
    }

    #[test]
    fn clip_projects_radially_onto_ellipse() {
        let p = normal();
        let (a, b) = clip_acceleration(
            &accel_state(2.5, 1.8),
            ControlTarget::new(2.5, 1.8),
            &p,
            0.1,
        );
        assert_abs_diff_eq!(a, 1.767_766_952_966_368_8, epsilon = 1e-9);
        assert_abs_diff_eq!(b, 1.272_792_206_135_785_6, epsilon = 1e-9);

        // dense scan along the ray for the last feasible point
        let mut best = 0.0;
        for i in 0..=200_000 {
            let t = i as f64 / 200_000.0;
            if p.ellipse_value(2.5 * t, 1.8 * t) <= 1.0 {
                best = t;
            }
        }
        assert_abs_diff_eq!(a, 2.5 * best, epsilon = 2e-5);
        assert_abs_diff_eq!(b, 1.8 * best, epsilon = 2e-5);
    }

    #[test]
    fn hard_bound_wins_over_empty_jerk_window() {
        // observed deceleration beyond the normal limit
        let (a, _) = clip_acceleration(
            &accel_state(-4.0, 0.0),
            ControlTarget::new(-2.2, 0.0),
            &normal(),
            0.1,
        );
        assert_eq!(a, -2.2);
    }

    #[test]
    fn rest_is_fixed_point() {
        let s = KinematicState::at_rest(3.0, -2.0, 0.7);
        for dt in [0.01, 0.1, 0.5] {
            let n = step(
                &s,
                ControlTarget::default(),
                &normal(),
                &AgentBody::car(),
                dt,
            );
            assert_eq!(n, s);
        }
    }

    #[test]
    fn cruise_moves_one_meter() {
        let s = KinematicState::cruising(0.0, 0.0, 0.0, 10.0);
        let n = step(
            &s,
            ControlTarget::default(),
            &normal(),
            &AgentBody::car(),
            0.1,
        );
        assert_abs_diff_eq!(n.x, 1.0, epsilon = 1e-12);
        assert_eq!((n.y, n.yaw, n.speed), (0.0, 0.0, 10.0));
    }

    #[test]
    fn bicycle_yaw_rate_from_lateral_accel() {
        let s = KinematicState {
            speed: 10.0,
            accel_lat: 1.8,
            ..Default::default()
        };
        let n = step(
            &s,
            ControlTarget::new(0.0, 1.8),
            &normal(),
            &AgentBody::car(),
            0.1,
        );
        assert_abs_diff_eq!(n.yaw, 0.018, epsilon = 1e-12);
    }

    #[test]
    fn long_turn_matches_radius() {
        // constant b = 1.8 at 10 m/s is a circle of radius s²/b
        let mut s = KinematicState {
            speed: 10.0,
            accel_lat: 1.8,
            ..Default::default()
        };
        let mut pts = vec![(s.x, s.y)];
        for _ in 0..200 {
            s = step(
                &s,
                ControlTarget::new(0.0, 1.8),
                &normal(),
                &AgentBody::car(),
                0.1,
            );
            pts.push((s.x, s.y));
        }
        // circle centered at (0, R) for a left turn from the origin heading east
        let r = 100.0 / 1.8;
        for (x, y) in pts {
            let d = (x * x + (y - r) * (y - r)).sqrt();
            assert!((d - r).abs() / r < 1e-3, "radius {d} vs {r}");
        }
    }

    #[test]
    fn stop_floors_acceleration() {
        let s = KinematicState {
            speed: 0.2,
            accel_long: -2.2,
            ..Default::default()
        };
        let n = step(
            &s,
            ControlTarget::new(-2.2, 0.0),
            &normal(),
            &AgentBody::car(),
            0.1,
        );
        assert_eq!(n.speed, 0.0);
        assert_eq!(n.accel_long, 0.0);
        // exact travel to a stop under -2.2 m/s²: s²/(2|a|)
        assert_abs_diff_eq!(n.x, 0.04 / 4.4, epsilon = 1e-12);
    }

    #[test]
    fn point_mass_yaw_rate_is_capped() {
        let body = AgentBody {
            max_yaw_rate: 1.0,
            ..AgentBody::pedestrian()
        };
        let s = KinematicState {
            speed: 0.5,
            accel_lat: 1.8,
            ..Default::default()
        };
        let n = step(&s, ControlTarget::new(0.0, 1.8), &normal(), &body, 0.1);
        assert_abs_diff_eq!(n.yaw, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn perimeter_cardinal_points() {
        let pts = sample_perimeter_controls(&normal(), 4);
        let expected = [(2.5, 0.0), (0.0, 1.8), (-2.2, 0.0), (0.0, -1.8)];
        for (p, (a, b)) in pts.iter().zip(expected) {
            assert_abs_diff_eq!(p.target_a, a, epsilon = 1e-12);
            assert_abs_diff_eq!(p.target_b, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn surprising_max_brake_control() {
        let p = KinematicProfile::light_vehicle_surprising();
        let pts = sample_perimeter_controls(&p, 32);
        assert_abs_diff_eq!(pts[16].target_a, -7.3, epsilon = 1e-12);
        assert_abs_diff_eq!(pts[16].target_b, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn perimeter_32_on_ellipse_and_distinct() {
        for p in [normal(), KinematicProfile::light_vehicle_surprising()] {
            let pts = sample_perimeter_controls(&p, 32);
            assert_eq!(pts.len(), 32);
            for (i, c) in pts.iter().enumerate() {
                assert!((p.ellipse_value(c.target_a, c.target_b) - 1.0).abs() < 1e-9);
                for d in &pts[i + 1..] {
                    assert!(
                        (c.target_a - d.target_a).abs() + (c.target_b - d.target_b).abs() > 1e-6
                    );
                }
            }
        }
    }

    #[test]
    fn interior_samples() {
        let p = normal();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(sample_interior_controls(&p, 0, &mut rng).is_empty());
        let pts = sample_interior_controls(&p, 100, &mut rng);
        assert_eq!(pts.len(), 100);
        assert!(pts
            .iter()
            .all(|c| p.ellipse_value(c.target_a, c.target_b) < 1.0));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts = sample_interior_controls(&p, 100_000, &mut rng);
        let upper = pts.iter().filter(|c| c.target_b > 0.0).count() as f64 / 1e5;
        assert!((upper - 0.5).abs() < 0.01, "upper fraction {upper}");
    }

    #[test]
    fn interior_sampling_is_reproducible() {
        let p = KinematicProfile::light_vehicle_surprising();
        let a = sample_interior_controls(&p, 50, &mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_interior_controls(&p, 50, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn normal_ellipse_inside_surprising() {
        let n = normal();
        let s = KinematicProfile::light_vehicle_surprising();
        assert!(n.is_within(&s));
        for c in sample_perimeter_controls(&n, 360) {
            assert!(s.ellipse_value(c.target_a, c.target_b) < 1.0);
        }
    }

    #[test]
    fn table_values_validate() {
        normal().validate().unwrap();
        KinematicProfile::light_vehicle_surprising()
            .validate()
            .unwrap();
        let bad = KinematicProfile {
            accel_min: 0.5,
            ..normal()
        };
        assert!(bad.validate().is_err());
    }
}
