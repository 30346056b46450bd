//! Leg kinematics: the sinusoidal joint law and the parallelogram linkage that
//! carries the paddle web.
//!
//! Angle convention: both joints are measured in the leg's sagittal plane,
//! counter-clockwise from the positive X axis, with the hip pivot `O` at the
//! origin. Crank `OA` follows the hip angle and link `OC` follows the knee
//! angle. Within a leg frame, kinematic X maps to the body's forward axis and
//! kinematic Y to the body's vertical axis.
//!
//! The `max`/`min` suffixes on gait angles are role labels carried over from
//! the gait law, not numeric order: the hip's "max" end is -100 degrees while
//! its "min" end lies between -50 and 10 degrees.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed hip extreme of the gait law.
pub const THETA_H_MAX_DEG: f64 = -100.0;
/// Fixed knee extreme of the gait law.
pub const THETA_K_MIN_DEG: f64 = 80.0;
/// Hip/knee phase lag used during gait optimization.
pub const PHI_OPT: f64 = PI / 3.0;

/// Parameter ranges (degrees for angles, Hz for frequency).
pub mod ranges {
    /// Hip free extreme, both tables.
    pub const THETA_H_MIN_DEG: (f64, f64) = (-50.0, 10.0);
    /// Knee free extreme, both tables.
    pub const THETA_K_MAX_DEG: (f64, f64) = (-80.0, -20.0);
    /// Frequency range of the data-collection grid.
    pub const FREQ_COLLECTION: (f64, f64) = (0.3, 0.6);
    /// Frequency range explored by the gait optimizer.
    pub const FREQ_OPTIMIZATION: (f64, f64) = (0.2, 0.65);
    /// Hip/knee phase lag range of the data-collection grid (radians).
    pub const PHI_COLLECTION: (f64, f64) = (std::f64::consts::FRAC_PI_3, 5.0 * std::f64::consts::FRAC_PI_3);
}

/// Legs in the fixed order used everywhere: left-front, right-front,
/// left-hind, right-hind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Leg {
    LF,
    RF,
    LH,
    RH,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::LF, Leg::RF, Leg::LH, Leg::RH];

    pub fn index(self) -> usize {
        match self {
            Leg::LF => 0,
            Leg::RF => 1,
            Leg::LH => 2,
            Leg::RH => 3,
        }
    }

    pub fn is_left(self) -> bool {
        matches!(self, Leg::LF | Leg::LH)
    }

    pub fn is_front(self) -> bool {
        matches!(self, Leg::LF | Leg::RF)
    }

    /// The leg on the other side of the body at the same station.
    pub fn mirror(self) -> Leg {
        match self {
            Leg::LF => Leg::RF,
            Leg::RF => Leg::LF,
            Leg::LH => Leg::RH,
            Leg::RH => Leg::LH,
        }
    }
}

/// Which of the two circle intersections is taken as the knee pivot `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchRule {
    /// `B` on the far side of line `AC` from the pivot `O`. For parallelogram
    /// link lengths this is the vertex `A + C`, which moves continuously over
    /// the whole joint range.
    #[default]
    AwayFromPivot,
    /// `B` is the intersection with the larger Y coordinate. Jumps between the
    /// two solutions wherever `A` and `C` share an X coordinate.
    UpperY,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkageGeometry {
    /// Crank length |OA| (also |BC|).
    pub len_oa: f64,
    /// Thigh length |OC| (also |AB|).
    pub len_oc: f64,
    /// |BQ| as a multiple of |BC|.
    pub len_bq_ratio: f64,
    /// Side of the square web.
    pub web_side: f64,
    pub web_mass: f64,
    pub branch: BranchRule,
}

impl Default for LinkageGeometry {
    fn default() -> Self {
        Self {
            len_oa: 0.035,
            len_oc: 0.125,
            len_bq_ratio: 2.5,
            web_side: 0.06,
            web_mass: 0.010,
            branch: BranchRule::AwayFromPivot,
        }
    }
}

impl LinkageGeometry {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("len_oa", self.len_oa),
            ("len_oc", self.len_oc),
            ("len_bq_ratio", self.len_bq_ratio),
            ("web_side", self.web_side),
            ("web_mass", self.web_mass),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "geometry.{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub theta_h: f64,
    pub theta_k: f64,
    pub dtheta_h: f64,
    pub dtheta_k: f64,
    pub t: f64,
}

/// Sinusoidal gait law parameters (radians, Hz). `alpha` holds the per-leg
/// phase offsets in [`Leg::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    pub theta_h_max: f64,
    pub theta_h_min: f64,
    pub theta_k_min: f64,
    pub theta_k_max: f64,
    pub freq: f64,
    pub phi: f64,
    pub alpha: [f64; 4],
}

impl GaitParams {
    /// Gait with the fixed hip/knee extremes and the given free parameters.
    pub fn new(theta_h_min: f64, theta_k_max: f64, freq: f64, phi: f64, alpha: [f64; 4]) -> Self {
        Self {
            theta_h_max: THETA_H_MAX_DEG.to_radians(),
            theta_h_min,
            theta_k_min: THETA_K_MIN_DEG.to_radians(),
            theta_k_max,
            freq,
            phi,
            alpha,
        }
    }

    /// A gait with every joint held at its "max" hip / "min" knee end.
    pub fn stationary(freq: f64) -> Self {
        let mut g = Self::new(0.0, 0.0, freq, PHI_OPT, [0.0; 4]);
        g.theta_h_min = g.theta_h_max;
        g.theta_k_max = g.theta_k_min;
        g
    }

    /// Same gait with left and right phase offsets exchanged.
    pub fn mirrored(&self) -> Self {
        let mut g = *self;
        for leg in Leg::ALL {
            g.alpha[leg.index()] = self.alpha[leg.mirror().index()];
        }
        g
    }

    pub fn period(&self) -> f64 {
        1.0 / self.freq
    }

    /// Checks the data-collection grid ranges.
    pub fn validate_collection(&self) -> Result<()> {
        self.check_common()?;
        check_range("freq", self.freq, ranges::FREQ_COLLECTION, "Hz")?;
        let (lo, hi) = ranges::PHI_COLLECTION;
        if !(self.phi >= lo - 1e-12 && self.phi <= hi + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "phi = {:.4} rad outside [pi/3, 5pi/3]",
                self.phi
            )));
        }
        Ok(())
    }

    /// Checks the gait-optimization ranges.
    pub fn validate_optimization(&self) -> Result<()> {
        self.check_common()?;
        check_range("freq", self.freq, ranges::FREQ_OPTIMIZATION, "Hz")?;
        for (i, a) in self.alpha.iter().enumerate() {
            if !(*a >= 0.0 && *a < TAU) {
                return Err(Error::InvalidParameter(format!(
                    "alpha[{i}] = {a:.4} rad outside [0, 2pi)"
                )));
            }
        }
        Ok(())
    }

    fn check_common(&self) -> Result<()> {
        if !(self.freq.is_finite() && self.freq > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "freq must be positive, got {}",
                self.freq
            )));
        }
        check_range(
            "theta_h_min",
            self.theta_h_min.to_degrees(),
            ranges::THETA_H_MIN_DEG,
            "deg",
        )?;
        check_range(
            "theta_k_max",
            self.theta_k_max.to_degrees(),
            ranges::THETA_K_MAX_DEG,
            "deg",
        )
    }
}

fn check_range(name: &str, v: f64, (lo, hi): (f64, f64), unit: &str) -> Result<()> {
    // tolerate rounding from degree/radian conversions
    let eps = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
    if v.is_finite() && v >= lo - eps && v <= hi + eps {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {v:.6} {unit} outside [{lo}, {hi}] {unit}"
        )))
    }
}

/// Joint angles and rates of `leg` at time `t`.
pub fn gait_angles(g: &GaitParams, leg: Leg, t: f64) -> JointState {
    let omega = TAU * g.freq;
    let alpha = g.alpha[leg.index()];
    let amp_h = 0.5 * (g.theta_h_max - g.theta_h_min);
    let mid_h = 0.5 * (g.theta_h_max + g.theta_h_min);
    let amp_k = 0.5 * (g.theta_k_max - g.theta_k_min);
    let mid_k = 0.5 * (g.theta_k_max + g.theta_k_min);
    let ph = omega * t + alpha;
    let pk = ph + g.phi;
    JointState {
        theta_h: amp_h * ph.sin() + mid_h,
        theta_k: amp_k * pk.sin() + mid_k,
        dtheta_h: amp_h * omega * ph.cos(),
        dtheta_k: amp_k * omega * pk.cos(),
        t,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkagePose {
    pub a: Vector2<f64>,
    pub b: Vector2<f64>,
    pub c: Vector2<f64>,
    pub q: Vector2<f64>,
    /// Direction of the calf line C -> B (the web plane).
    pub web_angle: f64,
}

/// Unit normal of the web plane.
pub fn web_normal(web_angle: f64) -> Vector2<f64> {
    Vector2::new(-web_angle.sin(), web_angle.cos())
}

/// Both intersections of circle(A, r_a) and circle(C, r_c), or `None` when
/// they do not meet.
pub fn circle_intersections(
    a: Vector2<f64>,
    r_a: f64,
    c: Vector2<f64>,
    r_c: f64,
) -> Option<(Vector2<f64>, Vector2<f64>)> {
    let d_vec = c - a;
    let d = d_vec.norm();
    // rounding slack so tangent configurations stay solvable
    let slack = 1e-12 * (r_a + r_c);
    if d == 0.0 || d > r_a + r_c + slack || d < (r_a - r_c).abs() - slack {
        return None;
    }
    let u = d_vec / d;
    let along = (r_a * r_a - r_c * r_c + d * d) / (2.0 * d);
    let h = (r_a * r_a - along * along).max(0.0).sqrt();
    let base = a + u * along;
    let perp = Vector2::new(-u.y, u.x);
    Some((base + perp * h, base - perp * h))
}

/// Resolves the linkage for a joint state.
pub fn solve_linkage(geom: &LinkageGeometry, j: &JointState) -> Result<LinkagePose> {
    let a = Vector2::new(j.theta_h.cos(), j.theta_h.sin()) * geom.len_oa;
    let c = Vector2::new(j.theta_k.cos(), j.theta_k.sin()) * geom.len_oc;
    let (r_a, r_c) = (geom.len_oc, geom.len_oa);
    let (p1, p2) = circle_intersections(a, r_a, c, r_c).ok_or_else(|| Error::LinkageInfeasible {
        t: j.t,
        distance: (c - a).norm(),
        min: (r_a - r_c).abs(),
        max: r_a + r_c,
    })?;
    let b = select_branch(geom.branch, a, c, p1, p2);
    let calf = b - c;
    let q = b + calf * geom.len_bq_ratio;
    Ok(LinkagePose {
        a,
        b,
        c,
        q,
        web_angle: calf.y.atan2(calf.x),
    })
}

/// Picks one of two circle intersections according to `rule`.
pub fn select_branch(
    rule: BranchRule,
    a: Vector2<f64>,
    c: Vector2<f64>,
    p1: Vector2<f64>,
    p2: Vector2<f64>,
) -> Vector2<f64> {
    match rule {
        BranchRule::UpperY => {
            if p1.y >= p2.y {
                p1
            } else {
                p2
            }
        }
        BranchRule::AwayFromPivot => {
            let ac = c - a;
            let side = |p: Vector2<f64>| ac.perp(&(p - a));
            // side of O relative to line AC, with O at the origin
            let pivot = ac.perp(&(-a));
            if side(p1) * pivot <= side(p2) * pivot {
                p1
            } else {
                p2
            }
        }
    }
}

/// Web midpoint kinematics at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WebState {
    pub q_pos: Vector2<f64>,
    pub q_vel: Vector2<f64>,
    pub q_acc: Vector2<f64>,
    pub web_angle: f64,
    pub t: f64,
}

/// Web state series sampled at `t0 + i*dt`. Interior velocities and
/// accelerations use central differences; the two end samples use
/// second-order one-sided stencils.
pub fn web_state_series(
    geom: &LinkageGeometry,
    g: &GaitParams,
    leg: Leg,
    t0: f64,
    dt: f64,
    n: usize,
) -> Result<Vec<WebState>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let poses = (0..n)
        .map(|i| {
            let t = t0 + i as f64 * dt;
            solve_linkage(geom, &gait_angles(g, leg, t)).map(|p| (t, p))
        })
        .collect::<Result<Vec<_>>>()?;
    let q: Vec<Vector2<f64>> = poses.iter().map(|(_, p)| p.q).collect();
    let vel = central_first(&q, dt);
    let acc = central_second(&q, dt);
    Ok(poses
        .iter()
        .enumerate()
        .map(|(i, (t, p))| WebState {
            q_pos: p.q,
            q_vel: vel[i],
            q_acc: acc[i],
            web_angle: p.web_angle,
            t: *t,
        })
        .collect())
}

/// Web state at `t` from central differences over `t - dt`, `t`, `t + dt`.
/// Agrees with the interior samples of [`web_state_series`].
pub fn web_state_at(
    geom: &LinkageGeometry,
    g: &GaitParams,
    leg: Leg,
    t: f64,
    dt: f64,
) -> Result<WebState> {
    let prev = solve_linkage(geom, &gait_angles(g, leg, t - dt))?;
    let cur = solve_linkage(geom, &gait_angles(g, leg, t))?;
    let next = solve_linkage(geom, &gait_angles(g, leg, t + dt))?;
    Ok(WebState {
        q_pos: cur.q,
        q_vel: (next.q - prev.q) / (2.0 * dt),
        q_acc: (next.q - cur.q * 2.0 + prev.q) / (dt * dt),
        web_angle: cur.web_angle,
        t,
    })
}

fn central_first(x: &[Vector2<f64>], dt: f64) -> Vec<Vector2<f64>> {
    let n = x.len();
    let mut out = vec![Vector2::zeros(); n];
    match n {
        0 | 1 => {}
        2 => {
            let v = (x[1] - x[0]) / dt;
            out[0] = v;
            out[1] = v;
        }
        _ => {
            for i in 1..n - 1 {
                out[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
            }
            out[0] = (x[0] * -3.0 + x[1] * 4.0 - x[2]) / (2.0 * dt);
            out[n - 1] = (x[n - 1] * 3.0 - x[n - 2] * 4.0 + x[n - 3]) / (2.0 * dt);
        }
    }
    out
}

fn central_second(x: &[Vector2<f64>], dt: f64) -> Vec<Vector2<f64>> {
    let n = x.len();
    let mut out = vec![Vector2::zeros(); n];
    if n < 3 {
        return out;
    }
    let dt2 = dt * dt;
    for i in 1..n - 1 {
        out[i] = (x[i + 1] - x[i] * 2.0 + x[i - 1]) / dt2;
    }
    if n >= 4 {
        out[0] = (x[0] * 2.0 - x[1] * 5.0 + x[2] * 4.0 - x[3]) / dt2;
        out[n - 1] = (x[n - 1] * 2.0 - x[n - 2] * 5.0 + x[n - 3] * 4.0 - x[n - 4]) / dt2;
    } else {
        out[0] = out[1];
        out[n - 1] = out[1];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn paddle(theta_h_min_deg: f64, theta_k_max_deg: f64, freq: f64) -> GaitParams {
        GaitParams::new(
            theta_h_min_deg.to_radians(),
            theta_k_max_deg.to_radians(),
            freq,
            PHI_OPT,
            [0.0; 4],
        )
    }

    #[test]
    fn hip_midpoint_at_phase_zero() {
        let g = paddle(10.0, -20.0, 0.4);
        let j = gait_angles(&g, Leg::LF, 0.0);
        assert_abs_diff_eq!(j.theta_h.to_degrees(), -45.0, epsilon = 1e-12);
    }

    #[test]
    fn hip_peak_at_quarter_period() {
        let g = paddle(10.0, -20.0, 0.4);
        let j = gait_angles(&g, Leg::LF, 1.0 / (4.0 * g.freq));
        assert_abs_diff_eq!(j.theta_h.to_degrees(), -100.0, epsilon = 1e-12);
    }

    #[test]
    fn knee_angle_matches_hand_evaluation() {
        // theta_K = (-20 - 80)/2 * sin(2*pi*0.3*0.5 + pi/3) + (-20 + 80)/2
        //         = -50 * sin(0.3*pi + pi/3) + 30, evaluated independently
        let expected_deg = -50.0 * (0.3 * PI + PI / 3.0).sin() + 30.0;
        let frozen = -15.677_272_882_130_048; // python: -50*sin(0.3*pi + pi/3) + 30
        assert_abs_diff_eq!(expected_deg, frozen, epsilon = 1e-10);

        let g = GaitParams::new(10f64.to_radians(), -20f64.to_radians(), 0.3, PI / 3.0, [0.0; 4]);
        let j = gait_angles(&g, Leg::RH, 0.5);
        assert_abs_diff_eq!(j.theta_k.to_degrees(), frozen, epsilon = 1e-10);
    }

    #[test]
    fn rates_match_finite_differences() {
        let g = GaitParams::new(-30f64.to_radians(), -60f64.to_radians(), 0.55, 1.3, [0.3, 1.1, 2.0, 4.0]);
        let h = 1e-6;
        for leg in Leg::ALL {
            for &t in &[0.0, 0.37, 1.9] {
                let j = gait_angles(&g, leg, t);
                let jp = gait_angles(&g, leg, t + h);
                let jm = gait_angles(&g, leg, t - h);
                assert_abs_diff_eq!(j.dtheta_h, (jp.theta_h - jm.theta_h) / (2.0 * h), epsilon = 1e-7);
                assert_abs_diff_eq!(j.dtheta_k, (jp.theta_k - jm.theta_k) / (2.0 * h), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn parallelogram_branch_is_a_plus_c() {
        let geom = LinkageGeometry::default();
        for (h, k) in [(-100.0, 80.0), (-45.0, -20.0), (10.0, -80.0), (-70.0, 30.0)] {
            let j = JointState {
                theta_h: f64::to_radians(h),
                theta_k: f64::to_radians(k),
                dtheta_h: 0.0,
                dtheta_k: 0.0,
                t: 0.0,
            };
            let p = solve_linkage(&geom, &j).unwrap();
            assert_abs_diff_eq!((p.b - (p.a + p.c)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn q_lies_on_calf_extension() {
        let geom = LinkageGeometry::default();
        let j = gait_angles(&paddle(-10.0, -40.0, 0.5), Leg::LF, 0.3);
        let p = solve_linkage(&geom, &j).unwrap();
        assert_abs_diff_eq!((p.q - p.b).norm(), 0.0875, epsilon = 1e-12);
        let cb = p.b - p.c;
        let bq = p.q - p.b;
        assert_abs_diff_eq!(cb.perp(&bq), 0.0, epsilon = 1e-15);
        assert!(cb.dot(&bq) > 0.0);
    }

    #[test]
    fn collinear_links_are_tangent_not_infeasible() {
        // theta_H == theta_K puts A and C on one ray: |AC| = |OC| - |OA|.
        let geom = LinkageGeometry::default();
        for deg in [-80.0f64, -33.3, 0.0, 10.0] {
            let th = deg.to_radians();
            let j = JointState { theta_h: th, theta_k: th, dtheta_h: 0.0, dtheta_k: 0.0, t: 0.0 };
            let p = solve_linkage(&geom, &j).unwrap();
            assert_abs_diff_eq!((p.b - p.a).norm(), geom.len_oc, epsilon = 1e-9);
        }
    }

    #[test]
    fn separated_circles_do_not_intersect() {
        let none = circle_intersections(Vector2::new(0.0, 0.0), 0.1, Vector2::new(0.5, 0.0), 0.1);
        assert!(none.is_none());
        let nested = circle_intersections(Vector2::new(0.0, 0.0), 0.5, Vector2::new(0.01, 0.0), 0.1);
        assert!(nested.is_none());
    }

    #[test]
    fn stationary_joints_have_zero_rates() {
        let geom = LinkageGeometry::default();
        let g = GaitParams::stationary(0.5);
        let series = web_state_series(&geom, &g, Leg::LF, 0.0, 1.0 / 65.0, 50).unwrap();
        for w in series {
            assert_eq!(w.q_vel.norm(), 0.0);
            assert_eq!(w.q_acc.norm(), 0.0);
        }
    }

    #[test]
    fn finite_difference_speed_on_circular_motion() {
        // Q moving on a circle of radius r at angular rate w: |v| = w r exactly.
        let (r, w) = (0.2, 3.0);
        for dt in [1e-2, 5e-3] {
            let q: Vec<Vector2<f64>> = (0..40)
                .map(|i| {
                    let t = i as f64 * dt;
                    Vector2::new(r * (w * t).cos(), r * (w * t).sin())
                })
                .collect();
            let v = central_first(&q, dt);
            let a = central_second(&q, dt);
            for i in 1..39 {
                // central difference error is r*w^3*dt^2/6
                let bound = r * w.powi(3) * dt * dt / 6.0 * 1.01;
                assert!((v[i].norm() - w * r).abs() <= bound);
                assert!((a[i].norm() - w * w * r).abs() <= r * w.powi(4) * dt * dt / 12.0 * 1.01);
            }
        }
    }

    #[test]
    fn web_velocity_is_periodic_over_cycles() {
        let geom = LinkageGeometry::default();
        // 65 / 0.65 = 100 samples per cycle
        let g = paddle(-20.0, -50.0, 0.65);
        let dt = 1.0 / 65.0;
        let series = web_state_series(&geom, &g, Leg::LF, 0.0, dt, 302).unwrap();
        let max_speed = |lo: usize, hi: usize| {
            series[lo..hi].iter().map(|w| w.q_vel.norm()).fold(0.0, f64::max)
        };
        let first = max_speed(1, 101);
        let second = max_speed(101, 201);
        assert!(first > 0.1);
        assert_abs_diff_eq!(first, second, epsilon = 1e-6);
        for i in 1..200 {
            assert_abs_diff_eq!(series[i].q_vel.x, series[i + 100].q_vel.x, epsilon = 1e-6);
        }
    }

    #[test]
    fn point_evaluation_matches_series_interior() {
        let geom = LinkageGeometry::default();
        let g = paddle(-50.0, -80.0, 0.6);
        let dt = 1.0 / 65.0;
        let series = web_state_series(&geom, &g, Leg::RF, 0.0, dt, 20).unwrap();
        for (i, w) in series.iter().enumerate().skip(1).take(18) {
            let p = web_state_at(&geom, &g, Leg::RF, i as f64 * dt, dt).unwrap();
            assert_abs_diff_eq!((p.q_vel - w.q_vel).norm(), 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!((p.q_acc - w.q_acc).norm(), 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn table_ranges_are_enforced() {
        let ok = paddle(-50.0, -80.0, 0.6);
        assert!(ok.validate_optimization().is_ok());
        assert!(ok.validate_collection().is_ok());
        let bad = paddle(20.0, -40.0, 0.4);
        let msg = bad.validate_optimization().unwrap_err().to_string();
        assert!(msg.contains("[-50, 10]"), "{msg}");
        let slow = paddle(0.0, -40.0, 0.25);
        assert!(slow.validate_optimization().is_ok());
        assert!(slow.validate_collection().is_err());
    }
}
