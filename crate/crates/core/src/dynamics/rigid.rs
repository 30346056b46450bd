use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydro::BodyDrag;
use crate::kinematics::Leg;
use crate::wrench::Wrench;

const UNIT_TOL: f64 = 1e-9;

/// Rigid-body and integration settings. Angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BodyConfig {
    pub mass: f64,
    pub i_yaw: f64,
    /// Leg mounts relative to the metacenter, [`Leg::ALL`] order.
    pub mounts: [[f64; 3]; 4],
    /// Abduction axes, unit length with zero y component.
    pub haa_axes: [[f64; 3]; 4],
    pub haa_angles: [f64; 4],
    pub dt: f64,
    pub t_max: f64,
    pub finish_distance: f64,
    pub drag: BodyDrag,
}

impl Default for BodyConfig {
    fn default() -> Self {
        let front = 30f64.to_radians();
        Self {
            mass: 2.5,
            i_yaw: 0.05,
            mounts: [[-0.1, 0.12, 0.0], [0.1, 0.12, 0.0], [-0.1, -0.12, 0.0], [0.1, -0.12, 0.0]],
            haa_axes: [[1.0, 0.0, 0.0]; 4],
            haa_angles: [front, front, 0.0, 0.0],
            dt: 1.0 / 65.0,
            t_max: 60.0,
            finish_distance: 2.0,
            drag: BodyDrag::default(),
        }
    }
}

impl BodyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.i_yaw > 0.0) {
            return Err(Error::InvalidParameter("mass and yaw inertia must be positive".into()));
        }
        if !(self.dt > 0.0 && self.t_max > 0.0 && self.finish_distance > 0.0) {
            return Err(Error::InvalidParameter("dt, t_max and finish_distance must be positive".into()));
        }
        for axis in &self.haa_axes {
            let a = Vector3::from(*axis);
            check_axis(&a)?;
            if axis[1] != 0.0 {
                return Err(Error::InvalidParameter(format!("abduction axis {axis:?} must have zero y component")));
            }
        }
        if self.mounts.iter().flatten().chain(&self.haa_angles).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite leg mount or angle".into()));
        }
        Ok(())
    }

    /// Steps until `t_max`.
    pub fn max_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn leg(&self, leg: Leg) -> (Vector3<f64>, Vector3<f64>, f64) {
        let i = leg.index();
        (Vector3::from(self.mounts[i]), Vector3::from(self.haa_axes[i]), self.haa_angles[i])
    }
}

fn check_axis(axis: &Vector3<f64>) -> Result<()> {
    let n = axis.norm();
    if (n - 1.0).abs() > UNIT_TOL || !n.is_finite() {
        return Err(Error::AxisNotUnit(n));
    }
    Ok(())
}

/// `I + sin(a) K + (1 - cos(a)) K^2`, `K` the cross-product matrix of `axis`.
pub fn rodrigues(axis: &Vector3<f64>, angle: f64) -> Result<Matrix3<f64>> {
    check_axis(axis)?;
    let k = axis.cross_matrix();
    Ok(Matrix3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos()))
}

/// Rotates force and torque about `axis`. A zero angle returns the input
/// untouched.
pub fn rotate_leg_wrench(w: &Wrench, axis: &Vector3<f64>, angle: f64) -> Result<Wrench> {
    if angle == 0.0 {
        check_axis(axis)?;
        return Ok(*w);
    }
    let r = rodrigues(axis, angle)?;
    Ok(Wrench::new(r * w.force, r * w.torque))
}

/// Leg wrench moved to the metacenter: force rotated, torque rotated plus the
/// moment of the rotated force about the metacenter.
pub fn metacenter_wrench(w: &Wrench, mount: &Vector3<f64>, axis: &Vector3<f64>, angle: f64) -> Result<Wrench> {
    let r = rotate_leg_wrench(w, axis, angle)?;
    if *mount == Vector3::zeros() {
        return Ok(r);
    }
    Ok(Wrench::new(r.force, mount.cross(&r.force) + r.torque))
}

/// Sum of the four metacenter wrenches plus body drag at body-frame velocity
/// `(v_x, v_y)`. Legs are added in left/right pairs so that reflecting the
/// inputs reflects the sum bit for bit.
pub fn total_wrench(legs: &[Wrench; 4], v_body: (f64, f64), drag: &BodyDrag) -> Wrench {
    let front = legs[Leg::LF.index()] + legs[Leg::RF.index()];
    let hind = legs[Leg::LH.index()] + legs[Leg::RH.index()];
    let (dx, dy) = drag.force(v_body.0, v_body.1);
    front + hind + Wrench::new(Vector3::new(dx, dy, 0.0), Vector3::zeros())
}

/// Planar body state in the world frame. Yaw is counter-clockwise about `z`;
/// at zero yaw the body's forward axis is world `+y`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub yaw: f64,
    pub yaw_rate: f64,
    pub t: f64,
}

impl SimState {
    /// World velocity expressed in the body frame.
    pub fn body_velocity(&self) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        (c * self.vx + s * self.vy, -s * self.vx + c * self.vy)
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.vx, self.vy, self.yaw, self.yaw_rate, self.t].iter().all(|v| v.is_finite())
    }

    /// Reflection through the world `y` axis.
    pub fn mirrored(&self) -> Self {
        Self { x: -self.x, vx: -self.vx, yaw: -self.yaw, yaw_rate: -self.yaw_rate, ..*self }
    }
}

/// Body-frame planar force rotated into the world frame.
pub fn world_force(yaw: f64, f_body: (f64, f64)) -> (f64, f64) {
    let (s, c) = yaw.sin_cos();
    (c * f_body.0 - s * f_body.1, s * f_body.0 + c * f_body.1)
}

/// One explicit Euler step under the body-frame wrench `w`. Positions and
/// yaw advance with the velocities at the start of the step.
pub fn step(s: &SimState, w: &Wrench, cfg: &BodyConfig) -> Result<SimState> {
    let dt = cfg.dt;
    let yaw_acc = w.torque.z / cfg.i_yaw;
    let (fx, fy) = world_force(s.yaw, (w.force.x, w.force.y));
    let next = SimState {
        x: s.x + s.vx * dt,
        y: s.y + s.vy * dt,
        vx: s.vx + fx / cfg.mass * dt,
        vy: s.vy + fy / cfg.mass * dt,
        yaw: s.yaw + s.yaw_rate * dt,
        yaw_rate: s.yaw_rate + yaw_acc * dt,
        t: s.t + dt,
    };
    if !next.is_finite() || !w.is_finite() {
        return Err(Error::NonFiniteState { t: s.t });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Unit, UnitQuaternion};
    use proptest::prelude::*;

    fn unit(v: [f64; 3]) -> Vector3<f64> {
        Vector3::from(v).normalize()
    }

    #[test]
    fn zero_angle_is_identity_bit_for_bit() {
        let w = Wrench::from_channels([0.1, -0.2, 0.3, 1e-300, -7.0, 0.1 + 0.2]);
        assert_eq!(rotate_leg_wrench(&w, &unit([0.3, 0.0, 0.9]), 0.0).unwrap(), w);
        assert_eq!(metacenter_wrench(&w, &Vector3::zeros(), &Vector3::x(), 0.0).unwrap(), w);
    }

    #[test]
    fn quarter_turn_about_z() {
        let w = Wrench::new(Vector3::x(), Vector3::zeros());
        let r = rotate_leg_wrench(&w, &Vector3::z(), std::f64::consts::FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(r.force, Vector3::y(), epsilon = 1e-15);
    }

    #[test]
    fn non_unit_axis_rejected() {
        let w = Wrench::zero();
        assert!(matches!(rotate_leg_wrench(&w, &Vector3::new(1.0, 0.0, 0.1), 0.3), Err(Error::AxisNotUnit(_))));
        assert!(matches!(rotate_leg_wrench(&w, &Vector3::new(2.0, 0.0, 0.0), 0.0), Err(Error::AxisNotUnit(_))));
    }

    #[test]
    fn lever_arm_moment() {
        let w = Wrench::new(Vector3::y(), Vector3::zeros());
        let m = metacenter_wrench(&w, &Vector3::new(0.1, 0.0, 0.0), &Vector3::x(), 0.0).unwrap();
        assert_abs_diff_eq!(m.torque, Vector3::new(0.0, 0.0, 0.1), epsilon = 1e-15);
    }

    #[test]
    fn drag_only_at_rest_is_zero() {
        let w = total_wrench(&[Wrench::zero(); 4], (0.0, 0.0), &BodyDrag::default());
        assert_eq!(w, Wrench::zero());
    }

    #[test]
    fn symmetric_legs_cancel_yaw() {
        let cfg = BodyConfig::default();
        let raw = Wrench::new(Vector3::new(0.0, 0.4, -0.2), Vector3::new(0.03, 0.0, 0.0));
        let legs: [Wrench; 4] = std::array::from_fn(|i| {
            let leg = Leg::ALL[i];
            let (p, a, ang) = cfg.leg(leg);
            let w = if leg.is_left() { raw.mirror_x() } else { raw };
            metacenter_wrench(&w, &p, &a, ang).unwrap()
        });
        let total = total_wrench(&legs, (0.0, 0.1), &cfg.drag);
        assert_eq!(total.torque.z, 0.0);
        assert_eq!(total.force.x, 0.0);
    }

    #[test]
    fn constant_torque_from_rest() {
        let cfg = BodyConfig { dt: 0.1, ..BodyConfig::default() };
        let w = Wrench::new(Vector3::zeros(), Vector3::new(0.0, 0.0, cfg.i_yaw));
        let mut s = SimState::default();
        for _ in 0..10 {
            s = step(&s, &w, &cfg).unwrap();
        }
        assert_abs_diff_eq!(s.yaw_rate, 1.0, epsilon = 1e-15);
        // yaw lags one step: dt^2 * n(n-1)/2
        assert_abs_diff_eq!(s.yaw, 0.01 * 45.0, epsilon = 1e-15);
    }

    #[test]
    fn constant_world_force_closed_form() {
        let cfg = BodyConfig::default();
        let w = Wrench::new(Vector3::new(0.0, cfg.mass, 0.0), Vector3::zeros());
        let mut s = SimState::default();
        for n in 1..=200u32 {
            s = step(&s, &w, &cfg).unwrap();
            let n = f64::from(n);
            assert_abs_diff_eq!(s.y, cfg.dt * cfg.dt * n * (n - 1.0) / 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.vy, n * cfg.dt, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_wrench_coasts() {
        let cfg = BodyConfig::default();
        let mut s = SimState { vx: 0.1, vy: -0.3, yaw_rate: 0.2, ..SimState::default() };
        let v0 = s;
        for _ in 0..50 {
            s = step(&s, &Wrench::zero(), &cfg).unwrap();
        }
        assert_eq!((s.vx, s.vy, s.yaw_rate), (v0.vx, v0.vy, v0.yaw_rate));
        assert_abs_diff_eq!(s.x, 50.0 * cfg.dt * 0.1, epsilon = 1e-12);
    }

    #[test]
    fn divergence_reported() {
        let cfg = BodyConfig::default();
        let w = Wrench::new(Vector3::new(f64::INFINITY, 0.0, 0.0), Vector3::zeros());
        let s = SimState { t: 1.5, ..SimState::default() };
        assert_eq!(step(&s, &w, &cfg), Err(Error::NonFiniteState { t: 1.5 }));
    }

    proptest! {
        #[test]
        fn rotation_matches_quaternion(
            ax in prop::array::uniform3(-1.0f64..1.0),
            angle in -7.0f64..7.0,
            f in prop::array::uniform3(-10.0f64..10.0),
            tq in prop::array::uniform3(-1.0f64..1.0),
        ) {
            prop_assume!(Vector3::from(ax).norm() > 1e-3);
            let axis = unit(ax);
            let w = Wrench::new(Vector3::from(f), Vector3::from(tq));
            let r = rotate_leg_wrench(&w, &axis, angle).unwrap();
            let q = UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle);
            prop_assert!((r.force - q * w.force).norm() < 1e-12);
            prop_assert!((r.torque - q * w.torque).norm() < 1e-12);
            prop_assert!((r.force.norm() - w.force.norm()).abs() < 1e-12);
        }

        #[test]
        fn drag_never_pushes_along_velocity(vx in -0.5f64..0.5, vy in -0.5f64..0.5) {
            let w = total_wrench(&[Wrench::zero(); 4], (vx, vy), &BodyDrag::default());
            prop_assert!(w.force.x * vx + w.force.y * vy <= 0.0);
        }
    }
}
