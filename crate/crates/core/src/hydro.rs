//! Quasi-steady empirical force model for a paddling web, and the quadratic
//! drag law of the body.
//!
//! Sign convention: every leg-force term is the load the water puts on the
//! web. Relative kinematics are taken as fluid minus web, so drag points along
//! the relative flow, and the added-mass and web-inertia terms both oppose the
//! web's acceleration.

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{web_normal, WebState};
use crate::wrench::Wrench;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EfParams {
    /// Water density, kg/m^3.
    pub rho_water: f64,
    /// Characteristic half-side of the web, m.
    pub a: f64,
    /// Normal drag coefficient of the web.
    pub c_r: f64,
    pub m_web: f64,
}

impl Default for EfParams {
    fn default() -> Self {
        Self {
            rho_water: 1000.0,
            a: 0.03,
            c_r: 0.7,
            m_web: 0.010,
        }
    }
}

impl EfParams {
    /// Reference area `(2a)^2`.
    pub fn reference_area(&self) -> f64 {
        (2.0 * self.a).powi(2)
    }

    /// Added-mass coefficient `2 pi rho a^3`.
    pub fn added_mass(&self) -> f64 {
        2.0 * PI * self.rho_water * self.a.powi(3)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rho_water", self.rho_water),
            ("a", self.a),
            ("c_r", self.c_r),
            ("m_web", self.m_web),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "ef.{name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Free-stream flow seen by a leg, in the leg's kinematic plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConditions {
    pub v_flow: f64,
    pub direction: Vector2<f64>,
}

impl FlowConditions {
    pub fn new(v_flow: f64, direction: Vector2<f64>) -> Result<Self> {
        if !(v_flow >= 0.0) || !v_flow.is_finite() {
            return Err(Error::InvalidParameter(format!("V_flow must be >= 0, got {v_flow}")));
        }
        if ((direction.norm() - 1.0).abs()) > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "flow direction must be a unit vector, norm {}",
                direction.norm()
            )));
        }
        Ok(Self { v_flow, direction })
    }

    /// Tunnel flow streaming from the leg's front to its back.
    pub fn tunnel(v_flow: f64) -> Self {
        Self {
            v_flow: v_flow.max(0.0),
            direction: Vector2::new(-1.0, 0.0),
        }
    }

    /// Still water seen from a body moving forward at `speed` (may be negative).
    pub fn from_forward_speed(speed: f64) -> Self {
        let dir = if speed < 0.0 { 1.0 } else { -1.0 };
        Self {
            v_flow: speed.abs(),
            direction: Vector2::new(dir, 0.0),
        }
    }

    pub fn velocity(&self) -> Vector2<f64> {
        self.direction * self.v_flow
    }
}

/// Breakdown of the empirical leg force, all along the web normal (N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfForce {
    pub added_mass: f64,
    pub drag: f64,
    pub inertial: f64,
    pub total: f64,
    /// Normal component of the relative flow velocity.
    pub v_rel_normal: f64,
    /// Leg-frame wrench about the hip pivot.
    pub wrench: Wrench,
}

/// Empirical (added mass + drag + web inertia) force on one web.
///
/// The leg frame maps kinematic X to `y` and kinematic Y to `z`, so the web
/// load lands in `(f_y, f_z)` and its moment about the hip in `tau_x`.
pub fn ef_leg_force(p: &EfParams, w: &WebState, flow: &FlowConditions) -> EfForce {
    let n = web_normal(w.web_angle);
    let v_rel = n.dot(&(flow.velocity() - w.q_vel));
    // steady free stream: the relative acceleration is the web's, negated
    let a_rel = -n.dot(&w.q_acc);

    let added_mass = p.added_mass() * a_rel;
    let drag = 0.5 * p.rho_water * p.reference_area() * p.c_r * v_rel.abs() * v_rel;
    let inertial = p.m_web * a_rel;
    let total = added_mass + drag + inertial;

    let f_y = total * n.x;
    let f_z = total * n.y;
    let tau_x = w.q_pos.x * f_z - w.q_pos.y * f_y;
    EfForce {
        added_mass,
        drag,
        inertial,
        total,
        v_rel_normal: v_rel,
        wrench: Wrench::new(Vector3::new(0.0, f_y, f_z), Vector3::new(tau_x, 0.0, 0.0)),
    }
}

/// `c2 v^2 + c1 v + c0`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quadratic {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl Quadratic {
    pub fn eval(&self, v: f64) -> f64 {
        self.c2 * v * v + self.c1 * v + self.c0
    }
}

/// Towing-tank drag fit of the body, with a smooth fade to zero at rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BodyDrag {
    /// Forward (body y) drag magnitude as a function of forward speed.
    pub forward: Quadratic,
    /// Lateral (body x) drag magnitude as a function of lateral speed.
    pub lateral: Quadratic,
    /// Speed below which the fitted magnitude is faded out.
    pub rest_speed: f64,
}

impl Default for BodyDrag {
    fn default() -> Self {
        Self {
            forward: Quadratic {
                c2: 9.997,
                c1: -0.132,
                c0: 0.334,
            },
            lateral: Quadratic {
                c2: 15.571,
                c1: 0.937,
                c0: 0.055,
            },
            rest_speed: 0.02,
        }
    }
}

impl BodyDrag {
    /// Fitted magnitudes `(|F_dx|, |F_dy|)` at speed magnitudes `|v_x|`, `|v_y|`.
    pub fn magnitudes(&self, v_x: f64, v_y: f64) -> (f64, f64) {
        (self.lateral.eval(v_x.abs()), self.forward.eval(v_y.abs()))
    }

    /// Drag force `(F_dx, F_dy)` opposing the body-frame velocity.
    pub fn force(&self, v_x: f64, v_y: f64) -> (f64, f64) {
        let (mx, my) = self.magnitudes(v_x, v_y);
        (
            -v_x.signum() * mx * self.fade(v_x),
            -v_y.signum() * my * self.fade(v_y),
        )
    }

    fn fade(&self, v: f64) -> f64 {
        if v == 0.0 {
            0.0
        } else {
            smoothstep(v.abs() / self.rest_speed)
        }
    }
}

/// Default body drag evaluated at body-frame velocity `(v_x, v_y)`.
pub fn body_drag(v_x: f64, v_y: f64) -> (f64, f64) {
    BodyDrag::default().force(v_x, v_y)
}

/// Cubic Hermite ramp from 0 at `x <= 0` to 1 at `x >= 1`.
pub fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}
