use std::ops::{Add, AddAssign, Neg, Sub};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Channel names in the order used by logs and the surrogate's output.
pub const CHANNELS: [&str; 6] = ["tau_x", "tau_y", "tau_z", "f_x", "f_y", "f_z"];

/// Index of each channel in [`Wrench::to_channels`].
pub mod channel {
    pub const TAU_X: usize = 0;
    pub const TAU_Y: usize = 1;
    pub const TAU_Z: usize = 2;
    pub const F_X: usize = 3;
    pub const F_Y: usize = 4;
    pub const F_Z: usize = 5;
}

/// Force and torque pair. The frame is whatever the caller says it is.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self { force, torque }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `[tau_x, tau_y, tau_z, f_x, f_y, f_z]`
    pub fn to_channels(&self) -> [f64; 6] {
        [
            self.torque.x,
            self.torque.y,
            self.torque.z,
            self.force.x,
            self.force.y,
            self.force.z,
        ]
    }

    pub fn from_channels(c: [f64; 6]) -> Self {
        Self {
            force: Vector3::new(c[3], c[4], c[5]),
            torque: Vector3::new(c[0], c[1], c[2]),
        }
    }

    /// Reflection through the body's sagittal plane (x -> -x). Force is a
    /// polar vector and torque an axial one, so the flipped components differ.
    pub fn mirror_x(&self) -> Self {
        Self {
            force: Vector3::new(-self.force.x, self.force.y, self.force.z),
            torque: Vector3::new(self.torque.x, -self.torque.y, -self.torque.z),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| v.is_finite())
    }
}

impl Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        Wrench {
            force: self.force + rhs.force,
            torque: self.torque + rhs.torque,
        }
    }
}

impl AddAssign for Wrench {
    fn add_assign(&mut self, rhs: Wrench) {
        self.force += rhs.force;
        self.torque += rhs.torque;
    }
}

impl Sub for Wrench {
    type Output = Wrench;
    fn sub(self, rhs: Wrench) -> Wrench {
        Wrench {
            force: self.force - rhs.force,
            torque: self.torque - rhs.torque,
        }
    }
}

impl Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        Wrench {
            force: -self.force,
            torque: -self.torque,
        }
    }
}

impl std::iter::Sum for Wrench {
    fn sum<I: Iterator<Item = Wrench>>(iter: I) -> Wrench {
        iter.fold(Wrench::zero(), |a, b| a + b)
    }
}
