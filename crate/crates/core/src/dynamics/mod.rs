//! Planar swimming dynamics: leg wrenches moved to the metacenter, body drag,
//! explicit Euler integration of translation and yaw.

mod rigid;
mod sim;

pub use rigid::{
    metacenter_wrench, rodrigues, rotate_leg_wrench, step, total_wrench, world_force, BodyConfig, SimState,
};
pub use sim::{ForceModel, Mode, ModelTag, Simulator, Trajectory};
