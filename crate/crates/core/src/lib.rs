//! Simulation and optimization toolkit for a quadruped that swims by paddling
//! rigid webs on its legs.
//!
//! The pipeline runs from joint-level gait laws through linkage kinematics,
//! two interchangeable leg force models (an empirical quasi-steady formula and
//! a learned recurrent surrogate), planar rigid-body swimming dynamics, and
//! multi-objective gait search.

// Parameter checks are written `!(x > 0.0)` on purpose: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Objective and channel loops index several parallel arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod dynamics;
pub mod error;
pub mod hydro;
pub mod kinematics;
pub mod lstm;
pub mod optim;
pub mod wrench;

pub use error::{Error, Result};
pub use wrench::Wrench;
