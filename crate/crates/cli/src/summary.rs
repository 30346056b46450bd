//! Scalar summaries of a simulated run: how far, how long, how straight, and
//! for turns the radius of the best-fit circle.

use aquaped::dynamics::{Mode, ModelTag, Trajectory};
use aquaped::optim::{evaluate_objectives, Objectives};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::config::GaitSpec;

/// Spacing of the forward stations where lateral deviation is sampled.
pub const STATION_SPACING: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub y: f64,
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub model_tag: ModelTag,
    pub gait: GaitSpec,
    pub finished: bool,
    pub t_final: f64,
    pub x_final: f64,
    pub y_final: f64,
    /// Straight-line displacement from the start.
    pub distance: f64,
    pub path_length: f64,
    pub yaw_final: f64,
    pub objectives: Objectives,
    /// Lateral offset where the path first reaches each forward station.
    pub stations: Vec<Station>,
    /// Mean absolute lateral offset over the stations reached.
    pub mae_x: Option<f64>,
    /// Best-fit circle of a turning path.
    pub circle: Option<Circle>,
}

impl RunSummary {
    pub fn of(traj: &Trajectory, finish_distance: f64) -> Self {
        let s = traj.final_state();
        let stations = stations(traj, finish_distance);
        let mae_x = (!stations.is_empty())
            .then(|| stations.iter().map(|p| p.x.abs()).sum::<f64>() / stations.len() as f64);
        let circle = match traj.mode {
            Mode::Turn => fit_circle(&traj.states.iter().map(|s| (s.x, s.y)).collect::<Vec<_>>()),
            Mode::Straight => None,
        };
        Self {
            mode: traj.mode,
            model_tag: traj.model_tag,
            gait: GaitSpec::from_gait(&traj.gait),
            finished: traj.finished,
            t_final: s.t,
            x_final: s.x,
            y_final: s.y,
            distance: s.x.hypot(s.y),
            path_length: traj.path_length(),
            yaw_final: s.yaw,
            objectives: evaluate_objectives(traj, traj.mode),
            stations,
            mae_x,
            circle,
        }
    }
}

/// Stations at `0, 0.25, ...` up to `finish`, each interpolated linearly at
/// the first sample pair that crosses it. Unreached stations are omitted.
pub fn stations(traj: &Trajectory, finish: f64) -> Vec<Station> {
    let count = (finish / STATION_SPACING + 1e-9).floor() as usize + 1;
    let mut out = Vec::new();
    for k in 0..count {
        let y = k as f64 * STATION_SPACING;
        let st = &traj.states;
        if st[0].y >= y {
            out.push(Station { y, x: st[0].x });
            continue;
        }
        match st.windows(2).find(|p| p[0].y < y && p[1].y >= y) {
            Some(p) => {
                let u = (y - p[0].y) / (p[1].y - p[0].y);
                out.push(Station { y, x: p[0].x + u * (p[1].x - p[0].x) });
            }
            None => break,
        }
    }
    out
}

/// Algebraic least-squares circle: minimizes the residual of
/// `x^2 + y^2 + D x + E y + F = 0`. `None` for fewer than three points or a
/// degenerate (collinear) set.
pub fn fit_circle(pts: &[(f64, f64)]) -> Option<Circle> {
    if pts.len() < 3 {
        return None;
    }
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    for &(x, y) in pts {
        let row = Vector3::new(x, y, 1.0);
        ata += row * row.transpose();
        atb += row * -(x * x + y * y);
    }
    let sol = ata.lu().solve(&atb)?;
    let (cx, cy) = (-sol[0] / 2.0, -sol[1] / 2.0);
    let r2 = cx * cx + cy * cy - sol[2];
    (r2 > 0.0 && r2.is_finite()).then(|| Circle { cx, cy, radius: r2.sqrt() })
}
