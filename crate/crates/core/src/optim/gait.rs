//! Gait search problem: genes map to a gait, objectives come from a simulated
//! trajectory.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::nsga::{Objectives, Problem};
use crate::dynamics::{Mode, Simulator, Trajectory};
use crate::kinematics::{ranges, GaitParams, PHI_OPT};

/// Gene count: hip free extreme, knee free extreme, frequency, four phases.
pub const GENES: usize = 7;

/// Trajectories advanced together in one lockstep batch.
const SIM_BATCH: usize = 16;

/// Search box in radians / Hz. Phases span the closed interval and are
/// wrapped into `[0, 2pi)` when decoded.
pub fn gait_bounds() -> [(f64, f64); GENES] {
    let deg = |(a, b): (f64, f64)| (a.to_radians(), b.to_radians());
    [
        deg(ranges::THETA_H_MIN_DEG),
        deg(ranges::THETA_K_MAX_DEG),
        ranges::FREQ_OPTIMIZATION,
        (0.0, TAU),
        (0.0, TAU),
        (0.0, TAU),
        (0.0, TAU),
    ]
}

pub fn gait_from_genes(g: &[f64]) -> GaitParams {
    assert_eq!(g.len(), GENES, "gait genes");
    GaitParams::new(g[0], g[1], g[2], PHI_OPT, std::array::from_fn(|i| g[3 + i].rem_euclid(TAU)))
}

pub fn genes_from_gait(g: &GaitParams) -> Vec<f64> {
    let mut v = vec![g.theta_h_min, g.theta_k_max, g.freq];
    v.extend_from_slice(&g.alpha);
    v
}

/// Gaits drawn uniformly from the search box.
pub fn random_gaits(n: usize, seed: u64) -> Vec<GaitParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = gait_bounds();
    (0..n)
        .map(|_| {
            let genes: Vec<f64> = b.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
            gait_from_genes(&genes)
        })
        .collect()
}

/// Minimization objectives of a finished trajectory.
///
/// Straight: negative forward (world y) impulse, absolute final yaw, end time.
/// Turn: path length, distance of final yaw from one full turn in the
/// trajectory's own direction, end time.
pub fn evaluate_objectives(traj: &Trajectory, mode: Mode) -> Objectives {
    let yaw = traj.final_state().yaw;
    match mode {
        Mode::Straight => {
            let impulse: f64 = traj.world_forces().map(|(_, fy)| fy * traj.dt).sum();
            [-impulse, yaw.abs(), traj.t_final()]
        }
        Mode::Turn => [traj.path_length(), (yaw - TAU * traj.turn_direction).abs(), traj.t_final()],
    }
}

/// Gait search under one simulator and motion mode.
pub struct GaitProblem<'s, 'm> {
    sim: &'s Simulator<'m>,
    mode: Mode,
    bounds: [(f64, f64); GENES],
}

impl<'s, 'm> GaitProblem<'s, 'm> {
    pub fn new(sim: &'s Simulator<'m>, mode: Mode) -> Self {
        Self { sim, mode, bounds: gait_bounds() }
    }

    /// Simulates each gait; failures become `None`.
    pub fn simulate_all(&self, gaits: &[GaitParams]) -> Vec<Option<Trajectory>> {
        gaits
            .par_chunks(SIM_BATCH)
            .flat_map_iter(|chunk| self.sim.simulate_batch(chunk, self.mode).into_iter().map(|r| r.ok()))
            .collect()
    }
}

impl Problem for GaitProblem<'_, '_> {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    fn evaluate(&self, population: &[Vec<f64>]) -> Vec<Objectives> {
        let gaits: Vec<GaitParams> = population.iter().map(|g| gait_from_genes(g)).collect();
        self.simulate_all(&gaits)
            .into_iter()
            .map(|t| match t {
                Some(t) => evaluate_objectives(&t, self.mode),
                None => [f64::INFINITY; 3],
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{BodyConfig, ForceModel, ModelTag, SimState};
    use crate::hydro::EfParams;
    use crate::kinematics::LinkageGeometry;
    use crate::wrench::Wrench;
    use nalgebra::Vector3;

    fn synthetic(fy: f64, n: usize, dt: f64) -> Trajectory {
        let states = (0..=n).map(|k| SimState { t: k as f64 * dt, ..SimState::default() }).collect();
        let w = Wrench { force: Vector3::new(0.0, fy, 0.0), torque: Vector3::zeros() };
        Trajectory {
            gait: GaitParams::stationary(0.5),
            model_tag: ModelTag::Ef,
            mode: Mode::Straight,
            dt,
            states,
            wrenches: vec![w; n + 1],
            turn_direction: 1.0,
            finished: false,
        }
    }

    fn ef_sim() -> Simulator<'static> {
        let body = BodyConfig { t_max: 3.0, ..BodyConfig::default() };
        Simulator::new(LinkageGeometry::default(), body, ForceModel::Empirical(EfParams::default()))
    }

    #[test]
    fn constant_force_impulse() {
        let f = evaluate_objectives(&synthetic(1.0, 100, 0.1), Mode::Straight);
        assert!((f[0] + 10.0).abs() < 1e-12);
        assert_eq!(f[1], 0.0);
        assert!((f[2] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_gait_objectives() {
        let body = BodyConfig::default();
        let sim = Simulator::new(LinkageGeometry::default(), body, ForceModel::Empirical(EfParams::default()));
        let t = sim.simulate(&GaitParams::stationary(0.5), Mode::Straight).unwrap();
        let f = evaluate_objectives(&t, Mode::Straight);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[1], 0.0);
        assert!((f[2] - 60.0).abs() < 1e-9);
    }

    #[test]
    fn turn_objective_uses_path_length() {
        let sim = ef_sim();
        let g = gait_from_genes(&[-0.5, -1.0, 0.6, 0.0, 1.5, 3.0, 4.5]);
        let t = sim.simulate(&g, Mode::Turn).unwrap();
        let f = evaluate_objectives(&t, Mode::Turn);
        let csv = t.to_csv();
        let pts: Vec<(f64, f64)> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let c: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
                (c[1], c[2])
            })
            .collect();
        let len: f64 = pts.windows(2).map(|p| (p[1].0 - p[0].0).hypot(p[1].1 - p[0].1)).sum();
        assert!((f[0] - len).abs() < 1e-9 * (1.0 + len));
        assert!((f[1] - (t.final_state().yaw - TAU * t.turn_direction).abs()).abs() < 1e-12);
    }

    #[test]
    fn genes_round_trip_and_wrap() {
        let g = gait_from_genes(&[-0.5, -1.0, 0.4, TAU, 1.0, 2.0, 3.0]);
        assert_eq!(g.alpha[0], 0.0);
        g.validate_optimization().unwrap();
        assert_eq!(gait_from_genes(&genes_from_gait(&g)), g);
        for g in random_gaits(50, 9) {
            g.validate_optimization().unwrap();
        }
    }

    #[test]
    fn evaluation_matches_single_runs() {
        let sim = ef_sim();
        let p = GaitProblem::new(&sim, Mode::Straight);
        let genes: Vec<Vec<f64>> = random_gaits(20, 1).iter().map(genes_from_gait).collect();
        let batch = p.evaluate(&genes);
        for (g, o) in genes.iter().zip(&batch) {
            let t = sim.simulate(&gait_from_genes(g), Mode::Straight).unwrap();
            assert_eq!(&evaluate_objectives(&t, Mode::Straight), o);
        }
    }
}
