use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::rigid::{metacenter_wrench, step, total_wrench, world_force, BodyConfig, SimState};
use crate::data::{INPUT_WIDTH, WINDOW_LEN};
use crate::error::{Error, Result};
use crate::hydro::{ef_leg_force, EfParams, FlowConditions};
use crate::kinematics::{gait_angles, web_state_at, GaitParams, Leg, LinkageGeometry};
use crate::lstm::LstmModel;
use crate::wrench::Wrench;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Straight,
    Turn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Ef,
    Lstm,
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelTag::Ef => "ef",
            ModelTag::Lstm => "lstm",
        })
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Straight => "straight",
            Mode::Turn => "turn",
        })
    }
}

/// Source of the leg-frame wrench.
#[derive(Debug, Clone, Copy)]
pub enum ForceModel<'a> {
    Empirical(EfParams),
    Lstm(&'a LstmModel),
}

impl ForceModel<'_> {
    pub fn tag(&self) -> ModelTag {
        match self {
            ForceModel::Empirical(_) => ModelTag::Ef,
            ForceModel::Lstm(_) => ModelTag::Lstm,
        }
    }
}

/// States from `t = 0` to termination and the body-frame total wrench at each
/// state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub gait: GaitParams,
    pub model_tag: ModelTag,
    pub mode: Mode,
    pub dt: f64,
    pub states: Vec<SimState>,
    pub wrenches: Vec<Wrench>,
    /// `+1` or `-1`: sign of the net yaw torque over the first gait cycle.
    pub turn_direction: f64,
    /// Whether the mode's goal was reached before `t_max`.
    pub finished: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &SimState {
        self.states.last().expect("a trajectory holds at least the initial state")
    }

    pub fn t_final(&self) -> f64 {
        self.final_state().t
    }

    /// World-frame planar force applied during each integrated step.
    pub fn world_forces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.states.len() - 1;
        self.states[..n]
            .iter()
            .zip(&self.wrenches)
            .map(|(s, w)| world_force(s.yaw, (w.force.x, w.force.y)))
    }

    /// Polyline length of the path.
    pub fn path_length(&self) -> f64 {
        self.states.windows(2).map(|p| (p[1].x - p[0].x).hypot(p[1].y - p[0].y)).sum()
    }

    pub const CSV_HEADER: &'static str = "t,x,y,vx,vy,theta_yaw,dtheta_yaw,tau_x,tau_y,tau_z,f_x,f_y,f_z";

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.states.len() * 160);
        s.push_str(Self::CSV_HEADER);
        s.push('\n');
        for (st, w) in self.states.iter().zip(&self.wrenches) {
            let c = w.to_channels();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                st.t, st.x, st.y, st.vx, st.vy, st.yaw, st.yaw_rate, c[0], c[1], c[2], c[3], c[4], c[5]
            );
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    pub geom: LinkageGeometry,
    pub body: BodyConfig,
    pub model: ForceModel<'a>,
}

/// Per-trajectory bookkeeping while a batch advances in lockstep.
struct Run {
    gait: GaitParams,
    state: SimState,
    windows: [[[f64; INPUT_WIDTH]; WINDOW_LEN]; 4],
    states: Vec<SimState>,
    wrenches: Vec<Wrench>,
    tz_first_cycle: f64,
    outcome: Option<Result<bool>>,
}

impl<'a> Simulator<'a> {
    pub fn new(geom: LinkageGeometry, body: BodyConfig, model: ForceModel<'a>) -> Self {
        Self { geom, body, model }
    }

    pub fn simulate(&self, gait: &GaitParams, mode: Mode) -> Result<Trajectory> {
        self.simulate_batch(std::slice::from_ref(gait), mode).pop().expect("one result per gait")
    }

    /// Simulates every gait; trajectories advance in lockstep so the
    /// surrogate sees one large batch per time step. Results are in input
    /// order and do not depend on which other gaits share the batch.
    pub fn simulate_batch(&self, gaits: &[GaitParams], mode: Mode) -> Vec<Result<Trajectory>> {
        if let Err(e) = self.geom.validate().and_then(|_| self.body.validate()) {
            return gaits.iter().map(|_| Err(e.clone())).collect();
        }
        let dt = self.body.dt;
        let max_steps = self.body.max_steps();
        let mut runs: Vec<Run> = gaits
            .iter()
            .map(|g| Run {
                gait: *g,
                state: SimState::default(),
                windows: [[[0.0; INPUT_WIDTH]; WINDOW_LEN]; 4],
                states: Vec::new(),
                wrenches: Vec::new(),
                tz_first_cycle: 0.0,
                outcome: (!(g.freq > 0.0 && g.freq.is_finite()))
                    .then(|| Err(Error::InvalidParameter(format!("gait frequency must be positive, got {}", g.freq)))),
            })
            .collect();

        for k in 0..=max_steps {
            let t = k as f64 * dt;
            let active: Vec<usize> = (0..runs.len()).filter(|&i| runs[i].outcome.is_none()).collect();
            if active.is_empty() {
                break;
            }
            let raw = self.leg_wrenches(&mut runs, &active, k, t);
            for (slot, &i) in active.iter().enumerate() {
                let run = &mut runs[i];
                let legs = match &raw[slot] {
                    Ok(l) => l,
                    Err(e) => {
                        run.outcome = Some(Err(e.clone()));
                        continue;
                    }
                };
                run.state.t = t;
                let placed: Result<Vec<Wrench>> = Leg::ALL
                    .iter()
                    .map(|&leg| {
                        let (p, axis, angle) = self.body.leg(leg);
                        let w = if leg.is_left() { legs[leg.index()].mirror_x() } else { legs[leg.index()] };
                        metacenter_wrench(&w, &p, &axis, angle)
                    })
                    .collect();
                let placed = match placed {
                    Ok(p) => [p[0], p[1], p[2], p[3]],
                    Err(e) => {
                        run.outcome = Some(Err(e));
                        continue;
                    }
                };
                let total = total_wrench(&placed, run.state.body_velocity(), &self.body.drag);
                run.states.push(run.state);
                run.wrenches.push(total);
                if t < run.gait.period() {
                    run.tz_first_cycle += total.torque.z;
                }

                let reached = match mode {
                    Mode::Straight => run.state.y >= self.body.finish_distance,
                    Mode::Turn => run.state.yaw.abs() >= TAU,
                };
                if reached || k == max_steps {
                    run.outcome = Some(Ok(reached));
                    continue;
                }
                match step(&run.state, &total, &self.body) {
                    Ok(next) => run.state = next,
                    Err(e) => run.outcome = Some(Err(e)),
                }
            }
        }

        let tag = self.model.tag();
        runs.into_iter()
            .map(|run| {
                let finished = run.outcome.unwrap_or(Ok(false))?;
                Ok(Trajectory {
                    gait: run.gait,
                    model_tag: tag,
                    mode,
                    dt,
                    states: run.states,
                    wrenches: run.wrenches,
                    turn_direction: if run.tz_first_cycle < 0.0 { -1.0 } else { 1.0 },
                    finished,
                })
            })
            .collect()
    }

    /// Leg-frame wrenches of every active run at step `k`.
    fn leg_wrenches(&self, runs: &mut [Run], active: &[usize], k: usize, t: f64) -> Vec<Result<[Wrench; 4]>> {
        let dt = self.body.dt;
        match self.model {
            ForceModel::Empirical(ef) => active
                .iter()
                .map(|&i| {
                    let run = &runs[i];
                    let flow = FlowConditions::from_forward_speed(run.state.body_velocity().1);
                    let mut out = [Wrench::zero(); 4];
                    for leg in Leg::ALL {
                        let web = web_state_at(&self.geom, &run.gait, leg, t, dt)?;
                        out[leg.index()] = ef_leg_force(&ef, &web, &flow).wrench;
                    }
                    Ok(out)
                })
                .collect(),
            ForceModel::Lstm(model) => {
                for &i in active {
                    let run = &mut runs[i];
                    let v = run.state.body_velocity().1;
                    for leg in Leg::ALL {
                        let j = gait_angles(&run.gait, leg, t);
                        let row = [v, j.theta_h, j.theta_k, j.dtheta_h, j.dtheta_k];
                        let w = &mut run.windows[leg.index()];
                        if k == 0 {
                            *w = [row; WINDOW_LEN];
                        } else {
                            w.copy_within(1.., 0);
                            w[WINDOW_LEN - 1] = row;
                        }
                    }
                }
                let windows: Vec<&[[f64; INPUT_WIDTH]]> = active
                    .iter()
                    .flat_map(|&i| runs[i].windows.iter().map(|w| w.as_slice()))
                    .collect();
                let preds = model.predict_batch(&windows);
                preds
                    .chunks(4)
                    .map(|c| Ok(std::array::from_fn(|l| Wrench::from_channels(c[l]))))
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::PHI_OPT;

    fn sim(model: ForceModel<'_>) -> Simulator<'_> {
        Simulator::new(LinkageGeometry::default(), BodyConfig::default(), model)
    }

    fn gait(alpha: [f64; 4]) -> GaitParams {
        GaitParams::new(-20f64.to_radians(), -50f64.to_radians(), 0.6, PHI_OPT, alpha)
    }

    #[test]
    fn stationary_gait_stays_put() {
        let s = sim(ForceModel::Empirical(EfParams::default()));
        let tr = s.simulate(&GaitParams::stationary(0.5), Mode::Straight).unwrap();
        assert!(!tr.finished);
        assert!((tr.t_final() - 60.0).abs() < 1e-9);
        assert_eq!(tr.states.len(), 3901);
        assert!(tr.states.iter().all(|st| st.x.abs() < 1e-9 && st.y.abs() < 1e-9 && st.yaw == 0.0));
    }

    #[test]
    fn mirrored_gait_mirrors_the_trajectory() {
        let s = sim(ForceModel::Empirical(EfParams::default()));
        let g = gait([0.3, 2.0, 4.1, 5.5]);
        let a = s.simulate(&g, Mode::Straight).unwrap();
        let b = s.simulate(&g.mirrored(), Mode::Straight).unwrap();
        assert_eq!(a.states.len(), b.states.len());
        for (p, q) in a.states.iter().zip(&b.states) {
            let m = q.mirrored();
            assert!((p.x - m.x).abs() < 1e-9 && (p.y - m.y).abs() < 1e-9 && (p.yaw - m.yaw).abs() < 1e-9);
        }
        assert_eq!(a.turn_direction, -b.turn_direction);
    }

    #[test]
    fn symmetric_gait_has_no_lateral_drift() {
        let s = sim(ForceModel::Empirical(EfParams::default()));
        let tr = s.simulate(&gait([0.0, 0.0, 1.0, 1.0]), Mode::Straight).unwrap();
        assert!(tr.states.iter().all(|st| st.x.abs() < 1e-6 && st.yaw.abs() < 1e-12));
        assert!(tr.final_state().y > 0.0);
    }

    #[test]
    fn coasting_body_only_slows_down() {
        let s = sim(ForceModel::Empirical(EfParams::default()));
        let mut run = SimState { vx: 0.05, vy: 0.3, ..SimState::default() };
        let mut speed = run.vx.hypot(run.vy);
        for _ in 0..2000 {
            let w = total_wrench(&[Wrench::zero(); 4], run.body_velocity(), &s.body.drag);
            run = step(&run, &w, &s.body).unwrap();
            let sp = run.vx.hypot(run.vy);
            assert!(sp <= speed + 1e-15);
            speed = sp;
        }
    }

    #[test]
    fn batch_matches_single_runs() {
        let model = LstmModel::new(8, 2);
        let s = sim(ForceModel::Lstm(&model));
        let s = Simulator { body: BodyConfig { t_max: 3.0, ..s.body }, ..s };
        let gaits = [gait([0.0; 4]), gait([0.5, 1.0, 1.5, 2.0]), GaitParams::stationary(0.3)];
        let batch = s.simulate_batch(&gaits, Mode::Turn);
        for (g, b) in gaits.iter().zip(batch) {
            let one = s.simulate(g, Mode::Turn).unwrap();
            let b = b.unwrap();
            assert_eq!(one.states.len(), b.states.len());
            for (p, q) in one.states.iter().zip(&b.states) {
                assert!((p.x - q.x).abs() < 1e-12 && (p.yaw - q.yaw).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let s = sim(ForceModel::Empirical(EfParams::default()));
        let g = gait([1.0, 0.2, 3.0, 0.7]);
        assert_eq!(s.simulate(&g, Mode::Turn).unwrap(), s.simulate(&g, Mode::Turn).unwrap());
    }

    #[test]
    fn csv_has_one_row_per_state() {
        let s = Simulator::new(
            LinkageGeometry::default(),
            BodyConfig { t_max: 1.0, ..BodyConfig::default() },
            ForceModel::Empirical(EfParams::default()),
        );
        let tr = s.simulate(&gait([0.0; 4]), Mode::Straight).unwrap();
        let csv = tr.to_csv();
        assert_eq!(csv.lines().count(), tr.states.len() + 1);
        assert!(csv.starts_with(Trajectory::CSV_HEADER));
    }
}
