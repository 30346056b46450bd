//! Synthetic force logs.
//!
//! Each channel is the empirical-model wrench plus an unsteady term
//!
//! ```text
//! gain[k] * v_rel^2 * sum_h weight[h] * sin(h * psi + phase[k]),   h = 2, 3
//! ```
//!
//! where `psi = 2 pi f t + alpha` is the hip phase and `v_rel` the normal
//! relative speed of the web, plus zero-mean Gaussian noise. The unsteady
//! term is a deterministic function of the gait state, so a sequence model can
//! learn it while the empirical model cannot.

use std::f64::consts::{PI, TAU};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ForceRecord, RecordSet, CYCLES_PER_SET, SAMPLE_RATE_HZ};
use crate::error::{Error, Result};
use crate::hydro::{ef_leg_force, EfParams, FlowConditions};
use crate::kinematics::{gait_angles, web_state_series, GaitParams, Leg, LinkageGeometry};
use crate::wrench::{Wrench, CHANNELS};

/// Harmonics of the gait frequency carried by the unsteady term.
pub const HARMONICS: [f64; 2] = [2.0, 3.0];

/// Parameter grid; every combination is run at every flow speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthGrid {
    pub theta_h_min_deg: Vec<f64>,
    pub theta_k_max_deg: Vec<f64>,
    pub freq: Vec<f64>,
    pub phi_deg: Vec<f64>,
    pub v_flow: Vec<f64>,
    pub cycles: usize,
    pub fs: f64,
}

impl Default for SynthGrid {
    fn default() -> Self {
        Self::collection_grid()
    }
}

impl SynthGrid {
    /// The full data-collection grid (320 gaits) at four tunnel speeds.
    pub fn collection_grid() -> Self {
        Self {
            theta_h_min_deg: vec![10.0, -10.0, -30.0, -50.0],
            theta_k_max_deg: vec![-20.0, -40.0, -60.0, -80.0],
            freq: vec![0.3, 0.4, 0.5, 0.6],
            phi_deg: vec![60.0, 120.0, 180.0, 240.0, 300.0],
            v_flow: vec![0.0, 0.1, 0.2, 0.3],
            cycles: CYCLES_PER_SET,
            fs: SAMPLE_RATE_HZ,
        }
    }

    /// Gait combinations in nesting order hip, knee, frequency, phase.
    pub fn gaits(&self) -> Vec<GaitParams> {
        let mut out = Vec::new();
        for &h in &self.theta_h_min_deg {
            for &k in &self.theta_k_max_deg {
                for &f in &self.freq {
                    for &p in &self.phi_deg {
                        out.push(GaitParams::new(h.to_radians(), k.to_radians(), f, p.to_radians(), [0.0; 4]));
                    }
                }
            }
        }
        out
    }

    pub fn set_count(&self) -> usize {
        self.theta_h_min_deg.len() * self.theta_k_max_deg.len() * self.freq.len() * self.phi_deg.len() * self.v_flow.len()
    }

    pub fn metadata(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join("|");
        vec![
            ("grid.theta_h_min_deg".into(), list(&self.theta_h_min_deg)),
            ("grid.theta_k_max_deg".into(), list(&self.theta_k_max_deg)),
            ("grid.freq".into(), list(&self.freq)),
            ("grid.phi_deg".into(), list(&self.phi_deg)),
            ("grid.v_flow".into(), list(&self.v_flow)),
            ("grid.cycles".into(), self.cycles.to_string()),
        ]
    }
}

/// Unsteady-term and noise settings, per channel in [`CHANNELS`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    /// N s^2/m^2 for forces, N s^2/m for torques.
    pub gain: [f64; 6],
    pub phase: [f64; 6],
    /// Weights of the [`HARMONICS`].
    pub harmonic_weight: [f64; 2],
    pub noise_std: [f64; 6],
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            gain: [0.06, 0.03, 0.03, 0.25, 0.4, 0.4],
            phase: [0.0, PI / 5.0, 2.0 * PI / 5.0, 3.0 * PI / 5.0, 4.0 * PI / 5.0, PI],
            harmonic_weight: [1.0, 0.5],
            noise_std: [0.002, 0.001, 0.001, 0.004, 0.008, 0.008],
        }
    }
}

impl SynthSpec {
    /// No unsteady term, no noise: the output is the empirical model.
    pub fn noiseless_ef() -> Self {
        Self {
            gain: [0.0; 6],
            noise_std: [0.0; 6],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.gain.iter().chain(&self.phase).chain(&self.harmonic_weight).all(|v| v.is_finite());
        if !finite || self.noise_std.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(
                "synthetic spec needs finite gains and non-negative noise".into(),
            ));
        }
        Ok(())
    }

    /// Unsteady term for one channel.
    pub fn augmentation(&self, ch: usize, v_rel: f64, hip_phase: f64) -> f64 {
        let osc: f64 = HARMONICS
            .iter()
            .zip(&self.harmonic_weight)
            .map(|(h, w)| w * (h * hip_phase + self.phase[ch]).sin())
            .sum();
        self.gain[ch] * v_rel * v_rel * osc
    }

    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut out = vec![(
            "synth.harmonics".to_string(),
            HARMONICS.iter().map(f64::to_string).collect::<Vec<_>>().join("|"),
        )];
        out.push((
            "synth.harmonic_weight".into(),
            self.harmonic_weight.iter().map(f64::to_string).collect::<Vec<_>>().join("|"),
        ));
        for (k, name) in CHANNELS.iter().enumerate() {
            out.push((
                format!("synth.{name}"),
                format!("gain={};phase={};noise_std={}", self.gain[k], self.phase[k], self.noise_std[k]),
            ));
        }
        out
    }
}

/// One synthetic set of `cycles` gait cycles starting at `t = 0`.
///
/// The noise stream is `index` of the generator seeded with `seed`, so a set
/// is reproducible on its own regardless of how many sets precede it.
#[allow(clippy::too_many_arguments)]
pub fn synth_set(
    geom: &LinkageGeometry,
    ef: &EfParams,
    spec: &SynthSpec,
    params: GaitParams,
    v_flow: f64,
    fs: f64,
    cycles: usize,
    seed: u64,
    index: usize,
) -> Result<RecordSet> {
    spec.validate()?;
    if !(fs > 0.0 && params.freq > 0.0) {
        return Err(Error::InvalidParameter("sampling rate and frequency must be positive".into()));
    }
    let n = (cycles as f64 * fs / params.freq).ceil() as usize;
    let dt = 1.0 / fs;
    let webs = web_state_series(geom, &params, Leg::LF, 0.0, dt, n)?;
    let flow = FlowConditions::tunnel(v_flow);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let noise: Vec<Normal<f64>> = spec
        .noise_std
        .iter()
        .map(|&s| Normal::new(0.0, s).map_err(|e| Error::InvalidParameter(e.to_string())))
        .collect::<Result<_>>()?;

    let alpha = params.alpha[Leg::LF.index()];
    let records = webs
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let t = i as f64 * dt;
            let j = gait_angles(&params, Leg::LF, t);
            let f = ef_leg_force(ef, w, &flow);
            let psi = (TAU * params.freq * t + alpha).rem_euclid(TAU);
            let mut c = f.wrench.to_channels();
            for (ch, x) in c.iter_mut().enumerate() {
                *x += spec.augmentation(ch, f.v_rel_normal, psi);
                if spec.noise_std[ch] > 0.0 {
                    *x += noise[ch].sample(&mut rng);
                }
            }
            ForceRecord {
                t,
                v_flow,
                theta_h: j.theta_h,
                theta_k: j.theta_k,
                dtheta_h: j.dtheta_h,
                dtheta_k: j.dtheta_k,
                wrench: Wrench::from_channels(c),
            }
        })
        .collect();
    Ok(RecordSet { id: index, params, v_flow, fs, records })
}

/// Every (gait, speed) cell of `grid`, gaits outermost. Ids are consecutive
/// from zero.
pub fn synth_generate(
    geom: &LinkageGeometry,
    ef: &EfParams,
    grid: &SynthGrid,
    spec: &SynthSpec,
    seed: u64,
) -> Result<Vec<RecordSet>> {
    let mut out = Vec::with_capacity(grid.set_count());
    for g in grid.gaits() {
        g.validate_collection()?;
        for &v in &grid.v_flow {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Grid(format!("flow speed must be non-negative, got {v}")));
            }
            let idx = out.len();
            out.push(synth_set(geom, ef, spec, g, v, grid.fs, grid.cycles, seed, idx)?);
        }
    }
    Ok(out)
}
