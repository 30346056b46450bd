//! Force-log records and the preprocessing chain that turns them into
//! supervised windows: filter, interpolate across flow speeds, re-filter,
//! window, split.

mod filter;
mod interp;
mod log;
mod split;
mod synth;
mod window;

pub use filter::{lowpass, LowPass};
pub use interp::{interpolate_velocity, lagrange3};
pub use log::{load_force_log, parse_force_log, write_force_log, format_force_log, LogMetadata};
pub use split::{split_dataset, DatasetSplit};
pub use synth::{synth_generate, synth_set, SynthGrid, SynthSpec};
pub use window::{make_windows, window_refs, SequenceSample, WindowRef, INPUT_WIDTH, WINDOW_LEN};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hydro::{ef_leg_force, EfParams, FlowConditions};
use crate::kinematics::{web_state_series, GaitParams, Leg, LinkageGeometry};
use crate::wrench::Wrench;

/// Nominal sampling rate of the force logs.
pub const SAMPLE_RATE_HZ: f64 = 65.0;
/// Gait cycles captured per parameter set.
pub const CYCLES_PER_SET: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceRecord {
    pub t: f64,
    pub v_flow: f64,
    pub theta_h: f64,
    pub theta_k: f64,
    pub dtheta_h: f64,
    pub dtheta_k: f64,
    /// Measured leg-frame wrench.
    pub wrench: Wrench,
}

impl ForceRecord {
    /// Surrogate input row `(V_flow, theta_H, theta_K, dtheta_H, dtheta_K)`.
    pub fn input_row(&self) -> [f64; INPUT_WIDTH] {
        [self.v_flow, self.theta_h, self.theta_k, self.dtheta_h, self.dtheta_k]
    }
}

/// All samples logged for one gait parameter set at one flow speed.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSet {
    pub id: usize,
    pub params: GaitParams,
    pub v_flow: f64,
    pub fs: f64,
    pub records: Vec<ForceRecord>,
}

impl RecordSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Bit pattern identifying the gait parameters; sets sharing it belong to
    /// the same parameter group regardless of flow speed.
    pub fn group_key(&self) -> [u64; 10] {
        params_key(&self.params)
    }

    /// Minimum length for the configured number of gait cycles.
    pub fn min_len(&self) -> usize {
        ((CYCLES_PER_SET as f64) * self.fs / self.params.freq).floor() as usize
    }

    /// Copy of the wrench channel `ch` (see [`crate::wrench::channel`]).
    pub fn channel(&self, ch: usize) -> Vec<f64> {
        self.records.iter().map(|r| r.wrench.to_channels()[ch]).collect()
    }

    pub fn set_channel(&mut self, ch: usize, values: &[f64]) {
        for (r, v) in self.records.iter_mut().zip(values) {
            let mut c = r.wrench.to_channels();
            c[ch] = *v;
            r.wrench = Wrench::from_channels(c);
        }
    }

    /// Low-pass filters every wrench channel in place.
    pub fn filter_wrench(&mut self, filter: &LowPass) -> Result<()> {
        for ch in 0..6 {
            let y = filter.apply(&self.channel(ch))?;
            self.set_channel(ch, &y);
        }
        Ok(())
    }
}

pub fn params_key(p: &GaitParams) -> [u64; 10] {
    [
        p.theta_h_max.to_bits(),
        p.theta_h_min.to_bits(),
        p.theta_k_min.to_bits(),
        p.theta_k_max.to_bits(),
        p.freq.to_bits(),
        p.phi.to_bits(),
        p.alpha[0].to_bits(),
        p.alpha[1].to_bits(),
        p.alpha[2].to_bits(),
        p.alpha[3].to_bits(),
    ]
}

/// Empirical-model prediction for every record of a set, evaluated on the
/// set's own gait and flow speed.
pub fn ef_predictions(rs: &RecordSet, geom: &LinkageGeometry, ef: &EfParams) -> Result<Vec<Wrench>> {
    let Some(first) = rs.records.first() else {
        return Ok(Vec::new());
    };
    let webs = web_state_series(geom, &rs.params, Leg::LF, first.t, 1.0 / rs.fs, rs.len())?;
    let flow = FlowConditions::tunnel(rs.v_flow);
    Ok(webs.iter().map(|w| ef_leg_force(ef, w, &flow).wrench).collect())
}

/// Preprocessing applied before windowing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Preprocess {
    pub cutoff_hz: f64,
    /// Flow speeds synthesized by interpolation between measured speeds.
    pub interp_targets: Vec<f64>,
}

impl Default for Preprocess {
    fn default() -> Self {
        Self {
            cutoff_hz: 6.0,
            interp_targets: vec![0.05, 0.15, 0.25],
        }
    }
}

/// Filter, interpolate per parameter group, re-filter the interpolated sets.
/// Returned sets are renumbered consecutively; measured sets keep their order
/// and interpolated ones follow their group.
pub fn preprocess(sets: &[RecordSet], cfg: &Preprocess) -> Result<Vec<RecordSet>> {
    let mut filtered = Vec::with_capacity(sets.len());
    for rs in sets {
        let mut rs = rs.clone();
        rs.filter_wrench(&LowPass::new(cfg.cutoff_hz, rs.fs)?)?;
        filtered.push(rs);
    }

    let mut out = Vec::new();
    for group in group_indices(&filtered) {
        let members: Vec<RecordSet> = group.iter().map(|&i| filtered[i].clone()).collect();
        out.extend(members.iter().cloned());
        if !cfg.interp_targets.is_empty() && distinct_speeds(&members) >= 3 {
            let fs = members[0].fs;
            let lp = LowPass::new(cfg.cutoff_hz, fs)?;
            out.extend(interpolate_velocity(&members, &cfg.interp_targets, Some(&lp), 0)?);
        }
    }
    for (i, rs) in out.iter_mut().enumerate() {
        rs.id = i;
    }
    Ok(out)
}

/// Indices of sets grouped by gait parameters, in order of first appearance.
pub fn group_indices(sets: &[RecordSet]) -> Vec<Vec<usize>> {
    let mut keys: Vec<[u64; 10]> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, rs) in sets.iter().enumerate() {
        let k = rs.group_key();
        match keys.iter().position(|x| *x == k) {
            Some(g) => groups[g].push(i),
            None => {
                keys.push(k);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

fn distinct_speeds(sets: &[RecordSet]) -> usize {
    let mut v: Vec<f64> = sets.iter().map(|s| s.v_flow).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}
