//! One TOML document configures every command; each command reads its own
//! section and ignores the rest.

use std::path::Path;

use anyhow::{bail, Context};
use aquaped::data::{Preprocess, SynthGrid, SynthSpec};
use aquaped::dynamics::{BodyConfig, Mode};
use aquaped::hydro::EfParams;
use aquaped::kinematics::{GaitParams, LinkageGeometry};
use aquaped::lstm::TrainConfig;
use aquaped::optim::OptConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seeds data generation, the split, weight init and the optimizer.
    pub seed: u64,
    pub geometry: LinkageGeometry,
    pub ef: EfParams,
    pub body: BodyConfig,
    pub synth: SynthSection,
    pub preprocess: Preprocess,
    pub train: TrainConfig,
    pub compare: CompareSection,
    pub simulate: SimulateSection,
    pub optimize: OptConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub grid: SynthGrid,
    pub augment: SynthSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareSection {
    /// Window stride over the test sets.
    pub stride: usize,
    /// Number of test sets exported as time series.
    pub curve_sets: usize,
    pub batch: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self { stride: 1, curve_sets: 3, batch: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub mode: Option<Mode>,
    pub gait: GaitSpec,
}

/// Optimizable gait parameters in degrees and Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitSpec {
    pub theta_h_min_deg: f64,
    pub theta_k_max_deg: f64,
    pub freq: f64,
    pub phi_deg: f64,
    pub alpha_deg: [f64; 4],
}

impl Default for GaitSpec {
    fn default() -> Self {
        Self { theta_h_min_deg: -50.0, theta_k_max_deg: -80.0, freq: 0.6, phi_deg: 60.0, alpha_deg: [0.0; 4] }
    }
}

impl GaitSpec {
    pub fn to_gait(&self) -> GaitParams {
        GaitParams::new(
            self.theta_h_min_deg.to_radians(),
            self.theta_k_max_deg.to_radians(),
            self.freq,
            self.phi_deg.to_radians(),
            self.alpha_deg.map(f64::to_radians),
        )
    }

    pub fn from_gait(g: &GaitParams) -> Self {
        Self {
            theta_h_min_deg: g.theta_h_min.to_degrees(),
            theta_k_max_deg: g.theta_k_max.to_degrees(),
            freq: g.freq,
            phi_deg: g.phi.to_degrees(),
            alpha_deg: g.alpha.map(f64::to_degrees),
        }
    }

    /// Loads a gait file as written by `optimize` (a bare `GaitSpec` table).
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading gait file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing gait file {}", path.display()))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let de = toml::Deserializer::parse(text)?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::Error::new(e.into_inner()).context(format!("at key `{path}`"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sections are checked up front so no command starts on a bad document.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.train.seed != 0 || self.optimize.seed != 0 {
            bail!("train.seed / optimize.seed: set the top-level `seed` instead");
        }
        self.geometry.validate().context("geometry")?;
        self.ef.validate().context("ef")?;
        self.body.validate().context("body")?;
        self.synth.augment.validate().context("synth.augment")?;
        for g in self.synth.grid.gaits() {
            g.validate_collection().context("synth.grid")?;
        }
        if self.synth.grid.v_flow.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            bail!("synth.grid.v_flow: speeds must be finite and non-negative");
        }
        self.train.validate().context("train")?;
        self.optimize.validate().context("optimize")?;
        if self.compare.stride == 0 || self.compare.batch == 0 {
            bail!("compare.stride and compare.batch must be positive");
        }
        let gait = self.simulate.gait.to_gait();
        gait.validate_optimization().context("simulate.gait")?;
        if !(0.0..360.0).contains(&self.simulate.gait.phi_deg) {
            bail!("simulate.gait.phi_deg = {} outside [0, 360)", self.simulate.gait.phi_deg);
        }
        Ok(())
    }

    /// Stage configs with the run seed filled in.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }

    pub fn opt_config(&self, mode: Mode) -> OptConfig {
        OptConfig { seed: self.seed, mode, ..self.optimize.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip() {
        let c = RunConfig {
            seed: 9,
            train: TrainConfig { max_epochs: 3, ..TrainConfig::default() },
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_key_names_its_path() {
        let e = format!("{:#}", RunConfig::parse("[train]\nlearning_rate = 0.1\n").unwrap_err());
        assert!(e.contains("learning_rate"), "{e}");
        assert!(e.contains("train"), "{e}");
    }

    #[test]
    fn out_of_range_grid_reports_bounds() {
        let e = format!("{:#}", RunConfig::parse("[synth.grid]\ntheta_h_min_deg = [20.0]\n").unwrap_err());
        assert!(e.contains("synth.grid") && e.contains("[-50, 10]"), "{e}");
    }

    #[test]
    fn out_of_range_gait_reports_bounds() {
        let e = format!("{:#}", RunConfig::parse("[simulate.gait]\nfreq = 0.9\n").unwrap_err());
        assert!(e.contains("[0.2, 0.65]"), "{e}");
    }

    #[test]
    fn stage_seeds_rejected() {
        assert!(RunConfig::parse("[optimize]\nseed = 4\n").is_err());
    }

    #[test]
    fn gait_spec_round_trip() {
        let g = GaitSpec { alpha_deg: [0.0, 90.0, 180.0, 270.0], ..GaitSpec::default() };
        let back = GaitSpec::from_gait(&g.to_gait());
        for (a, b) in back.alpha_deg.iter().zip(g.alpha_deg) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
