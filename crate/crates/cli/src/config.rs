//! Run configuration: a single TOML document, every table optional.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vss_core::experiment::Experiment;
use vss_core::medium::{random_medium, Level, MediumLevels, PolePlacement};
use vss_core::spdc::{CrystalParams, FrequencyGrid, PumpParams, ALIGNMENT_TOL_EV};
use vss_core::spectro::{EnsembleNormalization, SpectrogramOptions, Window};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpSection {
    pub center_energy_ev: f64,
    pub duration_fs: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        Self {
            center_energy_ev: 3.1,
            duration_fs: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrystalSection {
    pub length_m: f64,
    pub gs_ps_per_m: f64,
    pub gi_ps_per_m: f64,
}

impl Default for CrystalSection {
    fn default() -> Self {
        Self {
            length_m: 1e-3,
            gs_ps_per_m: 5200.0,
            gi_ps_per_m: 5600.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PlacementName {
    #[default]
    Midpoint,
    Nudge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub center_ev: f64,
    pub half_width_ev: f64,
    pub points: usize,
    pub pole_placement: PlacementName,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            center_ev: 1.55,
            half_width_ev: 0.12,
            points: 1024,
            pole_placement: PlacementName::Midpoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelEntry {
    pub energy_ev: f64,
    #[serde(default = "one")]
    pub dipole: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomLevels {
    pub count: usize,
    pub min_mismatch_ev: f64,
    pub max_mismatch_ev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumSection {
    pub ground_energy_ev: f64,
    pub final_energy_ev: f64,
    pub levels: Vec<LevelEntry>,
    pub linewidth_ev: f64,
    /// Replaces `levels` with a seeded random set (see `--seed`).
    pub random_levels: Option<RandomLevels>,
}

impl Default for MediumSection {
    fn default() -> Self {
        Self {
            ground_energy_ev: 0.0,
            final_energy_ev: 3.1,
            levels: [1.575, 1.5875, 1.5945]
                .iter()
                .map(|&e| LevelEntry {
                    energy_ev: e,
                    dipole: 1.0,
                })
                .collect(),
            linewidth_ev: 0.0,
            random_levels: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    pub target_photon_number: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self {
            target_photon_number: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub delay_max_fs: f64,
    pub delay_points: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            delay_max_fs: 8000.0,
            delay_points: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationName {
    #[default]
    Delay,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub length_min_m: f64,
    pub length_max_m: f64,
    pub count: usize,
    pub normalization: NormalizationName,
    /// Photon numbers to average at; empty means `beam.target_photon_number`.
    pub photon_numbers: Vec<f64>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            length_min_m: 0.020,
            length_max_m: 0.022,
            count: 100,
            normalization: NormalizationName::Delay,
            photon_numbers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowName {
    Rectangular,
    #[default]
    Hann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub window: WindowName,
    pub dc_removal: bool,
    pub peak_min_energy_ev: f64,
    pub peak_rel_threshold: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            window: WindowName::Hann,
            dc_removal: true,
            peak_min_energy_ev: 0.01,
            peak_rel_threshold: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub photon_numbers: Vec<f64>,
    pub fit_min: f64,
    pub fit_max: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        // 1e-2 .. 1e6, two points per decade
        let photon_numbers = (0..=16)
            .map(|i| {
                let x = 10f64.powf(-2.0 + 0.5 * i as f64);
                // round to 9 significant digits so the echo is stable
                format!("{x:.8e}").parse().expect("formatted float")
            })
            .collect();
        Self {
            photon_numbers,
            fit_min: 1e-2,
            fit_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JointSection {
    pub pump_durations_fs: Vec<f64>,
}

impl Default for JointSection {
    fn default() -> Self {
        Self {
            pump_durations_fs: vec![20.0, 110.0, 1000.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchmidtSection {
    pub truncation: f64,
}

impl Default for SchmidtSection {
    fn default() -> Self {
        Self { truncation: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pump: PumpSection,
    pub crystal: CrystalSection,
    pub grid: GridSection,
    pub medium: MediumSection,
    pub beam: BeamSection,
    pub scan: ScanSection,
    pub ensemble: EnsembleSection,
    pub analysis: AnalysisSection,
    pub sweep: SweepSection,
    pub joint: JointSection,
    pub schmidt: SchmidtSection,
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {x}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("pump.center_energy_ev", self.pump.center_energy_ev)?;
        positive("pump.duration_fs", self.pump.duration_fs)?;
        positive("crystal.length_m", self.crystal.length_m)?;
        positive("grid.half_width_ev", self.grid.half_width_ev)?;
        positive("scan.delay_max_fs", self.scan.delay_max_fs)?;
        if !(self.beam.target_photon_number >= 0.0) {
            return Err(CliError::Config("beam.target_photon_number must be >= 0".into()));
        }
        let ef = self.medium.final_energy_ev;
        if (2.0 * self.grid.center_ev - ef).abs() > ALIGNMENT_TOL_EV {
            return Err(CliError::Config(format!(
                "grid alignment violated: 2 x grid.center_ev = {} eV must equal medium.final_energy_ev = {ef} eV",
                2.0 * self.grid.center_ev
            )));
        }
        if (self.pump.center_energy_ev - ef).abs() > ALIGNMENT_TOL_EV {
            return Err(CliError::Config(format!(
                "pump.center_energy_ev = {} eV must equal medium.final_energy_ev = {ef} eV",
                self.pump.center_energy_ev
            )));
        }
        if self.grid.center_ev - self.grid.half_width_ev <= 0.0 {
            return Err(CliError::Config("grid reaches non-positive absolute energy".into()));
        }
        if self.scan.delay_points < 16 {
            return Err(CliError::Config("scan.delay_points must be >= 16".into()));
        }
        if self.ensemble.count == 0 {
            return Err(CliError::Config("ensemble.count must be >= 1".into()));
        }
        positive("ensemble.length_min_m", self.ensemble.length_min_m)?;
        if self.ensemble.count > 1 && !(self.ensemble.length_max_m > self.ensemble.length_min_m) {
            return Err(CliError::Config(
                "ensemble.length_max_m must exceed ensemble.length_min_m".into(),
            ));
        }
        for &n in &self.ensemble.photon_numbers {
            positive("ensemble.photon_numbers entry", n)?;
        }
        let a = &self.analysis;
        positive("analysis.peak_min_energy_ev", a.peak_min_energy_ev)?;
        if !(a.peak_rel_threshold > 0.0 && a.peak_rel_threshold < 1.0) {
            return Err(CliError::Config(
                "analysis.peak_rel_threshold must lie in (0, 1)".into(),
            ));
        }
        for &n in &self.sweep.photon_numbers {
            positive("sweep.photon_numbers entry", n)?;
        }
        if self.sweep.photon_numbers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("sweep.photon_numbers must be strictly ascending".into()));
        }
        positive("sweep.fit_min", self.sweep.fit_min)?;
        if !(self.sweep.fit_max > self.sweep.fit_min) {
            return Err(CliError::Config("sweep.fit_max must exceed sweep.fit_min".into()));
        }
        for &t in &self.joint.pump_durations_fs {
            positive("joint.pump_durations_fs entry", t)?;
        }
        if !(0.0..1.0).contains(&self.schmidt.truncation) {
            return Err(CliError::Config("schmidt.truncation must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn medium(&self, seed: u64) -> Result<MediumLevels, CliError> {
        let m = &self.medium;
        let medium = match &m.random_levels {
            Some(r) => {
                let mut med = random_medium(m.final_energy_ev, r.count, r.min_mismatch_ev, r.max_mismatch_ev, seed)?;
                med.ground_energy_ev = m.ground_energy_ev;
                med.linewidth_ev = m.linewidth_ev;
                MediumLevels::new(med.ground_energy_ev, med.final_energy_ev, med.levels, med.linewidth_ev)?
            }
            None => MediumLevels::new(
                m.ground_energy_ev,
                m.final_energy_ev,
                m.levels
                    .iter()
                    .map(|l| Level {
                        energy_ev: l.energy_ev,
                        dipole: l.dipole,
                    })
                    .collect(),
                m.linewidth_ev,
            )?,
        };
        Ok(medium)
    }

    pub fn experiment(&self, seed: u64) -> Result<Experiment, CliError> {
        let placement = match self.grid.pole_placement {
            PlacementName::Midpoint => PolePlacement::Midpoint,
            PlacementName::Nudge => PolePlacement::Nudge,
        };
        Ok(Experiment::new(
            PumpParams::new(self.pump.center_energy_ev, self.pump.duration_fs)?,
            CrystalParams::new(self.crystal.length_m, self.crystal.gs_ps_per_m, self.crystal.gi_ps_per_m)?,
            FrequencyGrid::new(self.grid.center_ev, self.grid.half_width_ev, self.grid.points)?,
            self.medium(seed)?,
            placement,
            self.schmidt.truncation,
            self.scan.delay_points,
            self.scan.delay_max_fs,
        )?)
    }

    pub fn spectrogram_options(&self) -> SpectrogramOptions {
        SpectrogramOptions {
            window: match self.analysis.window {
                WindowName::Hann => Window::Hann,
                WindowName::Rectangular => Window::Rectangular,
            },
            dc_removal: self.analysis.dc_removal,
        }
    }

    pub fn ensemble_normalization(&self) -> EnsembleNormalization {
        match self.ensemble.normalization {
            NormalizationName::Delay => EnsembleNormalization::Delay,
            NormalizationName::Fourier => EnsembleNormalization::Fourier,
        }
    }

    pub fn ensemble_targets(&self) -> Vec<f64> {
        if self.ensemble.photon_numbers.is_empty() {
            vec![self.beam.target_photon_number]
        } else {
            self.ensemble.photon_numbers.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
