//! End-to-end pipeline for one crystal: amplitude, Schmidt modes, gains,
//! spectral functions and the delay trace.

use crate::error::{Result, VssError};
use crate::medium::{reference_medium, place_grids, MediumLevels, PolePlacement};
use crate::schmidt::{
    decompose_with, gain_for_photon_number, mode_gains, photon_number, schmidt_number_uv,
    spectral_functions, SchmidtDecomposition, DEFAULT_TRUNCATION,
};
use crate::spdc::{
    build_joint_amplitude, check_alignment, CrystalParams, FrequencyGrid, JointAmplitude,
    PumpParams,
};
use crate::tpa::{delay_grid, DelayTrace, TpaEvaluator};

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub pump: PumpParams,
    pub crystal: CrystalParams,
    /// Shared signal / idler grid after pole placement.
    pub grid: FrequencyGrid,
    pub medium: MediumLevels,
    pub truncation: f64,
    pub delay_points: usize,
    pub delay_max_fs: f64,
}

/// Outcome of one run at a fixed photon number.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub target_photon_number: f64,
    pub gain: f64,
    pub photon_number: f64,
    /// `None` in the vacuum.
    pub schmidt_number_uv: Option<f64>,
    pub trace: DelayTrace,
}

impl Experiment {
    /// Validates the configuration and moves grid nodes off the medium poles.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        pump: PumpParams,
        crystal: CrystalParams,
        grid: FrequencyGrid,
        medium: MediumLevels,
        placement: PolePlacement,
        truncation: f64,
        delay_points: usize,
        delay_max_fs: f64,
    ) -> Result<Self> {
        check_alignment(&grid, &grid, medium.final_energy_ev)?;
        if (pump.center_energy_ev - medium.final_energy_ev).abs() > crate::spdc::ALIGNMENT_TOL_EV {
            return Err(VssError::config(format!(
                "pump center {} eV differs from the final-state energy {} eV",
                pump.center_energy_ev, medium.final_energy_ev
            )));
        }
        if !(0.0..1.0).contains(&truncation) {
            return Err(VssError::config(format!(
                "truncation must lie in [0, 1), got {truncation}"
            )));
        }
        delay_grid(delay_points, delay_max_fs)?;
        let (grid, _) = place_grids(&grid, &grid, &medium, placement)?;
        Ok(Self {
            pump,
            crystal,
            grid,
            medium,
            truncation,
            delay_points,
            delay_max_fs,
        })
    }

    /// L = 1 mm, tau_p = 1 ps, G_s / G_i = 5200 / 5600 ps/m, 1024-point grid of
    /// half width 0.12 eV around 1.55 eV, reference medium, 1024 delays over 8 ps.
    pub fn reference() -> Self {
        Self::new(
            PumpParams::new(3.1, 1000.0).expect("valid"),
            CrystalParams::new(1e-3, 5200.0, 5600.0).expect("valid"),
            FrequencyGrid::new(1.55, 0.12, 1024).expect("valid"),
            reference_medium(),
            PolePlacement::Midpoint,
            DEFAULT_TRUNCATION,
            1024,
            8000.0,
        )
        .expect("defaults are consistent")
    }

    pub fn with_length(&self, length_m: f64) -> Result<Self> {
        Ok(Self {
            crystal: self.crystal.with_length(length_m)?,
            ..self.clone()
        })
    }

    pub fn with_duration(&self, duration_fs: f64) -> Result<Self> {
        Ok(Self {
            pump: PumpParams::new(self.pump.center_energy_ev, duration_fs)?,
            ..self.clone()
        })
    }

    /// Normalized joint amplitude.
    pub fn amplitude(&self) -> Result<JointAmplitude> {
        build_joint_amplitude(&self.pump, &self.crystal, &self.grid, &self.grid)?.normalize()
    }

    pub fn decomposition(&self) -> Result<SchmidtDecomposition> {
        decompose_with(&self.amplitude()?, self.truncation)
    }

    /// Delay trace for one photon number on an existing decomposition.
    pub fn run_on(&self, decomp: &SchmidtDecomposition, target: f64) -> Result<RunOutput> {
        let gain = gain_for_photon_number(decomp, target)?;
        let gains = mode_gains(decomp, gain)?;
        let f = spectral_functions(decomp, &gains)?;
        let trace = TpaEvaluator::new(&f, &self.medium)?.scan(self.delay_points, self.delay_max_fs)?;
        Ok(RunOutput {
            target_photon_number: target,
            gain,
            photon_number: photon_number(&gains),
            schmidt_number_uv: schmidt_number_uv(&gains).ok(),
            trace,
        })
    }

    /// One decomposition, one trace per target photon number.
    pub fn run_many(&self, targets: &[f64]) -> Result<Vec<RunOutput>> {
        let d = self.decomposition()?;
        targets.iter().map(|&t| self.run_on(&d, t)).collect()
    }

    pub fn run(&self, target: f64) -> Result<RunOutput> {
        Ok(self.run_many(&[target])?.remove(0))
    }
}
