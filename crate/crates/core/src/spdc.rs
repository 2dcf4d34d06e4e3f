//! Two-photon spectral amplitude of a pulse-pumped type-II crystal.
//!
//! The phase mismatch uses a first-order dispersion model around exact central
//! phase matching, with the pump inverse group velocity fixed by the
//! group-velocity-matching condition `G_p = (G_s + G_i) / 2`. Under that
//! condition the mismatch only depends on `nu_s - nu_i`.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Result, VssError};
use crate::{CMatrix, HBAR_EV_FS};

/// fs per s.
const FS_PER_S: f64 = 1e15;
/// s per ps.
const S_PER_PS: f64 = 1e-12;

/// Tolerance on `center_s + center_i = pump center` (eV).
pub const ALIGNMENT_TOL_EV: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpParams {
    /// Central pump energy `hbar * omega_p0` (eV).
    pub center_energy_ev: f64,
    /// Pulse duration `tau_p` (fs).
    pub duration_fs: f64,
}

impl PumpParams {
    pub fn new(center_energy_ev: f64, duration_fs: f64) -> Result<Self> {
        if !(center_energy_ev > 0.0 && center_energy_ev.is_finite()) {
            return Err(VssError::config(format!(
                "pump center energy must be positive, got {center_energy_ev}"
            )));
        }
        if !(duration_fs > 0.0 && duration_fs.is_finite()) {
            return Err(VssError::config(format!(
                "pump duration must be positive, got {duration_fs}"
            )));
        }
        Ok(Self {
            center_energy_ev,
            duration_fs,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalParams {
    pub length_m: f64,
    /// Signal inverse group velocity `G_s` (ps/m).
    pub inv_gv_signal_ps_per_m: f64,
    /// Idler inverse group velocity `G_i` (ps/m).
    pub inv_gv_idler_ps_per_m: f64,
}

impl CrystalParams {
    pub fn new(length_m: f64, inv_gv_signal_ps_per_m: f64, inv_gv_idler_ps_per_m: f64) -> Result<Self> {
        if !(length_m > 0.0 && length_m.is_finite()) {
            return Err(VssError::config(format!(
                "crystal length must be positive, got {length_m}"
            )));
        }
        if !inv_gv_signal_ps_per_m.is_finite() || !inv_gv_idler_ps_per_m.is_finite() {
            return Err(VssError::config("inverse group velocities must be finite"));
        }
        Ok(Self {
            length_m,
            inv_gv_signal_ps_per_m,
            inv_gv_idler_ps_per_m,
        })
    }

    /// Pump inverse group velocity under group-velocity matching (ps/m).
    pub fn inv_gv_pump_ps_per_m(&self) -> f64 {
        0.5 * (self.inv_gv_signal_ps_per_m + self.inv_gv_idler_ps_per_m)
    }

    pub fn with_length(self, length_m: f64) -> Result<Self> {
        Self::new(length_m, self.inv_gv_signal_ps_per_m, self.inv_gv_idler_ps_per_m)
    }

    /// Signal-idler temporal walk-off `(G_i - G_s) L` (fs).
    pub fn walk_off_fs(&self) -> f64 {
        (self.inv_gv_idler_ps_per_m - self.inv_gv_signal_ps_per_m) * S_PER_PS * self.length_m * FS_PER_S
    }
}

/// Uniform grid `omega[j] = center - W + j * 2W / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub center_ev: f64,
    pub half_width_ev: f64,
    pub points: usize,
}

impl FrequencyGrid {
    pub fn new(center_ev: f64, half_width_ev: f64, points: usize) -> Result<Self> {
        if points < 8 || points % 2 != 0 {
            return Err(VssError::config(format!(
                "grid needs an even number of points >= 8, got {points}"
            )));
        }
        if !(half_width_ev > 0.0 && half_width_ev.is_finite()) {
            return Err(VssError::config(format!(
                "grid half width must be positive, got {half_width_ev}"
            )));
        }
        if !center_ev.is_finite() {
            return Err(VssError::config("grid center must be finite"));
        }
        Ok(Self {
            center_ev,
            half_width_ev,
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width_ev / (self.points - 1) as f64
    }

    /// Detuning from the grid center at node `j` (eV).
    pub fn detuning(&self, j: usize) -> f64 {
        // odd integer numerator keeps detuning(n - 1 - j) = -detuning(j) exact
        let n1 = (self.points - 1) as f64;
        (2.0 * j as f64 - n1) * self.half_width_ev / n1
    }

    /// Absolute energy at node `j` (eV).
    pub fn energy(&self, j: usize) -> f64 {
        self.center_ev + self.detuning(j)
    }

    pub fn detunings(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.detuning(j)).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.energy(j)).collect()
    }

    /// Index `n - 1 - j`; maps `sum_energy - omega_other[j]` onto this grid
    /// when the pair is aligned.
    pub fn mirror(&self, j: usize) -> usize {
        self.points - 1 - j
    }
}

/// Checks the pairing invariant that makes `sum_energy - omega_i[k]` land
/// exactly on `omega_s[n - 1 - k]`.
pub fn check_alignment(grid_s: &FrequencyGrid, grid_i: &FrequencyGrid, sum_energy_ev: f64) -> Result<()> {
    if grid_s.points != grid_i.points {
        return Err(VssError::config(format!(
            "signal and idler grids differ in size ({} vs {})",
            grid_s.points, grid_i.points
        )));
    }
    let w_s = grid_s.half_width_ev;
    let w_i = grid_i.half_width_ev;
    if (w_s - w_i).abs() > 1e-15 * w_s.abs().max(w_i.abs()) {
        return Err(VssError::config(format!(
            "signal and idler grids differ in half width ({w_s} vs {w_i} eV)"
        )));
    }
    let mismatch = grid_s.center_ev + grid_i.center_ev - sum_energy_ev;
    if mismatch.abs() > ALIGNMENT_TOL_EV {
        return Err(VssError::config(format!(
            "grid centers {} + {} eV do not add up to {} eV",
            grid_s.center_ev, grid_i.center_ev, sum_energy_ev
        )));
    }
    Ok(())
}

/// `sin(x) / x` with the removable singularity handled by its series.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Pump spectral amplitude for a sum detuning `omega_s + omega_i - omega_p0`
/// (eV), without the power-dependent amplitude.
pub fn pump_envelope(sum_detuning_ev: f64, pump: &PumpParams) -> f64 {
    let tau = pump.duration_fs;
    let arg = tau * sum_detuning_ev / HBAR_EV_FS;
    (tau / (2.0 * std::f64::consts::PI).sqrt()).sqrt() * (-0.25 * arg * arg).exp()
}

/// Longitudinal phase mismatch `Delta k_z` (rad/m) for signal and idler
/// detunings in eV.
pub fn phase_mismatch(detuning_s_ev: f64, detuning_i_ev: f64, crystal: &CrystalParams) -> f64 {
    let half_dg_s_per_m =
        0.5 * (crystal.inv_gv_idler_ps_per_m - crystal.inv_gv_signal_ps_per_m) * S_PER_PS;
    // detuning / hbar in rad/fs, then rad/s
    let dnu_rad_per_s = (detuning_s_ev - detuning_i_ev) / HBAR_EV_FS * FS_PER_S;
    half_dg_s_per_m * dnu_rad_per_s
}

/// Discretized two-photon spectral amplitude. Rows index the signal grid,
/// columns the idler grid.
#[derive(Debug, Clone)]
pub struct JointAmplitude {
    pub grid_s: FrequencyGrid,
    pub grid_i: FrequencyGrid,
    pub values: CMatrix,
    /// L2 norm removed by [`JointAmplitude::normalize`] (1 until normalized).
    pub norm_factor: f64,
    pub normalized: bool,
}

/// Builds the (unnormalized) amplitude
/// `sinc(dk L / 2) exp(-(tau_p/hbar)^2 (nu_s + nu_i)^2 / 4 - i dk L / 2)`.
pub fn build_joint_amplitude(
    pump: &PumpParams,
    crystal: &CrystalParams,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> Result<JointAmplitude> {
    check_alignment(grid_s, grid_i, pump.center_energy_ev)?;
    let n = grid_s.points;
    let nu_s = grid_s.detunings();
    let nu_i = grid_i.detunings();
    // grids are aligned so omega_s + omega_i - omega_p0 = nu_s + nu_i up to the
    // (checked) center mismatch, which we keep for exactness
    let offset = grid_s.center_ev + grid_i.center_ev - pump.center_energy_ev;
    let tau_over_hbar = pump.duration_fs / HBAR_EV_FS;
    let half_length = 0.5 * crystal.length_m;

    let values = Array2::from_shape_fn((n, n), |(j, k)| {
        let sum = nu_s[j] + nu_i[k] + offset;
        let x = phase_mismatch(nu_s[j], nu_i[k], crystal) * half_length;
        let gauss = -0.25 * (tau_over_hbar * sum).powi(2);
        sinc(x) * Complex64::new(gauss, -x).exp()
    });
    Ok(JointAmplitude {
        grid_s: *grid_s,
        grid_i: *grid_i,
        values,
        norm_factor: 1.0,
        normalized: false,
    })
}

/// Scales `values` so that `step_s * step_i * sum |v|^2 = 1`; returns the
/// scaled matrix and the removed norm `sqrt(step_s * step_i * sum |v|^2)`.
pub fn normalize_matrix(values: &CMatrix, step_s: f64, step_i: f64) -> Result<(CMatrix, f64)> {
    let sum_sq: f64 = values.iter().map(|v| v.norm_sqr()).sum();
    let norm = (step_s * step_i * sum_sq).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(VssError::Degenerate(
            "cannot normalize an all-zero amplitude".into(),
        ));
    }
    let scale = 1.0 / norm;
    Ok((values.mapv(|v| v * scale), norm))
}

impl JointAmplitude {
    /// Returns the amplitude scaled to unit quadrature norm; `norm_factor`
    /// records the norm of `self` (the role of `N * L`).
    pub fn normalize(&self) -> Result<JointAmplitude> {
        let (values, norm) =
            normalize_matrix(&self.values, self.grid_s.step(), self.grid_i.step())?;
        Ok(JointAmplitude {
            grid_s: self.grid_s,
            grid_i: self.grid_i,
            values,
            norm_factor: norm,
            normalized: true,
        })
    }

    /// `step_s * step_i * sum |values|^2`.
    pub fn quadrature_norm_sqr(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        self.grid_s.step() * self.grid_i.step() * sum
    }

    /// Pearson correlation of `(nu_s, nu_i)` under the weight `|Phi|^2`.
    /// Negative means anti-correlated frequencies.
    pub fn correlation_coefficient(&self) -> Result<f64> {
        correlation_of(
            &self.values,
            &self.grid_s.detunings(),
            &self.grid_i.detunings(),
        )
    }
}

/// Pearson correlation of the two axes under the probability weight `|values|^2`.
pub fn correlation_of(values: &CMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    let total: f64 = values.iter().map(|v| v.norm_sqr()).sum();
    if !(total > 0.0) {
        return Err(VssError::UndefinedCorrelation("zero total weight".into()));
    }
    let (mut mx, mut my) = (0.0, 0.0);
    for ((j, k), v) in values.indexed_iter() {
        let p = v.norm_sqr() / total;
        mx += p * x[j];
        my += p * y[k];
    }
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for ((j, k), v) in values.indexed_iter() {
        let p = v.norm_sqr() / total;
        let dx = x[j] - mx;
        let dy = y[k] - my;
        sxx += p * dx * dx;
        syy += p * dy * dy;
        sxy += p * dx * dy;
    }
    let scale = x
        .iter()
        .chain(y.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let floor = 1e-28 * scale * scale;
    if sxx <= floor || syy <= floor {
        return Err(VssError::UndefinedCorrelation(
            "zero variance along one frequency axis".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
