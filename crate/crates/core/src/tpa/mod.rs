//! Two-photon absorption signal as frequency-domain quadratures.
//!
//! Six terms survive the normal-ordered expansion: `ssss` and `iiii` (both
//! photons from one beam, delay independent), the cross terms `sisi` / `isis`
//! and the time-ordered cross terms `siis` / `issi`. Each delay-dependent term
//! is the sum of a quantum bracket (`F2 F2`) and a classical bracket
//! (`F1 F1`). The delay is `tau = tau_s - tau_i` in fs.
//!
//! `eps_f - w` arguments are resolved by index reversal on aligned grids.

mod fast;
mod naive;
mod sweep;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, VssError};
use crate::medium::{response_on_grid, MediumLevels};
use crate::schmidt::SpectralFunctions;
use crate::spdc::{check_alignment, ALIGNMENT_TOL_EV};

use fast::FastKernel;
pub use naive::{term_iiii, term_isis, term_issi, term_siis, term_sisi, term_ssss};
pub use sweep::{delay_integrated, fit_log_slope, flux_sweep, DelayIntegrated, FluxRow, FluxTable, SweepOptions};

/// Relative imaginary residue tolerated before a group is declared inconsistent.
pub const RESIDUE_TOL: f64 = 1e-9;

/// Quantum and classical brackets of one delay-dependent term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TermParts {
    pub quantum: Complex64,
    pub classical: Complex64,
}

impl TermParts {
    pub fn total(&self) -> Complex64 {
        self.quantum + self.classical
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TpaTerms {
    pub ssss: Complex64,
    pub iiii: Complex64,
    pub sisi: TermParts,
    pub isis: TermParts,
    pub siis: TermParts,
    pub issi: TermParts,
}

impl TpaTerms {
    pub fn total(&self) -> Complex64 {
        self.ssss
            + self.iiii
            + self.sisi.total()
            + self.isis.total()
            + self.siis.total()
            + self.issi.total()
    }

    /// Sum of moduli of every bracket; the scale for residue checks.
    fn magnitude(&self) -> f64 {
        let parts = [self.sisi, self.isis, self.siis, self.issi];
        self.ssss.norm()
            + self.iiii.norm()
            + parts
                .iter()
                .map(|p| p.quantum.norm() + p.classical.norm())
                .sum::<f64>()
    }

    /// Regroups into noise / classical / quantum and checks that each group
    /// is real and the total non-negative.
    pub fn grouped(&self) -> Result<GroupedSignal> {
        let parts = [self.sisi, self.isis, self.siis, self.issi];
        let noise = self.ssss + self.iiii;
        let classical: Complex64 = parts.iter().map(|p| p.classical).sum();
        let quantum: Complex64 = parts.iter().map(|p| p.quantum).sum();
        let scale = self.magnitude();
        for (name, g) in [("noise", noise), ("classical", classical), ("quantum", quantum)] {
            if g.im.abs() > RESIDUE_TOL * scale {
                return Err(VssError::Numerical(format!(
                    "{name} group has imaginary residue {:e} (scale {scale:e})",
                    g.im
                )));
            }
        }
        let total = noise.re + classical.re + quantum.re;
        if total < -RESIDUE_TOL * scale {
            return Err(VssError::Numerical(format!(
                "total TPA signal {total:e} is negative (scale {scale:e})"
            )));
        }
        Ok(GroupedSignal {
            noise: noise.re,
            classical: classical.re,
            quantum: quantum.re,
            total,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroupedSignal {
    pub noise: f64,
    pub classical: f64,
    pub quantum: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayTrace {
    /// Uniform delays over `[0, t_max]` (fs).
    pub delays: Vec<f64>,
    pub grouped: Vec<GroupedSignal>,
}

impl DelayTrace {
    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.grouped.iter().map(|g| g.total).collect()
    }

    pub fn spacing(&self) -> f64 {
        self.delays[1] - self.delays[0]
    }
}

/// `M` uniform delays covering `[0, t_max]` inclusive.
pub fn delay_grid(points: usize, t_max_fs: f64) -> Result<Vec<f64>> {
    if points < 16 {
        return Err(VssError::config(format!("need at least 16 delays, got {points}")));
    }
    if !(t_max_fs > 0.0 && t_max_fs.is_finite()) {
        return Err(VssError::config(format!("delay range must be positive, got {t_max_fs}")));
    }
    let dt = t_max_fs / (points - 1) as f64;
    Ok((0..points).map(|m| m as f64 * dt).collect())
}

/// Spectral functions, medium response and index bookkeeping shared by the
/// naive and the factorized evaluation paths.
pub struct TpaEvaluator<'a> {
    f: &'a SpectralFunctions,
    /// `K` on the signal grid.
    k_s: Vec<Complex64>,
    /// `K` on the idler grid.
    k_i: Vec<Complex64>,
    /// Detunings of the signal and idler grids (eV).
    nu_s: Vec<f64>,
    nu_i: Vec<f64>,
    step: f64,
    /// `eps_f - eps_g - center_s - center_i` (eV).
    psi: f64,
    fast: FastKernel,
}

impl<'a> TpaEvaluator<'a> {
    pub fn new(f: &'a SpectralFunctions, medium: &MediumLevels) -> Result<Self> {
        check_alignment(&f.grid_s, &f.grid_i, medium.final_energy_ev)?;
        let k_s = response_on_grid(&f.grid_s, medium)?;
        let k_i = response_on_grid(&f.grid_i, medium)?;
        Self::with_responses(f, k_s, k_i, medium.final_energy_ev, medium.ground_energy_ev)
    }

    /// Uses caller-supplied response samples instead of a level model.
    pub fn with_responses(
        f: &'a SpectralFunctions,
        k_s: Vec<Complex64>,
        k_i: Vec<Complex64>,
        final_energy_ev: f64,
        ground_energy_ev: f64,
    ) -> Result<Self> {
        check_alignment(&f.grid_s, &f.grid_i, final_energy_ev)?;
        // single-beam terms evaluate F1s at eps_f - w_s, which must lie on
        // the signal grid itself
        if (f.grid_s.center_ev - f.grid_i.center_ev).abs() > ALIGNMENT_TOL_EV {
            return Err(VssError::config(format!(
                "TPA evaluation needs degenerate grids (centers {} and {} eV)",
                f.grid_s.center_ev, f.grid_i.center_ev
            )));
        }
        let n = f.grid_s.points;
        if k_s.len() != n || k_i.len() != n {
            return Err(VssError::Input(format!(
                "response vectors must have {n} entries"
            )));
        }
        for m in [&f.f1s, &f.f1i, &f.f2] {
            if m.dim() != (n, n) {
                return Err(VssError::Input(format!(
                    "spectral function has shape {:?}, expected {n}x{n}",
                    m.dim()
                )));
            }
        }
        let psi = final_energy_ev - ground_energy_ev - f.grid_s.center_ev - f.grid_i.center_ev;
        let mut ev = Self {
            f,
            k_s,
            k_i,
            nu_s: f.grid_s.detunings(),
            nu_i: f.grid_i.detunings(),
            step: f.grid_s.step(),
            psi,
            fast: FastKernel::default(),
        };
        ev.fast = FastKernel::build(&ev);
        Ok(ev)
    }

    pub fn points(&self) -> usize {
        self.nu_s.len()
    }

    /// Reverse index `n - 1 - j`.
    fn rev(&self, j: usize) -> usize {
        self.points() - 1 - j
    }

    /// All six terms by the factorized path.
    pub fn terms(&self, tau_fs: f64) -> TpaTerms {
        self.fast.terms(self, tau_fs)
    }

    pub fn grouped(&self, tau_fs: f64) -> Result<GroupedSignal> {
        self.terms(tau_fs).grouped()
    }

    /// Grouped signal at `points` uniform delays over `[0, t_max]`.
    /// Delays are evaluated in parallel; each point is independent, so the
    /// result does not depend on the worker count.
    pub fn scan(&self, points: usize, t_max_fs: f64) -> Result<DelayTrace> {
        let delays = delay_grid(points, t_max_fs)?;
        let grouped = delays
            .par_iter()
            .map(|&t| self.grouped(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(DelayTrace { delays, grouped })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::reference_medium;
    use crate::schmidt::{decompose, gain_for_photon_number, mode_gains, spectral_functions};
    use crate::spdc::{build_joint_amplitude, CrystalParams, FrequencyGrid, PumpParams};

    fn functions(n: usize, w: f64, tau: f64, length: f64, photons: f64) -> SpectralFunctions {
        let g = FrequencyGrid::new(1.55, w, n).unwrap();
        let p = PumpParams::new(3.1, tau).unwrap();
        let c = CrystalParams::new(length, 5200.0, 5600.0).unwrap();
        let a = build_joint_amplitude(&p, &c, &g, &g).unwrap().normalize().unwrap();
        let d = decompose(&a).unwrap();
        let gain = gain_for_photon_number(&d, photons).unwrap();
        spectral_functions(&d, &mode_gains(&d, gain).unwrap()).unwrap()
    }

    #[test]
    fn delay_grid_bounds() {
        let d = delay_grid(1024, 8000.0).unwrap();
        assert_eq!(d[0], 0.0);
        assert!((d[1023] - 8000.0).abs() < 1e-9);
        assert!(delay_grid(15, 10.0).is_err());
        assert!(delay_grid(16, 0.0).is_err());
    }

    #[test]
    fn vacuum_gives_zero() {
        let f = functions(32, 0.0637, 1000.0, 1e-3, 0.0);
        let ev = TpaEvaluator::new(&f, &reference_medium()).unwrap();
        for tau in [0.0, 500.0, 3000.0] {
            let g = ev.grouped(tau).unwrap();
            assert_eq!((g.noise, g.classical, g.quantum, g.total), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn misaligned_medium_rejected() {
        let f = functions(16, 0.0637, 1000.0, 1e-3, 1.0);
        let mut m = reference_medium();
        m.final_energy_ev = 3.2;
        assert!(matches!(TpaEvaluator::new(&f, &m), Err(VssError::Config(_))));
    }

    #[test]
    fn low_gain_quantum_dominates() {
        let f = functions(128, 0.06375, 1000.0, 1e-3, 1e-3);
        let ev = TpaEvaluator::new(&f, &reference_medium()).unwrap();
        let g = ev.grouped(0.0).unwrap();
        assert!(g.quantum > 100.0 * g.classical.abs(), "{g:?}");
        assert!(g.quantum > 100.0 * g.noise, "{g:?}");
    }

    #[test]
    fn scan_first_point_and_constant_noise() {
        let f = functions(64, 0.06375, 1000.0, 1e-3, 1.0);
        let ev = TpaEvaluator::new(&f, &reference_medium()).unwrap();
        let tr = ev.scan(64, 8000.0).unwrap();
        assert_eq!(tr.grouped[0], ev.grouped(0.0).unwrap());
        let n0 = tr.grouped[0].noise;
        for g in &tr.grouped {
            assert!((g.noise - n0).abs() <= 1e-10 * n0);
            assert!((g.total - (g.noise + g.classical + g.quantum)).abs() <= 1e-9 * g.total);
        }
    }
}
