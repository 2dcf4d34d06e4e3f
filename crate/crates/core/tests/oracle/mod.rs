//! Literal double-sum transcription of the six TPA terms, used as an
//! independent oracle by the oracle and acceptance tests.
#![allow(dead_code)]

use vss_core::Complex64;
use vss_core::medium::{reference_medium, response, MediumLevels};
use vss_core::schmidt::{
    decompose, gain_for_photon_number, mode_gains, spectral_functions, SchmidtDecomposition,
    SpectralFunctions, TwinBeamGain,
};
use vss_core::spdc::{build_joint_amplitude, CrystalParams, FrequencyGrid, PumpParams};
use vss_core::HBAR_EV_FS;

pub struct Setup {
    pub grid: FrequencyGrid,
    pub decomp: SchmidtDecomposition,
    pub gains: TwinBeamGain,
    pub f: SpectralFunctions,
}

pub fn setup(n: usize, w: f64, tau_p: f64, length: f64, photons: f64) -> Setup {
    let grid = FrequencyGrid::new(1.55, w, n).unwrap();
    let pump = PumpParams::new(3.1, tau_p).unwrap();
    let crystal = CrystalParams::new(length, 5200.0, 5600.0).unwrap();
    let amp = build_joint_amplitude(&pump, &crystal, &grid, &grid)
        .unwrap()
        .normalize()
        .unwrap();
    let decomp = decompose(&amp).unwrap();
    let g = gain_for_photon_number(&decomp, photons).unwrap();
    let gains = mode_gains(&decomp, g).unwrap();
    let f = spectral_functions(&decomp, &gains).unwrap();
    Setup {
        grid,
        decomp,
        gains,
        f,
    }
}

/// Literal evaluation of the correlation functions at grid frequencies,
/// looked up by value.
pub struct Oracle<'a> {
    s: &'a Setup,
    omega: Vec<f64>,
    medium: &'a MediumLevels,
}

impl<'a> Oracle<'a> {
    pub fn new(s: &'a Setup, medium: &'a MediumLevels) -> Self {
        Self {
            s,
            omega: s.grid.energies(),
            medium,
        }
    }

    pub fn index(&self, w: f64) -> usize {
        self.omega
            .iter()
            .position(|x| (x - w).abs() < 1e-12)
            .unwrap_or_else(|| panic!("{w} eV is not a grid node"))
    }

    pub fn f1s(&self, w: f64, wp: f64) -> Complex64 {
        let (j, k) = (self.index(w), self.index(wp));
        let d = &self.s.decomp;
        (0..d.rank())
            .map(|g| {
                (w * wp).sqrt()
                    * d.modes_s[[j, g]].conj()
                    * d.modes_s[[k, g]]
                    * self.s.gains.v[g].powi(2)
            })
            .sum()
    }

    pub fn f1i(&self, w: f64, wp: f64) -> Complex64 {
        let (j, k) = (self.index(w), self.index(wp));
        let d = &self.s.decomp;
        (0..d.rank())
            .map(|g| {
                (w * wp).sqrt()
                    * d.modes_i[[j, g]].conj()
                    * d.modes_i[[k, g]]
                    * self.s.gains.v[g].powi(2)
            })
            .sum()
    }

    /// First argument signal, second idler.
    pub fn f2(&self, w: f64, wp: f64) -> Complex64 {
        let (j, k) = (self.index(w), self.index(wp));
        let d = &self.s.decomp;
        (0..d.rank())
            .map(|g| {
                (w * wp).sqrt()
                    * d.modes_s[[j, g]]
                    * d.modes_i[[k, g]]
                    * self.s.gains.v[g]
                    * self.s.gains.u[g]
            })
            .sum()
    }

    pub fn k(&self, w: f64) -> Complex64 {
        response(w, self.medium).unwrap()
    }

    /// Phases use w = c + nu; the absolute form loses ~1e-12 to cancellation
    /// between (ws + wi) tau and (ef - eg) tau.
    pub fn nu(&self, w: f64) -> f64 {
        self.s.grid.detuning(self.index(w))
    }

    pub fn offset(&self) -> f64 {
        self.medium.final_energy_ev - self.medium.ground_energy_ev - 2.0 * self.s.grid.center_ev
    }

    pub fn dw2(&self) -> f64 {
        self.s.grid.step().powi(2)
    }

    pub fn ssss(&self) -> Complex64 {
        let ef = self.medium.final_energy_ev;
        let mut acc = Complex64::new(0.0, 0.0);
        for &w in &self.omega {
            for &wp in &self.omega {
                acc += self.k(w).conj()
                    * self.k(wp)
                    * (self.f1s(ef - w, wp) * self.f1s(w, ef - wp)
                        + self.f1s(ef - w, ef - wp) * self.f1s(w, wp));
            }
        }
        acc * self.dw2()
    }

    pub fn iiii(&self) -> Complex64 {
        let ef = self.medium.final_energy_ev;
        let mut acc = Complex64::new(0.0, 0.0);
        for &w in &self.omega {
            for &wp in &self.omega {
                acc += self.k(w).conj()
                    * self.k(wp)
                    * (self.f1i(ef - w, wp) * self.f1i(w, ef - wp)
                        + self.f1i(ef - w, ef - wp) * self.f1i(w, wp));
            }
        }
        acc * self.dw2()
    }

    /// Returns (quantum, classical) brackets; delays tau_s = tau, tau_i = 0.
    pub fn sisi(&self, tau: f64) -> (Complex64, Complex64) {
        let ef = self.medium.final_energy_ev;
        let (ts, ti) = (tau, 0.0);
        let (mut q, mut c) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &wi in &self.omega {
            for &wip in &self.omega {
                let phase = Complex64::from_polar(1.0, (self.nu(wi) - self.nu(wip)) * (ti - ts) / HBAR_EV_FS);
                let kk = self.k(wi).conj() * self.k(wip) * phase;
                q += kk * self.f2(ef - wi, wi).conj() * self.f2(ef - wip, wip);
                c += kk * self.f1i(wi, wip) * self.f1s(ef - wi, ef - wip);
            }
        }
        (q * self.dw2(), c * self.dw2())
    }

    pub fn isis(&self, tau: f64) -> (Complex64, Complex64) {
        let ef = self.medium.final_energy_ev;
        let (ts, ti) = (tau, 0.0);
        let (mut q, mut c) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &ws in &self.omega {
            for &wsp in &self.omega {
                let phase = Complex64::from_polar(1.0, (self.nu(ws) - self.nu(wsp)) * (ts - ti) / HBAR_EV_FS);
                let kk = self.k(ws).conj() * self.k(wsp) * phase;
                q += kk * self.f2(ws, ef - ws).conj() * self.f2(wsp, ef - wsp);
                c += kk * self.f1s(ws, wsp) * self.f1i(ef - ws, ef - wsp);
            }
        }
        (q * self.dw2(), c * self.dw2())
    }

    pub fn siis(&self, tau: f64) -> (Complex64, Complex64) {
        let ef = self.medium.final_energy_ev;
        let (ts, ti) = (tau, 0.0);
        let (mut q, mut c) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &wi in &self.omega {
            for &ws in &self.omega {
                let arg = (self.nu(wi) + self.nu(ws)) * (ti - ts) + self.offset() * (ts - ti);
                let kk = self.k(wi).conj() * self.k(ws) * Complex64::from_polar(1.0, arg / HBAR_EV_FS);
                q += kk * self.f2(ef - wi, wi).conj() * self.f2(ws, ef - ws);
                c += kk * self.f1s(ef - wi, ws) * self.f1i(wi, ef - ws);
            }
        }
        (q * self.dw2(), c * self.dw2())
    }

    pub fn issi(&self, tau: f64) -> (Complex64, Complex64) {
        let ef = self.medium.final_energy_ev;
        let (ts, ti) = (tau, 0.0);
        let (mut q, mut c) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &ws in &self.omega {
            for &wi in &self.omega {
                let arg = (self.nu(ws) + self.nu(wi)) * (ts - ti) + self.offset() * (ti - ts);
                let kk = self.k(ws).conj() * self.k(wi) * Complex64::from_polar(1.0, arg / HBAR_EV_FS);
                q += kk * self.f2(ws, ef - ws).conj() * self.f2(ef - wi, wi);
                c += kk * self.f1i(ef - ws, wi) * self.f1s(ws, ef - wi);
            }
        }
        (q * self.dw2(), c * self.dw2())
    }
}

pub fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(a.norm()).max(1e-300)
}

pub fn media() -> Vec<MediumLevels> {
    let lossless = reference_medium();
    let mut lossy = reference_medium();
    lossy.linewidth_ev = 2e-3;
    lossy.levels[1].dipole = -0.7;
    vec![lossless, lossy]
}
