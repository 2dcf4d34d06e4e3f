//! Direct O(n^2)-per-delay double sums. Reference path for small grids.

use num_complex::Complex64;

use super::{TermParts, TpaEvaluator, TpaTerms};
use crate::error::Result;
use crate::medium::MediumLevels;
use crate::schmidt::SpectralFunctions;
use crate::HBAR_EV_FS;

fn phases(nu: &[f64], tau_fs: f64) -> Vec<Complex64> {
    nu.iter()
        .map(|&x| Complex64::from_polar(1.0, x * tau_fs / HBAR_EV_FS))
        .collect()
}

impl TpaEvaluator<'_> {
    /// Noise term of one beam:
    /// `dw^2 sum K*_j K_k [F(R j, k) F(j, R k) + F(R j, R k) F(j, k)]`.
    fn single_beam(&self, f1: &crate::CMatrix, k: &[Complex64]) -> Complex64 {
        let n = self.points();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let rj = self.rev(j);
            let kj = k[j].conj();
            let mut row = Complex64::new(0.0, 0.0);
            for kk in 0..n {
                let rk = self.rev(kk);
                row += k[kk]
                    * (f1[[rj, kk]] * f1[[j, rk]] + f1[[rj, rk]] * f1[[j, kk]]);
            }
            acc += kj * row;
        }
        acc * (self.step * self.step)
    }

    pub(super) fn noise_terms(&self) -> (Complex64, Complex64) {
        (
            self.single_beam(&self.f.f1s, &self.k_s),
            self.single_beam(&self.f.f1i, &self.k_i),
        )
    }

    /// All six terms by direct double sums at delay `tau_fs`.
    pub fn naive_terms(&self, tau_fs: f64) -> TpaTerms {
        let (ssss, iiii) = self.noise_terms();
        let mut t = self.naive_delay_terms(tau_fs);
        t.ssss = ssss;
        t.iiii = iiii;
        t
    }

    fn naive_delay_terms(&self, tau_fs: f64) -> TpaTerms {
        let n = self.points();
        let (f1s, f1i, f2) = (&self.f.f1s, &self.f.f1i, &self.f.f2);
        let (ks, ki) = (&self.k_s, &self.k_i);
        let es = phases(&self.nu_s, tau_fs);
        let ei = phases(&self.nu_i, tau_fs);
        let psi = Complex64::from_polar(1.0, self.psi * tau_fs / HBAR_EV_FS);
        let zero = Complex64::new(0.0, 0.0);
        let (mut sisi, mut isis, mut siis, mut issi) =
            (TermParts::default(), TermParts::default(), TermParts::default(), TermParts::default());

        for j in 0..n {
            let rj = self.rev(j);
            let (mut a_q, mut a_c, mut b_q, mut b_c) = (zero, zero, zero, zero);
            let (mut c_q, mut c_c, mut d_q, mut d_c) = (zero, zero, zero, zero);
            for k in 0..n {
                let rk = self.rev(k);
                // sisi: j, k on the idler grid
                let w = ki[k] * ei[k];
                a_q += w * f2[[rk, k]];
                a_c += w * f1i[[j, k]] * f1s[[rj, rk]];
                // isis: j, k on the signal grid
                let w = ks[k] * es[k].conj();
                b_q += w * f2[[k, rk]];
                b_c += w * f1s[[j, k]] * f1i[[rj, rk]];
                // siis: j idler, k signal
                let w = ks[k] * es[k].conj();
                c_q += w * f2[[k, rk]];
                c_c += w * f1s[[rj, k]] * f1i[[j, rk]];
                // issi: j signal, k idler
                let w = ki[k] * ei[k];
                d_q += w * f2[[rk, k]];
                d_c += w * f1i[[rj, k]] * f1s[[j, rk]];
            }
            let wa = ki[j].conj() * ei[j].conj();
            sisi.quantum += wa * f2[[rj, j]].conj() * a_q;
            sisi.classical += wa * a_c;
            let wb = ks[j].conj() * es[j];
            isis.quantum += wb * f2[[j, rj]].conj() * b_q;
            isis.classical += wb * b_c;
            let wc = ki[j].conj() * ei[j].conj();
            siis.quantum += wc * f2[[rj, j]].conj() * c_q;
            siis.classical += wc * c_c;
            let wd = ks[j].conj() * es[j];
            issi.quantum += wd * f2[[j, rj]].conj() * d_q;
            issi.classical += wd * d_c;
        }
        let s2 = self.step * self.step;
        let scale = |p: TermParts, ph: Complex64| TermParts {
            quantum: p.quantum * ph * s2,
            classical: p.classical * ph * s2,
        };
        let one = Complex64::new(1.0, 0.0);
        TpaTerms {
            ssss: zero,
            iiii: zero,
            sisi: scale(sisi, one),
            isis: scale(isis, one),
            siis: scale(siis, psi),
            issi: scale(issi, psi.conj()),
        }
    }
}

/// Single-beam signal term (delay independent).
pub fn term_ssss(f: &SpectralFunctions, medium: &MediumLevels) -> Result<f64> {
    Ok(TpaEvaluator::new(f, medium)?.noise_terms().0.re)
}

/// Single-beam idler term (delay independent).
pub fn term_iiii(f: &SpectralFunctions, medium: &MediumLevels) -> Result<f64> {
    Ok(TpaEvaluator::new(f, medium)?.noise_terms().1.re)
}

pub fn term_sisi(f: &SpectralFunctions, medium: &MediumLevels, tau_fs: f64) -> Result<Complex64> {
    Ok(TpaEvaluator::new(f, medium)?.naive_delay_terms(tau_fs).sisi.total())
}

pub fn term_isis(f: &SpectralFunctions, medium: &MediumLevels, tau_fs: f64) -> Result<Complex64> {
    Ok(TpaEvaluator::new(f, medium)?.naive_delay_terms(tau_fs).isis.total())
}

pub fn term_siis(f: &SpectralFunctions, medium: &MediumLevels, tau_fs: f64) -> Result<Complex64> {
    Ok(TpaEvaluator::new(f, medium)?.naive_delay_terms(tau_fs).siis.total())
}

pub fn term_issi(f: &SpectralFunctions, medium: &MediumLevels, tau_fs: f64) -> Result<Complex64> {
    Ok(TpaEvaluator::new(f, medium)?.naive_delay_terms(tau_fs).issi.total())
}
