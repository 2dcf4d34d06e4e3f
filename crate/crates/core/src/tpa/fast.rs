//! Factorized evaluation: O(n^2) precomputation, O(n) per delay.
//!
//! Quantum brackets are separable, so each is a product of two single sums
//! `A(tau) = sum_k q_k e^{i nu_k tau}` and `B(tau) = sum_k p_k e^{-i nu_k tau}`.
//! Classical brackets depend on the delay only through `nu_j - nu_k`
//! (`sisi`, `isis`) or `nu_j + nu_k` (`siis`, `issi`); both are integer
//! multiples of the grid step, so the double sums collapse onto 2n - 1
//! diagonals once and for all.

use num_complex::Complex64;

use super::{TermParts, TpaEvaluator, TpaTerms};
use crate::HBAR_EV_FS;

#[derive(Debug, Clone, Default)]
pub(crate) struct FastKernel {
    ssss: Complex64,
    iiii: Complex64,
    /// `K_i(k) F2(R k, k)`, idler index.
    q: Vec<Complex64>,
    /// `K_s(k) F2(k, R k)`, signal index.
    p: Vec<Complex64>,
    /// Diagonal sums indexed by `k - j + n - 1`.
    h_sisi: Vec<Complex64>,
    h_isis: Vec<Complex64>,
    /// Anti-diagonal sums indexed by `j + k`.
    s_siis: Vec<Complex64>,
    s_issi: Vec<Complex64>,
}

impl FastKernel {
    pub(super) fn build(ev: &TpaEvaluator<'_>) -> Self {
        let n = ev.points();
        let (f1s, f1i, f2) = (&ev.f.f1s, &ev.f.f1i, &ev.f.f2);
        let (ks, ki) = (&ev.k_s, &ev.k_i);
        let (ssss, iiii) = ev.noise_terms();
        let q = (0..n).map(|k| ki[k] * f2[[ev.rev(k), k]]).collect();
        let p = (0..n).map(|k| ks[k] * f2[[k, ev.rev(k)]]).collect();

        let zero = Complex64::new(0.0, 0.0);
        let mut h_sisi = vec![zero; 2 * n - 1];
        let mut h_isis = vec![zero; 2 * n - 1];
        let mut s_siis = vec![zero; 2 * n - 1];
        let mut s_issi = vec![zero; 2 * n - 1];
        for j in 0..n {
            let rj = ev.rev(j);
            let (kij, ksj) = (ki[j].conj(), ks[j].conj());
            for k in 0..n {
                let rk = ev.rev(k);
                let d = k + n - 1 - j;
                h_sisi[d] += kij * ki[k] * f1i[[j, k]] * f1s[[rj, rk]];
                h_isis[d] += ksj * ks[k] * f1s[[j, k]] * f1i[[rj, rk]];
                s_siis[j + k] += kij * ks[k] * f1s[[rj, k]] * f1i[[j, rk]];
                s_issi[j + k] += ksj * ki[k] * f1i[[rj, k]] * f1s[[j, rk]];
            }
        }
        Self {
            ssss,
            iiii,
            q,
            p,
            h_sisi,
            h_isis,
            s_siis,
            s_issi,
        }
    }

    pub(super) fn terms(&self, ev: &TpaEvaluator<'_>, tau_fs: f64) -> TpaTerms {
        let n = ev.points();
        let omega = tau_fs / HBAR_EV_FS;
        let s2 = ev.step * ev.step;

        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        for k in 0..n {
            a += self.q[k] * Complex64::from_polar(1.0, ev.nu_i[k] * omega);
            b += self.p[k] * Complex64::from_polar(1.0, -ev.nu_s[k] * omega);
        }

        // c[d + n - 1] = exp(i d dw tau / hbar); nu_j + nu_k = (j + k - n + 1) dw
        let (mut sisi_c, mut isis_c, mut siis_c, mut issi_c) = (
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        );
        for m in 0..2 * n - 1 {
            let d = m as f64 - (n - 1) as f64;
            let c = Complex64::from_polar(1.0, d * ev.step * omega);
            sisi_c += self.h_sisi[m] * c;
            isis_c += self.h_isis[m] * c.conj();
            siis_c += self.s_siis[m] * c.conj();
            issi_c += self.s_issi[m] * c;
        }
        let psi = Complex64::from_polar(1.0, ev.psi * omega);
        let siis_q = psi * a.conj() * b * s2;

        TpaTerms {
            ssss: self.ssss,
            iiii: self.iiii,
            sisi: TermParts {
                quantum: Complex64::new(a.norm_sqr() * s2, 0.0),
                classical: sisi_c * s2,
            },
            isis: TermParts {
                quantum: Complex64::new(b.norm_sqr() * s2, 0.0),
                classical: isis_c * s2,
            },
            siis: TermParts {
                quantum: siis_q,
                classical: psi * siis_c * s2,
            },
            issi: TermParts {
                quantum: siis_q.conj(),
                classical: psi.conj() * issi_c * s2,
            },
        }
    }
}
