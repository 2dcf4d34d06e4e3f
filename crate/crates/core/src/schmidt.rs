//! Schmidt modes, Bogoliubov gains and the spectral correlation functions.
//!
//! The weighted kernel `M = sqrt(dw_s dw_i) * Phi` is decomposed as
//! `M = U S V^H`. Mode samples are `f_s = conj(U) / sqrt(dw_s)` and
//! `f_i = V / sqrt(dw_i)`, so that
//! `Phi(w_s, w_i) = sum_g lambda_g conj(f_s,g(w_s)) conj(f_i,g(w_i))` and both
//! mode families are orthonormal under the grid quadrature.

use faer::{c64, Mat, Side};
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Result, VssError};
use crate::spdc::{FrequencyGrid, JointAmplitude};
use crate::CMatrix;

/// Default relative cutoff: modes with `lambda_g < 1e-8 * lambda_1` are dropped.
pub const DEFAULT_TRUNCATION: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Descending, non-negative.
    pub lambdas: Vec<f64>,
    /// `n_s x r`, column `g` is `f_s,g` on the signal grid.
    pub modes_s: CMatrix,
    /// `n_i x r`, column `g` is `f_i,g` on the idler grid.
    pub modes_i: CMatrix,
    pub step_s: f64,
    pub step_i: f64,
    /// Grids the modes live on; `None` for bare matrices.
    pub grids: Option<(FrequencyGrid, FrequencyGrid)>,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    /// `sum_g lambda_g conj(f_s,g) conj(f_i,g)^T`.
    pub fn reconstruct(&self) -> CMatrix {
        let r = self.rank();
        let a = to_faer(&self.modes_s, |z, g| z.conj() * self.lambdas[g]);
        let b = to_faer(&self.modes_i, |z, _| z.conj());
        debug_assert_eq!(a.ncols(), r);
        from_faer(&(&a * b.transpose()))
    }
}

#[derive(Debug, Clone)]
pub struct TwinBeamGain {
    pub gain: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SpectralFunctions {
    pub f1s: CMatrix,
    pub f1i: CMatrix,
    /// Rows: signal frequency, columns: idler frequency.
    pub f2: CMatrix,
    pub grid_s: FrequencyGrid,
    pub grid_i: FrequencyGrid,
}

fn to_faer(m: &CMatrix, f: impl Fn(Complex64, usize) -> Complex64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| f(m[[i, j]], j))
}

fn from_faer(m: &Mat<c64>) -> CMatrix {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// True when `m` equals its conjugate transpose up to rounding.
fn is_hermitian(m: &Mat<c64>) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let n = m.nrows();
    let mut scale = 0.0_f64;
    let mut diff = 0.0_f64;
    for j in 0..n {
        for i in j..n {
            scale = scale.max(m[(i, j)].norm());
            diff = diff.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    diff <= 1e-14 * scale
}

/// Decomposes a normalized joint amplitude on its grids.
pub fn decompose(amp: &JointAmplitude) -> Result<SchmidtDecomposition> {
    decompose_with(amp, DEFAULT_TRUNCATION)
}

pub fn decompose_with(amp: &JointAmplitude, truncation: f64) -> Result<SchmidtDecomposition> {
    if !amp.normalized {
        return Err(VssError::Input(
            "Schmidt decomposition expects a normalized amplitude".into(),
        ));
    }
    let mut d = decompose_matrix(&amp.values, amp.grid_s.step(), amp.grid_i.step(), truncation)?;
    d.grids = Some((amp.grid_s, amp.grid_i));
    Ok(d)
}

/// Decomposes a sampled amplitude with quadrature steps `step_s`, `step_i`.
pub fn decompose_matrix(
    values: &CMatrix,
    step_s: f64,
    step_i: f64,
    truncation: f64,
) -> Result<SchmidtDecomposition> {
    let (ns, ni) = values.dim();
    if ns == 0 || ni == 0 {
        return Err(VssError::Input("empty amplitude".into()));
    }
    if !(step_s > 0.0 && step_i > 0.0) {
        return Err(VssError::Input("grid steps must be positive".into()));
    }
    if !(0.0..1.0).contains(&truncation) {
        return Err(VssError::config(format!(
            "truncation must lie in [0, 1), got {truncation}"
        )));
    }
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(VssError::Numerical("amplitude contains non-finite values".into()));
    }
    let w = (step_s * step_i).sqrt();
    let m = to_faer(values, |z, _| z * w);
    let diag = |what: &str| {
        VssError::Numerical(format!(
            "{what} did not converge ({ns}x{ni} grid, steps {step_s:e} / {step_i:e} eV)"
        ))
    };

    // singular values and vectors in faer's native order
    let (sigma, u, v): (Vec<f64>, Mat<c64>, Mat<c64>) =
        if step_s == step_i && is_hermitian(&m) {
            let eig = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|_| diag("Hermitian eigendecomposition"))?;
            let mu: Vec<f64> = (0..ns).map(|g| eig.S().column_vector()[g].re).collect();
            let q = eig.U().to_owned();
            let v = Mat::from_fn(ns, ns, |i, g| if mu[g] < 0.0 { -q[(i, g)] } else { q[(i, g)] });
            (mu.iter().map(|x| x.abs()).collect(), q, v)
        } else {
            let svd = m.svd().map_err(|_| diag("singular value decomposition"))?;
            let k = ns.min(ni);
            let s: Vec<f64> = (0..k).map(|g| svd.S().column_vector()[g].re).collect();
            (s, svd.U().to_owned(), svd.V().to_owned())
        };

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    let top = sigma[order[0]];
    if !(top > 0.0) {
        return Err(VssError::Degenerate("amplitude has no nonzero Schmidt mode".into()));
    }
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&g| sigma[g] >= truncation * top && sigma[g] > 0.0)
        .collect();

    let (ss, si) = (1.0 / step_s.sqrt(), 1.0 / step_i.sqrt());
    let lambdas = keep.iter().map(|&g| sigma[g]).collect();
    let modes_s = Array2::from_shape_fn((ns, keep.len()), |(i, c)| u[(i, keep[c])].conj() * ss);
    let modes_i = Array2::from_shape_fn((ni, keep.len()), |(i, c)| v[(i, keep[c])] * si);
    Ok(SchmidtDecomposition {
        lambdas,
        modes_s,
        modes_i,
        step_s,
        step_i,
        grids: None,
    })
}

/// `u_g = cosh(G lambda_g)`, `v_g = sinh(G lambda_g)`.
pub fn mode_gains(decomp: &SchmidtDecomposition, gain: f64) -> Result<TwinBeamGain> {
    if !(gain >= 0.0 && gain.is_finite()) {
        return Err(VssError::Domain(format!("gain must be finite and >= 0, got {gain}")));
    }
    let (u, v) = decomp
        .lambdas
        .iter()
        .map(|&l| ((gain * l).cosh(), (gain * l).sinh()))
        .unzip();
    Ok(TwinBeamGain { gain, u, v })
}

/// Mean photon number per beam, `sum_g v_g^2`.
pub fn photon_number(gains: &TwinBeamGain) -> f64 {
    gains.v.iter().map(|v| v * v).sum()
}

fn photons_at(lambdas: &[f64], gain: f64) -> f64 {
    lambdas.iter().map(|&l| (gain * l).sinh().powi(2)).sum()
}

/// Inverts `N(G) = sum_g sinh^2(G lambda_g)` by bracketed bisection.
pub fn gain_for_photon_number(decomp: &SchmidtDecomposition, target: f64) -> Result<f64> {
    if !(target >= 0.0 && target.is_finite()) {
        return Err(VssError::Domain(format!(
            "target photon number must be finite and >= 0, got {target}"
        )));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let lambdas = &decomp.lambdas;
    let top = lambdas.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(VssError::Degenerate("no populated Schmidt mode".into()));
    }
    // N(G) >= sinh^2(G lambda_1), so asinh(sqrt(target)) / lambda_1 brackets from above
    let mut hi = (target.sqrt()).asinh() / top;
    let mut lo = 0.0;
    if photons_at(lambdas, hi) < target {
        // cannot happen for lambda_1 = max, kept for safety with unsorted input
        while photons_at(lambdas, hi) < target {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(VssError::Numerical("gain bracket overflowed".into()));
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if photons_at(lambdas, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (nlo, nhi) = (photons_at(lambdas, lo), photons_at(lambdas, hi));
    Ok(if (target - nlo).abs() <= (nhi - target).abs() { lo } else { hi })
}

/// Effective number of amplified modes `(sum u v)^2 / sum u^2 v^2`.
pub fn schmidt_number_uv(gains: &TwinBeamGain) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (u, v) in gains.u.iter().zip(&gains.v) {
        num += u * v;
        den += (u * v).powi(2);
    }
    if !(den > 0.0) {
        return Err(VssError::Degenerate("K_UV is undefined for the vacuum".into()));
    }
    Ok(num * num / den)
}

/// Assembles `F1s`, `F1i` and `F2` on the absolute-energy grid nodes.
pub fn spectral_functions(
    decomp: &SchmidtDecomposition,
    gains: &TwinBeamGain,
) -> Result<SpectralFunctions> {
    let (grid_s, grid_i) = decomp.grids.ok_or_else(|| {
        VssError::Input("spectral functions need a decomposition carrying its grids".into())
    })?;
    let r = decomp.rank();
    if gains.v.len() != r || gains.u.len() != r {
        return Err(VssError::Input(format!(
            "gain vectors have {} entries for {r} modes",
            gains.v.len()
        )));
    }
    let ws = grid_s.energies();
    let wi = grid_i.energies();
    if let Some(w) = ws.iter().chain(&wi).find(|w| **w <= 0.0) {
        return Err(VssError::config(format!(
            "grid contains non-positive absolute energy {w} eV"
        )));
    }
    let sqrt_s: Vec<f64> = ws.iter().map(|w| w.sqrt()).collect();
    let sqrt_i: Vec<f64> = wi.iter().map(|w| w.sqrt()).collect();
    let (ns, ni) = (ws.len(), wi.len());

    // a = sqrt(w) f_s, b = sqrt(w) f_i
    let xs = Mat::<c64>::from_fn(ns, r, |j, g| {
        decomp.modes_s[[j, g]].conj() * (sqrt_s[j] * gains.v[g])
    });
    let xi = Mat::<c64>::from_fn(ni, r, |j, g| {
        decomp.modes_i[[j, g]].conj() * (sqrt_i[j] * gains.v[g])
    });
    let p = Mat::<c64>::from_fn(ns, r, |j, g| {
        decomp.modes_s[[j, g]] * (sqrt_s[j] * gains.v[g] * gains.u[g])
    });
    let b = Mat::<c64>::from_fn(ni, r, |j, g| decomp.modes_i[[j, g]] * sqrt_i[j]);

    let f1s = from_faer(&(&xs * xs.adjoint()));
    let f1i = from_faer(&(&xi * xi.adjoint()));
    let f2 = from_faer(&(&p * b.transpose()));
    Ok(SpectralFunctions {
        f1s,
        f1i,
        f2,
        grid_s,
        grid_i,
    })
}
