//! Delay integration and photon-flux sweeps.

use super::{DelayTrace, TpaEvaluator};
use crate::error::{Result, VssError};
use crate::medium::MediumLevels;
use crate::schmidt::{gain_for_photon_number, mode_gains, spectral_functions, SchmidtDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DelayIntegrated {
    pub noise: f64,
    pub classical: f64,
    pub quantum: f64,
}

impl DelayIntegrated {
    pub fn background(&self) -> f64 {
        self.noise + self.classical
    }
}

fn trapezoid(x: &[f64], y: impl Iterator<Item = f64>) -> f64 {
    let y: Vec<f64> = y.collect();
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Trapezoidal integral of each group over the trace's delay range.
pub fn delay_integrated(trace: &DelayTrace) -> DelayIntegrated {
    let x = &trace.delays;
    DelayIntegrated {
        noise: trapezoid(x, trace.grouped.iter().map(|g| g.noise)),
        classical: trapezoid(x, trace.grouped.iter().map(|g| g.classical)),
        quantum: trapezoid(x, trace.grouped.iter().map(|g| g.quantum)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub delay_points: usize,
    pub delay_max_fs: f64,
    /// Photon-number window used for the slope fits.
    pub fit_min: f64,
    pub fit_max: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            delay_points: 1024,
            delay_max_fs: 8000.0,
            fit_min: 1e-2,
            fit_max: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxRow {
    pub photon_number: f64,
    pub gain: f64,
    pub integrated: DelayIntegrated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxTable {
    pub rows: Vec<FluxRow>,
    /// Log-log slope of the quantum group over the fit window.
    pub quantum_slope: Option<f64>,
    /// Log-log slope of noise + classical over the fit window.
    pub background_slope: Option<f64>,
    /// Photon number where quantum = noise + classical, if bracketed.
    pub crossover: Option<f64>,
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// usable (positive) points.
pub fn fit_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// First photon number at which the quantum group meets the background,
/// by linear interpolation of `ln(quantum / background)` against `ln N`.
fn crossover(rows: &[FluxRow]) -> Option<f64> {
    let d: Vec<Option<f64>> = rows
        .iter()
        .map(|r| {
            let (q, b) = (r.integrated.quantum, r.integrated.background());
            (q > 0.0 && b > 0.0).then(|| (q / b).ln())
        })
        .collect();
    for i in 0..rows.len().saturating_sub(1) {
        let (Some(da), Some(db)) = (d[i], d[i + 1]) else {
            continue;
        };
        if da == 0.0 {
            return Some(rows[i].photon_number);
        }
        if da.signum() != db.signum() || db == 0.0 {
            let (xa, xb) = (rows[i].photon_number.ln(), rows[i + 1].photon_number.ln());
            return Some((xa + (xb - xa) * da / (da - db)).exp());
        }
    }
    None
}

/// For every photon number: solve the gain, rebuild the spectral functions,
/// scan the delay and integrate each group.
pub fn flux_sweep(
    decomp: &SchmidtDecomposition,
    medium: &MediumLevels,
    photon_numbers: &[f64],
    opts: &SweepOptions,
) -> Result<FluxTable> {
    if photon_numbers.is_empty() {
        return Err(VssError::config("flux sweep needs at least one photon number"));
    }
    if photon_numbers.iter().any(|n| !(*n > 0.0 && n.is_finite())) {
        return Err(VssError::config("photon numbers must be positive"));
    }
    if photon_numbers.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VssError::config("photon numbers must be strictly ascending"));
    }
    let mut rows = Vec::with_capacity(photon_numbers.len());
    for &n in photon_numbers {
        let gain = gain_for_photon_number(decomp, n)?;
        let f = spectral_functions(decomp, &mode_gains(decomp, gain)?)?;
        let trace = TpaEvaluator::new(&f, medium)?.scan(opts.delay_points, opts.delay_max_fs)?;
        rows.push(FluxRow {
            photon_number: n,
            gain,
            integrated: delay_integrated(&trace),
        });
    }
    let in_fit: Vec<&FluxRow> = rows
        .iter()
        .filter(|r| r.photon_number >= opts.fit_min * (1.0 - 1e-12) && r.photon_number <= opts.fit_max * (1.0 + 1e-12))
        .collect();
    let x: Vec<f64> = in_fit.iter().map(|r| r.photon_number).collect();
    let q: Vec<f64> = in_fit.iter().map(|r| r.integrated.quantum).collect();
    let b: Vec<f64> = in_fit.iter().map(|r| r.integrated.background()).collect();
    Ok(FluxTable {
        quantum_slope: fit_log_slope(&x, &q),
        background_slope: fit_log_slope(&x, &b),
        crossover: crossover(&rows),
        rows,
    })
}
