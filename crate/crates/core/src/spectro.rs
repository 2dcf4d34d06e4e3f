//! Delay-scan spectrograms, crystal-length ensembles and peak extraction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Result, VssError};
use crate::experiment::Experiment;
use crate::HBAR_EV_FS;

/// Ratio reported when the background median vanishes.
pub const MAX_SIGNAL_TO_BACKGROUND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
}

impl Window {
    fn weights(self, m: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; m],
            Window::Hann => (0..m)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (m - 1) as f64).cos())
                .collect(),
        }
    }
}

/// Which energy the bins are labelled with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyAxis {
    /// `E_k = 2 pi hbar k / (M dtau)`.
    #[default]
    Delay,
    /// Twice the delay-axis energy: the level mismatch `2 eps_k - eps_f`.
    Mismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectrogramOptions {
    pub window: Window,
    pub dc_removal: bool,
}

impl Default for SpectrogramOptions {
    fn default() -> Self {
        Self {
            window: Window::Hann,
            dc_removal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// `M / 2 + 1` uniform bins starting at 0.
    pub bin_energies: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// Same window, mean not removed.
    pub raw_magnitude: Vec<f64>,
    pub window: Window,
    pub dc_removed: bool,
    pub axis: EnergyAxis,
}

impl Spectrogram {
    pub fn bin_spacing(&self) -> f64 {
        self.bin_energies[1] - self.bin_energies[0]
    }

    /// Relabels the bins with the mismatch energy (x2).
    pub fn to_mismatch_axis(&self) -> Spectrogram {
        if self.axis == EnergyAxis::Mismatch {
            return self.clone();
        }
        Spectrogram {
            bin_energies: self.bin_energies.iter().map(|e| 2.0 * e).collect(),
            axis: EnergyAxis::Mismatch,
            ..self.clone()
        }
    }
}

fn check_uniform(delays: &[f64]) -> Result<f64> {
    if delays.len() < 16 {
        return Err(VssError::Input(format!(
            "need at least 16 delays, got {}",
            delays.len()
        )));
    }
    let dt = (delays[delays.len() - 1] - delays[0]) / (delays.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(VssError::Input("delays must be increasing".into()));
    }
    for w in delays.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt {
            return Err(VssError::Input("delays are not uniformly spaced".into()));
        }
    }
    Ok(dt)
}

/// Complex one-sided spectrum of the windowed trace.
fn one_sided(trace: &[f64], window: &[f64], offset: f64) -> Vec<Complex64> {
    let m = trace.len();
    let mut buf: Vec<Complex64> = trace
        .iter()
        .zip(window)
        .map(|(x, w)| Complex64::new((x - offset) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf.truncate(m / 2 + 1);
    buf
}

/// Windowed DFT magnitudes of a delay trace.
pub fn spectrogram(trace: &[f64], delays: &[f64], opts: SpectrogramOptions) -> Result<Spectrogram> {
    if trace.len() != delays.len() {
        return Err(VssError::Input(format!(
            "trace has {} samples for {} delays",
            trace.len(),
            delays.len()
        )));
    }
    let dt = check_uniform(delays)?;
    let m = trace.len();
    let w = opts.window.weights(m);
    let mean = trace.iter().sum::<f64>() / m as f64;
    let raw = one_sided(trace, &w, 0.0);
    let magnitude: Vec<f64> = if opts.dc_removal {
        one_sided(trace, &w, mean).iter().map(|z| z.norm()).collect()
    } else {
        raw.iter().map(|z| z.norm()).collect()
    };
    let de = 2.0 * PI * HBAR_EV_FS / (m as f64 * dt);
    Ok(Spectrogram {
        bin_energies: (0..=m / 2).map(|k| k as f64 * de).collect(),
        magnitude,
        raw_magnitude: raw.iter().map(|z| z.norm()).collect(),
        window: opts.window,
        dc_removed: opts.dc_removal,
        axis: EnergyAxis::Delay,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub energy: f64,
    pub magnitude: f64,
}

fn band_start(spec: &Spectrogram, min_energy: f64) -> Result<usize> {
    let spacing = spec.bin_spacing();
    if min_energy < spacing * (1.0 - 1e-12) {
        return Err(VssError::Input(format!(
            "minimum energy {min_energy} eV is below one bin ({spacing} eV)"
        )));
    }
    let start = spec
        .bin_energies
        .iter()
        .position(|&e| e >= min_energy)
        .ok_or_else(|| VssError::Input(format!("no bins above {min_energy} eV")))?;
    Ok(start)
}

/// Strict local maxima above `rel_threshold * max` in the band
/// `[min_energy, ..)`, refined by a three-point parabola, strongest first.
pub fn detect_peaks(spec: &Spectrogram, min_energy: f64, rel_threshold: f64) -> Result<Vec<Peak>> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(VssError::Input(format!(
            "relative threshold must lie in (0, 1), got {rel_threshold}"
        )));
    }
    let start = band_start(spec, min_energy)?;
    let y = &spec.magnitude;
    let top = y[start..].iter().copied().fold(0.0, f64::max);
    let spacing = spec.bin_spacing();
    let mut peaks = Vec::new();
    if !(top > 0.0) {
        return Ok(peaks);
    }
    for k in start.max(1)..y.len() - 1 {
        let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
        if b > a && b > c && b >= rel_threshold * top {
            let denom = a - 2.0 * b + c;
            let delta = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
            peaks.push(Peak {
                energy: spec.bin_energies[k] + delta * spacing,
                magnitude: b - 0.25 * (a - c) * delta,
            });
        }
    }
    peaks.sort_by(|p, q| q.magnitude.total_cmp(&p.magnitude).then(p.energy.total_cmp(&q.energy)));
    Ok(peaks)
}

/// Mean magnitude at the peak bins over the median of the remaining bins of
/// the band (two bins either side of each peak are excluded).
pub fn signal_to_background(spec: &Spectrogram, peak_energies: &[f64], min_energy: f64) -> Result<f64> {
    let start = band_start(spec, min_energy)?;
    if peak_energies.is_empty() {
        return Err(VssError::Input("no peaks given".into()));
    }
    let spacing = spec.bin_spacing();
    let y = &spec.magnitude;
    let last = y.len() - 1;
    let bins: Vec<usize> = peak_energies
        .iter()
        .map(|e| ((e - spec.bin_energies[0]) / spacing).round().clamp(0.0, last as f64) as usize)
        .collect();
    let signal = bins.iter().map(|&k| y[k]).sum::<f64>() / bins.len() as f64;
    let mut rest: Vec<f64> = (start..y.len())
        .filter(|&k| bins.iter().all(|&p| k.abs_diff(p) > 2))
        .map(|k| y[k])
        .collect();
    if rest.is_empty() {
        return Ok(MAX_SIGNAL_TO_BACKGROUND);
    }
    rest.sort_by(f64::total_cmp);
    let mid = rest.len() / 2;
    let median = if rest.len() % 2 == 1 {
        rest[mid]
    } else {
        0.5 * (rest[mid - 1] + rest[mid])
    };
    if !(median > 0.0) {
        return Ok(MAX_SIGNAL_TO_BACKGROUND);
    }
    Ok((signal / median).min(MAX_SIGNAL_TO_BACKGROUND))
}

/// Normalization applied to each ensemble member before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnsembleNormalization {
    /// Divide each total trace by its maximum over the delay, average the
    /// traces, then transform once.
    #[default]
    Delay,
    /// Transform each normalized trace, divide its magnitude by its own
    /// maximum (DC bin excluded), average the magnitudes.
    Fourier,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub target_photon_number: f64,
    pub lengths: Vec<f64>,
    pub delays: Vec<f64>,
    /// Mean of the max-normalized member traces.
    pub averaged_trace: Vec<f64>,
    /// On the delay-energy axis; see [`Spectrogram::to_mismatch_axis`].
    pub averaged_spectrogram: Spectrogram,
    /// Spectrogram of the first member's normalized trace.
    pub first_member_spectrogram: Spectrogram,
}

/// `count` lengths spaced uniformly over `[min, max]`, endpoints included.
pub fn ensemble_lengths(min_m: f64, max_m: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(VssError::config("ensemble needs at least one member"));
    }
    if !(min_m > 0.0) || (count > 1 && !(max_m > min_m)) {
        return Err(VssError::config(format!(
            "ensemble length range [{min_m}, {max_m}] is invalid"
        )));
    }
    if count == 1 {
        return Ok(vec![min_m]);
    }
    let step = (max_m - min_m) / (count - 1) as f64;
    Ok((0..count).map(|i| min_m + i as f64 * step).collect())
}

fn normalize_by_max(trace: &[f64]) -> Result<Vec<f64>> {
    let top = trace.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        return Err(VssError::Degenerate("member trace has no positive maximum".into()));
    }
    Ok(trace.iter().map(|x| x / top).collect())
}

/// Averages max-normalized traces `traces[member]` taken on `delays`.
pub fn average_members(
    traces: &[Vec<f64>],
    delays: &[f64],
    opts: SpectrogramOptions,
    norm: EnsembleNormalization,
) -> Result<(Vec<f64>, Spectrogram, Spectrogram)> {
    if traces.is_empty() {
        return Err(VssError::Input("empty ensemble".into()));
    }
    let m = delays.len();
    let normalized = traces
        .iter()
        .map(|t| normalize_by_max(t))
        .collect::<Result<Vec<_>>>()?;
    let mut avg = vec![0.0; m];
    for t in &normalized {
        for (a, x) in avg.iter_mut().zip(t) {
            *a += x;
        }
    }
    let count = normalized.len() as f64;
    avg.iter_mut().for_each(|a| *a /= count);
    let first = spectrogram(&normalized[0], delays, opts)?;
    let spec = match norm {
        EnsembleNormalization::Delay => spectrogram(&avg, delays, opts)?,
        EnsembleNormalization::Fourier => {
            let mut acc = vec![0.0; m / 2 + 1];
            let mut raw = vec![0.0; m / 2 + 1];
            let mut template = None;
            for t in &normalized {
                let s = spectrogram(t, delays, opts)?;
                let top = s.magnitude[1..].iter().copied().fold(0.0, f64::max);
                let rtop = s.raw_magnitude.iter().copied().fold(0.0, f64::max);
                if !(top > 0.0 && rtop > 0.0) {
                    return Err(VssError::Degenerate("member spectrum is flat".into()));
                }
                for k in 0..acc.len() {
                    acc[k] += s.magnitude[k] / top / count;
                    raw[k] += s.raw_magnitude[k] / rtop / count;
                }
                template.get_or_insert(s);
            }
            let mut s = template.expect("non-empty ensemble");
            s.magnitude = acc;
            s.raw_magnitude = raw;
            s
        }
    };
    Ok((avg, spec, first))
}

/// Runs every crystal length end to end (one Schmidt decomposition per
/// member, reused for all targets) and averages per target photon number.
pub fn ensemble_average(
    base: &Experiment,
    lengths: &[f64],
    targets: &[f64],
    opts: SpectrogramOptions,
    norm: EnsembleNormalization,
) -> Result<Vec<EnsembleResult>> {
    if lengths.is_empty() {
        return Err(VssError::config("ensemble needs at least one length"));
    }
    if lengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VssError::config("ensemble lengths must be strictly increasing"));
    }
    // members[l][t] = total trace
    let members: Vec<Vec<Vec<f64>>> = lengths
        .par_iter()
        .map(|&l| {
            let run = || -> Result<Vec<Vec<f64>>> {
                let outs = base.with_length(l)?.run_many(targets)?;
                Ok(outs.into_iter().map(|o| o.trace.totals()).collect())
            };
            run().map_err(|e| VssError::Ensemble {
                length_m: l,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    let delays = crate::tpa::delay_grid(base.delay_points, base.delay_max_fs)?;

    targets
        .iter()
        .enumerate()
        .map(|(t, &target)| {
            let traces: Vec<Vec<f64>> = members.iter().map(|m| m[t].clone()).collect();
            let (avg, spec, first) = average_members(&traces, &delays, opts, norm)?;
            Ok(EnsembleResult {
                target_photon_number: target,
                lengths: lengths.to_vec(),
                delays: delays.clone(),
                averaged_trace: avg,
                averaged_spectrogram: spec,
                first_member_spectrogram: first,
            })
        })
        .collect()
}
