//! One function per subcommand. Each writes data.csv, manifest.toml and
//! plot.svg (plus command-specific extras) into the output directory.

use toml::Table;
use vss_core::experiment::Experiment;
use vss_core::schmidt::{gain_for_photon_number, mode_gains, photon_number, schmidt_number_uv};
use vss_core::spectro::{
    detect_peaks, ensemble_average, ensemble_lengths, signal_to_background, spectrogram, Peak,
    Spectrogram,
};
use vss_core::tpa::{delay_integrated, flux_sweep, SweepOptions};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{float_value, write_manifest, Cell, Derived, ManifestInfo, OutDir, Timer};
use crate::svg::{heatmaps, line_chart, Axes, Heatmap, Series};

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub seed: u64,
    pub threads: usize,
    pub out: OutDir,
}

/// Longest side of the decimated joint-spectrum dump.
const JOINT_MAX_SIDE: usize = 128;

impl Context<'_> {
    fn finish(&self, command: &str, files: &[&str], derived: Derived, timer: &Timer) -> Result<(), CliError> {
        write_manifest(
            &self.out,
            &ManifestInfo {
                command,
                seed: self.seed,
                config_toml: &self.cfg.to_toml(),
                files,
            },
            derived,
            timer,
            self.threads,
        )
    }
}

fn grid_derived(d: &mut Derived, exp: &Experiment) {
    // the half width actually used after pole placement
    d.f("grid_half_width_ev", exp.grid.half_width_ev);
    d.f("grid_step_ev", exp.grid.step());
}

fn peak_rows(spec: &Spectrogram, cfg: &RunConfig) -> Result<Vec<Peak>, CliError> {
    Ok(detect_peaks(
        spec,
        cfg.analysis.peak_min_energy_ev,
        cfg.analysis.peak_rel_threshold,
    )?)
}

fn sbr(spec: &Spectrogram, peaks: &[Peak], cfg: &RunConfig) -> Result<Option<f64>, CliError> {
    if peaks.is_empty() {
        return Ok(None);
    }
    let e: Vec<f64> = peaks.iter().map(|p| p.energy).collect();
    Ok(Some(signal_to_background(spec, &e, cfg.analysis.peak_min_energy_ev)?))
}

/// Single delay scan at the configured length and photon number.
pub fn cmd_spectrogram(ctx: &Context<'_>) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let mut timer = Timer::start();
    let exp = cfg.experiment(ctx.seed)?;
    let decomp = exp.decomposition()?;
    timer.stage("schmidt");
    let run = exp.run_on(&decomp, cfg.beam.target_photon_number)?;
    timer.stage("scan");
    let spec = spectrogram(&run.trace.totals(), &run.trace.delays, cfg.spectrogram_options())?;
    let mm = spec.to_mismatch_axis();
    let peaks = peak_rows(&mm, cfg)?;
    let ratio = sbr(&mm, &peaks, cfg)?;
    timer.stage("spectrum");

    let out = &ctx.out;
    out.csv(
        "trace.csv",
        &["delay_fs", "noise", "classical", "quantum", "total"],
        run.trace.delays.iter().zip(&run.trace.grouped).map(|(t, g)| {
            vec![Cell::F(*t), Cell::F(g.noise), Cell::F(g.classical), Cell::F(g.quantum), Cell::F(g.total)]
        }),
    )?;
    out.csv(
        "data.csv",
        &["energy_ev", "mismatch_energy_ev", "magnitude", "raw_magnitude"],
        (0..spec.magnitude.len()).map(|k| {
            vec![
                Cell::F(spec.bin_energies[k]),
                Cell::F(mm.bin_energies[k]),
                Cell::F(spec.magnitude[k]),
                Cell::F(spec.raw_magnitude[k]),
            ]
        }),
    )?;
    out.csv(
        "peaks.csv",
        &["energy_ev", "magnitude"],
        peaks.iter().map(|p| vec![Cell::F(p.energy), Cell::F(p.magnitude)]),
    )?;
    out.text(
        "plot.svg",
        &line_chart(
            Axes {
                title: "TPA spectrogram",
                x_label: "mismatch energy (eV)",
                y_label: "magnitude",
                log_x: false,
                log_y: false,
            },
            &[Series {
                name: "|FFT|",
                points: mm.bin_energies.iter().copied().zip(mm.magnitude.iter().copied()).skip(1).collect(),
            }],
        ),
    )?;
    timer.stage("write");

    let mut d = Derived::default();
    grid_derived(&mut d, &exp);
    d.u("schmidt_rank", decomp.rank());
    d.f("gain", run.gain);
    d.f("photon_number", run.photon_number);
    d.opt("schmidt_number_uv", run.schmidt_number_uv);
    d.f("correlation_coefficient", exp.amplitude()?.correlation_coefficient()?);
    d.f("bin_spacing_ev", mm.bin_spacing());
    d.u("peak_count", peaks.len());
    d.opt("signal_to_background", ratio);
    ctx.finish(
        "spectrogram",
        &["data.csv", "trace.csv", "peaks.csv", "plot.svg"],
        d,
        &timer,
    )
}

/// Crystal-length ensemble average, one block per photon number.
pub fn cmd_ensemble(ctx: &Context<'_>) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let mut timer = Timer::start();
    let exp = cfg.experiment(ctx.seed)?;
    let e = &cfg.ensemble;
    let lengths = ensemble_lengths(e.length_min_m, e.length_max_m, e.count)?;
    let targets = cfg.ensemble_targets();
    let results = ensemble_average(
        &exp,
        &lengths,
        &targets,
        cfg.spectrogram_options(),
        cfg.ensemble_normalization(),
    )?;
    timer.stage("members");

    let mut data = Vec::new();
    let mut trace = Vec::new();
    let mut peak_out = Vec::new();
    let mut summary = Vec::new();
    let mut series = Vec::new();
    for r in &results {
        let n = r.target_photon_number;
        let spec = &r.averaged_spectrogram;
        let mm = spec.to_mismatch_axis();
        let peaks = peak_rows(&mm, cfg)?;
        let ratio = sbr(&mm, &peaks, cfg)?;
        for k in 0..spec.magnitude.len() {
            data.push(vec![
                Cell::F(n),
                Cell::F(spec.bin_energies[k]),
                Cell::F(mm.bin_energies[k]),
                Cell::F(spec.magnitude[k]),
                Cell::F(spec.raw_magnitude[k]),
                Cell::F(r.first_member_spectrogram.magnitude[k]),
            ]);
        }
        for (t, x) in r.delays.iter().zip(&r.averaged_trace) {
            trace.push(vec![Cell::F(n), Cell::F(*t), Cell::F(*x)]);
        }
        for p in &peaks {
            peak_out.push(vec![Cell::F(n), Cell::F(p.energy), Cell::F(p.magnitude)]);
        }
        let mut row = Table::new();
        row.insert("photon_number".into(), float_value(n));
        row.insert("peak_count".into(), toml::Value::Integer(peaks.len() as i64));
        if let Some(x) = ratio {
            row.insert("signal_to_background".into(), float_value(x));
        }
        row.insert("bin_spacing_ev".into(), float_value(mm.bin_spacing()));
        summary.push(row);
        series.push((
            format!("N = {n}"),
            mm.bin_energies.iter().copied().zip(mm.magnitude.iter().copied()).skip(1).collect::<Vec<_>>(),
        ));
    }
    timer.stage("analysis");

    let out = &ctx.out;
    out.csv(
        "data.csv",
        &[
            "photon_number",
            "energy_ev",
            "mismatch_energy_ev",
            "magnitude",
            "raw_magnitude",
            "first_member_magnitude",
        ],
        data,
    )?;
    out.csv("trace.csv", &["photon_number", "delay_fs", "averaged_total"], trace)?;
    out.csv("peaks.csv", &["photon_number", "energy_ev", "magnitude"], peak_out)?;
    let series: Vec<Series<'_>> = series
        .iter()
        .map(|(name, points)| Series {
            name,
            points: points.clone(),
        })
        .collect();
    out.text(
        "plot.svg",
        &line_chart(
            Axes {
                title: "Ensemble-averaged TPA spectrogram",
                x_label: "mismatch energy (eV)",
                y_label: "magnitude",
                log_x: false,
                log_y: false,
            },
            &series,
        ),
    )?;
    timer.stage("write");

    // derived values of the base crystal, for reference
    let decomp = exp.decomposition()?;
    let mut d = Derived::default();
    grid_derived(&mut d, &exp);
    d.u("member_count", lengths.len());
    d.f("length_min_m", lengths[0]);
    d.f("length_max_m", lengths[lengths.len() - 1]);
    d.u("base_schmidt_rank", decomp.rank());
    d.list("targets", summary);
    ctx.finish(
        "ensemble",
        &["data.csv", "trace.csv", "peaks.csv", "plot.svg"],
        d,
        &timer,
    )
}

/// Delay-integrated groups against photon number, with log-log fits.
pub fn cmd_flux_sweep(ctx: &Context<'_>) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let mut timer = Timer::start();
    let exp = cfg.experiment(ctx.seed)?;
    let decomp = exp.decomposition()?;
    timer.stage("schmidt");
    let opts = SweepOptions {
        delay_points: cfg.scan.delay_points,
        delay_max_fs: cfg.scan.delay_max_fs,
        fit_min: cfg.sweep.fit_min,
        fit_max: cfg.sweep.fit_max,
    };
    let table = flux_sweep(&decomp, &exp.medium, &cfg.sweep.photon_numbers, &opts)?;
    timer.stage("sweep");

    let out = &ctx.out;
    out.csv(
        "data.csv",
        &["photon_number", "gain", "noise", "classical", "quantum", "background"],
        table.rows.iter().map(|r| {
            let i = &r.integrated;
            vec![
                Cell::F(r.photon_number),
                Cell::F(r.gain),
                Cell::F(i.noise),
                Cell::F(i.classical),
                Cell::F(i.quantum),
                Cell::F(i.background()),
            ]
        }),
    )?;
    let opt = |x: Option<f64>| x.map(Cell::F).unwrap_or(Cell::S(String::new()));
    out.csv(
        "fit.csv",
        &["quantum_slope", "background_slope", "crossover", "fit_min", "fit_max"],
        [vec![
            opt(table.quantum_slope),
            opt(table.background_slope),
            opt(table.crossover),
            Cell::F(opts.fit_min),
            Cell::F(opts.fit_max),
        ]],
    )?;
    let pick = |f: fn(&vss_core::tpa::DelayIntegrated) -> f64| {
        table
            .rows
            .iter()
            .map(|r| (r.photon_number, f(&r.integrated).abs()))
            .collect::<Vec<_>>()
    };
    out.text(
        "plot.svg",
        &line_chart(
            Axes {
                title: "Delay-integrated TPA signal",
                x_label: "photon number",
                y_label: "|integrated signal|",
                log_x: true,
                log_y: true,
            },
            &[
                Series {
                    name: "quantum",
                    points: pick(|i| i.quantum),
                },
                Series {
                    name: "noise + classical",
                    points: pick(|i| i.background()),
                },
                Series {
                    name: "noise",
                    points: pick(|i| i.noise),
                },
                Series {
                    name: "classical",
                    points: pick(|i| i.classical),
                },
            ],
        ),
    )?;
    timer.stage("write");

    let mut d = Derived::default();
    grid_derived(&mut d, &exp);
    d.u("schmidt_rank", decomp.rank());
    d.f("correlation_coefficient", exp.amplitude()?.correlation_coefficient()?);
    d.opt("quantum_slope", table.quantum_slope);
    d.opt("background_slope", table.background_slope);
    d.opt("crossover_photon_number", table.crossover);
    ctx.finish("flux-sweep", &["data.csv", "fit.csv", "plot.svg"], d, &timer)
}

/// Joint spectra, correlation coefficients and integrated groups per pump duration.
pub fn cmd_joint_spectrum(ctx: &Context<'_>) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let mut timer = Timer::start();
    let base = cfg.experiment(ctx.seed)?;
    let target = cfg.beam.target_photon_number;

    let mut rows = Vec::new();
    let mut joint = Vec::new();
    let mut panels = Vec::new();
    let mut summary = Vec::new();
    let n = base.grid.len();
    let stride = n.div_ceil(JOINT_MAX_SIDE);
    for &tau_p in &cfg.joint.pump_durations_fs {
        let exp = base.with_duration(tau_p)?;
        let amp = exp.amplitude()?;
        let rho = amp.correlation_coefficient()?;
        let decomp = exp.decomposition()?;
        let run = exp.run_on(&decomp, target)?;
        let i = delay_integrated(&run.trace);
        rows.push(vec![
            Cell::F(tau_p),
            Cell::F(rho),
            Cell::U(decomp.rank()),
            run.schmidt_number_uv.map(Cell::F).unwrap_or(Cell::S(String::new())),
            Cell::F(run.gain),
            Cell::F(i.noise),
            Cell::F(i.classical),
            Cell::F(i.quantum),
        ]);
        let idx: Vec<usize> = (0..n).step_by(stride).collect();
        let mut cells = Vec::with_capacity(idx.len() * idx.len());
        for &js in &idx {
            for &ji in &idx {
                let m = amp.values[[js, ji]].norm();
                joint.push(vec![
                    Cell::F(tau_p),
                    Cell::F(exp.grid.detuning(js)),
                    Cell::F(exp.grid.detuning(ji)),
                    Cell::F(m),
                ]);
                cells.push(m);
            }
        }
        panels.push((format!("tau_p = {tau_p} fs, rho = {rho:.2}"), cells, idx.len()));
        let mut row = Table::new();
        row.insert("pump_duration_fs".into(), float_value(tau_p));
        row.insert("correlation_coefficient".into(), float_value(rho));
        row.insert("schmidt_rank".into(), toml::Value::Integer(decomp.rank() as i64));
        row.insert("gain".into(), float_value(run.gain));
        row.insert("photon_number".into(), float_value(run.photon_number));
        if let Some(k) = run.schmidt_number_uv {
            row.insert("schmidt_number_uv".into(), float_value(k));
        }
        summary.push(row);
        timer.stage(&format!("tau_p_{tau_p}"));
    }

    let out = &ctx.out;
    out.csv(
        "data.csv",
        &[
            "pump_duration_fs",
            "correlation_coefficient",
            "schmidt_rank",
            "schmidt_number_uv",
            "gain",
            "noise",
            "classical",
            "quantum",
        ],
        rows,
    )?;
    out.csv(
        "joint.csv",
        &["pump_duration_fs", "signal_detuning_ev", "idler_detuning_ev", "modulus"],
        joint,
    )?;
    // rows = signal (upwards), columns = idler
    let panels: Vec<Heatmap<'_>> = panels
        .iter()
        .map(|(label, values, side)| Heatmap {
            label,
            values: values.clone(),
            rows: *side,
            cols: *side,
        })
        .collect();
    out.text("plot.svg", &heatmaps("|joint spectral amplitude|", &panels))?;
    timer.stage("write");

    let mut d = Derived::default();
    grid_derived(&mut d, &base);
    d.f("target_photon_number", target);
    d.list("durations", summary);
    ctx.finish("joint-spectrum", &["data.csv", "joint.csv", "plot.svg"], d, &timer)
}

/// Schmidt spectrum and Bogoliubov gains at the configured photon number.
pub fn cmd_schmidt(ctx: &Context<'_>) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let mut timer = Timer::start();
    let exp = cfg.experiment(ctx.seed)?;
    let amp = exp.amplitude()?;
    let decomp = exp.decomposition()?;
    timer.stage("schmidt");
    let gain = gain_for_photon_number(&decomp, cfg.beam.target_photon_number)?;
    let g = mode_gains(&decomp, gain)?;
    timer.stage("gain");

    let out = &ctx.out;
    out.csv(
        "data.csv",
        &["mode", "lambda", "u", "v"],
        (0..decomp.rank()).map(|k| vec![Cell::U(k), Cell::F(decomp.lambdas[k]), Cell::F(g.u[k]), Cell::F(g.v[k])]),
    )?;
    out.text(
        "plot.svg",
        &line_chart(
            Axes {
                title: "Schmidt coefficients",
                x_label: "mode",
                y_label: "lambda",
                log_x: false,
                log_y: true,
            },
            &[Series {
                name: "lambda",
                points: decomp.lambdas.iter().enumerate().map(|(k, l)| (k as f64, *l)).collect(),
            }],
        ),
    )?;
    timer.stage("write");

    let mut d = Derived::default();
    grid_derived(&mut d, &exp);
    d.u("schmidt_rank", decomp.rank());
    d.f("lambda_sum_sqr", decomp.lambdas.iter().map(|l| l * l).sum());
    d.f("gain", gain);
    d.f("photon_number", photon_number(&g));
    d.opt("schmidt_number_uv", schmidt_number_uv(&g).ok());
    d.f("correlation_coefficient", amp.correlation_coefficient()?);
    ctx.finish("schmidt", &["data.csv", "plot.svg"], d, &timer)
}
