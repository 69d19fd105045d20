use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use nmqsd::noise::{empirical_covariance, generate_noise, ComplexEstimate, NoiseTrajectory};
use nmqsd::observables::{
    absorption_autocorrelation, ensemble_transfer, lowest_peak_window, peak_width, spectrum_from_autocorrelation,
    spectrum_mean, spectrum_variance, EnsembleOptions, EnsembleResult, Normalization, Spectrum,
};
use nmqsd::oracle::{
    monomer_exact_autocorrelation, pseudomode_dimer_autocorrelation, pseudomode_dimer_populations, PseudomodeConfig,
};
use nmqsd::propagate::{default_step, zero_noise_autocorrelation};
use nmqsd::{AggregateModel, ElectronicState, FrequencyGrid, TimeGrid};

use crate::config::{Experiment, Plan};

#[derive(Debug)]
pub enum Failure {
    /// Bad output location and similar: exit code 1.
    Setup(String),
    /// Exit code 2.
    Numerical(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Setup(format!("writing results: {e}"))
    }
}

fn numerical(context: &str, e: nmqsd::Error) -> Failure {
    Failure::Numerical(format!("{context}: {e}"))
}

/// What a run produced beyond its CSV files.
#[derive(Debug, Default)]
pub struct Report {
    /// `key: value` lines for the manifest.
    pub summary: Vec<(String, String)>,
    pub excluded: usize,
    /// Numerical failures that did not stop the run (sweeps).
    pub failures: Vec<String>,
}

impl Report {
    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }
}

fn create(path: &Path) -> std::io::Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

pub fn write_spectrum(path: &Path, s: &Spectrum) -> std::io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "frequency,intensity")?;
    for (f, v) in s.frequencies.iter().zip(&s.values) {
        writeln!(w, "{f},{v}")?;
    }
    w.flush()
}

fn write_autocorrelation(path: &Path, grid: &TimeGrid, c: &[C64]) -> std::io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "time,re,im")?;
    for (t, z) in grid.times().zip(c) {
        writeln!(w, "{t},{},{}", z.re, z.im)?;
    }
    w.flush()
}

/// Sites are written 1-based.
pub fn write_populations(path: &Path, r: &EnsembleResult) -> std::io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "time,site,population,stderr")?;
    for (k, t) in r.grid.times().enumerate() {
        for n in 0..r.n_sites() {
            writeln!(w, "{t},{},{},{}", n + 1, r.populations[(n, k)], r.population_stderr[(n, k)])?;
        }
    }
    w.flush()
}

fn write_density(path: &Path, r: &EnsembleResult, every: usize) -> std::io::Result<()> {
    let rho = r.density.as_ref().expect("density recorded");
    let mut w = create(path)?;
    writeln!(w, "time,row,col,re,im")?;
    for (k, t) in r.grid.times().enumerate().step_by(every) {
        for a in 0..r.n_sites() {
            for b in 0..r.n_sites() {
                let z = rho[(k, a, b)];
                writeln!(w, "{t},{},{},{},{}", a + 1, b + 1, z.re, z.im)?;
            }
        }
    }
    w.flush()
}

fn write_traces(path: &Path, r: &EnsembleResult) -> std::io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "trajectory,time,site,population")?;
    for (i, tr) in r.traces.iter().enumerate() {
        for (k, t) in r.grid.times().enumerate() {
            for n in 0..r.n_sites() {
                writeln!(w, "{i},{t},{},{}", n + 1, tr[(n, k)])?;
            }
        }
    }
    w.flush()
}

fn freq_grid(plan: &Plan) -> FrequencyGrid {
    let n = &plan.config.numerics;
    FrequencyGrid::new(n.freq_min.unwrap(), n.freq_max.unwrap(), n.freq_points.unwrap()).expect("validated")
}

fn time_grid(plan: &Plan, model: &AggregateModel) -> Result<TimeGrid, Failure> {
    let n = &plan.config.numerics;
    let h = n.step.unwrap_or_else(|| default_step(model, &plan.kernel));
    TimeGrid::covering(n.t_max.unwrap(), h).map_err(|e| Failure::Setup(format!("numerics: {e}")))
}

pub fn run(plan: &Plan, out: &Path) -> Result<Report, Failure> {
    fs::create_dir_all(out)
        .map_err(|e| Failure::Setup(format!("cannot create output directory {}: {e}", out.display())))?;
    let mut report = Report::default();
    match plan.config.experiment {
        Experiment::MonomerSpectrum => monomer_spectrum(plan, out, &mut report)?,
        Experiment::AggregateSpectrum => aggregate_spectrum(plan, out, &mut report)?,
        Experiment::Transfer => transfer(plan, out, &mut report)?,
        Experiment::NoiseCheck => noise_check(plan, out, &mut report)?,
        Experiment::OracleCompare => oracle_compare(plan, out, &mut report)?,
    }
    Ok(report)
}

fn line_spectrum(plan: &Plan, model: &AggregateModel, report: &mut Report, label: &str) -> Result<(TimeGrid, Vec<C64>, Spectrum), Failure> {
    let grid = time_grid(plan, model)?;
    report.note(format!("{label}step"), grid.step());
    let c = absorption_autocorrelation(model, &plan.kernel, plan.polarization, grid)
        .map_err(|e| numerical("propagation", e))?;
    let s = spectrum_from_autocorrelation(
        &c,
        &grid,
        plan.config.numerics.damping_time.unwrap(),
        &freq_grid(plan),
        Normalization::UnitArea,
    )
    .map_err(|e| numerical("spectrum", e))?;
    Ok((grid, c, s))
}

fn monomer_spectrum(plan: &Plan, out: &Path, report: &mut Report) -> Result<(), Failure> {
    let model = &plan.aggregates[0].model;
    let (grid, c, s) = line_spectrum(plan, model, report, "")?;
    write_spectrum(&out.join("spectrum.csv"), &s)?;
    write_autocorrelation(&out.join("autocorrelation.csv"), &grid, &c)?;

    let e0 = model.site_energies()[0];
    let exact: Vec<C64> = monomer_exact_autocorrelation(&plan.kernel, &grid)
        .into_iter()
        .zip(grid.times())
        .map(|(z, t)| z * C64::new(0.0, -e0 * t).exp())
        .collect();
    let dev = c.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    report.note("max_deviation_from_exact", dev);
    report.note("mean", spectrum_mean(&s).map_err(|e| numerical("moments", e))?);
    report.note("std_dev", spectrum_variance(&s).map_err(|e| numerical("moments", e))?.sqrt());
    Ok(())
}

fn aggregate_spectrum(plan: &Plan, out: &Path, report: &mut Report) -> Result<(), Failure> {
    let mut table = create(&out.join("summary.csv"))?;
    writeln!(table, "n_sites,status,mean,variance,peak_center,peak_fwhm")?;
    for agg in &plan.aggregates {
        let n = agg.n_sites;
        let label = format!("n{n}_");
        match line_spectrum(plan, &agg.model, report, &label) {
            Ok((_, _, s)) => {
                write_spectrum(&out.join(format!("spectrum_N{n}.csv")), &s)?;
                // Undefined quantities are left empty; the reason goes to the manifest.
                let mut cell = |key: &str, r: nmqsd::Result<f64>| match r {
                    Ok(x) => x.to_string(),
                    Err(e) => {
                        report.note(&format!("{label}{key}"), e);
                        String::new()
                    }
                };
                let mean = cell("mean", spectrum_mean(&s));
                let var = cell("variance", spectrum_variance(&s));
                let peak = lowest_peak_window(&s, 0.3).and_then(|(lo, hi)| peak_width(&s, lo, hi));
                let (center, fwhm) = match peak {
                    Ok(p) => (p.center.to_string(), p.fwhm.to_string()),
                    Err(e) => (cell("peak", Err(e)), String::new()),
                };
                writeln!(table, "{n},ok,{mean},{var},{center},{fwhm}")?;
            }
            Err(Failure::Numerical(msg)) => {
                writeln!(table, "{n},failed,,,,")?;
                eprintln!("N = {n}: {msg}");
                report.failures.push(format!("N = {n}: {msg}"));
            }
            Err(other) => return Err(other),
        }
    }
    table.flush()?;
    Ok(())
}

fn transfer(plan: &Plan, out: &Path, report: &mut Report) -> Result<(), Failure> {
    let e = &plan.config.ensemble;
    let model = &plan.aggregates[0].model;
    let grid = time_grid(plan, model)?;
    report.note("step", grid.step());
    let mut options = EnsembleOptions::new(e.n_trajectories.unwrap(), e.master_seed.unwrap())
        .with_traces(e.traces.unwrap());
    if e.record_density.unwrap() {
        options = options.with_density();
    }
    let r = ensemble_transfer(model, &plan.kernel, e.initial_site.unwrap() - 1, grid, &options)
        .map_err(|e| numerical("ensemble", e))?;
    report.excluded = r.n_excluded;
    if !r.excluded_indices.is_empty() {
        let list: Vec<String> = r.excluded_indices.iter().map(|i| i.to_string()).collect();
        report.note("excluded_trajectory_indices", list.join(" "));
    }
    write_populations(&out.join("populations.csv"), &r)?;
    if r.density.is_some() {
        let every = e.snapshot_every.unwrap_or_else(|| grid.len().div_ceil(200).max(1));
        report.note("density_snapshot_every", every);
        write_density(&out.join("density.csv"), &r, every)?;
    }
    if !r.traces.is_empty() {
        write_traces(&out.join("traces.csv"), &r)?;
    }
    Ok(())
}

fn noise_check(plan: &Plan, out: &Path, report: &mut Report) -> Result<(), Failure> {
    const BATCH: usize = 500;
    let s = &plan.config.noise;
    let seed = plan.config.ensemble.master_seed.unwrap();
    let (m, h, max_lag, stride, limit) =
        (s.samples.unwrap(), s.step.unwrap(), s.max_lag.unwrap(), s.lag_stride.unwrap(), s.sigma_limit.unwrap());
    let grid = TimeGrid::covering(2.0 * max_lag, h).map_err(|e| Failure::Setup(format!("noise: {e}")))?;
    let lags: Vec<usize> = (0..).map(|k| k * stride).take_while(|&l| l as f64 * grid.step() <= max_lag).collect();

    // Batch estimates are combined as independent means of equal weight.
    let kinds = ["auto", "pseudo", "cross", "cross_pseudo"];
    let mut parts: Vec<Vec<Vec<(ComplexEstimate, usize)>>> = vec![vec![Vec::new(); lags.len()]; kinds.len()];
    let mut start = 0;
    while start < m {
        let size = BATCH.min(m - start);
        let ens: Vec<NoiseTrajectory> = (start..start + size)
            .map(|i| generate_noise(&plan.kernel, 2, grid, seed, i as u64))
            .collect::<Result<_, _>>()
            .map_err(|e| numerical("noise", e))?;
        let same = empirical_covariance(&ens, 0, 0, &lags).map_err(|e| numerical("covariance", e))?;
        let cross = empirical_covariance(&ens, 0, 1, &lags).map_err(|e| numerical("covariance", e))?;
        for l in 0..lags.len() {
            parts[0][l].push((same.covariance[l], size));
            parts[1][l].push((same.pseudo_covariance[l], size));
            parts[2][l].push((cross.covariance[l], size));
            parts[3][l].push((cross.pseudo_covariance[l], size));
        }
        start += size;
    }
    let combine = |ps: &[(ComplexEstimate, usize)]| {
        let total: f64 = ps.iter().map(|(_, n)| *n as f64).sum();
        let w = |n: usize| n as f64 / total;
        ComplexEstimate {
            value: ps.iter().map(|(e, n)| e.value * w(*n)).sum(),
            stderr_re: ps.iter().map(|(e, n)| (e.stderr_re * w(*n)).powi(2)).sum::<f64>().sqrt(),
            stderr_im: ps.iter().map(|(e, n)| (e.stderr_im * w(*n)).powi(2)).sum::<f64>().sqrt(),
        }
    };

    let mut w = create(&out.join("covariance.csv"))?;
    writeln!(w, "lag,kind,re,im,stderr_re,stderr_im,target_re,target_im,sigmas")?;
    let mut worst: f64 = 0.0;
    for (k, kind) in kinds.iter().enumerate() {
        for (l, &lag) in lags.iter().enumerate() {
            let tau = grid.time(lag);
            let est = combine(&parts[k][l]);
            // ζ = z*, so E[z*(t+τ) z(t)] = conj α(τ); everything else vanishes.
            let target = if k == 0 { plan.kernel.eval(tau).conj() } else { C64::new(0.0, 0.0) };
            let sig = est.sigmas_from(target);
            worst = worst.max(sig);
            writeln!(
                w,
                "{tau},{kind},{},{},{},{},{},{},{sig}",
                est.value.re, est.value.im, est.stderr_re, est.stderr_im, target.re, target.im
            )?;
        }
    }
    w.flush()?;
    report.note("noise_step", grid.step());
    report.note("lags", lags.len());
    report.note("worst_sigmas", worst);
    if worst > limit {
        report.failures.push(format!("noise statistics off by {worst:.2} standard errors (limit {limit})"));
        report.note("noise_check", "FAIL");
    } else {
        report.note("noise_check", "PASS");
    }
    Ok(())
}

fn oracle_compare(plan: &Plan, out: &Path, report: &mut Report) -> Result<(), Failure> {
    let model = &plan.aggregates[0].model;
    let mode = plan.spectral_density.as_ref().expect("validated").modes()[0];
    let e = &plan.config.ensemble;
    let grid = time_grid(plan, model)?;
    report.note("step", grid.step());
    let site = e.initial_site.unwrap() - 1;
    let psi0 = ElectronicState::localized(2, site).map_err(|e| numerical("initial state", e))?;
    let config = PseudomodeConfig { fock_cutoff: plan.config.oracle.fock_cutoff.unwrap() };

    let options = EnsembleOptions::new(e.n_trajectories.unwrap(), e.master_seed.unwrap());
    let ens = ensemble_transfer(model, &plan.kernel, site, grid, &options).map_err(|e| numerical("ensemble", e))?;
    report.excluded = ens.n_excluded;
    let (reference, top_p) =
        pseudomode_dimer_populations(model, &mode, &config, &grid, &psi0).map_err(|e| numerical("oracle", e))?;
    write_populations(&out.join("populations_nmqsd.csv"), &ens)?;
    let oracle_ens = EnsembleResult {
        populations: reference.clone(),
        population_stderr: ndarray::Array2::zeros(reference.dim()),
        ..ens.clone()
    };
    write_populations(&out.join("populations_oracle.csv"), &oracle_ens)?;
    let pop_dev = (&ens.populations - &reference).mapv(f64::abs).fold(0.0f64, |m, &x| m.max(x));
    report.note("max_population_deviation", pop_dev);

    let bright = model.bright_state(match plan.polarization {
        nmqsd::observables::Polarization::Fixed(p) => p,
        nmqsd::observables::Polarization::Isotropic => [1.0, 0.0, 0.0],
    });
    let bright = bright.map_err(|e| numerical("bright state", e))?;
    let c = zero_noise_autocorrelation(model, &plan.kernel, &bright, grid).map_err(|e| numerical("propagation", e))?;
    let (c_ref, top_c) =
        pseudomode_dimer_autocorrelation(model, &mode, &config, &grid, &bright).map_err(|e| numerical("oracle", e))?;
    report.note("top_fock_population", top_p.max(top_c));
    let damping = plan.config.numerics.damping_time.unwrap();
    let freqs = freq_grid(plan);
    let a = spectrum_from_autocorrelation(&c, &grid, damping, &freqs, Normalization::UnitArea)
        .map_err(|e| numerical("spectrum", e))?;
    let b = spectrum_from_autocorrelation(&c_ref, &grid, damping, &freqs, Normalization::UnitArea)
        .map_err(|e| numerical("spectrum", e))?;
    write_spectrum(&out.join("spectrum_nmqsd.csv"), &a)?;
    write_spectrum(&out.join("spectrum_oracle.csv"), &b)?;
    let l1: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum::<f64>() * freqs.spacing();
    report.note("spectrum_l1_distance", l1);
    Ok(())
}
