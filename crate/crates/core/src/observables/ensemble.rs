//! Monte Carlo averages over noise realisations.
//!
//! Trajectories are grouped into fixed chunks by index. Each chunk is summed in
//! index order and chunk sums are combined in chunk order, so results are
//! bit-identical whatever the number of worker threads.

use ndarray::{Array2, Array3};
use num_complex::Complex64 as C64;

use crate::bath::BathKernel;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model::{AggregateModel, ElectronicState};
use crate::propagate::AuxTrack;
use crate::noise::generate_noise;

/// Largest tolerated fraction of trajectories that blow up.
pub const EXCLUSION_BUDGET: f64 = 1e-3;

const CHUNK: usize = 16;
/// Chunks computed between two folds into the running total.
const WAVE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub n_trajectories: usize,
    pub master_seed: u64,
    /// Accumulate the reduced density matrix at every grid point.
    pub record_density: bool,
    /// Keep the populations of this many individual trajectories.
    pub n_traces: usize,
}

impl EnsembleOptions {
    pub fn new(n_trajectories: usize, master_seed: u64) -> Self {
        Self { n_trajectories, master_seed, record_density: false, n_traces: 0 }
    }

    pub fn with_density(mut self) -> Self {
        self.record_density = true;
        self
    }

    pub fn with_traces(mut self, n: usize) -> Self {
        self.n_traces = n;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub grid: TimeGrid,
    /// `P_n(t_k)` at `[n, k]`.
    pub populations: Array2<f64>,
    pub population_stderr: Array2<f64>,
    /// `ρ_t` at `[k, a, b]`.
    pub density: Option<Array3<C64>>,
    /// Standard error of each density-matrix element (modulus).
    pub density_stderr: Option<Array3<f64>>,
    /// Mean and standard error of `⟨ψ|ψ⟩` (linear ensembles only).
    pub norm: Option<(Vec<f64>, Vec<f64>)>,
    /// Populations of the first trajectories, `[n, k]` each.
    pub traces: Vec<Array2<f64>>,
    pub n_trajectories: usize,
    pub n_excluded: usize,
    pub excluded_indices: Vec<u64>,
    pub master_seed: u64,
}

impl EnsembleResult {
    pub fn n_sites(&self) -> usize {
        self.populations.nrows()
    }

    /// Trajectories that entered the averages.
    pub fn n_used(&self) -> usize {
        self.n_trajectories - self.n_excluded
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Flavor {
    Nonlinear,
    Linear,
}

struct Accum {
    n_sites: usize,
    len: usize,
    n_ok: usize,
    sum_p: Vec<f64>,
    sum_p2: Vec<f64>,
    sum_rho: Option<Vec<C64>>,
    sum_rho2: Option<Vec<f64>>,
    sum_norm: Vec<f64>,
    sum_norm2: Vec<f64>,
    excluded: Vec<u64>,
    traces: Vec<Array2<f64>>,
}

impl Accum {
    fn new(n_sites: usize, len: usize, density: bool) -> Self {
        let nn = n_sites * n_sites * len;
        Self {
            n_sites,
            len,
            n_ok: 0,
            sum_p: vec![0.0; n_sites * len],
            sum_p2: vec![0.0; n_sites * len],
            sum_rho: density.then(|| vec![C64::new(0.0, 0.0); nn]),
            sum_rho2: density.then(|| vec![0.0; nn]),
            sum_norm: vec![0.0; len],
            sum_norm2: vec![0.0; len],
            excluded: Vec::new(),
            traces: Vec::new(),
        }
    }

    fn add(&mut self, other: Accum) {
        self.n_ok += other.n_ok;
        add_into(&mut self.sum_p, &other.sum_p);
        add_into(&mut self.sum_p2, &other.sum_p2);
        add_into(&mut self.sum_norm, &other.sum_norm);
        add_into(&mut self.sum_norm2, &other.sum_norm2);
        if let (Some(a), Some(b)) = (&mut self.sum_rho, &other.sum_rho) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        if let (Some(a), Some(b)) = (&mut self.sum_rho2, &other.sum_rho2) {
            add_into(a, b);
        }
        self.excluded.extend(other.excluded);
        self.traces.extend(other.traces);
    }
}

fn add_into(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

struct Job<'a> {
    kernel: &'a BathKernel,
    track: &'a AuxTrack,
    psi0: &'a ElectronicState,
    options: &'a EnsembleOptions,
    flavor: Flavor,
}

impl Job<'_> {
    fn run_chunk(&self, chunk: usize) -> Result<Accum> {
        let n = self.track.n_sites();
        let grid = *self.track.grid();
        let len = grid.len();
        let mut acc = Accum::new(n, len, self.options.record_density);
        let start = chunk * CHUNK;
        let stop = (start + CHUNK).min(self.options.n_trajectories);
        let mut p = vec![0.0; n * len];
        let mut rho = self.options.record_density.then(|| vec![C64::new(0.0, 0.0); n * n * len]);
        let mut norms = vec![0.0; len];
        for index in start..stop {
            let noise = generate_noise(self.kernel, n, grid, self.options.master_seed, index as u64)?;
            let observe = |k: usize, psi: &[C64], norm: f64| {
                for (m, a) in psi.iter().enumerate() {
                    p[m * len + k] = a.norm_sqr();
                }
                if let Some(r) = rho.as_mut() {
                    let block = &mut r[k * n * n..(k + 1) * n * n];
                    for a in 0..n {
                        for b in 0..n {
                            block[a * n + b] = psi[a] * psi[b].conj();
                        }
                    }
                }
                norms[k] = match self.flavor {
                    Flavor::Nonlinear => 1.0,
                    Flavor::Linear => norm,
                };
            };
            let outcome = match self.flavor {
                Flavor::Nonlinear => self.track.nonlinear_with(&noise, self.psi0, observe),
                Flavor::Linear => self.track.linear_with(&noise, self.psi0, observe),
            };
            match outcome {
                Ok(()) => {}
                Err(Error::BlowUp { .. } | Error::StepSize { .. }) => {
                    acc.excluded.push(index as u64);
                    continue;
                }
                Err(e) => return Err(e),
            }
            acc.n_ok += 1;
            for ((s, s2), &x) in acc.sum_p.iter_mut().zip(acc.sum_p2.iter_mut()).zip(&p) {
                *s += x;
                *s2 += x * x;
            }
            for ((s, s2), &x) in acc.sum_norm.iter_mut().zip(acc.sum_norm2.iter_mut()).zip(&norms) {
                *s += x;
                *s2 += x * x;
            }
            if let (Some(s), Some(s2), Some(r)) = (&mut acc.sum_rho, &mut acc.sum_rho2, &rho) {
                for ((s, s2), x) in s.iter_mut().zip(s2.iter_mut()).zip(r) {
                    *s += x;
                    *s2 += x.norm_sqr();
                }
            }
            if index < self.options.n_traces {
                acc.traces.push(Array2::from_shape_vec((n, len), p.clone()).expect("shape matches"));
            }
        }
        Ok(acc)
    }
}

#[cfg(feature = "parallel")]
fn run_wave(job: &Job<'_>, chunks: std::ops::Range<usize>) -> Vec<Result<Accum>> {
    use rayon::prelude::*;
    chunks.into_par_iter().map(|c| job.run_chunk(c)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_wave(job: &Job<'_>, chunks: std::ops::Range<usize>) -> Vec<Result<Accum>> {
    chunks.map(|c| job.run_chunk(c)).collect()
}

fn run(
    model: &AggregateModel,
    kernel: &BathKernel,
    psi0: &ElectronicState,
    grid: TimeGrid,
    options: &EnsembleOptions,
    flavor: Flavor,
) -> Result<EnsembleResult> {
    if options.n_trajectories == 0 {
        return Err(Error::InvalidInput("ensemble needs at least one trajectory".into()));
    }
    let n = model.n_sites();
    if psi0.len() != n {
        return Err(Error::InvalidInput(format!("{}-site state for a {n}-site model", psi0.len())));
    }
    let track = AuxTrack::new(model, kernel, grid);
    let job = Job { kernel, track: &track, psi0, options, flavor };
    let len = grid.len();
    let mut total = Accum::new(n, len, options.record_density);
    let n_chunks = options.n_trajectories.div_ceil(CHUNK);
    let mut next = 0;
    while next < n_chunks {
        let stop = (next + WAVE).min(n_chunks);
        for part in run_wave(&job, next..stop) {
            total.add(part?);
        }
        next = stop;
    }
    finish(total, grid, options, flavor)
}

fn finish(acc: Accum, grid: TimeGrid, options: &EnsembleOptions, flavor: Flavor) -> Result<EnsembleResult> {
    let total = options.n_trajectories;
    let excluded = acc.excluded.len();
    if excluded as f64 > EXCLUSION_BUDGET * total as f64 {
        return Err(Error::ExclusionBudget { excluded, total });
    }
    let (n, len) = (acc.n_sites, acc.len);
    let m = acc.n_ok as f64;
    let stderr = |s: f64, s2: f64| -> f64 {
        if acc.n_ok < 2 {
            return f64::INFINITY;
        }
        let mean = s / m;
        ((s2 / m - mean * mean).max(0.0) * m / (m - 1.0) / m).sqrt()
    };
    let populations = Array2::from_shape_fn((n, len), |(a, k)| acc.sum_p[a * len + k] / m);
    let population_stderr =
        Array2::from_shape_fn((n, len), |(a, k)| stderr(acc.sum_p[a * len + k], acc.sum_p2[a * len + k]));
    let density = acc
        .sum_rho
        .as_ref()
        .map(|s| Array3::from_shape_fn((len, n, n), |(k, a, b)| s[(k * n + a) * n + b] / m));
    let density_stderr = match (&acc.sum_rho, &acc.sum_rho2) {
        (Some(s), Some(s2)) => Some(Array3::from_shape_fn((len, n, n), |(k, a, b)| {
            let i = (k * n + a) * n + b;
            if acc.n_ok < 2 {
                return f64::INFINITY;
            }
            let mean = s[i] / m;
            ((s2[i] / m - mean.norm_sqr()).max(0.0) / (m - 1.0)).sqrt()
        })),
        _ => None,
    };
    let norm = (flavor == Flavor::Linear).then(|| {
        (
            acc.sum_norm.iter().map(|s| s / m).collect(),
            acc.sum_norm.iter().zip(&acc.sum_norm2).map(|(&s, &s2)| stderr(s, s2)).collect(),
        )
    });
    Ok(EnsembleResult {
        grid,
        populations,
        population_stderr,
        density,
        density_stderr,
        norm,
        traces: acc.traces,
        n_trajectories: total,
        n_excluded: excluded,
        excluded_indices: acc.excluded,
        master_seed: options.master_seed,
    })
}

/// Nonlinear ensemble started from the excitation localised on
/// `initial_site` (0-based). Populations are averages over normalised states.
pub fn ensemble_transfer(
    model: &AggregateModel,
    kernel: &BathKernel,
    initial_site: usize,
    grid: TimeGrid,
    options: &EnsembleOptions,
) -> Result<EnsembleResult> {
    let psi0 = ElectronicState::localized(model.n_sites(), initial_site)?;
    run(model, kernel, &psi0, grid, options, Flavor::Nonlinear)
}

/// Linear ensemble from `psi0`: averages of the unnormalised `|ψ⟩⟨ψ|`, whose
/// mean is the reduced density matrix.
pub fn ensemble_linear(
    model: &AggregateModel,
    kernel: &BathKernel,
    psi0: &ElectronicState,
    grid: TimeGrid,
    options: &EnsembleOptions,
) -> Result<EnsembleResult> {
    run(model, kernel, psi0, grid, options, Flavor::Linear)
}

/// `max_{n,t} |P_a − P_b|`.
pub fn convergence_probe(a: &EnsembleResult, b: &EnsembleResult) -> Result<f64> {
    a.grid.ensure_same(&b.grid)?;
    if a.n_sites() != b.n_sites() {
        return Err(Error::InvalidInput("ensembles differ in site count".into()));
    }
    Ok(a.populations
        .iter()
        .zip(b.populations.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}
