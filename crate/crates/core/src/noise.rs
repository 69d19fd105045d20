//! Complex coloured Gaussian noise with exponential correlation terms.
//!
//! The process `ζ_m(t)` that drives site m is the sum, over kernel terms, of
//! independent complex Ornstein-Uhlenbeck processes. Each is sampled by the
//! exact one-step recursion
//!
//! ```text
//! y_{k+1} = exp(-w̄ h') y_k + sqrt(g (1 - exp(-2 Re(w) h'))) ξ_k
//! ```
//!
//! with ξ standard circular complex Gaussian and y_0 drawn from the stationary
//! law, so for any step size
//!
//! ```text
//! E[ζ(t) conj ζ(s)] = conj α(t - s),   E[ζ(t) ζ(s)] = 0,   E[ζ] = 0.
//! ```
//!
//! In the bra-ket notation of the stochastic Schrödinger equation ζ is `z*`,
//! so `E[z*(t) z(s)] = α(s - t)`. This is the covariance under which the
//! ensemble of pure states reproduces the reduced density matrix; the opposite
//! assignment (`α(t - s)`) flips the sign of every vibrational frequency seen by
//! the electronic dynamics.
//!
//! Samples are stored on the half-step lattice `t = k h / 2` so Runge-Kutta
//! midpoint stages read sampled values rather than interpolated ones.
//!
//! Random streams: ChaCha20 keyed by `seed_from_u64(master_seed)`, stream id
//! `trajectory_index`, word offset `site << 40`. Identical
//! `(master_seed, trajectory_index)` reproduce bit-identical noise regardless
//! of how trajectories are scheduled.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::bath::BathKernel;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;

pub const RNG_DESCRIPTION: &str = "ChaCha20 (rand_chacha 0.9): key = ChaCha20Rng::seed_from_u64(master_seed), \
     stream = trajectory_index, word position = site << 40; circular Gaussians from two \
     rand_distr::StandardNormal draws scaled by 1/sqrt(2)";

const SITE_WORD_SHIFT: u32 = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrajectory {
    grid: TimeGrid,
    n_sites: usize,
    /// Site-major, `grid.half_lattice_len()` samples per site.
    samples: Vec<C64>,
    pub master_seed: u64,
    pub trajectory_index: u64,
}

impl NoiseTrajectory {
    /// Identically zero noise, used for absorption spectra.
    pub fn zeros(n_sites: usize, grid: TimeGrid) -> Self {
        Self {
            grid,
            n_sites,
            samples: vec![C64::new(0.0, 0.0); n_sites * grid.half_lattice_len()],
            master_seed: 0,
            trajectory_index: 0,
        }
    }

    pub fn from_samples(n_sites: usize, grid: TimeGrid, samples: Vec<C64>) -> Result<Self> {
        if samples.len() != n_sites * grid.half_lattice_len() {
            return Err(Error::InvalidInput(format!(
                "{} noise samples for {n_sites} sites on a {}-point half lattice",
                samples.len(),
                grid.half_lattice_len()
            )));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidInput("non-finite noise sample".into()));
        }
        Ok(Self { grid, n_sites, samples, master_seed: 0, trajectory_index: 0 })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// ζ_site at time `half_index * h / 2`.
    #[inline]
    pub fn sample(&self, site: usize, half_index: usize) -> C64 {
        self.samples[site * self.grid.half_lattice_len() + half_index]
    }

    /// All half-lattice samples of one site.
    pub fn site_samples(&self, site: usize) -> &[C64] {
        let len = self.grid.half_lattice_len();
        &self.samples[site * len..(site + 1) * len]
    }

    /// Samples of one site on the full grid `t_k`.
    pub fn site_full_grid(&self, site: usize) -> impl Iterator<Item = C64> + '_ {
        self.site_samples(site).iter().step_by(2).copied()
    }
}

fn circular_gaussian(rng: &mut ChaCha20Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn site_rng(master_seed: u64, trajectory_index: u64, site: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(trajectory_index);
    rng.set_word_pos((site as u128) << SITE_WORD_SHIFT);
    rng
}

pub fn generate_noise(
    kernel: &BathKernel,
    n_sites: usize,
    grid: TimeGrid,
    master_seed: u64,
    trajectory_index: u64,
) -> Result<NoiseTrajectory> {
    for (j, t) in kernel.terms().iter().enumerate() {
        if t.rate.re <= 0.0 {
            return Err(Error::InvalidKernel(format!("term {j} does not decay")));
        }
        if t.amplitude.im != 0.0 || t.amplitude.re < 0.0 {
            return Err(Error::InvalidKernel(format!(
                "term {j} amplitude {} is not a non-negative real variance",
                t.amplitude
            )));
        }
    }
    let len = grid.half_lattice_len();
    let half = 0.5 * grid.step();
    let mut samples = vec![C64::new(0.0, 0.0); n_sites * len];
    for site in 0..n_sites {
        let mut rng = site_rng(master_seed, trajectory_index, site);
        let out = &mut samples[site * len..(site + 1) * len];
        for term in kernel.terms() {
            let g = term.amplitude.re;
            if g == 0.0 {
                continue;
            }
            let decay = (-term.rate.conj() * half).exp();
            let kick = (g * -(-2.0 * term.rate.re * half).exp_m1()).sqrt();
            let mut y = g.sqrt() * circular_gaussian(&mut rng);
            out[0] += y;
            for slot in out.iter_mut().skip(1) {
                y = decay * y + kick * circular_gaussian(&mut rng);
                *slot += y;
            }
        }
    }
    Ok(NoiseTrajectory { grid, n_sites, samples, master_seed, trajectory_index })
}

/// Ensemble mean of a complex quantity with the standard errors of its real
/// and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexEstimate {
    pub value: C64,
    pub stderr_re: f64,
    pub stderr_im: f64,
}

impl ComplexEstimate {
    pub fn from_samples(samples: &[C64]) -> Self {
        let m = samples.len() as f64;
        let mean: C64 = samples.iter().sum::<C64>() / m;
        if samples.len() < 2 {
            return Self { value: mean, stderr_re: f64::INFINITY, stderr_im: f64::INFINITY };
        }
        let (vr, vi) = samples.iter().fold((0.0, 0.0), |(vr, vi), z| {
            let d = z - mean;
            (vr + d.re * d.re, vi + d.im * d.im)
        });
        Self {
            value: mean,
            stderr_re: (vr / (m - 1.0) / m).sqrt(),
            stderr_im: (vi / (m - 1.0) / m).sqrt(),
        }
    }

    /// Both components within `k` standard errors of `target`.
    pub fn within(&self, target: C64, k: f64) -> bool {
        let d = self.value - target;
        d.re.abs() <= k * self.stderr_re && d.im.abs() <= k * self.stderr_im
    }

    /// Largest deviation from `target` in units of the standard error.
    pub fn sigmas_from(&self, target: C64) -> f64 {
        let d = self.value - target;
        let r = if d.re == 0.0 { 0.0 } else { d.re.abs() / self.stderr_re };
        let i = if d.im == 0.0 { 0.0 } else { d.im.abs() / self.stderr_im };
        r.max(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// Lags τ in time units.
    pub lags: Vec<f64>,
    /// `E[z*_a(t + τ) z_b(t)] = E[ζ_a(t + τ) conj ζ_b(t)]`, averaged over t.
    pub covariance: Vec<ComplexEstimate>,
    /// `E[z_a(t + τ) z_b(t)]`, which must vanish.
    pub pseudo_covariance: Vec<ComplexEstimate>,
}

/// Sample estimates of the noise covariances between sites `site_a` and
/// `site_b` at lags `lag_steps[i] * h` on the full grid. Each trajectory
/// contributes one time-averaged product; errors come from the spread across
/// trajectories, which are independent.
pub fn empirical_covariance(
    ensemble: &[NoiseTrajectory],
    site_a: usize,
    site_b: usize,
    lag_steps: &[usize],
) -> Result<CovarianceEstimate> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::InvalidInput("empty noise ensemble".into()))?;
    let grid = *first.grid();
    for tr in ensemble {
        grid.ensure_same(tr.grid())?;
        if tr.n_sites() != first.n_sites() {
            return Err(Error::InvalidInput("noise trajectories differ in site count".into()));
        }
    }
    if site_a >= first.n_sites() || site_b >= first.n_sites() {
        return Err(Error::InvalidInput("site index out of range".into()));
    }
    if let Some(&bad) = lag_steps.iter().find(|&&l| l > grid.n_steps()) {
        return Err(Error::InvalidInput(format!("lag {bad} exceeds the grid")));
    }

    let mut per_traj_cov = vec![vec![C64::new(0.0, 0.0); ensemble.len()]; lag_steps.len()];
    let mut per_traj_pseudo = per_traj_cov.clone();
    for (i, tr) in ensemble.iter().enumerate() {
        let za: Vec<C64> = tr.site_full_grid(site_a).collect();
        let zb: Vec<C64> = tr.site_full_grid(site_b).collect();
        for (l, &lag) in lag_steps.iter().enumerate() {
            let count = grid.len() - lag;
            let mut c = C64::new(0.0, 0.0);
            let mut p = C64::new(0.0, 0.0);
            for t in 0..count {
                let a = za[t + lag];
                let b = zb[t];
                c += a * b.conj();
                p += a.conj() * b.conj();
            }
            per_traj_cov[l][i] = c / count as f64;
            per_traj_pseudo[l][i] = p / count as f64;
        }
    }
    let cov = per_traj_cov.iter().map(|s| ComplexEstimate::from_samples(s)).collect();
    let pseudo = per_traj_pseudo.iter().map(|s| ComplexEstimate::from_samples(s)).collect();
    Ok(CovarianceEstimate {
        lags: lag_steps.iter().map(|&l| grid.time(l)).collect(),
        covariance: cov,
        pseudo_covariance: pseudo,
    })
}
