//! Full quantum reference for a dimer whose sites each couple to one
//! real-line Lorentzian. At zero temperature such a bath is reproduced exactly
//! by a single harmonic mode of frequency Ω, coupling κ = sqrt(p), damped by
//! the Lindblad operator `sqrt(2γ) a` and starting in its vacuum.
//!
//! Basis of the single-excitation sector: `(site, k1, k2)` with Fock numbers
//! truncated at `cutoff - 1`. The ground sector (needed for absorption) holds
//! the two undisplaced modes only.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::bath::LorentzianMode;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model::{AggregateModel, ElectronicState};

/// Largest population tolerated in the highest retained Fock level.
pub const FOCK_POPULATION_LIMIT: f64 = 1e-6;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudomodeConfig {
    /// Fock states kept per mode (levels 0..cutoff-1).
    pub fock_cutoff: usize,
}

impl Default for PseudomodeConfig {
    fn default() -> Self {
        Self { fock_cutoff: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudomodeResult {
    /// Electronic populations, rows = sites, columns = grid points.
    pub populations: Array2<f64>,
    /// Dipole autocorrelation `⟨ψ0| Tr_vib ρ_eg(t) |g⟩`.
    pub autocorrelation: Vec<C64>,
    /// Largest population observed in the top Fock level of either mode.
    pub top_fock_population: f64,
}

/// Sparse real Hamiltonian and ladder tables of one sector.
struct Sector {
    dim: usize,
    /// (row, col, value)
    h: Vec<(usize, usize, f64)>,
    /// `raise[m][i] = (j, sqrt(k_m(i) + 1))` with j the state with mode m raised.
    raise: [Vec<Option<(usize, f64)>>; 2],
    number: [Vec<f64>; 2],
    top: Vec<bool>,
}

impl Sector {
    fn new(n_el: usize, cutoff: usize, h_el: &[[f64; 2]; 2], omega: f64, kappa: f64) -> Self {
        let kk = cutoff * cutoff;
        let dim = n_el * kk;
        let index = |n: usize, k1: usize, k2: usize| n * kk + k1 * cutoff + k2;
        let mut h = Vec::new();
        let mut raise = [vec![None; dim], vec![None; dim]];
        let mut number = [vec![0.0; dim], vec![0.0; dim]];
        let mut top = vec![false; dim];
        for n in 0..n_el {
            for k1 in 0..cutoff {
                for k2 in 0..cutoff {
                    let i = index(n, k1, k2);
                    let ks = [k1, k2];
                    number[0][i] = k1 as f64;
                    number[1][i] = k2 as f64;
                    top[i] = k1 + 1 == cutoff || k2 + 1 == cutoff;
                    let el = if n_el == 2 { h_el[n][n] } else { 0.0 };
                    h.push((i, i, el + omega * (k1 + k2) as f64));
                    if n_el == 2 {
                        let other = index(1 - n, k1, k2);
                        if h_el[n][1 - n] != 0.0 {
                            h.push((i, other, h_el[n][1 - n]));
                        }
                        // -κ (a_n + a_n†) on the excited site's own mode
                        let k = ks[n];
                        if kappa != 0.0 {
                            if k > 0 {
                                let j = if n == 0 { index(n, k1 - 1, k2) } else { index(n, k1, k2 - 1) };
                                h.push((i, j, -kappa * (k as f64).sqrt()));
                            }
                            if k + 1 < cutoff {
                                let j = if n == 0 { index(n, k1 + 1, k2) } else { index(n, k1, k2 + 1) };
                                h.push((i, j, -kappa * ((k + 1) as f64).sqrt()));
                            }
                        }
                    }
                    if k1 + 1 < cutoff {
                        raise[0][i] = Some((index(n, k1 + 1, k2), ((k1 + 1) as f64).sqrt()));
                    }
                    if k2 + 1 < cutoff {
                        raise[1][i] = Some((index(n, k1, k2 + 1), ((k2 + 1) as f64).sqrt()));
                    }
                }
            }
        }
        Self { dim, h, raise, number, top }
    }
}

/// `dX/dt` for an operator block `X` (left.dim × right.dim, row-major) under
/// `-i(H_L X - X H_R) + Σ_m 2γ (a X a† - ½ a†a X - ½ X a†a)`.
fn block_rhs(left: &Sector, right: &Sector, gamma: f64, x: &[C64], out: &mut [C64]) {
    let dr = right.dim;
    out.iter_mut().for_each(|o| *o = ZERO);
    for &(r, c, v) in &left.h {
        let src = &x[c * dr..(c + 1) * dr];
        let dst = &mut out[r * dr..(r + 1) * dr];
        for (d, s) in dst.iter_mut().zip(src) {
            *d -= I * v * s;
        }
    }
    for row in 0..left.dim {
        let base = row * dr;
        for &(r, c, v) in &right.h {
            // (X H)_{row, c} += X_{row, r} H_{r, c}
            out[base + c] += I * v * x[base + r];
        }
    }
    let rate = 2.0 * gamma;
    for m in 0..2 {
        for a in 0..left.dim {
            let na = left.number[m][a];
            for b in 0..dr {
                let nb = right.number[m][b];
                let mut acc = -0.5 * rate * (na + nb) * x[a * dr + b];
                if let (Some((ar, sa)), Some((br, sb))) = (left.raise[m][a], right.raise[m][b]) {
                    acc += rate * sa * sb * x[ar * dr + br];
                }
                out[a * dr + b] += acc;
            }
        }
    }
}

fn rk4_block(left: &Sector, right: &Sector, gamma: f64, x: &mut Vec<C64>, h: f64, work: &mut [Vec<C64>; 5]) {
    let [k1, k2, k3, k4, tmp] = work;
    block_rhs(left, right, gamma, x, k1);
    for ((t, xi), k) in tmp.iter_mut().zip(x.iter()).zip(k1.iter()) {
        *t = xi + 0.5 * h * k;
    }
    block_rhs(left, right, gamma, tmp, k2);
    for ((t, xi), k) in tmp.iter_mut().zip(x.iter()).zip(k2.iter()) {
        *t = xi + 0.5 * h * k;
    }
    block_rhs(left, right, gamma, tmp, k3);
    for ((t, xi), k) in tmp.iter_mut().zip(x.iter()).zip(k3.iter()) {
        *t = xi + h * k;
    }
    block_rhs(left, right, gamma, tmp, k4);
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn dimer_inputs(model: &AggregateModel, mode: &LorentzianMode, config: &PseudomodeConfig) -> Result<[[f64; 2]; 2]> {
    if model.n_sites() != 2 {
        return Err(Error::InvalidInput(format!(
            "pseudomode oracle handles dimers only, got {} sites",
            model.n_sites()
        )));
    }
    if config.fock_cutoff < 2 {
        return Err(Error::InvalidInput("Fock cutoff must be at least 2".into()));
    }
    LorentzianMode::new(mode.weight, mode.center, mode.width)?;
    let e = model.site_energies();
    Ok([[e[0], model.coupling(0, 1)], [model.coupling(1, 0), e[1]]])
}

fn check_cutoff(top: f64) -> Result<()> {
    if top > FOCK_POPULATION_LIMIT {
        return Err(Error::CutoffViolation { population: top, limit: FOCK_POPULATION_LIMIT });
    }
    Ok(())
}

/// Electronic populations from the master equation for the full density
/// matrix, starting from `initial` (normalised internally) and mode vacua.
pub fn pseudomode_dimer_populations(
    model: &AggregateModel,
    mode: &LorentzianMode,
    config: &PseudomodeConfig,
    grid: &TimeGrid,
    initial: &ElectronicState,
) -> Result<(Array2<f64>, f64)> {
    let h_el = dimer_inputs(model, mode, config)?;
    let psi = initial.normalized()?;
    if psi.len() != 2 {
        return Err(Error::InvalidInput("initial state must have two amplitudes".into()));
    }
    let cutoff = config.fock_cutoff;
    let kk = cutoff * cutoff;
    let sector = Sector::new(2, cutoff, &h_el, mode.center, mode.weight.sqrt());
    let d = sector.dim;
    let mut rho = vec![ZERO; d * d];
    for a in 0..2 {
        for b in 0..2 {
            rho[(a * kk) * d + b * kk] = psi.0[a] * psi.0[b].conj();
        }
    }
    let mut work: [Vec<C64>; 5] = std::array::from_fn(|_| vec![ZERO; d * d]);
    let mut pops = Array2::zeros((2, grid.len()));
    let mut top: f64 = 0.0;
    let mut record = |k: usize, rho: &[C64], top: &mut f64| {
        let mut t = 0.0;
        for i in 0..d {
            let p = rho[i * d + i].re;
            pops[(i / kk, k)] += p;
            if sector.top[i] {
                t += p;
            }
        }
        *top = top.max(t);
    };
    record(0, &rho, &mut top);
    for k in 0..grid.n_steps() {
        rk4_block(&sector, &sector, mode.width, &mut rho, grid.step(), &mut work);
        record(k + 1, &rho, &mut top);
    }
    check_cutoff(top)?;
    Ok((pops, top))
}

/// Absorption autocorrelation from the excited-ground coherence block.
pub fn pseudomode_dimer_autocorrelation(
    model: &AggregateModel,
    mode: &LorentzianMode,
    config: &PseudomodeConfig,
    grid: &TimeGrid,
    initial: &ElectronicState,
) -> Result<(Vec<C64>, f64)> {
    let h_el = dimer_inputs(model, mode, config)?;
    if initial.len() != 2 {
        return Err(Error::InvalidInput("initial state must have two amplitudes".into()));
    }
    let cutoff = config.fock_cutoff;
    let kk = cutoff * cutoff;
    let excited = Sector::new(2, cutoff, &h_el, mode.center, mode.weight.sqrt());
    let ground = Sector::new(1, cutoff, &h_el, mode.center, 0.0);
    let (dl, dr) = (excited.dim, ground.dim);
    let mut x = vec![ZERO; dl * dr];
    for n in 0..2 {
        x[(n * kk) * dr] = initial.0[n];
    }
    let weight = initial.norm_sqr().max(f64::MIN_POSITIVE);
    let mut work: [Vec<C64>; 5] = std::array::from_fn(|_| vec![ZERO; dl * dr]);
    let mut out = Vec::with_capacity(grid.len());
    let mut top: f64 = 0.0;
    let record = |x: &[C64], top: &mut f64| -> C64 {
        let mut c = ZERO;
        let mut t = 0.0;
        for n in 0..2 {
            let mut tr = ZERO;
            for k in 0..kk {
                tr += x[(n * kk + k) * dr + k];
            }
            c += initial.0[n].conj() * tr;
        }
        for row in 0..dl {
            if excited.top[row] {
                t += x[row * dr..(row + 1) * dr].iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
        }
        *top = top.max(t / weight);
        c
    };
    out.push(record(&x, &mut top));
    for _ in 0..grid.n_steps() {
        rk4_block(&excited, &ground, mode.width, &mut x, grid.step(), &mut work);
        out.push(record(&x, &mut top));
    }
    check_cutoff(top)?;
    Ok((out, top))
}

/// Populations from `initial` (normalised) and the absorption autocorrelation
/// of `initial` as given.
pub fn pseudomode_dimer(
    model: &AggregateModel,
    mode: &LorentzianMode,
    config: &PseudomodeConfig,
    grid: &TimeGrid,
    initial: &ElectronicState,
) -> Result<PseudomodeResult> {
    let (populations, top_p) = pseudomode_dimer_populations(model, mode, config, grid, initial)?;
    let (autocorrelation, top_c) = pseudomode_dimer_autocorrelation(model, mode, config, grid, initial)?;
    Ok(PseudomodeResult { populations, autocorrelation, top_fock_population: top_p.max(top_c) })
}
