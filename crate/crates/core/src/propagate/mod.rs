//! Stochastic Schrödinger propagation in the electronic single-excitation
//! space.
//!
//! Linear equation (ħ = 1):
//!
//! ```text
//! ∂_t ψ = -i H_el ψ - Σ_m P_m (z*_m(t) - Ō^{(m)}(t)) ψ
//! ```
//!
//! The norm-preserving variant used for transfer ensembles follows the
//! standard non-Markovian quantum state diffusion form with coupling operator
//! `L_m = -P_m`:
//!
//! ```text
//! ∂_t ψ = -i H_el ψ - Σ_m (P_m - ⟨P_m⟩) z̃*_m ψ
//!         + Σ_m (P_m - ⟨P_m⟩) Ō^{(m)} ψ - ⟨Σ_m (P_m - ⟨P_m⟩) Ō^{(m)}⟩ ψ
//! z̃*_m(t) = z*_m(t) - ∫_0^t conj α(t-s) ⟨P_m⟩_s ds
//! ```
//!
//! The memory shift is carried as one ODE per kernel term. Both equations are
//! integrated with classical RK4 at fixed step; noise is read on the half-step
//! lattice and the auxiliary operators at the exact RK4 stage values.

mod aux;

use std::ops::ControlFlow;

use num_complex::Complex64 as C64;

pub use aux::{aux_rhs, AuxOperatorSet};
pub(crate) use aux::{AuxIntegrator, StageOps};

use crate::bath::BathKernel;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::{inner, norm_sqr, CMatrix};
use crate::model::{AggregateModel, ElectronicState};
use crate::noise::NoiseTrajectory;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Per-step norm change of the nonlinear equation above which the step is
/// considered too coarse.
pub const MAX_NORM_DRIFT: f64 = 0.1;

/// Default fixed step `0.02 / max(1, Δ_max)`, with Δ_max the largest of the
/// electronic spectral radius, the fastest kernel rate and `sqrt(α(0))`.
pub fn default_step(model: &AggregateModel, kernel: &BathKernel) -> f64 {
    let scale = model
        .spectral_radius()
        .max(kernel.max_rate())
        .max(kernel.alpha0().norm().sqrt());
    0.02 / scale.max(1.0)
}

/// Zero-noise propagation stops once `⟨ψ|ψ⟩` falls below this fraction of
/// its initial value; the remaining autocorrelation is bounded by its square
/// root and is set to zero.
pub const NEGLIGIBLE_NORM: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub grid: TimeGrid,
    pub states: Vec<ElectronicState>,
    /// `⟨ψ|ψ⟩` at each grid point; for the nonlinear equation, the norm reached
    /// at the end of the step before renormalisation.
    pub norms: Vec<f64>,
    pub master_seed: u64,
    pub trajectory_index: u64,
}

/// Precomputed auxiliary operators for every RK4 stage of a grid. The
/// auxiliary equation does not depend on the noise, so one track serves a
/// whole ensemble.
pub struct AuxTrack {
    grid: TimeGrid,
    h_el: CMatrix,
    n_terms: usize,
    kernel: BathKernel,
    stages: Vec<[StageOps; 4]>,
}

impl AuxTrack {
    pub fn new(model: &AggregateModel, kernel: &BathKernel, grid: TimeGrid) -> Self {
        Self::build(model, kernel, grid, true)
    }

    /// Track computed without the ring-symmetry reduction.
    pub fn new_general(model: &AggregateModel, kernel: &BathKernel, grid: TimeGrid) -> Self {
        Self::build(model, kernel, grid, false)
    }

    fn build(model: &AggregateModel, kernel: &BathKernel, grid: TimeGrid, symmetry: bool) -> Self {
        let mut integ = AuxIntegrator::new(model, kernel, grid.step(), symmetry);
        let stages = (0..grid.n_steps()).map(|_| integ.advance()).collect();
        Self {
            grid,
            h_el: model.electronic_hamiltonian(),
            n_terms: kernel.n_terms(),
            kernel: kernel.clone(),
            stages,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_sites(&self) -> usize {
        self.h_el.dim()
    }

    /// `Ō^{(m)}(t_k)` summed over kernel terms.
    pub fn site_operator(&self, step: usize, site: usize) -> CMatrix {
        self.stages[step][0].ops.site_operator(site)
    }

    pub fn linear(&self, noise: &NoiseTrajectory, psi0: &ElectronicState) -> Result<TrajectoryResult> {
        let mut out = Collector::new(self.grid, noise);
        self.linear_with(noise, psi0, |_, psi, norm| out.push(psi, norm))?;
        Ok(out.finish())
    }

    pub fn nonlinear(&self, noise: &NoiseTrajectory, psi0: &ElectronicState) -> Result<TrajectoryResult> {
        let mut out = Collector::new(self.grid, noise);
        self.nonlinear_with(noise, psi0, |_, psi, norm| out.push(psi, norm))?;
        Ok(out.finish())
    }

    /// Linear propagation, calling `observe(k, ψ(t_k), ⟨ψ|ψ⟩)` at each grid point.
    pub fn linear_with(
        &self,
        noise: &NoiseTrajectory,
        psi0: &ElectronicState,
        observe: impl FnMut(usize, &[C64], f64),
    ) -> Result<()> {
        check_inputs(&self.grid, self.n_sites(), noise, psi0)?;
        let mut stepper = LinearStepper::new(&self.h_el, psi0);
        run_steps(&self.grid, &mut stepper, noise, |k| StagesRef::Borrowed(&self.stages[k]), always(observe))
    }

    /// Nonlinear propagation of the normalised `psi0`; observed states are
    /// normalised.
    pub fn nonlinear_with(
        &self,
        noise: &NoiseTrajectory,
        psi0: &ElectronicState,
        observe: impl FnMut(usize, &[C64], f64),
    ) -> Result<()> {
        check_inputs(&self.grid, self.n_sites(), noise, psi0)?;
        let mut stepper = NonlinearStepper::new(&self.h_el, &self.kernel, self.n_terms, psi0)?;
        run_steps(&self.grid, &mut stepper, noise, |k| StagesRef::Borrowed(&self.stages[k]), always(observe))
    }
}

fn check_inputs(grid: &TimeGrid, n: usize, noise: &NoiseTrajectory, psi0: &ElectronicState) -> Result<()> {
    grid.ensure_same(noise.grid())?;
    if noise.n_sites() != n || psi0.len() != n {
        return Err(Error::InvalidInput(format!(
            "{n}-site model given {}-site noise and a {}-site state",
            noise.n_sites(),
            psi0.len()
        )));
    }
    if psi0.0.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
        return Err(Error::InvalidInput("initial state is not finite".into()));
    }
    Ok(())
}

struct Collector {
    result: TrajectoryResult,
}

impl Collector {
    fn new(grid: TimeGrid, noise: &NoiseTrajectory) -> Self {
        Self {
            result: TrajectoryResult {
                grid,
                states: Vec::with_capacity(grid.len()),
                norms: Vec::with_capacity(grid.len()),
                master_seed: noise.master_seed,
                trajectory_index: noise.trajectory_index,
            },
        }
    }

    fn push(&mut self, psi: &[C64], norm: f64) {
        self.result.states.push(ElectronicState(psi.to_vec()));
        self.result.norms.push(norm);
    }

    fn finish(self) -> TrajectoryResult {
        self.result
    }
}

enum StagesRef<'a> {
    Borrowed(&'a [StageOps; 4]),
    Owned([StageOps; 4]),
}

impl StagesRef<'_> {
    fn get(&self) -> &[StageOps; 4] {
        match self {
            Self::Borrowed(s) => s,
            Self::Owned(s) => s,
        }
    }
}

trait Stepper {
    fn psi(&self) -> &[C64];
    /// Norm reported to observers for the current state.
    fn norm(&self) -> f64;
    fn step(&mut self, h: f64, stages: &[StageOps; 4], noise: [&[C64]; 3]) -> Result<()>;
}

fn run_steps<'a, S: Stepper>(
    grid: &TimeGrid,
    stepper: &mut S,
    noise: &NoiseTrajectory,
    mut stages: impl FnMut(usize) -> StagesRef<'a>,
    mut observe: impl FnMut(usize, &[C64], f64) -> ControlFlow<()>,
) -> Result<()> {
    let n = stepper.psi().len();
    let h = grid.step();
    let mut z = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
    if observe(0, stepper.psi(), stepper.norm()).is_break() {
        return Ok(());
    }
    for k in 0..grid.n_steps() {
        for (s, zs) in z.iter_mut().enumerate() {
            for (m, v) in zs.iter_mut().enumerate() {
                *v = noise.sample(m, 2 * k + s);
            }
        }
        let st = stages(k);
        stepper
            .step(h, st.get(), [&z[0], &z[1], &z[2]])
            .map_err(|e| match e {
                Error::BlowUp { .. } => Error::BlowUp { time: grid.time(k + 1) },
                Error::StepSize { drift, .. } => Error::StepSize { time: grid.time(k + 1), drift },
                other => other,
            })?;
        if observe(k + 1, stepper.psi(), stepper.norm()).is_break() {
            break;
        }
    }
    Ok(())
}

fn always<F: FnMut(usize, &[C64], f64)>(mut f: F) -> impl FnMut(usize, &[C64], f64) -> ControlFlow<()> {
    move |k, psi, norm| {
        f(k, psi, norm);
        ControlFlow::Continue(())
    }
}

fn all_finite(v: &[C64]) -> bool {
    v.iter().all(|a| a.re.is_finite() && a.im.is_finite())
}

struct LinearStepper<'a> {
    h_el: &'a CMatrix,
    psi: Vec<C64>,
    scratch: [Vec<C64>; 5],
}

impl<'a> LinearStepper<'a> {
    fn new(h_el: &'a CMatrix, psi0: &ElectronicState) -> Self {
        let n = psi0.len();
        Self {
            h_el,
            psi: psi0.0.clone(),
            scratch: std::array::from_fn(|_| vec![ZERO; n]),
        }
    }
}

/// `out = -i H ψ - z ∘ ψ + M ψ`
fn linear_rhs(h_el: &CMatrix, memory: &CMatrix, z: &[C64], psi: &[C64], out: &mut [C64]) {
    for (a, o) in out.iter_mut().enumerate() {
        let mut acc = -z[a] * psi[a];
        for ((hx, mx), p) in h_el.row(a).iter().zip(memory.row(a)).zip(psi) {
            acc += (mx - I * hx) * p;
        }
        *o = acc;
    }
}

impl Stepper for LinearStepper<'_> {
    fn psi(&self) -> &[C64] {
        &self.psi
    }

    fn norm(&self) -> f64 {
        norm_sqr(&self.psi)
    }

    fn step(&mut self, h: f64, stages: &[StageOps; 4], noise: [&[C64]; 3]) -> Result<()> {
        let [k1, k2, k3, k4, tmp] = &mut self.scratch;
        let psi = &self.psi;
        linear_rhs(self.h_el, &stages[0].memory, noise[0], psi, k1);
        for ((t, p), k) in tmp.iter_mut().zip(psi).zip(k1.iter()) {
            *t = p + 0.5 * h * k;
        }
        linear_rhs(self.h_el, &stages[1].memory, noise[1], tmp, k2);
        for ((t, p), k) in tmp.iter_mut().zip(psi).zip(k2.iter()) {
            *t = p + 0.5 * h * k;
        }
        linear_rhs(self.h_el, &stages[2].memory, noise[1], tmp, k3);
        for ((t, p), k) in tmp.iter_mut().zip(psi).zip(k3.iter()) {
            *t = p + h * k;
        }
        linear_rhs(self.h_el, &stages[3].memory, noise[2], tmp, k4);
        for (i, p) in self.psi.iter_mut().enumerate() {
            *p += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !all_finite(&self.psi) {
            return Err(Error::BlowUp { time: f64::NAN });
        }
        Ok(())
    }
}

/// State `(ψ, s)` of the nonlinear equation, with `s[m * J + j]` the memory
/// shift contributed by kernel term j on site m.
#[derive(Clone)]
struct NlState {
    psi: Vec<C64>,
    shift: Vec<C64>,
}

impl NlState {
    fn axpy_from(&mut self, base: &NlState, a: f64, d: &NlState) {
        for ((y, b), x) in self.psi.iter_mut().zip(&base.psi).zip(&d.psi) {
            *y = b + a * x;
        }
        for ((y, b), x) in self.shift.iter_mut().zip(&base.shift).zip(&d.shift) {
            *y = b + a * x;
        }
    }
}

struct NonlinearStepper<'a> {
    h_el: &'a CMatrix,
    amps: Vec<C64>,
    rates: Vec<C64>,
    n_terms: usize,
    state: NlState,
    pre_norm: f64,
    k: [NlState; 4],
    tmp: NlState,
    work: Vec<C64>,
    weights: Vec<f64>,
}

impl<'a> NonlinearStepper<'a> {
    fn new(h_el: &'a CMatrix, kernel: &BathKernel, n_terms: usize, psi0: &ElectronicState) -> Result<Self> {
        let psi = psi0.normalized()?.0;
        let n = psi.len();
        let zero = NlState { psi: vec![ZERO; n], shift: vec![ZERO; n * n_terms] };
        Ok(Self {
            h_el,
            amps: kernel.terms().iter().map(|t| t.amplitude.conj()).collect(),
            rates: kernel.terms().iter().map(|t| t.rate.conj()).collect(),
            n_terms,
            state: NlState { psi, shift: vec![ZERO; n * n_terms] },
            pre_norm: 1.0,
            k: std::array::from_fn(|_| zero.clone()),
            tmp: zero,
            work: vec![ZERO; n],
            weights: vec![0.0; n],
        })
    }

    fn rhs(&mut self, which: usize, use_tmp: bool, ops: &StageOps, z: &[C64]) {
        let y = if use_tmp { &self.tmp } else { &self.state };
        let out = &mut self.k[which];
        let psi = &y.psi;
        let n = psi.len();
        let norm2 = norm_sqr(psi);
        for (w, p) in self.weights.iter_mut().zip(psi) {
            *w = p.norm_sqr() / norm2;
        }
        // z̃_m = z_m - Σ_j s_{m,j}
        let mut mean_z = ZERO;
        for m in 0..n {
            let s: C64 = y.shift[m * self.n_terms..(m + 1) * self.n_terms].iter().sum();
            let zt = z[m] - s;
            mean_z += self.weights[m] * zt;
            out.psi[m] = -zt * psi[m];
        }
        // (M - B) ψ with B = Σ_m ⟨P_m⟩ Ō^{(m)}
        ops.ops.weighted_apply(&self.weights, psi, &mut self.work);
        let mut u_mean = ZERO;
        for a in 0..n {
            let mut hp = ZERO;
            let mut mp = ZERO;
            for ((hx, mx), p) in self.h_el.row(a).iter().zip(ops.memory.row(a)).zip(psi) {
                hp += hx * p;
                mp += mx * p;
            }
            let u = mp - self.work[a];
            u_mean += psi[a].conj() * u;
            out.psi[a] += -I * hp + mean_z * psi[a] + u;
        }
        u_mean /= norm2;
        for (o, p) in out.psi.iter_mut().zip(psi) {
            *o -= u_mean * p;
        }
        for m in 0..n {
            for j in 0..self.n_terms {
                let idx = m * self.n_terms + j;
                out.shift[idx] = self.amps[j] * self.weights[m] - self.rates[j] * y.shift[idx];
            }
        }
    }
}

impl Stepper for NonlinearStepper<'_> {
    fn psi(&self) -> &[C64] {
        &self.state.psi
    }

    fn norm(&self) -> f64 {
        self.pre_norm
    }

    fn step(&mut self, h: f64, stages: &[StageOps; 4], noise: [&[C64]; 3]) -> Result<()> {
        self.rhs(0, false, &stages[0], noise[0]);
        let (k, tmp) = (&self.k, &mut self.tmp);
        tmp.axpy_from(&self.state, 0.5 * h, &k[0]);
        self.rhs(1, true, &stages[1], noise[1]);
        let (k, tmp) = (&self.k, &mut self.tmp);
        tmp.axpy_from(&self.state, 0.5 * h, &k[1]);
        self.rhs(2, true, &stages[2], noise[1]);
        let (k, tmp) = (&self.k, &mut self.tmp);
        tmp.axpy_from(&self.state, h, &k[2]);
        self.rhs(3, true, &stages[3], noise[2]);

        let k = &self.k;
        for (i, p) in self.state.psi.iter_mut().enumerate() {
            *p += h / 6.0 * (k[0].psi[i] + 2.0 * k[1].psi[i] + 2.0 * k[2].psi[i] + k[3].psi[i]);
        }
        for (i, s) in self.state.shift.iter_mut().enumerate() {
            *s += h / 6.0 * (k[0].shift[i] + 2.0 * k[1].shift[i] + 2.0 * k[2].shift[i] + k[3].shift[i]);
        }
        if !all_finite(&self.state.psi) || !all_finite(&self.state.shift) {
            return Err(Error::BlowUp { time: f64::NAN });
        }
        let norm2 = norm_sqr(&self.state.psi);
        let drift = (norm2 - 1.0).abs();
        if drift > MAX_NORM_DRIFT {
            return Err(Error::StepSize { time: f64::NAN, drift });
        }
        let scale = 1.0 / norm2.sqrt();
        self.state.psi.iter_mut().for_each(|p| *p *= scale);
        self.pre_norm = norm2;
        Ok(())
    }
}

/// Linear propagation with the auxiliary operators integrated alongside the
/// state (no stored track).
pub fn propagate_linear(
    model: &AggregateModel,
    kernel: &BathKernel,
    noise: &NoiseTrajectory,
    psi0: &ElectronicState,
    grid: TimeGrid,
) -> Result<TrajectoryResult> {
    let mut out = Collector::new(grid, noise);
    propagate_linear_with(model, kernel, noise, psi0, grid, |_, psi, norm| out.push(psi, norm))?;
    Ok(out.finish())
}

/// Streaming form of [`propagate_linear`].
pub fn propagate_linear_with(
    model: &AggregateModel,
    kernel: &BathKernel,
    noise: &NoiseTrajectory,
    psi0: &ElectronicState,
    grid: TimeGrid,
    observe: impl FnMut(usize, &[C64], f64),
) -> Result<()> {
    check_inputs(&grid, model.n_sites(), noise, psi0)?;
    let h_el = model.electronic_hamiltonian();
    let mut integ = AuxIntegrator::new(model, kernel, grid.step(), true);
    let mut stepper = LinearStepper::new(&h_el, psi0);
    run_steps(&grid, &mut stepper, noise, |_| StagesRef::Owned(integ.advance()), always(observe))
}

/// Linear propagation with `z*_m(t) = 0`; this single solution determines the
/// absorption autocorrelation.
pub fn propagate_zero_noise(
    model: &AggregateModel,
    kernel: &BathKernel,
    psi0: &ElectronicState,
    grid: TimeGrid,
) -> Result<TrajectoryResult> {
    let noise = NoiseTrajectory::zeros(model.n_sites(), grid);
    propagate_linear(model, kernel, &noise, psi0, grid)
}

/// `⟨ψ0|ψ(t)⟩` from the zero-noise propagation, without storing states.
/// Propagation ends early once the state is negligible (see
/// [`NEGLIGIBLE_NORM`]); later values are zero.
pub fn zero_noise_autocorrelation(
    model: &AggregateModel,
    kernel: &BathKernel,
    psi0: &ElectronicState,
    grid: TimeGrid,
) -> Result<Vec<C64>> {
    let noise = NoiseTrajectory::zeros(model.n_sites(), grid);
    check_inputs(&grid, model.n_sites(), &noise, psi0)?;
    let h_el = model.electronic_hamiltonian();
    let mut integ = AuxIntegrator::new(model, kernel, grid.step(), true);
    let mut stepper = LinearStepper::new(&h_el, psi0);
    let floor = NEGLIGIBLE_NORM * psi0.norm_sqr();
    let mut out = Vec::with_capacity(grid.len());
    run_steps(&grid, &mut stepper, &noise, |_| StagesRef::Owned(integ.advance()), |_, psi, norm| {
        out.push(inner(&psi0.0, psi));
        if norm < floor {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    out.resize(grid.len(), ZERO);
    Ok(out)
}

/// Norm-preserving propagation of the normalised `psi0`.
pub fn propagate_nonlinear(
    model: &AggregateModel,
    kernel: &BathKernel,
    noise: &NoiseTrajectory,
    psi0: &ElectronicState,
    grid: TimeGrid,
) -> Result<TrajectoryResult> {
    check_inputs(&grid, model.n_sites(), noise, psi0)?;
    let h_el = model.electronic_hamiltonian();
    let mut integ = AuxIntegrator::new(model, kernel, grid.step(), true);
    let mut stepper = NonlinearStepper::new(&h_el, kernel, kernel.n_terms(), psi0)?;
    let mut out = Collector::new(grid, noise);
    run_steps(
        &grid,
        &mut stepper,
        noise,
        |_| StagesRef::Owned(integ.advance()),
        always(|_, psi, norm| out.push(psi, norm)),
    )?;
    Ok(out.finish())
}

/// Term-resolved auxiliary operators at every grid point.
pub fn aux_trajectory(model: &AggregateModel, kernel: &BathKernel, grid: TimeGrid) -> Vec<AuxOperatorSet> {
    let mut integ = AuxIntegrator::new(model, kernel, grid.step(), false);
    let mut out = Vec::with_capacity(grid.len());
    out.push(integ.state().to_set());
    for _ in 0..grid.n_steps() {
        integ.advance();
        out.push(integ.state().to_set());
    }
    out
}
