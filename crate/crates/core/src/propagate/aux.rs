//! Auxiliary memory operators `Ō^{(m)}(t) = ∫_0^t α(t-s) D^{(m)}(t,s) ds`.
//!
//! For `α(τ) = Σ_j g_j e^{-w_j τ}` the split `Ō^{(m)} = Σ_j Ō^{(m)}_j` obeys the
//! local-in-time equation
//!
//! ```text
//! d/dt Ō^{(m)}_j = -g_j P_m - w_j Ō^{(m)}_j + [-i H_el + Σ_l P_l Ō^{(l)}, Ō^{(m)}_j]
//! ```
//!
//! with `Ō^{(m)}_j(0) = 0`, which replaces the two-time history of D.

use num_complex::Complex64 as C64;

use crate::bath::BathKernel;
use crate::linalg::CMatrix;
use crate::model::AggregateModel;

const I: C64 = C64::new(0.0, 1.0);

/// Term-resolved auxiliary operators, one N×N matrix per (site, term).
#[derive(Debug, Clone, PartialEq)]
pub struct AuxOperatorSet {
    n_sites: usize,
    n_terms: usize,
    ops: Vec<CMatrix>,
}

impl AuxOperatorSet {
    pub fn zeros(n_sites: usize, n_terms: usize) -> Self {
        Self {
            n_sites,
            n_terms,
            ops: vec![CMatrix::zeros(n_sites); n_sites * n_terms],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn term(&self, site: usize, term: usize) -> &CMatrix {
        &self.ops[site * self.n_terms + term]
    }

    pub fn term_mut(&mut self, site: usize, term: usize) -> &mut CMatrix {
        &mut self.ops[site * self.n_terms + term]
    }

    /// `Ō^{(m)} = Σ_j Ō^{(m)}_j`
    pub fn site_operator(&self, site: usize) -> CMatrix {
        let mut out = CMatrix::zeros(self.n_sites);
        for j in 0..self.n_terms {
            out.axpy(C64::new(1.0, 0.0), self.term(site, j));
        }
        out
    }

    /// `Σ_l P_l Ō^{(l)}`: row l taken from `Ō^{(l)}`.
    pub fn memory_matrix(&self) -> CMatrix {
        let n = self.n_sites;
        let mut out = CMatrix::zeros(n);
        for l in 0..n {
            for j in 0..self.n_terms {
                let row = self.term(l, j).row(l);
                for b in 0..n {
                    out[(l, b)] += row[b];
                }
            }
        }
        out
    }

    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        let a = C64::new(alpha, 0.0);
        for (y, x) in self.ops.iter_mut().zip(&other.ops) {
            y.axpy(a, x);
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.ops
            .iter()
            .zip(&other.ops)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Time derivative of the auxiliary operator set.
pub fn aux_rhs(model: &AggregateModel, kernel: &BathKernel, aux: &AuxOperatorSet) -> AuxOperatorSet {
    general_rhs(&model.electronic_hamiltonian(), kernel, aux)
}

fn generator(h_el: &CMatrix, memory: &CMatrix) -> CMatrix {
    let mut a = memory.clone();
    a.axpy(-I, h_el);
    a
}

fn general_rhs(h_el: &CMatrix, kernel: &BathKernel, aux: &AuxOperatorSet) -> AuxOperatorSet {
    let a = generator(h_el, &aux.memory_matrix());
    let mut out = AuxOperatorSet::zeros(aux.n_sites, aux.n_terms);
    for m in 0..aux.n_sites {
        for (j, term) in kernel.terms().iter().enumerate() {
            let o = aux.term(m, j);
            let d = out.term_mut(m, j);
            CMatrix::add_commutator(d, &a, o);
            d.axpy(-term.rate, o);
            d[(m, m)] -= term.amplitude;
        }
    }
    out
}

/// Ō^{(m)} for every site, summed over kernel terms.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum SiteOperators {
    General(Vec<CMatrix>),
    /// Ring symmetry: `Ō^{(m)}[a][b] = Ō^{(0)}[a-m][b-m]` (indices mod N).
    Cyclic(CMatrix),
}

impl SiteOperators {
    fn n(&self) -> usize {
        match self {
            Self::General(ops) => ops.len(),
            Self::Cyclic(op) => op.dim(),
        }
    }

    pub(crate) fn site_operator(&self, m: usize) -> CMatrix {
        match self {
            Self::General(ops) => ops[m].clone(),
            Self::Cyclic(op) => {
                let n = op.dim();
                CMatrix::from_fn(n, |a, b| op[((a + n - m) % n, (b + n - m) % n)])
            }
        }
    }

    pub(crate) fn memory_matrix(&self) -> CMatrix {
        match self {
            Self::General(ops) => {
                let n = ops.len();
                CMatrix::from_fn(n, |l, b| ops[l][(l, b)])
            }
            Self::Cyclic(op) => {
                let n = op.dim();
                CMatrix::from_fn(n, |l, b| op[(0, (b + n - l) % n)])
            }
        }
    }

    /// `out = Σ_m weights[m] Ō^{(m)} ψ`
    pub(crate) fn weighted_apply(&self, weights: &[f64], psi: &[C64], out: &mut [C64]) {
        let n = self.n();
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        match self {
            Self::General(ops) => {
                for (m, op) in ops.iter().enumerate() {
                    let w = weights[m];
                    if w == 0.0 {
                        continue;
                    }
                    for (a, o) in out.iter_mut().enumerate() {
                        let s: C64 = op.row(a).iter().zip(psi).map(|(x, y)| x * y).sum();
                        *o += w * s;
                    }
                }
            }
            Self::Cyclic(op) => {
                for (m, &w) in weights.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    for (a, o) in out.iter_mut().enumerate() {
                        let row = op.row((a + n - m) % n);
                        let mut s = C64::new(0.0, 0.0);
                        for (r, x) in row.iter().enumerate() {
                            s += x * psi[(r + m) % n];
                        }
                        *o += w * s;
                    }
                }
            }
        }
    }
}

/// Auxiliary state being integrated, in the general or ring-reduced layout.
#[derive(Debug, Clone)]
pub(crate) enum AuxState {
    General(AuxOperatorSet),
    /// Only the site-0 operators, one per kernel term.
    Cyclic(Vec<CMatrix>),
}

impl AuxState {
    pub(crate) fn zeros(model: &AggregateModel, kernel: &BathKernel, use_symmetry: bool) -> Self {
        let n = model.n_sites();
        if use_symmetry && model.is_cyclic() && kernel.n_terms() > 0 {
            Self::Cyclic(vec![CMatrix::zeros(n); kernel.n_terms()])
        } else {
            Self::General(AuxOperatorSet::zeros(n, kernel.n_terms()))
        }
    }

    pub(crate) fn snapshot(&self) -> SiteOperators {
        match self {
            Self::General(set) => {
                SiteOperators::General((0..set.n_sites()).map(|m| set.site_operator(m)).collect())
            }
            Self::Cyclic(ops) => {
                let n = ops.first().map_or(0, |o| o.dim());
                let mut sum = CMatrix::zeros(n);
                for o in ops {
                    sum.axpy(C64::new(1.0, 0.0), o);
                }
                SiteOperators::Cyclic(sum)
            }
        }
    }

    pub(crate) fn rhs(&self, h_el: &CMatrix, kernel: &BathKernel) -> Self {
        match self {
            Self::General(set) => Self::General(general_rhs(h_el, kernel, set)),
            Self::Cyclic(ops) => {
                let n = h_el.dim();
                let mut sum = CMatrix::zeros(n);
                for o in ops {
                    sum.axpy(C64::new(1.0, 0.0), o);
                }
                let a = generator(h_el, &SiteOperators::Cyclic(sum).memory_matrix());
                Self::Cyclic(
                    ops.iter()
                        .zip(kernel.terms())
                        .map(|(o, term)| {
                            let mut d = CMatrix::zeros(n);
                            CMatrix::add_commutator(&mut d, &a, o);
                            d.axpy(-term.rate, o);
                            d[(0, 0)] -= term.amplitude;
                            d
                        })
                        .collect(),
                )
            }
        }
    }

    pub(crate) fn axpy(&mut self, alpha: f64, x: &Self) {
        match (self, x) {
            (Self::General(y), Self::General(x)) => y.axpy(alpha, x),
            (Self::Cyclic(y), Self::Cyclic(x)) => {
                for (y, x) in y.iter_mut().zip(x) {
                    y.axpy(C64::new(alpha, 0.0), x);
                }
            }
            _ => unreachable!("aux layouts never mix"),
        }
    }

    /// Term-resolved operators in the general layout.
    pub(crate) fn to_set(&self) -> AuxOperatorSet {
        match self {
            Self::General(set) => set.clone(),
            Self::Cyclic(ops) => {
                let n = ops.first().map_or(0, |o| o.dim());
                let mut set = AuxOperatorSet::zeros(n, ops.len());
                for m in 0..n {
                    for (j, o) in ops.iter().enumerate() {
                        *set.term_mut(m, j) = SiteOperators::Cyclic(o.clone()).site_operator(m);
                    }
                }
                set
            }
        }
    }
}

/// Operators needed by one Runge-Kutta stage of the state equation.
#[derive(Debug, Clone)]
pub(crate) struct StageOps {
    pub(crate) ops: SiteOperators,
    /// `Σ_l P_l Ō^{(l)}`
    pub(crate) memory: CMatrix,
}

impl StageOps {
    fn from_state(state: &AuxState) -> Self {
        let ops = state.snapshot();
        let memory = ops.memory_matrix();
        Self { ops, memory }
    }
}

/// Classical RK4 on the auxiliary equation. Each step yields the operators at
/// the four Runge-Kutta stages, so a state integrated with them reproduces the
/// joint RK4 integration of state and operators exactly.
pub(crate) struct AuxIntegrator {
    state: AuxState,
    h_el: CMatrix,
    kernel: BathKernel,
    step: f64,
}

impl AuxIntegrator {
    pub(crate) fn new(model: &AggregateModel, kernel: &BathKernel, step: f64, use_symmetry: bool) -> Self {
        Self {
            state: AuxState::zeros(model, kernel, use_symmetry),
            h_el: model.electronic_hamiltonian(),
            kernel: kernel.clone(),
            step,
        }
    }

    pub(crate) fn state(&self) -> &AuxState {
        &self.state
    }

    pub(crate) fn advance(&mut self) -> [StageOps; 4] {
        let h = self.step;
        let y0 = &self.state;
        let k1 = y0.rhs(&self.h_el, &self.kernel);
        let s1 = StageOps::from_state(y0);

        let mut y2 = y0.clone();
        y2.axpy(0.5 * h, &k1);
        let k2 = y2.rhs(&self.h_el, &self.kernel);
        let s2 = StageOps::from_state(&y2);

        let mut y3 = y0.clone();
        y3.axpy(0.5 * h, &k2);
        let k3 = y3.rhs(&self.h_el, &self.kernel);
        let s3 = StageOps::from_state(&y3);

        let mut y4 = y0.clone();
        y4.axpy(h, &k3);
        let k4 = y4.rhs(&self.h_el, &self.kernel);
        let s4 = StageOps::from_state(&y4);

        let mut next = y0.clone();
        next.axpy(h / 6.0, &k1);
        next.axpy(h / 3.0, &k2);
        next.axpy(h / 3.0, &k3);
        next.axpy(h / 6.0, &k4);
        self.state = next;
        [s1, s2, s3, s4]
    }
}
