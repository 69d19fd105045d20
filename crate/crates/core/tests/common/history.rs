//! Brute-force two-time history for the auxiliary operators: every
//! `D^{(m)}(t, s)` is carried separately and `Ō` is rebuilt by quadrature of
//! the kernel at each step. Second order in the step.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nmqsd::{AggregateModel, BathKernel, KernelTerm, TimeGrid};

pub type M = DMatrix<C64>;

fn projector(n: usize, m: usize) -> M {
    let mut p = M::zeros(n, n);
    p[(m, m)] = C64::new(1.0, 0.0);
    p
}

struct History {
    h_el: M,
    kernel: BathKernel,
    step: f64,
    /// `hist[m][j] = D^{(m)}(t, s_j)`
    hist: Vec<Vec<M>>,
}

impl History {
    fn new(model: &AggregateModel, kernel: &BathKernel, step: f64) -> Self {
        let n = model.n_sites();
        let h_el = M::from_fn(n, n, |a, b| {
            if a == b {
                C64::new(model.site_energies()[a], 0.0)
            } else {
                C64::new(model.coupling(a, b), 0.0)
            }
        });
        let hist = (0..n).map(|m| vec![-projector(n, m)]).collect();
        Self { h_el, kernel: kernel.clone(), step, hist }
    }

    fn n(&self) -> usize {
        self.h_el.nrows()
    }

    /// Trapezoid rule over s ∈ [0, t] for every site.
    fn aux(hist: &[Vec<M>], kernel: &BathKernel, step: f64) -> Vec<M> {
        hist.iter()
            .map(|row| {
                let k = row.len() - 1;
                let mut acc = M::zeros(row[0].nrows(), row[0].ncols());
                if k == 0 {
                    return acc;
                }
                for (j, d) in row.iter().enumerate() {
                    let w = if j == 0 || j == k { 0.5 } else { 1.0 };
                    acc += d * (kernel.eval((k - j) as f64 * step) * w * step);
                }
                acc
            })
            .collect()
    }

    fn generator(&self, aux: &[M]) -> M {
        let n = self.n();
        let mut a = &self.h_el * C64::new(0.0, -1.0);
        for (l, o) in aux.iter().enumerate() {
            a += projector(n, l) * o;
        }
        a
    }

    fn current_aux(&self) -> Vec<M> {
        Self::aux(&self.hist, &self.kernel, self.step)
    }

    /// Heun step of every `D(·, s_j)`, then a new column `D(t+h, t+h) = -P`.
    fn advance(&mut self) {
        let n = self.n();
        let h = self.step;
        let a0 = self.generator(&self.current_aux());
        let comm = |a: &M, d: &M| a * d - d * a;
        let mut predicted: Vec<Vec<M>> = self
            .hist
            .iter()
            .map(|row| row.iter().map(|d| d + comm(&a0, d) * C64::new(h, 0.0)).collect())
            .collect();
        for (m, row) in predicted.iter_mut().enumerate() {
            row.push(-projector(n, m));
        }
        let a1 = self.generator(&Self::aux(&predicted, &self.kernel, h));
        for (m, row) in self.hist.iter_mut().enumerate() {
            for d in row.iter_mut() {
                let slope = comm(&a0, d) + comm(&a1, &(&*d + comm(&a0, d) * C64::new(h, 0.0)));
                *d += slope * C64::new(0.5 * h, 0.0);
            }
            row.push(-projector(n, m));
        }
    }
}

pub fn history_aux(model: &AggregateModel, kernel: &BathKernel, step: f64, n_steps: usize, every: usize) -> Vec<Vec<M>> {
    let mut hist = History::new(model, kernel, step);
    let mut out = vec![hist.current_aux()];
    for k in 1..=n_steps {
        hist.advance();
        if k % every == 0 {
            out.push(hist.current_aux());
        }
    }
    out
}

pub fn random_instance(seed: u64) -> (AggregateModel, BathKernel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 3;
    let energies: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut coupling = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..a {
            let v = rng.random_range(-1.0..1.0);
            coupling[a * n + b] = v;
            coupling[b * n + a] = v;
        }
    }
    let model = AggregateModel::new(energies, coupling, vec![[1.0, 0.0, 0.0]; n]).unwrap();
    let terms = (0..2)
        .map(|_| KernelTerm {
            amplitude: C64::new(rng.random_range(0.05..0.5), 0.0),
            rate: C64::new(rng.random_range(0.1..1.0), rng.random_range(-2.0..2.0)),
        })
        .collect();
    (model, BathKernel::new(terms).unwrap())
}


/// Largest element-wise gap between the auxiliary equation and the
/// Richardson-extrapolated history over t ≤ 5.
pub fn aux_history_deviation(model: &AggregateModel, kernel: &BathKernel) -> f64 {
    let n = model.n_sites();
    let grid = TimeGrid::new(0.01, 500).unwrap();
    let fast = nmqsd::propagate::aux_trajectory(model, kernel, grid);
    let coarse = history_aux(model, kernel, 0.01, 500, 1);
    let fine = history_aux(model, kernel, 0.005, 1000, 2);
    let mut worst: f64 = 0.0;
    for k in (0..=500).step_by(10) {
        for m in 0..n {
            let reference = (&fine[k][m] * C64::new(4.0, 0.0) - &coarse[k][m]) / C64::new(3.0, 0.0);
            let ours = fast[k].site_operator(m);
            for a in 0..n {
                for b in 0..n {
                    worst = worst.max((ours[(a, b)] - reference[(a, b)]).norm());
                }
            }
        }
    }
    worst
}
