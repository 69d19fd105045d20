//! Small dense complex matrices. Aggregates rarely exceed a few dozen sites,
//! so plain row-major loops beat pulling in a BLAS.

use num_complex::Complex64 as C64;
use std::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                data.push(f(a, b));
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, a: usize) -> &[C64] {
        &self.data[a * self.n..(a + 1) * self.n]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |a, b| self[(b, a)].conj())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|a| self[(a, a)]).sum()
    }

    /// `self += alpha * x`
    pub fn axpy(&mut self, alpha: C64, x: &Self) {
        for (y, x) in self.data.iter_mut().zip(&x.data) {
            *y += alpha * x;
        }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        self.mul_vec_into(v, &mut out);
        out
    }

    pub fn mul_vec_into(&self, v: &[C64], out: &mut [C64]) {
        for (a, o) in out.iter_mut().enumerate() {
            *o = self.row(a).iter().zip(v).map(|(x, y)| x * y).sum();
        }
    }

    /// `out += a * b - b * a`
    pub fn add_commutator(out: &mut Self, a: &Self, b: &Self) {
        let n = a.n;
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..n {
                let aik = a.data[i * n + k];
                let bik = b.data[i * n + k];
                let b_row = &b.data[k * n..(k + 1) * n];
                let a_row = &a.data[k * n..(k + 1) * n];
                for j in 0..n {
                    out_row[j] += aik * b_row[j] - bik * a_row[j];
                }
            }
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (a, b): (usize, usize)) -> &C64 {
        &self.data[a * self.n + b]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (a, b): (usize, usize)) -> &mut C64 {
        &mut self.data[a * self.n + b]
    }
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
