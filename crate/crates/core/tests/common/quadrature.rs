//! Plain Gauss–Legendre quadrature, used for reference integrals of the
//! bath correlation function.

use num_complex::Complex64 as C64;

use nmqsd::{BathKernel, SpectralDensity};

/// Nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

pub fn integrate(f: impl Fn(f64) -> C64, a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> C64 {
    let width = (b - a) / panels as f64;
    let mut acc = C64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        for &(x, w) in rule {
            acc += f(mid + 0.5 * width * x) * (0.5 * width * w);
        }
    }
    acc
}

/// `g(t) = ∫_0^t ds ∫_0^s ds' α(s')` evaluated as a genuine double integral.
pub fn line_shape_function(kernel: &BathKernel, t: f64) -> C64 {
    if t == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let rule = gauss_legendre(12);
    let panels = (t / 0.2).ceil() as usize;
    let width = t / panels as f64;
    let alpha = |s: f64| kernel.eval(s);
    let mut before = C64::new(0.0, 0.0);
    let mut outer = C64::new(0.0, 0.0);
    for p in 0..panels {
        let start = p as f64 * width;
        for &(x, w) in &rule {
            let s = start + 0.5 * width * (1.0 + x);
            let inner = before + integrate(alpha, start, s, 1, &rule);
            outer += inner * (0.5 * width * w);
        }
        before += integrate(alpha, start, start + width, 1, &rule);
    }
    outer
}

/// `α(τ) = ∫ J(ω) e^{-iωτ} dω` over a wide window.
pub fn kernel_from_quadrature(sd: &SpectralDensity, tau: f64, half_width: f64) -> C64 {
    let rule = gauss_legendre(10);
    let panels = (2.0 * half_width / 0.05) as usize;
    integrate(
        |w| sd.evaluate(w) * C64::new(0.0, -w * tau).exp(),
        -half_width,
        half_width,
        panels,
        &rule,
    )
}
