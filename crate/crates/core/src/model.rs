//! Electronic part of the Holstein aggregate: site energies, nearest-neighbour
//! couplings and transition dipoles. Energies are in units of the monomer
//! spectral width Δ, measured from the monomer electronic transition.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Amplitudes of a single-excitation state on the site basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectronicState(pub Vec<C64>);

impl ElectronicState {
    /// Excitation localised on `site` (0-based).
    pub fn localized(n_sites: usize, site: usize) -> Result<Self> {
        if site >= n_sites {
            return Err(Error::InvalidInput(format!(
                "site {site} out of range for {n_sites} sites"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); n_sites];
        amps[site] = C64::new(1.0, 0.0);
        Ok(Self(amps))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        crate::linalg::norm_sqr(&self.0)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput("cannot normalise a zero state".into()));
        }
        Ok(Self(self.0.iter().map(|a| a / n).collect()))
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateModel {
    site_energies: Vec<f64>,
    /// Row-major N×N, symmetric with zero diagonal.
    coupling: Vec<f64>,
    dipoles: Vec<[f64; 3]>,
}

impl AggregateModel {
    pub fn new(site_energies: Vec<f64>, coupling: Vec<f64>, dipoles: Vec<[f64; 3]>) -> Result<Self> {
        let n = site_energies.len();
        if n == 0 {
            return Err(Error::InvalidSpec("aggregate needs at least one site".into()));
        }
        if coupling.len() != n * n {
            return Err(Error::InvalidSpec(format!(
                "coupling matrix has {} entries, expected {}",
                coupling.len(),
                n * n
            )));
        }
        if dipoles.len() != n {
            return Err(Error::InvalidSpec(format!("{} dipoles for {n} sites", dipoles.len())));
        }
        let finite = site_energies.iter().chain(&coupling).chain(dipoles.iter().flatten());
        if finite.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("non-finite model parameter".into()));
        }
        for a in 0..n {
            if coupling[a * n + a] != 0.0 {
                return Err(Error::InvalidSpec(format!("coupling diagonal at site {a} is nonzero")));
            }
            for b in 0..a {
                if coupling[a * n + b] != coupling[b * n + a] {
                    return Err(Error::InvalidSpec(format!(
                        "coupling matrix not symmetric at ({a}, {b})"
                    )));
                }
            }
        }
        Ok(Self { site_energies, coupling, dipoles })
    }

    /// A single monomer at energy `energy` with a unit dipole along x.
    pub fn monomer(energy: f64) -> Self {
        Self {
            site_energies: vec![energy],
            coupling: vec![0.0],
            dipoles: vec![[1.0, 0.0, 0.0]],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.site_energies.len()
    }

    pub fn site_energies(&self) -> &[f64] {
        &self.site_energies
    }

    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        self.coupling[a * self.n_sites() + b]
    }

    pub fn dipoles(&self) -> &[[f64; 3]] {
        &self.dipoles
    }

    /// Same model with every coupling set to zero.
    pub fn uncoupled(&self) -> Self {
        Self {
            coupling: vec![0.0; self.coupling.len()],
            ..self.clone()
        }
    }

    /// `H_el[n][m] = ε_n δ_nm + V_nm`.
    pub fn electronic_hamiltonian(&self) -> CMatrix {
        let n = self.n_sites();
        CMatrix::from_fn(n, |a, b| {
            let diag = if a == b { self.site_energies[a] } else { 0.0 };
            C64::new(diag + self.coupling[a * n + b], 0.0)
        })
    }

    /// Eigenvalues (ascending) and eigenvectors (columns) of the real
    /// symmetric electronic Hamiltonian.
    pub fn eigensystem(&self) -> (Vec<f64>, DMatrix<f64>) {
        let n = self.n_sites();
        let h = DMatrix::from_fn(n, n, |a, b| {
            let diag = if a == b { self.site_energies[a] } else { 0.0 };
            diag + self.coupling[a * n + b]
        });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    pub fn spectral_radius(&self) -> f64 {
        let (values, _) = self.eigensystem();
        values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// True when the model is invariant under the cyclic shift of site labels
    /// `n -> n + 1 mod N`: equal site energies and a circulant coupling matrix.
    pub fn is_cyclic(&self) -> bool {
        let n = self.n_sites();
        let e0 = self.site_energies[0];
        if self.site_energies.iter().any(|&e| e != e0) {
            return false;
        }
        (0..n).all(|a| (0..n).all(|b| self.coupling(a, b) == self.coupling(0, (b + n - a) % n)))
    }

    /// Initial state for absorption: amplitude `E·μ_n` on site n, not normalised.
    pub fn bright_state(&self, polarization: [f64; 3]) -> Result<ElectronicState> {
        if polarization.iter().all(|&x| x == 0.0) || polarization.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("polarization must be a finite nonzero vector".into()));
        }
        Ok(ElectronicState(
            self.dipoles
                .iter()
                .map(|mu| C64::new(mu.iter().zip(&polarization).map(|(a, b)| a * b).sum(), 0.0))
                .collect(),
        ))
    }
}

/// Ring of identical monomers with nearest-neighbour coupling and in-plane
/// dipoles rotated by a fixed angle from one site to the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSpec {
    pub n_sites: usize,
    /// V = V_{n,n+1}
    pub nn_coupling: f64,
    /// Angle between neighbouring transition dipoles, radians.
    pub dipole_tilt: f64,
    pub site_energy: f64,
}

impl RingSpec {
    /// Ring whose dipoles turn once around the ring (tilt 2π/N). With this
    /// arrangement the in-plane bright state sits in the k = ±1 exciton
    /// manifold, so the purely electronic absorption line lies at `shift()`.
    pub fn new(n_sites: usize, nn_coupling: f64) -> Self {
        Self {
            n_sites,
            nn_coupling,
            dipole_tilt: if n_sites > 0 { TAU / n_sites as f64 } else { 0.0 },
            site_energy: 0.0,
        }
    }

    /// Ring with the nearest-neighbour coupling chosen so that
    /// [`shift`](Self::shift) equals `shift`.
    pub fn from_shift(n_sites: usize, shift: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::InvalidSpec(format!("ring needs N >= 2, got {n_sites}")));
        }
        if n_sites == 2 {
            return Ok(Self::new(2, -shift));
        }
        let c = (TAU / n_sites as f64).cos();
        if c.abs() < 1e-12 {
            if shift == 0.0 {
                return Ok(Self::new(n_sites, 0.0));
            }
            return Err(Error::InvalidSpec(format!(
                "shift {shift} unreachable: cos(2π/N) vanishes for N = {n_sites}"
            )));
        }
        Ok(Self::new(n_sites, shift / (2.0 * c)))
    }

    /// C = 2 V cos(2π/N), the energy of the k = ±1 excitons. The dimer has a
    /// single bond, so its antisymmetric state (the bright one for antiparallel
    /// dipoles) sits at -V instead.
    pub fn shift(&self) -> f64 {
        if self.n_sites == 2 {
            return -self.nn_coupling;
        }
        2.0 * self.nn_coupling * (TAU / self.n_sites as f64).cos()
    }

    pub fn with_tilt(mut self, tilt: f64) -> Self {
        self.dipole_tilt = tilt;
        self
    }

    pub fn with_site_energy(mut self, energy: f64) -> Self {
        self.site_energy = energy;
        self
    }
}

/// Periodic ring. For N = 2 the two sites share a single bond (coupling V,
/// not 2V).
pub fn build_ring(spec: &RingSpec) -> Result<AggregateModel> {
    let n = spec.n_sites;
    if n < 2 {
        return Err(Error::InvalidSpec(format!("ring needs N >= 2, got {n}")));
    }
    let mut coupling = vec![0.0; n * n];
    for a in 0..n {
        let b = (a + 1) % n;
        coupling[a * n + b] = spec.nn_coupling;
        coupling[b * n + a] = spec.nn_coupling;
    }
    let dipoles = (0..n)
        .map(|k| {
            let phi = k as f64 * spec.dipole_tilt;
            [phi.cos(), phi.sin(), 0.0]
        })
        .collect();
    AggregateModel::new(vec![spec.site_energy; n], coupling, dipoles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn shift_of_trimer() {
        let spec = RingSpec::new(3, -1.3);
        assert_abs_diff_eq!(spec.shift(), 1.3, epsilon = 1e-12);
    }

    #[test]
    fn shift_inversion_for_fifteen_ring() {
        let spec = RingSpec::from_shift(15, -2.6).unwrap();
        // V = C / (2 cos(2π/15)), cos(24°) = 0.913545...
        assert_abs_diff_eq!(spec.nn_coupling, -1.4230, epsilon = 1e-3);
        assert_abs_diff_eq!(spec.shift(), -2.6, epsilon = 1e-12);
    }

    #[test]
    fn four_ring_shift_is_unreachable() {
        assert!(matches!(RingSpec::from_shift(4, -1.0), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn dimer_has_single_bond() {
        let m = build_ring(&RingSpec::new(2, 0.7)).unwrap();
        assert_eq!(m.coupling(0, 1), 0.7);
        assert_eq!(m.coupling(1, 0), 0.7);
        assert_eq!(m.coupling(0, 0), 0.0);
        let spec = RingSpec::from_shift(2, -2.6).unwrap();
        assert_eq!(spec.nn_coupling, 2.6);
        let m = build_ring(&spec).unwrap();
        let psi = m.bright_state([1.0, 0.0, 0.0]).unwrap().normalized().unwrap();
        let hpsi = m.electronic_hamiltonian().mul_vec(&psi.0);
        let e = crate::linalg::inner(&psi.0, &hpsi);
        assert_abs_diff_eq!(e.re, -2.6, epsilon = 1e-12);
    }

    #[test]
    fn ring_rejects_single_site() {
        assert!(build_ring(&RingSpec::new(1, 1.0)).is_err());
    }

    #[test]
    fn monomer_hamiltonian() {
        let h = AggregateModel::monomer(0.0).electronic_hamiltonian();
        assert_eq!(h.dim(), 1);
        assert_eq!(h[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn trimer_eigenvalues() {
        let m = build_ring(&RingSpec::new(3, 1.0)).unwrap();
        let (vals, _) = m.eigensystem();
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], 2.0, epsilon = 1e-12);
        let h = m.electronic_hamiltonian();
        assert_eq!(h.max_abs_diff(&h.adjoint()), 0.0);
    }

    #[test]
    fn rejects_asymmetric_coupling() {
        let err = AggregateModel::new(vec![0.0; 2], vec![0.0, 1.0, 2.0, 0.0], vec![[1.0, 0.0, 0.0]; 2]);
        assert!(matches!(err, Err(Error::InvalidSpec(_))));
        let err = AggregateModel::new(vec![0.0; 2], vec![1.0, 1.0, 1.0, 0.0], vec![[1.0, 0.0, 0.0]; 2]);
        assert!(matches!(err, Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn bright_state_amplitudes() {
        let mono = AggregateModel::monomer(0.0);
        let s = mono.bright_state([1.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.0, vec![C64::new(1.0, 0.0)]);

        let parallel = build_ring(&RingSpec::new(6, -1.0).with_tilt(0.0)).unwrap();
        let s = parallel.bright_state([1.0, 0.0, 0.0]).unwrap();
        assert!(s.0.iter().all(|a| (a - C64::new(1.0, 0.0)).norm() < 1e-15));

        let four = build_ring(&RingSpec::new(4, 1.0).with_tilt(PI / 2.0)).unwrap();
        let s = four.bright_state([1.0, 0.0, 0.0]).unwrap();
        let expect = [1.0, 0.0, -1.0, 0.0];
        for (a, e) in s.0.iter().zip(expect) {
            assert_abs_diff_eq!(a.re, e, epsilon = 1e-12);
        }

        assert!(mono.bright_state([0.0; 3]).is_err());
    }

    #[test]
    fn cyclic_detection() {
        assert!(build_ring(&RingSpec::new(5, 0.3)).unwrap().is_cyclic());
        let chain = AggregateModel::new(
            vec![0.0; 3],
            vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            vec![[1.0, 0.0, 0.0]; 3],
        )
        .unwrap();
        assert!(!chain.is_cyclic());
    }
}
