//! Secular Lindblad generators of the phonon bath.
//!
//! Each Bohr frequency ω ≥ 0 groups the energy-basis transitions
//! |E′⟩ → |E⟩ with E′ − E = ħω; negative ω are the reverse (absorption)
//! transitions. Rates γ(ω) then favour relaxation toward lower energy.

use nalgebra::{DMatrix, SymmetricEigen};

use super::bath::{bath_rate, BathSpec};
use crate::network::SiteNetwork;
use crate::{CMatrix, C64};

/// Relative tolerance for identifying two Bohr frequencies.
pub const FREQUENCY_BIN_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct BohrFrequency {
    /// ħω in cm⁻¹.
    pub omega: f64,
    /// γ(ω) in ps⁻¹.
    pub rate: f64,
    /// Energy-basis transitions (to, from) with E_from − E_to = ħω.
    pub transitions: Vec<(usize, usize)>,
    /// A_m(ω) in the site basis, one per site m.
    pub operators: Vec<CMatrix>,
}

#[derive(Clone, Debug)]
pub struct LindbladGenerators {
    /// Eigenvalues of H₀, ascending.
    pub energies: Vec<f64>,
    /// Columns are the eigenvectors |E⟩ in the site basis.
    pub eigenvectors: DMatrix<f64>,
    pub frequencies: Vec<BohrFrequency>,
}

impl LindbladGenerators {
    pub fn find(&self, omega: f64) -> Option<&BohrFrequency> {
        self.frequencies.iter().find(|f| same_frequency(f.omega, omega))
    }

    /// Energy-basis representation U† M U of a site-basis matrix.
    pub fn to_energy_basis(&self, m: &CMatrix) -> CMatrix {
        let u = self.eigenvectors.map(|v| C64::new(v, 0.0));
        u.adjoint() * m * u
    }

    /// Superoperator of L_p acting on column-major vec(ρ).
    pub fn dissipator(&self) -> CMatrix {
        let n = self.energies.len();
        let id = CMatrix::identity(n, n);
        let mut out = CMatrix::zeros(n * n, n * n);
        for f in &self.frequencies {
            if f.rate == 0.0 {
                continue;
            }
            let g = C64::new(f.rate, 0.0);
            for a in &f.operators {
                let ada = a.adjoint() * a;
                // vec(AXB) = (Bᵀ ⊗ A) vec(X)
                let jump = a.map(|z| z.conj()).kronecker(a);
                let left = id.kronecker(&ada);
                let right = ada.transpose().kronecker(&id);
                out += (jump - (left + right).scale(0.5)) * g;
            }
        }
        out
    }
}

fn same_frequency(a: f64, b: f64) -> bool {
    (a - b).abs() <= FREQUENCY_BIN_TOL * a.abs().max(1.0)
}

/// Bohr-frequency decomposition of the site projectors |m⟩⟨m| over the
/// eigenbasis of H₀, with rates from `bath`.
pub fn build_generators(net: &SiteNetwork, bath: &BathSpec) -> LindbladGenerators {
    let n = net.n_sites();
    let eig = SymmetricEigen::new(net.closed_hamiltonian());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);

    let mut frequencies: Vec<BohrFrequency> = Vec::new();
    for to in 0..n {
        for from in 0..n {
            let omega = energies[from] - energies[to];
            match frequencies.iter_mut().find(|f| same_frequency(f.omega, omega)) {
                Some(f) => f.transitions.push((to, from)),
                None => frequencies.push(BohrFrequency {
                    omega,
                    rate: 0.0,
                    transitions: vec![(to, from)],
                    operators: Vec::new(),
                }),
            }
        }
    }
    frequencies.sort_by(|a, b| a.omega.total_cmp(&b.omega));

    let u = eigenvectors.map(|v| C64::new(v, 0.0));
    for f in &mut frequencies {
        // Exactly-degenerate groups share one representative frequency.
        if f.transitions.iter().all(|&(a, b)| a == b) {
            f.omega = 0.0;
        }
        f.rate = bath_rate(bath, f.omega);
        f.operators = (0..n)
            .map(|m| {
                let mut a = CMatrix::zeros(n, n);
                for &(to, from) in &f.transitions {
                    a[(to, from)] += C64::new(eigenvectors[(m, to)] * eigenvectors[(m, from)], 0.0);
                }
                &u * a * u.adjoint()
            })
            .collect();
    }
    LindbladGenerators {
        energies,
        eigenvectors,
        frequencies,
    }
}
