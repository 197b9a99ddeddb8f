//! Site networks: closed Hamiltonian, sink attachments and the non-Hermitian
//! effective Hamiltonian they generate.

mod model_file;
mod state;

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::BathSpec;
use crate::error::ValidationError;
use crate::{CMatrix, C64};

pub use model_file::{load_network, parse_network, save_network, write_network};
pub use state::{initial_state, DensityMatrix, InitialState};

/// Which end of the network a sink drains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SinkLabel {
    L,
    R,
}

impl fmt::Display for SinkLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SinkLabel::L => f.write_str("L"),
            SinkLabel::R => f.write_str("R"),
        }
    }
}

/// An absorbing continuum attached to one site (0-based index).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sink {
    pub site: usize,
    pub gamma: f64,
    pub label: SinkLabel,
}

/// Site energies, real symmetric couplings and sink attachments, all in cm⁻¹.
///
/// Immutable once built; every constructor validates the invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteNetwork {
    energies: Vec<f64>,
    couplings: DMatrix<f64>,
    sinks: Vec<Sink>,
    special_pair: Option<(usize, usize)>,
    bath: Option<BathSpec>,
}

impl SiteNetwork {
    pub fn new(
        energies: Vec<f64>,
        couplings: DMatrix<f64>,
        sinks: Vec<Sink>,
        special_pair: Option<(usize, usize)>,
    ) -> Result<Self, ValidationError> {
        let net = Self {
            energies,
            couplings,
            sinks,
            special_pair,
            bath: None,
        };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<(), ValidationError> {
        let n = self.energies.len();
        if n == 0 {
            return Err(ValidationError::invalid("network has no sites"));
        }
        if self.couplings.nrows() != n || self.couplings.ncols() != n {
            return Err(ValidationError::invalid(format!(
                "coupling matrix is {}x{}, expected {n}x{n}",
                self.couplings.nrows(),
                self.couplings.ncols()
            )));
        }
        if let Some(i) = self.energies.iter().position(|e| !e.is_finite()) {
            return Err(ValidationError::invalid(format!(
                "site {} has a non-finite energy",
                i + 1
            )));
        }
        for i in 0..n {
            if self.couplings[(i, i)] != 0.0 {
                return Err(ValidationError::invalid(format!(
                    "coupling matrix diagonal entry at site {} is non-zero",
                    i + 1
                )));
            }
            for j in 0..n {
                let v = self.couplings[(i, j)];
                if !v.is_finite() {
                    return Err(ValidationError::invalid(format!(
                        "coupling ({}, {}) is not finite",
                        i + 1,
                        j + 1
                    )));
                }
                if v != self.couplings[(j, i)] {
                    return Err(ValidationError::invalid(format!(
                        "coupling matrix is asymmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        for (idx, s) in self.sinks.iter().enumerate() {
            if s.site >= n {
                return Err(ValidationError::invalid(format!(
                    "sink {} is attached to site {}, but the network has {n} sites",
                    s.label,
                    s.site + 1
                )));
            }
            if !(s.gamma.is_finite() && s.gamma >= 0.0) {
                return Err(ValidationError::invalid(format!(
                    "sink {} has invalid decay strength {}",
                    s.label, s.gamma
                )));
            }
            if self.sinks[..idx].iter().any(|o| o.label == s.label) {
                return Err(ValidationError::invalid(format!(
                    "more than one sink labelled {}",
                    s.label
                )));
            }
        }
        if let Some((a, b)) = self.special_pair {
            if a >= n || b >= n || a == b {
                return Err(ValidationError::invalid(format!(
                    "special pair ({}, {}) is not a pair of distinct sites",
                    a + 1,
                    b + 1
                )));
            }
        }
        if let Some(bath) = &self.bath {
            bath.validate()?;
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.couplings
    }

    pub fn sinks(&self) -> &[Sink] {
        &self.sinks
    }

    pub fn sink(&self, label: SinkLabel) -> Option<&Sink> {
        self.sinks.iter().find(|s| s.label == label)
    }

    /// Decay strength of the sink with this label, zero when absent.
    pub fn gamma(&self, label: SinkLabel) -> f64 {
        self.sink(label).map_or(0.0, |s| s.gamma)
    }

    pub fn special_pair(&self) -> Option<(usize, usize)> {
        self.special_pair
    }

    pub fn bath(&self) -> Option<&BathSpec> {
        self.bath.as_ref()
    }

    pub fn with_bath(mut self, bath: Option<BathSpec>) -> Result<Self, ValidationError> {
        self.bath = bath;
        self.validate()?;
        Ok(self)
    }

    /// Same geometry with new decay strengths on the L and R sinks.
    pub fn with_gammas(&self, gamma_l: f64, gamma_r: f64) -> Result<Self, ValidationError> {
        let mut out = self.clone();
        for label in [SinkLabel::L, SinkLabel::R] {
            if out.sink(label).is_none() {
                return Err(ValidationError::invalid(format!(
                    "network has no {label} sink"
                )));
            }
        }
        for s in &mut out.sinks {
            s.gamma = match s.label {
                SinkLabel::L => gamma_l,
                SinkLabel::R => gamma_r,
            };
        }
        out.validate()?;
        Ok(out)
    }

    /// Copy with every sink decay set to zero.
    pub fn closed(&self) -> Self {
        let mut out = self.clone();
        for s in &mut out.sinks {
            s.gamma = 0.0;
        }
        out
    }

    /// The closed-system Hamiltonian H₀ = diag(E) + couplings.
    pub fn closed_hamiltonian(&self) -> DMatrix<f64> {
        let mut h = self.couplings.clone();
        for (i, e) in self.energies.iter().enumerate() {
            h[(i, i)] = *e;
        }
        h
    }

    /// Coupling scale Ω used to turn decay strengths into κ = γ/(2Ω).
    ///
    /// The largest coupling magnitude touching a sink site; for the multimer
    /// this is exactly Ω. Falls back to the largest coupling overall.
    pub fn reference_coupling(&self) -> f64 {
        let row_max = |i: usize| {
            self.couplings
                .row(i)
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()))
        };
        let at_sinks = self.sinks.iter().map(|s| row_max(s.site)).fold(0.0, f64::max);
        if at_sinks > 0.0 {
            at_sinks
        } else {
            self.couplings.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        }
    }

    /// κ_{L,R} and q for the current decay strengths.
    pub fn coupling_ratios(&self) -> Option<CouplingRatios> {
        CouplingRatios::from_gammas(
            self.gamma(SinkLabel::L),
            self.gamma(SinkLabel::R),
            self.reference_coupling(),
        )
    }
}

/// Dimensionless sink couplings κ = γ/(2Ω) and their ratio q = κ_L/κ_R.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingRatios {
    pub kappa_l: f64,
    pub kappa_r: f64,
    pub q: f64,
}

impl CouplingRatios {
    /// `None` when Ω is not positive or either κ is zero.
    pub fn from_gammas(gamma_l: f64, gamma_r: f64, omega: f64) -> Option<Self> {
        if !(omega > 0.0) {
            return None;
        }
        let kappa_l = gamma_l / (2.0 * omega);
        let kappa_r = gamma_r / (2.0 * omega);
        if !(kappa_l > 0.0 && kappa_r > 0.0) {
            return None;
        }
        Some(Self {
            kappa_l,
            kappa_r,
            q: kappa_l / kappa_r,
        })
    }

    /// (γ_L, γ_R) for given κ_L and q at coupling scale Ω.
    pub fn gammas(kappa_l: f64, q: f64, omega: f64) -> (f64, f64) {
        (2.0 * omega * kappa_l, 2.0 * omega * kappa_l / q)
    }
}

/// The six-site multimer: open chain 5–3–1–2–4–6 with the special pair
/// (1, 2) bonded by Ω^sp, all other bonds Ω, sink L on site 5 and R on 6.
pub fn build_multimer(
    omega: f64,
    omega_sp: f64,
    gamma_l: f64,
    gamma_r: f64,
) -> Result<SiteNetwork, ValidationError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(ValidationError::invalid(format!(
            "omega must be positive, got {omega}"
        )));
    }
    if !(omega_sp > 0.0 && omega_sp.is_finite()) {
        return Err(ValidationError::invalid(format!(
            "omega_sp must be positive, got {omega_sp}"
        )));
    }
    let mut couplings = DMatrix::zeros(6, 6);
    let bonds = [
        (0, 1, omega_sp),
        (0, 2, omega),
        (1, 3, omega),
        (2, 4, omega),
        (3, 5, omega),
    ];
    for (i, j, v) in bonds {
        couplings[(i, j)] = v;
        couplings[(j, i)] = v;
    }
    SiteNetwork::new(
        vec![0.0; 6],
        couplings,
        vec![
            Sink {
                site: 4,
                gamma: gamma_l,
                label: SinkLabel::L,
            },
            Sink {
                site: 5,
                gamma: gamma_r,
                label: SinkLabel::R,
            },
        ],
        Some((0, 1)),
    )
}

/// The complex matrix ℋ = H₀ − i Σ_s (γ_s/2)|s⟩⟨s|, remembering which sites
/// carry the L and R sinks.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveHamiltonian {
    matrix: CMatrix,
    sink_l: Option<usize>,
    sink_r: Option<usize>,
}

impl EffectiveHamiltonian {
    /// Wraps an arbitrary square matrix with no sink sites attached.
    pub fn from_matrix(matrix: CMatrix) -> Self {
        Self {
            matrix,
            sink_l: None,
            sink_r: None,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sink_site(&self, label: SinkLabel) -> Option<usize> {
        match label {
            SinkLabel::L => self.sink_l,
            SinkLabel::R => self.sink_r,
        }
    }
}

pub fn effective_hamiltonian(net: &SiteNetwork) -> EffectiveHamiltonian {
    let mut h = net.closed_hamiltonian().map(|v| C64::new(v, 0.0));
    for s in net.sinks() {
        h[(s.site, s.site)] -= C64::new(0.0, s.gamma / 2.0);
    }
    EffectiveHamiltonian {
        matrix: h,
        sink_l: net.sink(SinkLabel::L).map(|s| s.site),
        sink_r: net.sink(SinkLabel::R).map(|s| s.site),
    }
}
