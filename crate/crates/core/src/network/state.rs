use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;

use super::SiteNetwork;
use crate::error::ValidationError;
use crate::{CMatrix, C64};

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;

/// A Hermitian, positive semi-definite state with trace at most one.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self, ValidationError> {
        if !m.is_square() {
            return Err(ValidationError::invalid("density matrix is not square"));
        }
        let herm = (&m - m.adjoint()).iter().fold(0.0_f64, |a, z| a.max(z.norm()));
        if herm > HERMITIAN_TOL {
            return Err(ValidationError::invalid(format!(
                "density matrix is not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace().re;
        if !(tr >= -TRACE_TOL && tr <= 1.0 + TRACE_TOL) {
            return Err(ValidationError::invalid(format!(
                "density matrix trace {tr} outside [0, 1]"
            )));
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
        if min_eig < -PSD_TOL {
            return Err(ValidationError::invalid(format!(
                "density matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Site populations ρ_ii.
    pub fn populations(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn element(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }
}

/// Named initial conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    /// ½(|a⟩+|b⟩)(⟨a|+⟨b|) on the special pair.
    SymmetricPure,
    /// ½(|a⟩⟨a| + |b⟩⟨b|) on the special pair.
    SymmetricMixed,
    /// |k⟩⟨k|, 0-based.
    Site(usize),
}

impl FromStr for InitialState {
    type Err = ValidationError;

    /// Accepts `pure`, `mixed` or `site:k` with 1-based k.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pure" | "symmetric_pure" => Ok(Self::SymmetricPure),
            "mixed" | "symmetric_mixed" => Ok(Self::SymmetricMixed),
            _ => {
                let k = s
                    .strip_prefix("site:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| {
                        ValidationError::invalid(format!(
                            "unknown initial state '{s}' (expected pure, mixed or site:k)"
                        ))
                    })?;
                Ok(Self::Site(k - 1))
            }
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SymmetricPure => f.write_str("pure"),
            Self::SymmetricMixed => f.write_str("mixed"),
            Self::Site(k) => write!(f, "site:{}", k + 1),
        }
    }
}

pub fn initial_state(net: &SiteNetwork, kind: InitialState) -> Result<DensityMatrix, ValidationError> {
    let n = net.n_sites();
    let mut m = CMatrix::zeros(n, n);
    let half = C64::new(0.5, 0.0);
    match kind {
        InitialState::SymmetricPure | InitialState::SymmetricMixed => {
            let (a, b) = net.special_pair().ok_or_else(|| {
                ValidationError::invalid("network declares no special pair for a symmetric initial state")
            })?;
            m[(a, a)] = half;
            m[(b, b)] = half;
            if kind == InitialState::SymmetricPure {
                m[(a, b)] = half;
                m[(b, a)] = half;
            }
        }
        InitialState::Site(k) => {
            if k >= n {
                return Err(ValidationError::invalid(format!(
                    "initial site {} outside 1..={n}",
                    k + 1
                )));
            }
            m[(k, k)] = C64::new(1.0, 0.0);
        }
    }
    DensityMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_multimer;

    fn multimer() -> SiteNetwork {
        build_multimer(100.0, 200.0, 200.0, 2.0).unwrap()
    }

    #[test]
    fn symmetric_pure_block() {
        let rho = initial_state(&multimer(), InitialState::SymmetricPure).unwrap();
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            assert_eq!(rho.element(i, j), C64::new(0.5, 0.0));
        }
        assert_eq!(rho.trace(), 1.0);
        assert_eq!(rho.matrix().iter().filter(|z| z.norm() > 0.0).count(), 4);
    }

    #[test]
    fn symmetric_mixed_diagonal() {
        let rho = initial_state(&multimer(), InitialState::SymmetricMixed).unwrap();
        assert_eq!(rho.populations(), vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(rho.element(0, 1), C64::new(0.0, 0.0));
    }

    #[test]
    fn site_state_is_projector() {
        let rho = initial_state(&multimer(), "site:3".parse().unwrap()).unwrap();
        let m = rho.matrix();
        assert_eq!(m * m, *m);
        assert_eq!(rho.populations()[2], 1.0);
        assert!(initial_state(&multimer(), InitialState::Site(6)).is_err());
    }

    #[test]
    fn symmetric_kinds_need_special_pair() {
        let net = SiteNetwork::new(vec![0.0; 2], nalgebra::DMatrix::zeros(2, 2), vec![], None).unwrap();
        assert!(initial_state(&net, InitialState::SymmetricPure).is_err());
        assert!(initial_state(&net, InitialState::Site(1)).is_ok());
    }

    #[test]
    fn rejects_non_physical_matrices() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(1.5, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.0, 0.1);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 0)] = C64::new(0.0, -0.1);
        assert!(DensityMatrix::new(m.clone()).is_err(), "rank-deficient block has a negative eigenvalue");
        m[(1, 1)] = C64::new(0.5, 0.0);
        assert!(DensityMatrix::new(m).is_ok());
    }

    #[test]
    fn parse_initial_state() {
        assert_eq!("pure".parse::<InitialState>().unwrap(), InitialState::SymmetricPure);
        assert_eq!("site:1".parse::<InitialState>().unwrap(), InitialState::Site(0));
        assert!("site:0".parse::<InitialState>().is_err());
        assert!("bogus".parse::<InitialState>().is_err());
    }
}
