//! Incoherent hopping rates for the classical master equation.

use nalgebra::DMatrix;

use crate::error::NumericalError;
use crate::network::SiteNetwork;
use crate::units::HBAR_CM1_PS;

/// Hopping rates in ps⁻¹; entry (i, k) is the rate from site k to site i.
#[derive(Clone, Debug, PartialEq)]
pub struct RateMatrix(DMatrix<f64>);

impl RateMatrix {
    pub fn new(rates: DMatrix<f64>) -> Result<Self, NumericalError> {
        if !rates.is_square() {
            return Err(NumericalError::Domain("rate matrix is not square".into()));
        }
        for i in 0..rates.nrows() {
            for k in 0..rates.ncols() {
                let r = rates[(i, k)];
                if i == k {
                    if r != 0.0 {
                        return Err(NumericalError::Domain(format!(
                            "rate matrix diagonal at site {} must be zero",
                            i + 1
                        )));
                    }
                } else if !(r >= 0.0 && r.is_finite()) {
                    return Err(NumericalError::Domain(format!(
                        "rate from site {} to site {} is {r}; rates must be non-negative",
                        k + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self(rates))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn max_rate(&self) -> f64 {
        self.0.iter().fold(0.0, |m: f64, &r| m.max(r))
    }
}

/// T_ik = |(H₀)_ik|/ħ.
pub fn bare_rates(net: &SiteNetwork) -> RateMatrix {
    RateMatrix(net.couplings().map(|v| v.abs() / HBAR_CM1_PS))
}

/// T_ik = (2Ω_ik²/ħγ_d)(1 + ΔE_ik²/γ_d²)⁻¹ with dephasing energy γ_d in cm⁻¹.
pub fn semiclassical_rates(net: &SiteNetwork, gamma_d: f64) -> Result<RateMatrix, NumericalError> {
    if !(gamma_d > 0.0 && gamma_d.is_finite()) {
        return Err(NumericalError::Domain(format!(
            "dephasing energy must be positive, got {gamma_d}"
        )));
    }
    let e = net.energies();
    let n = net.n_sites();
    let c = net.couplings();
    let rates = DMatrix::from_fn(n, n, |i, k| {
        if i == k {
            return 0.0;
        }
        let de = e[i] - e[k];
        2.0 * c[(i, k)].powi(2) / (HBAR_CM1_PS * gamma_d) / (1.0 + (de / gamma_d).powi(2))
    });
    Ok(RateMatrix(rates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_multimer, Sink, SinkLabel};

    #[test]
    fn bare_rate_conversion() {
        let net = build_multimer(100.0, 200.0, 0.0, 0.0).unwrap();
        let r = bare_rates(&net);
        assert!((r.matrix()[(2, 0)] - 18.836).abs() < 1e-3);
        assert_eq!(r.matrix()[(0, 2)], r.matrix()[(2, 0)]);
        assert_eq!(r.matrix()[(0, 5)], 0.0);
        assert_eq!(r.matrix(), &r.matrix().transpose());
    }

    #[test]
    fn bare_rates_use_coupling_magnitude() {
        let mut c = DMatrix::zeros(2, 2);
        c[(0, 1)] = -50.0;
        c[(1, 0)] = -50.0;
        let net = SiteNetwork::new(vec![0.0, 10.0], c, vec![], None).unwrap();
        assert!(bare_rates(&net).matrix()[(0, 1)] > 0.0);
    }

    fn dimer(de: f64) -> SiteNetwork {
        let mut c = DMatrix::zeros(2, 2);
        c[(0, 1)] = 100.0;
        c[(1, 0)] = 100.0;
        SiteNetwork::new(
            vec![0.0, de],
            c,
            vec![Sink {
                site: 1,
                gamma: 0.0,
                label: SinkLabel::L,
            }],
            None,
        )
        .unwrap()
    }

    #[test]
    fn semiclassical_examples() {
        let degenerate = semiclassical_rates(&dimer(0.0), 305.7).unwrap();
        let expect = 2.0e4 / (HBAR_CM1_PS * 305.7);
        assert!((degenerate.matrix()[(0, 1)] - expect).abs() < 1e-12);
        assert!((expect - 12.32).abs() < 5e-3);
        let detuned = semiclassical_rates(&dimer(305.7), 305.7).unwrap();
        assert!((detuned.matrix()[(0, 1)] - expect / 2.0).abs() < 1e-12);
        let uncoupled = SiteNetwork::new(vec![0.0; 2], DMatrix::zeros(2, 2), vec![], None).unwrap();
        assert_eq!(semiclassical_rates(&uncoupled, 10.0).unwrap().max_rate(), 0.0);
        assert!(semiclassical_rates(&dimer(0.0), 0.0).is_err());
    }

    #[test]
    fn negative_rates_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = -1.0;
        assert!(RateMatrix::new(m).is_err());
    }
}
