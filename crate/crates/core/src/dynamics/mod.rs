//! Dynamical laws: non-Hermitian von Neumann, Lindblad with an Ohmic bath,
//! and the classical hopping master equation.

mod bath;
mod evolve;
mod generators;
mod rates;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

pub use bath::{bath_rate, bose_occupation, homogeneous_broadening, spectral_density, BathSpec};
pub use evolve::{
    efficiency, sampled_efficiency, simpson, AugmentedGenerator, EvolutionResult, EvolveOptions, Integrator,
    Trajectory, DEFAULT_HORIZON_PS, DEFAULT_SAMPLE_DT_PS, MAX_SAMPLES, RK4_STABILITY_LIMIT,
};
pub use generators::{build_generators, BohrFrequency, LindbladGenerators, FREQUENCY_BIN_TOL};
pub use rates::{bare_rates, semiclassical_rates, RateMatrix};

use crate::error::{NumericalError, Result, ValidationError};
use crate::network::{DensityMatrix, SiteNetwork};
use crate::units::HBAR_CM1_PS;
use crate::CMatrix;

/// Law selector as named on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LawKind {
    VonNeumann,
    Classical,
    ClassicalSemiclassical,
    Lindblad,
}

impl FromStr for LawKind {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vonneumann" => Ok(Self::VonNeumann),
            "classical" => Ok(Self::Classical),
            "classical-semiclassical" => Ok(Self::ClassicalSemiclassical),
            "lindblad" => Ok(Self::Lindblad),
            _ => Err(ValidationError::invalid(format!(
                "unknown law '{s}' (expected vonneumann, classical, classical-semiclassical or lindblad)"
            ))),
        }
    }
}

impl fmt::Display for LawKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::VonNeumann => "vonneumann",
            Self::Classical => "classical",
            Self::ClassicalSemiclassical => "classical-semiclassical",
            Self::Lindblad => "lindblad",
        })
    }
}

/// A fully parameterized dynamical law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Law {
    VonNeumann,
    /// Bare rates |(H₀)_ik|/ħ.
    Classical,
    /// Semiclassical rates with dephasing energy γ_d (cm⁻¹).
    ClassicalSemiclassical { gamma_d: f64 },
    Lindblad(BathSpec),
}

impl Law {
    /// Fills in law parameters; the semiclassical dephasing energy defaults
    /// to the bath's homogeneous broadening.
    pub fn resolve(kind: LawKind, bath: Option<BathSpec>, gamma_d: Option<f64>) -> Result<Self, ValidationError> {
        match kind {
            LawKind::VonNeumann => Ok(Self::VonNeumann),
            LawKind::Classical => Ok(Self::Classical),
            LawKind::ClassicalSemiclassical => {
                let gamma_d = gamma_d
                    .or_else(|| bath.as_ref().map(homogeneous_broadening))
                    .ok_or_else(|| {
                        ValidationError::invalid("classical-semiclassical needs a bath or an explicit dephasing energy")
                    })?;
                Ok(Self::ClassicalSemiclassical { gamma_d })
            }
            LawKind::Lindblad => bath
                .map(Self::Lindblad)
                .ok_or_else(|| ValidationError::invalid("the lindblad law needs a bath")),
        }
    }

    pub fn kind(&self) -> LawKind {
        match self {
            Self::VonNeumann => LawKind::VonNeumann,
            Self::Classical => LawKind::Classical,
            Self::ClassicalSemiclassical { .. } => LawKind::ClassicalSemiclassical,
            Self::Lindblad(_) => LawKind::Lindblad,
        }
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, Self::VonNeumann | Self::Lindblad(_))
    }
}

/// A law prepared against a fixed closed Hamiltonian. Sink strengths may
/// vary between calls; the bath dissipator is built once and shared.
#[derive(Clone, Debug)]
pub struct Dynamics {
    law: Law,
    closed_h: DMatrix<f64>,
    dissipator: Option<CMatrix>,
    bath_max_rate: f64,
}

impl Dynamics {
    pub fn prepare(template: &SiteNetwork, law: Law) -> Result<Self> {
        if let Law::ClassicalSemiclassical { gamma_d } = law {
            semiclassical_rates(template, gamma_d)?;
        }
        let (dissipator, bath_max_rate) = match &law {
            Law::Lindblad(bath) => {
                bath.validate()?;
                let g = build_generators(template, bath);
                let max = g.frequencies.iter().map(|f| f.rate).fold(0.0, f64::max);
                (Some(g.dissipator()), max)
            }
            _ => (None, 0.0),
        };
        Ok(Self {
            law,
            closed_h: template.closed_hamiltonian(),
            dissipator,
            bath_max_rate,
        })
    }

    pub fn law(&self) -> &Law {
        &self.law
    }

    pub fn generator(&self, net: &SiteNetwork) -> Result<AugmentedGenerator> {
        if net.closed_hamiltonian() != self.closed_h {
            return Err(NumericalError::Domain(
                "network differs from the one the dynamics were prepared for".into(),
            )
            .into());
        }
        match self.law {
            Law::VonNeumann => AugmentedGenerator::quantum(net, None),
            Law::Lindblad(_) => AugmentedGenerator::quantum(net, self.dissipator.as_ref()),
            Law::Classical => AugmentedGenerator::classical(net, &bare_rates(net)),
            Law::ClassicalSemiclassical { gamma_d } => {
                AugmentedGenerator::classical(net, &semiclassical_rates(net, gamma_d)?)
            }
        }
    }

    /// Default step: the sampling interval for the exponential integrator;
    /// for RK4, min(0.05ħ/‖ℋ‖, 0.05/max rate) capped at half the stability
    /// limit.
    pub fn default_dt(&self, net: &SiteNetwork, integrator: Integrator) -> Result<f64> {
        match integrator {
            Integrator::Exponential => Ok(DEFAULT_SAMPLE_DT_PS),
            Integrator::Rk4 => {
                let gen = self.generator(net)?;
                let sink_rate = net.sinks().iter().map(|s| s.gamma / HBAR_CM1_PS).fold(0.0, f64::max);
                let mut dt = f64::INFINITY;
                let mut max_rate = sink_rate;
                match self.law {
                    Law::VonNeumann | Law::Lindblad(_) => {
                        dt = dt.min(0.05 * HBAR_CM1_PS / shifted_row_norm(net));
                        max_rate = max_rate.max(self.bath_max_rate);
                    }
                    Law::Classical => max_rate = max_rate.max(bare_rates(net).max_rate()),
                    Law::ClassicalSemiclassical { gamma_d } => {
                        max_rate = max_rate.max(semiclassical_rates(net, gamma_d)?.max_rate())
                    }
                }
                if max_rate > 0.0 {
                    dt = dt.min(0.05 / max_rate);
                }
                dt = dt.min(0.5 * gen.max_stable_dt());
                if !dt.is_finite() {
                    dt = DEFAULT_SAMPLE_DT_PS;
                }
                Ok(dt)
            }
        }
    }

    pub fn evolve(&self, net: &SiteNetwork, rho0: &DensityMatrix, opts: &EvolveOptions) -> Result<EvolutionResult> {
        let gen = self.generator(net)?;
        let x0 = gen.initial_vector(rho0)?;
        let default_dt = self.default_dt(net, opts.integrator)?;
        gen.evolve(&x0, opts, default_dt)
    }

    /// (η_L, η_R, trace) at `horizon` without recording a trajectory.
    pub fn final_efficiencies(&self, net: &SiteNetwork, rho0: &DensityMatrix, horizon: f64) -> Result<(f64, f64, f64)> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ValidationError::invalid(format!("horizon must be positive, got {horizon}")).into());
        }
        let gen = self.generator(net)?;
        let x0 = gen.initial_vector(rho0)?;
        Ok(gen.final_efficiencies(&x0, horizon))
    }
}

/// Max row sum of |ℋ − c·I| with c the mean site energy.
fn shifted_row_norm(net: &SiteNetwork) -> f64 {
    let h = crate::network::effective_hamiltonian(net).into_matrix();
    let n = net.n_sites();
    let shift = h.trace().re / n as f64;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut z = h[(i, j)];
                    if i == j {
                        z.re -= shift;
                    }
                    z.norm()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Non-Hermitian von Neumann evolution dρ/dt = −(i/ħ)(ℋρ − ρℋ†).
pub fn evolve_von_neumann(net: &SiteNetwork, rho0: &DensityMatrix, opts: &EvolveOptions) -> Result<EvolutionResult> {
    Dynamics::prepare(net, Law::VonNeumann)?.evolve(net, rho0, opts)
}

/// Lindblad evolution with sinks and the secular Ohmic bath.
pub fn evolve_lindblad(
    net: &SiteNetwork,
    bath: &BathSpec,
    rho0: &DensityMatrix,
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    Dynamics::prepare(net, Law::Lindblad(*bath))?.evolve(net, rho0, opts)
}

/// Classical hopping master equation from site probabilities `p0`.
pub fn classical_evolve(
    net: &SiteNetwork,
    p0: &[f64],
    rates: &RateMatrix,
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    let rates = RateMatrix::new(rates.matrix().clone())?;
    let gen = AugmentedGenerator::classical(net, &rates)?;
    let x0 = gen.population_vector(p0)?;
    let default_dt = match opts.integrator {
        Integrator::Exponential => DEFAULT_SAMPLE_DT_PS,
        Integrator::Rk4 => {
            let sink_rate = net.sinks().iter().map(|s| s.gamma / HBAR_CM1_PS).fold(0.0, f64::max);
            let max_rate = rates.max_rate().max(sink_rate);
            let dt = if max_rate > 0.0 { 0.05 / max_rate } else { DEFAULT_SAMPLE_DT_PS };
            dt.min(0.5 * gen.max_stable_dt())
        }
    };
    gen.evolve(&x0, opts, default_dt)
}
