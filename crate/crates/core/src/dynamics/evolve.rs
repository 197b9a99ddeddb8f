//! Time evolution of the augmented linear system x = [state; η_L; η_R].
//!
//! All three dynamical laws are linear and time-independent, so the sink
//! efficiencies are carried as two extra components whose derivatives are
//! (γ/ħ)⟨sink|ρ|sink⟩. Every integrator therefore updates populations and
//! efficiencies with the same quadrature and the ledger
//! trace + η_L + η_R is conserved step by step.

use nalgebra::DVector;

use super::rates::RateMatrix;
use crate::error::{NumericalError, Result, ValidationError};
use crate::network::{effective_hamiltonian, DensityMatrix, SinkLabel, SiteNetwork};
use crate::units::HBAR_CM1_PS;
use crate::{CMatrix, C64};

pub const DEFAULT_HORIZON_PS: f64 = 20.0;

/// Sampling interval of the exponential integrator when none is given.
pub const DEFAULT_SAMPLE_DT_PS: f64 = 0.01;

/// Largest dt·‖G‖_∞ accepted by the RK4 stepper.
pub const RK4_STABILITY_LIMIT: f64 = 2.5;

/// Trajectories longer than this are thinned to roughly this many samples.
pub const MAX_SAMPLES: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Integrator {
    /// Exact one-step propagator exp(G·dt); dt only sets the sampling.
    #[default]
    Exponential,
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub horizon: f64,
    /// Step (RK4) or sampling interval (exponential); defaults per integrator.
    pub dt: Option<f64>,
    pub integrator: Integrator,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON_PS,
            dt: None,
            integrator: Integrator::Exponential,
        }
    }
}

impl EvolveOptions {
    pub fn new(horizon: f64) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }
}

#[derive(Clone, Debug)]
pub enum Trajectory {
    Quantum(Vec<DensityMatrix>),
    /// Site populations for the classical law.
    Classical(Vec<Vec<f64>>),
}

impl Trajectory {
    pub fn len(&self) -> usize {
        match self {
            Self::Quantum(v) => v.len(),
            Self::Classical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// ⟨i|ρ|i⟩ at sample `t`.
    pub fn population(&self, t: usize, i: usize) -> f64 {
        match self {
            Self::Quantum(v) => v[t].element(i, i).re,
            Self::Classical(v) => v[t][i],
        }
    }

    pub fn populations(&self, t: usize) -> Vec<f64> {
        match self {
            Self::Quantum(v) => v[t].populations(),
            Self::Classical(v) => v[t].clone(),
        }
    }

    /// |ρ_ij| at sample `t`; zero for the classical law.
    pub fn coherence(&self, t: usize, i: usize, j: usize) -> f64 {
        match self {
            Self::Quantum(v) => v[t].element(i, j).norm(),
            Self::Classical(_) => 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub trajectory: Trajectory,
    /// Cumulative efficiencies at each sample.
    pub eta_l: Vec<f64>,
    pub eta_r: Vec<f64>,
    pub traces: Vec<f64>,
    pub final_trace: f64,
    /// Integrator step actually used.
    pub dt: f64,
}

/// (η_L, η_R) at the horizon, as accumulated by the integrator.
pub fn efficiency(result: &EvolutionResult) -> (f64, f64) {
    (
        *result.eta_l.last().unwrap_or(&0.0),
        *result.eta_r.last().unwrap_or(&0.0),
    )
}

/// (η_L, η_R) recomputed from the stored samples by composite Simpson
/// quadrature of (γ/ħ)⟨sink|ρ(t)|sink⟩.
pub fn sampled_efficiency(result: &EvolutionResult, net: &SiteNetwork) -> (f64, f64) {
    let eta = |label: SinkLabel| match net.sink(label) {
        Some(s) => {
            let f: Vec<f64> = (0..result.times.len())
                .map(|t| result.trajectory.population(t, s.site))
                .collect();
            s.gamma / HBAR_CM1_PS * simpson(&result.times, &f)
        }
        None => 0.0,
    };
    (eta(SinkLabel::L), eta(SinkLabel::R))
}

/// Composite Simpson rule on a possibly non-uniform grid; a trailing odd
/// interval falls back to the trapezoid rule.
pub fn simpson(x: &[f64], f: &[f64]) -> f64 {
    let n = x.len().min(f.len());
    let mut acc = 0.0;
    let mut i = 0;
    while i + 2 < n {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        acc += (h0 + h1) / 6.0
            * ((2.0 - h1 / h0) * f[i] + (h0 + h1).powi(2) / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        acc += 0.5 * (x[i + 1] - x[i]) * (f[i] + f[i + 1]);
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StateKind {
    Density,
    Populations,
}

/// Linear generator on the augmented state, in ps⁻¹.
#[derive(Clone, Debug)]
pub struct AugmentedGenerator {
    matrix: CMatrix,
    kind: StateKind,
    n_sites: usize,
}

impl AugmentedGenerator {
    /// −(i/ħ)(ℋρ − ρℋ†) plus an optional precomputed dissipator superoperator.
    pub fn quantum(net: &SiteNetwork, dissipator: Option<&CMatrix>) -> Result<Self> {
        let n = net.n_sites();
        let mut h = effective_hamiltonian(net).into_matrix();
        // A real energy shift drops out of ℋρ − ρℋ†.
        let shift = h.trace().re / n as f64;
        for i in 0..n {
            h[(i, i)] -= C64::new(shift, 0.0);
        }
        let id = CMatrix::identity(n, n);
        let coherent = (id.kronecker(&h) - h.map(|z| z.conj()).kronecker(&id)) * C64::new(0.0, -1.0 / HBAR_CM1_PS);
        let mut super_op = coherent;
        if let Some(d) = dissipator {
            if d.nrows() != n * n || d.ncols() != n * n {
                return Err(NumericalError::Domain(format!(
                    "dissipator is {}x{}, expected {}x{}",
                    d.nrows(),
                    d.ncols(),
                    n * n,
                    n * n
                ))
                .into());
            }
            super_op += d;
        }
        let dim = n * n;
        let mut g = CMatrix::zeros(dim + 2, dim + 2);
        g.view_mut((0, 0), (dim, dim)).copy_from(&super_op);
        for (row, label) in [(dim, SinkLabel::L), (dim + 1, SinkLabel::R)] {
            if let Some(s) = net.sink(label) {
                g[(row, s.site + s.site * n)] = C64::new(s.gamma / HBAR_CM1_PS, 0.0);
            }
        }
        Ok(Self {
            matrix: g,
            kind: StateKind::Density,
            n_sites: n,
        })
    }

    /// Classical hopping master equation with sink drains.
    pub fn classical(net: &SiteNetwork, rates: &RateMatrix) -> Result<Self> {
        let n = net.n_sites();
        if rates.dim() != n {
            return Err(NumericalError::Domain(format!(
                "rate matrix has dimension {}, network has {n} sites",
                rates.dim()
            ))
            .into());
        }
        let t = rates.matrix();
        let mut g = CMatrix::zeros(n + 2, n + 2);
        for i in 0..n {
            let mut out = 0.0;
            for k in 0..n {
                if k != i {
                    g[(i, k)] = C64::new(t[(i, k)], 0.0);
                    out += t[(k, i)];
                }
            }
            g[(i, i)] = C64::new(-out, 0.0);
        }
        for (row, label) in [(n, SinkLabel::L), (n + 1, SinkLabel::R)] {
            if let Some(s) = net.sink(label) {
                let r = s.gamma / HBAR_CM1_PS;
                g[(s.site, s.site)] -= C64::new(r, 0.0);
                g[(row, s.site)] = C64::new(r, 0.0);
            }
        }
        Ok(Self {
            matrix: g,
            kind: StateKind::Populations,
            n_sites: n,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    fn state_dim(&self) -> usize {
        self.matrix.nrows() - 2
    }

    /// ‖G‖_∞, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest RK4 step that keeps dt·‖G‖_∞ within the stability limit.
    pub fn max_stable_dt(&self) -> f64 {
        RK4_STABILITY_LIMIT / self.norm_inf()
    }

    /// Augmented initial vector for a density matrix (quantum laws) or its
    /// diagonal (classical law).
    pub fn initial_vector(&self, rho0: &DensityMatrix) -> Result<DVector<C64>> {
        let n = self.n_sites;
        if rho0.dim() != n {
            return Err(ValidationError::invalid(format!(
                "initial state has dimension {}, network has {n} sites",
                rho0.dim()
            ))
            .into());
        }
        let mut x = DVector::zeros(self.matrix.nrows());
        match self.kind {
            StateKind::Density => x.rows_mut(0, n * n).copy_from_slice(rho0.matrix().as_slice()),
            StateKind::Populations => {
                for i in 0..n {
                    x[i] = C64::new(rho0.element(i, i).re, 0.0);
                }
            }
        }
        Ok(x)
    }

    /// Augmented initial vector from site probabilities (classical law).
    pub fn population_vector(&self, p0: &[f64]) -> Result<DVector<C64>> {
        let n = self.n_sites;
        if self.kind != StateKind::Populations {
            return Err(ValidationError::invalid("population vectors apply to the classical law only").into());
        }
        if p0.len() != n {
            return Err(ValidationError::invalid(format!("expected {n} site probabilities, got {}", p0.len())).into());
        }
        let total: f64 = p0.iter().sum();
        if p0.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-10 {
            return Err(ValidationError::invalid(format!(
                "site probabilities must be non-negative and sum to 1 (sum {total})"
            ))
            .into());
        }
        let mut x = DVector::zeros(n + 2);
        for (i, &p) in p0.iter().enumerate() {
            x[i] = C64::new(p, 0.0);
        }
        Ok(x)
    }

    /// exp(G·t)·x0.
    pub fn propagate(&self, x0: &DVector<C64>, t: f64) -> DVector<C64> {
        (&self.matrix * C64::new(t, 0.0)).exp() * x0
    }

    /// (η_L, η_R, trace) at time t, straight from the propagator.
    pub fn final_efficiencies(&self, x0: &DVector<C64>, t: f64) -> (f64, f64, f64) {
        let x = self.propagate(x0, t);
        let d = self.state_dim();
        (x[d].re, x[d + 1].re, self.trace_of(&x))
    }

    fn trace_of(&self, x: &DVector<C64>) -> f64 {
        let n = self.n_sites;
        match self.kind {
            StateKind::Density => (0..n).map(|i| x[i + i * n].re).sum(),
            StateKind::Populations => (0..n).map(|i| x[i].re).sum(),
        }
    }

    fn rk4_step(&self, x: &DVector<C64>, dt: f64) -> DVector<C64> {
        let g = &self.matrix;
        let h = C64::new(dt, 0.0);
        let half = C64::new(0.5 * dt, 0.0);
        let k1 = g * x;
        let k2 = g * (x + &k1 * half);
        let k3 = g * (x + &k2 * half);
        let k4 = g * (x + &k3 * h);
        x + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * (h / C64::new(6.0, 0.0))
    }

    /// Integrates from x0 over `opts.horizon`, recording samples on a uniform
    /// grid (thinned when the step count exceeds [`MAX_SAMPLES`]).
    pub fn evolve(&self, x0: &DVector<C64>, opts: &EvolveOptions, default_dt: f64) -> Result<EvolutionResult> {
        let horizon = opts.horizon;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(ValidationError::invalid(format!("horizon must be positive, got {horizon}")).into());
        }
        let dt_req = opts.dt.unwrap_or(default_dt);
        if !(dt_req > 0.0 && dt_req.is_finite()) {
            return Err(ValidationError::invalid(format!("time step must be positive, got {dt_req}")).into());
        }
        if opts.integrator == Integrator::Rk4 {
            let max_dt = self.max_stable_dt();
            if dt_req > max_dt {
                return Err(NumericalError::StepTooLarge { dt: dt_req, max_dt }.into());
            }
        }
        let steps = ((horizon / dt_req) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = horizon / steps as f64;
        let stride = steps.div_ceil(MAX_SAMPLES).max(1);

        let step_matrix = match opts.integrator {
            Integrator::Exponential => Some((&self.matrix * C64::new(dt, 0.0)).exp()),
            Integrator::Rk4 => None,
        };

        let mut out = Recorder::new(self, steps / stride + 2);
        let mut x = x0.clone();
        out.push(0.0, &x);
        for s in 1..=steps {
            x = match &step_matrix {
                Some(p) => p * &x,
                None => self.rk4_step(&x, dt),
            };
            if s % stride == 0 || s == steps {
                out.push(s as f64 * dt, &x);
            }
        }
        Ok(out.finish(dt))
    }
}

struct Recorder<'a> {
    gen: &'a AugmentedGenerator,
    times: Vec<f64>,
    quantum: Vec<DensityMatrix>,
    classical: Vec<Vec<f64>>,
    eta_l: Vec<f64>,
    eta_r: Vec<f64>,
    traces: Vec<f64>,
}

impl<'a> Recorder<'a> {
    fn new(gen: &'a AugmentedGenerator, capacity: usize) -> Self {
        Self {
            gen,
            times: Vec::with_capacity(capacity),
            quantum: Vec::new(),
            classical: Vec::new(),
            eta_l: Vec::with_capacity(capacity),
            eta_r: Vec::with_capacity(capacity),
            traces: Vec::with_capacity(capacity),
        }
    }

    fn push(&mut self, t: f64, x: &DVector<C64>) {
        let n = self.gen.n_sites;
        let d = self.gen.state_dim();
        self.times.push(t);
        match self.gen.kind {
            StateKind::Density => {
                let m = CMatrix::from_column_slice(n, n, x.rows(0, d).as_slice());
                self.quantum.push(DensityMatrix::from_matrix_unchecked(m));
            }
            StateKind::Populations => self.classical.push((0..n).map(|i| x[i].re).collect()),
        }
        self.eta_l.push(x[d].re);
        self.eta_r.push(x[d + 1].re);
        self.traces.push(self.gen.trace_of(x));
    }

    fn finish(self, dt: f64) -> EvolutionResult {
        let trajectory = match self.gen.kind {
            StateKind::Density => Trajectory::Quantum(self.quantum),
            StateKind::Populations => Trajectory::Classical(self.classical),
        };
        EvolutionResult {
            final_trace: *self.traces.last().expect("at least one sample"),
            times: self.times,
            trajectory,
            eta_l: self.eta_l,
            eta_r: self.eta_r,
            traces: self.traces,
            dt,
        }
    }
}
