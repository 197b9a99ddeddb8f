//! Parallel parameter sweeps over sink couplings.
//!
//! Every grid point is an independent, pure evaluation against one immutable
//! template network, so results do not depend on the worker count.

mod contour;
mod table;

use std::panic::{catch_unwind, AssertUnwindSafe};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use contour::{contour_extract, Polyline};
pub use table::{
    efficiency_csv, fmt_num, parse_efficiency_csv, read_table, scan_csv, spectrum_csv, trajectory_csv,
    trajectory_header, transitions_csv, Table, EFFICIENCY_HEADER, SCAN_HEADER, SPECTRUM_HEADER,
    TRANSITIONS_HEADER,
};

use crate::dynamics::{BathSpec, Dynamics, Law, LawKind};
use crate::error::{NumericalError, Result, ValidationError};
use crate::grid::{lin_space, log_space};
use crate::network::{initial_state, CouplingRatios, DensityMatrix, InitialState, SiteNetwork};
use crate::spectral::{detect_transitions, network_spectrum, TransitionReport};

/// Default 1D grid: κ_L over [10⁻², 10⁴].
pub const DEFAULT_1D: (f64, f64, usize) = (1e-2, 1e4, 61);
/// Default 2D grid per axis: [10⁻², 10²].
pub const DEFAULT_2D: (f64, f64, usize) = (1e-2, 1e2, 41);
/// |η_L − η_R| at or below this carries no sign.
pub const SIGN_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Log,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub scale: Scale,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn log(name: &str, min: f64, max: f64, points: usize) -> Self {
        Self {
            name: name.into(),
            scale: Scale::Log,
            min,
            max,
            points,
        }
    }

    pub fn linear(name: &str, min: f64, max: f64, points: usize) -> Self {
        Self {
            scale: Scale::Linear,
            ..Self::log(name, min, max, points)
        }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        let bad = |msg: String| Err(ValidationError::invalid(format!("axis {}: {msg}", self.name)));
        if self.points < 2 {
            return bad(format!("needs at least 2 points, got {}", self.points));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return bad(format!("needs finite min < max, got [{}, {}]", self.min, self.max));
        }
        if self.scale == Scale::Log && !(self.min > 0.0) {
            return bad(format!("log axis needs min > 0, got {}", self.min));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        match self.scale {
            Scale::Log => log_space(self.min, self.max, self.points),
            Scale::Linear => lin_space(self.min, self.max, self.points),
        }
    }
}

/// Everything that determines a sweep's output. `workers` only affects
/// wall time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Free-form model reference (path or builder description).
    pub model: String,
    #[serde(with = "as_text")]
    pub law: LawKind,
    /// Dephasing energy for the semiclassical law; defaults to the bath broadening.
    pub gamma_d: Option<f64>,
    pub axes: Vec<Axis>,
    /// κ_L/κ_R for 1D sweeps and spectral scans.
    pub q: Option<f64>,
    pub horizon_ps: f64,
    /// Overrides the model's bath when set.
    pub bath: Option<BathSpec>,
    #[serde(with = "as_text")]
    pub initial: InitialState,
    pub workers: usize,
}

mod as_text {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

impl SweepSpec {
    /// κ_L sweep at fixed q over the default grid.
    pub fn one_d(model: &str, law: LawKind, q: f64) -> Self {
        let (min, max, points) = DEFAULT_1D;
        Self {
            model: model.into(),
            law,
            gamma_d: None,
            axes: vec![Axis::log("kappa_L", min, max, points)],
            q: Some(q),
            horizon_ps: crate::dynamics::DEFAULT_HORIZON_PS,
            bath: None,
            initial: InitialState::SymmetricPure,
            workers: 1,
        }
    }

    /// (κ_L, κ_R) sweep over the default square grid.
    pub fn two_d(model: &str, law: LawKind) -> Self {
        let (min, max, points) = DEFAULT_2D;
        Self {
            axes: vec![
                Axis::log("kappa_L", min, max, points),
                Axis::log("kappa_R", min, max, points),
            ],
            q: None,
            ..Self::one_d(model, law, 1.0)
        }
    }

    pub fn axis(&self, name: &str) -> Option<&Axis> {
        self.axes.iter().find(|a| a.name == name)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        for a in &self.axes {
            a.validate()?;
        }
        if let Some(q) = self.q {
            if !(q > 0.0 && q.is_finite()) {
                return Err(ValidationError::invalid(format!("q must be positive, got {q}")));
            }
        }
        if !(self.horizon_ps > 0.0 && self.horizon_ps.is_finite()) {
            return Err(ValidationError::invalid(format!(
                "horizon must be positive, got {}",
                self.horizon_ps
            )));
        }
        if let Some(b) = &self.bath {
            b.validate()?;
        }
        if self.workers == 0 {
            return Err(ValidationError::invalid("worker count must be at least 1"));
        }
        Ok(())
    }

    fn require_axis(&self, name: &str) -> Result<&Axis, ValidationError> {
        self.axis(name)
            .ok_or_else(|| ValidationError::invalid(format!("sweep needs a {name} axis")))
    }

    fn require_q(&self) -> Result<f64, ValidationError> {
        self.q
            .ok_or_else(|| ValidationError::invalid("sweep needs a fixed q"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EfficiencyRecord {
    pub kappa_l: f64,
    pub kappa_r: f64,
    pub eta_l: f64,
    pub eta_r: f64,
    /// η_L − η_R.
    pub unbalanced: f64,
    pub final_trace: f64,
}

impl EfficiencyRecord {
    fn failed(kappa_l: f64, kappa_r: f64) -> Self {
        Self {
            kappa_l,
            kappa_r,
            eta_l: f64::NAN,
            eta_r: f64::NAN,
            unbalanced: f64::NAN,
            final_trace: f64::NAN,
        }
    }

    pub fn is_failed(&self) -> bool {
        self.eta_l.is_nan() || self.eta_r.is_nan()
    }

    /// |η_L − η_R| ≤ η_L + η_R ≤ 1 + tol and the ledger trace + η_L + η_R = 1.
    pub fn is_consistent(&self, tol: f64) -> bool {
        let total = self.eta_l + self.eta_r;
        self.unbalanced.abs() <= total + tol
            && total <= 1.0 + tol
            && (total + self.final_trace - 1.0).abs() <= tol
    }
}

/// A grid point whose evaluation failed; its record holds NaN.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointFailure {
    pub index: usize,
    pub kappa_l: f64,
    pub kappa_r: f64,
    pub message: String,
}

/// Sign change of η_L − η_R along a 1D sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossing {
    /// Interpolated κ_L.
    pub kappa_l: f64,
    /// Index of the last grid point before the crossing.
    pub lower_index: usize,
    /// Nearest to √q in log distance.
    pub primary: bool,
}

#[derive(Clone, Debug)]
pub struct Sweep1d {
    pub q: f64,
    pub records: Vec<EfficiencyRecord>,
    pub crossings: Vec<Crossing>,
    pub failures: Vec<PointFailure>,
}

impl Sweep1d {
    pub fn primary_crossing(&self) -> Option<&Crossing> {
        self.crossings.iter().find(|c| c.primary)
    }

    /// Record closest to κ_L in log distance.
    pub fn nearest(&self, kappa_l: f64) -> &EfficiencyRecord {
        self.records
            .iter()
            .min_by(|a, b| {
                (a.kappa_l / kappa_l)
                    .ln()
                    .abs()
                    .total_cmp(&(b.kappa_l / kappa_l).ln().abs())
            })
            .expect("sweeps have at least two points")
    }
}

#[derive(Clone, Debug)]
pub struct Sweep2d {
    pub kappa_l: Vec<f64>,
    pub kappa_r: Vec<f64>,
    /// κ_L outer, κ_R inner.
    pub records: Vec<EfficiencyRecord>,
    pub failures: Vec<PointFailure>,
}

impl Sweep2d {
    pub fn get(&self, i: usize, j: usize) -> &EfficiencyRecord {
        &self.records[i * self.kappa_r.len() + j]
    }

    /// Rebuilds the grid from records in sweep order.
    pub fn from_records(records: Vec<EfficiencyRecord>) -> Result<Self, ValidationError> {
        let mut kappa_r: Vec<f64> = Vec::new();
        for r in &records {
            if kappa_r.first() == Some(&r.kappa_r) {
                break;
            }
            kappa_r.push(r.kappa_r);
        }
        let nr = kappa_r.len();
        if nr == 0 || records.len() % nr != 0 {
            return Err(ValidationError::invalid("records do not form a rectangular grid"));
        }
        let kappa_l: Vec<f64> = records.iter().step_by(nr).map(|r| r.kappa_l).collect();
        for (idx, r) in records.iter().enumerate() {
            if r.kappa_l != kappa_l[idx / nr] || r.kappa_r != kappa_r[idx % nr] {
                return Err(ValidationError::invalid(format!(
                    "record {} breaks the (kappa_L outer, kappa_R inner) order",
                    idx + 1
                )));
            }
        }
        Ok(Self {
            kappa_l,
            kappa_r,
            records,
            failures: Vec::new(),
        })
    }
}

/// Spectrum summary at one κ point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanPoint {
    pub kappa_l: f64,
    pub kappa_r: f64,
    pub re_energy: Vec<f64>,
    pub widths: Vec<f64>,
    pub pr: Vec<f64>,
    pub overlap_l: Vec<f64>,
    pub overlap_r: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SpectralScan {
    pub q: f64,
    pub points: Vec<ScanPoint>,
    pub failures: Vec<PointFailure>,
}

/// Runs `f` on a dedicated pool of `workers` threads; rayon work spawned
/// inside `f` stays on that pool.
pub fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Err(ValidationError::invalid("worker count must be at least 1").into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| NumericalError::Domain(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs `f` over `0..n` on `workers` threads, returning results in index
/// order.
pub fn run_indexed<T, F>(workers: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    with_pool(workers, || (0..n).into_par_iter().map(&f).collect())
}

/// Superradiance-transition scan along the κ_L axis at fixed q.
pub fn transition_scan(template: &SiteNetwork, spec: &SweepSpec) -> Result<TransitionReport> {
    spec.validate()?;
    let grid = spec.require_axis("kappa_L")?.values();
    let q = spec.require_q()?;
    with_pool(spec.workers, || detect_transitions(template, q, &grid))?
}

/// Shared per-sweep state: prepared dynamics and initial condition.
struct Evaluator<'a> {
    template: &'a SiteNetwork,
    dynamics: Dynamics,
    rho0: DensityMatrix,
    omega: f64,
    horizon: f64,
}

impl<'a> Evaluator<'a> {
    fn new(template: &'a SiteNetwork, spec: &SweepSpec) -> Result<Self> {
        spec.validate()?;
        let bath = spec.bath.or_else(|| template.bath().copied());
        let law = Law::resolve(spec.law, bath, spec.gamma_d)?;
        let omega = template.reference_coupling();
        if !(omega > 0.0) {
            return Err(ValidationError::invalid("network has no couplings to set the κ scale").into());
        }
        if template.sinks().len() != 2 {
            return Err(ValidationError::invalid("sweeps need both an L and an R sink").into());
        }
        Ok(Self {
            template,
            dynamics: Dynamics::prepare(template, law)?,
            rho0: initial_state(template, spec.initial)?,
            omega,
            horizon: spec.horizon_ps,
        })
    }

    fn eval(&self, kappa_l: f64, kappa_r: f64) -> Result<EfficiencyRecord> {
        let net = self
            .template
            .with_gammas(2.0 * self.omega * kappa_l, 2.0 * self.omega * kappa_r)?;
        let (eta_l, eta_r, final_trace) = self.dynamics.final_efficiencies(&net, &self.rho0, self.horizon)?;
        if !(eta_l.is_finite() && eta_r.is_finite() && final_trace.is_finite()) {
            return Err(NumericalError::Domain("non-finite efficiencies".into()).into());
        }
        Ok(EfficiencyRecord {
            kappa_l,
            kappa_r,
            eta_l,
            eta_r,
            unbalanced: eta_l - eta_r,
            final_trace,
        })
    }
}

/// Evaluates `f`, turning errors and panics into a message.
fn isolated<T>(f: impl FnOnce() -> Result<T>) -> Result<T, String> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(e.to_string()),
        Err(p) => Err(p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "evaluation panicked".into())),
    }
}

fn efficiency_points(
    ev: &Evaluator,
    workers: usize,
    points: &[(f64, f64)],
) -> Result<(Vec<EfficiencyRecord>, Vec<PointFailure>)> {
    let results = run_indexed(workers, points.len(), |i| {
        let (kl, kr) = points[i];
        isolated(|| ev.eval(kl, kr))
    })?;
    let mut records = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    for (index, (res, &(kl, kr))) in results.into_iter().zip(points).enumerate() {
        match res {
            Ok(r) => records.push(r),
            Err(message) => {
                records.push(EfficiencyRecord::failed(kl, kr));
                failures.push(PointFailure {
                    index,
                    kappa_l: kl,
                    kappa_r: kr,
                    message,
                });
            }
        }
    }
    Ok((records, failures))
}

/// η_L − η_R along κ_L at fixed q, κ_R = κ_L/q.
pub fn sweep_1d(template: &SiteNetwork, spec: &SweepSpec) -> Result<Sweep1d> {
    let ev = Evaluator::new(template, spec)?;
    let axis = spec.require_axis("kappa_L")?;
    let q = spec.require_q()?;
    let points: Vec<(f64, f64)> = axis.values().into_iter().map(|k| (k, k / q)).collect();
    let (records, failures) = efficiency_points(&ev, spec.workers, &points)?;
    let crossings = find_crossings(&records, axis.scale, q);
    Ok(Sweep1d {
        q,
        records,
        crossings,
        failures,
    })
}

/// Sign changes of `unbalanced`, interpolated in log κ (or linearly on a
/// linear axis). Points with |η_L − η_R| ≤ [`SIGN_FLOOR`] or NaN are skipped.
pub fn find_crossings(records: &[EfficiencyRecord], scale: Scale, q: f64) -> Vec<Crossing> {
    let signed: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].unbalanced.abs() > SIGN_FLOOR)
        .collect();
    let coord = |k: f64| match scale {
        Scale::Log => k.ln(),
        Scale::Linear => k,
    };
    let mut out: Vec<Crossing> = signed
        .windows(2)
        .filter(|w| records[w[0]].unbalanced.signum() != records[w[1]].unbalanced.signum())
        .map(|w| {
            let (a, b) = (&records[w[0]], &records[w[1]]);
            let t = a.unbalanced / (a.unbalanced - b.unbalanced);
            let x = coord(a.kappa_l) + t * (coord(b.kappa_l) - coord(a.kappa_l));
            Crossing {
                kappa_l: match scale {
                    Scale::Log => x.exp(),
                    Scale::Linear => x,
                },
                lower_index: w[0],
                primary: false,
            }
        })
        .collect();
    let target = q.sqrt().ln();
    if let Some(best) = (0..out.len()).min_by(|&a, &b| {
        (out[a].kappa_l.ln() - target)
            .abs()
            .total_cmp(&(out[b].kappa_l.ln() - target).abs())
    }) {
        out[best].primary = true;
    }
    out
}

/// Full (κ_L, κ_R) grid.
pub fn sweep_2d(template: &SiteNetwork, spec: &SweepSpec) -> Result<Sweep2d> {
    let ev = Evaluator::new(template, spec)?;
    let kappa_l = spec.require_axis("kappa_L")?.values();
    let kappa_r = spec.require_axis("kappa_R")?.values();
    let points: Vec<(f64, f64)> = kappa_l
        .iter()
        .flat_map(|&kl| kappa_r.iter().map(move |&kr| (kl, kr)))
        .collect();
    let (records, failures) = efficiency_points(&ev, spec.workers, &points)?;
    Ok(Sweep2d {
        kappa_l,
        kappa_r,
        records,
        failures,
    })
}

/// Widths, participation ratios and sink overlaps along κ_L at fixed q.
pub fn scan_spectral(template: &SiteNetwork, spec: &SweepSpec) -> Result<SpectralScan> {
    spec.validate()?;
    let axis = spec.require_axis("kappa_L")?;
    let q = spec.require_q()?;
    let omega = template.reference_coupling();
    if !(omega > 0.0) {
        return Err(ValidationError::invalid("network has no couplings to set the κ scale").into());
    }
    let kappas = axis.values();
    let results = run_indexed(spec.workers, kappas.len(), |i| {
        isolated(|| {
            let k = kappas[i];
            let (gl, gr) = CouplingRatios::gammas(k, q, omega);
            let s = network_spectrum(&template.with_gammas(gl, gr)?)?;
            Ok(ScanPoint {
                kappa_l: k,
                kappa_r: k / q,
                re_energy: s.eigenvalues.iter().map(|z| z.re).collect(),
                widths: s.widths,
                pr: s.pr,
                overlap_l: s.overlap_l,
                overlap_r: s.overlap_r,
            })
        })
    })?;
    let n = template.n_sites();
    let mut points = Vec::with_capacity(kappas.len());
    let mut failures = Vec::new();
    for (index, res) in results.into_iter().enumerate() {
        let k = kappas[index];
        match res {
            Ok(p) => points.push(p),
            Err(message) => {
                let nan = vec![f64::NAN; n];
                points.push(ScanPoint {
                    kappa_l: k,
                    kappa_r: k / q,
                    re_energy: nan.clone(),
                    widths: nan.clone(),
                    pr: nan.clone(),
                    overlap_l: nan.clone(),
                    overlap_r: nan,
                });
                failures.push(PointFailure {
                    index,
                    kappa_l: k,
                    kappa_r: k / q,
                    message,
                });
            }
        }
    }
    Ok(SpectralScan { q, points, failures })
}

#[cfg(test)]
mod tests;
