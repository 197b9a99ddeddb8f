use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use srswitch_core::dynamics::{BathSpec, Dynamics, EvolveOptions, Integrator, Law, LawKind};
use srswitch_core::network::{
    build_multimer, initial_state, parse_network, save_network, CouplingRatios, InitialState, SiteNetwork,
};
use srswitch_core::spectral::network_spectrum;
use srswitch_core::sweep::{
    contour_extract, efficiency_csv, scan_csv, scan_spectral, spectrum_csv, sweep_1d, sweep_2d, trajectory_csv,
    transition_scan, transitions_csv, Axis, SweepSpec, DEFAULT_1D, DEFAULT_2D,
};
use srswitch_core::{Error, ValidationError};

use crate::args::*;
use crate::manifest::Run;

const DEFAULT_KAPPA_L: f64 = 1.0;
const DEFAULT_Q: f64 = 100.0;
const DEFAULT_BATH: (f64, f64, f64) = (300.0, 35.0, 150.0);

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::from(ValidationError::Invalid(msg.into())).into()
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Multimer(a) => multimer(a),
        Command::Spectrum(a) => spectrum(a),
        Command::Transitions(a) => transitions(a),
        Command::Evolve(a) => evolve(a),
        Command::Sweep1d(a) => sweep1d(a),
        Command::Sweep2d(a) => sweep2d(a),
        Command::ScanSpectral(a) => scan(a),
        Command::Validate { model } => validate(&model),
    }
}

fn parse_bath(text: &str) -> Result<BathSpec> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid(format!("bath '{text}' must be three numbers T_K,ER_cm1,wc_cm1")))?;
    let [t, er, wc] = parts[..] else {
        return Err(invalid(format!("bath '{text}' must be three numbers T_K,ER_cm1,wc_cm1")));
    };
    Ok(BathSpec::new(t, er, wc).map_err(Error::from)?)
}

fn parse_law(text: &str) -> Result<LawKind> {
    Ok(text.parse::<LawKind>().map_err(Error::from)?)
}

fn parse_initial(text: &str) -> Result<InitialState> {
    Ok(text.parse::<InitialState>().map_err(Error::from)?)
}

/// Worker count: SRSWITCH_WORKERS, then --workers, then available cores.
fn workers(flag: Option<usize>) -> Result<usize> {
    let n = match std::env::var("SRSWITCH_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| invalid(format!("SRSWITCH_WORKERS='{v}' is not a worker count")))?,
        Err(_) => match flag {
            Some(n) => n,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        },
    };
    if n == 0 {
        return Err(invalid("worker count must be at least 1"));
    }
    Ok(n)
}

struct Model {
    net: SiteNetwork,
    /// Path or builder description, for manifests.
    source: String,
}

fn load_model(args: &ModelArgs, run: &mut Run) -> Result<Model> {
    match &args.model {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            run.input(path, &bytes);
            let text = String::from_utf8(bytes).map_err(|_| invalid(format!("{} is not UTF-8", path.display())))?;
            let net = parse_network(&text)
                .map_err(Error::from)
                .with_context(|| format!("{}", path.display()))?;
            Ok(Model {
                net,
                source: path.display().to_string(),
            })
        }
        None => {
            let net = build_multimer(args.omega, args.omega_sp, 0.0, 0.0).map_err(Error::from)?;
            Ok(Model {
                net,
                source: format!("multimer(omega={}, omega_sp={})", args.omega, args.omega_sp),
            })
        }
    }
}

/// Applies --kappa-l/--q. A model file keeps its own sinks unless a flag is
/// given; the built-in multimer defaults to kappa_L = 1, q = 100.
fn apply_sinks(model: &Model, sinks: &SinkArgs, from_file: bool) -> Result<SiteNetwork> {
    let current = model.net.coupling_ratios();
    if from_file && sinks.kappa_l.is_none() && sinks.q.is_none() {
        return Ok(model.net.clone());
    }
    let kappa_l = sinks
        .kappa_l
        .or(current.filter(|_| from_file).map(|c| c.kappa_l))
        .unwrap_or(DEFAULT_KAPPA_L);
    let q = sinks
        .q
        .or(current.filter(|_| from_file).map(|c| c.q))
        .unwrap_or(DEFAULT_Q);
    if !(kappa_l >= 0.0 && kappa_l.is_finite() && q > 0.0 && q.is_finite()) {
        return Err(invalid(format!("need kappa_L >= 0 and q > 0, got {kappa_l} and {q}")));
    }
    let omega = model.net.reference_coupling();
    let (gl, gr) = CouplingRatios::gammas(kappa_l, q, omega);
    Ok(model.net.with_gammas(gl, gr).map_err(Error::from)?)
}

fn resolve_bath(law: LawKind, flag: &Option<String>, gamma_d: Option<f64>, net: &SiteNetwork) -> Result<Option<BathSpec>> {
    if let Some(text) = flag {
        return Ok(Some(parse_bath(text)?));
    }
    if let Some(b) = net.bath() {
        return Ok(Some(*b));
    }
    let needs = law == LawKind::Lindblad || (law == LawKind::ClassicalSemiclassical && gamma_d.is_none());
    Ok(needs.then(|| {
        let (t, er, wc) = DEFAULT_BATH;
        BathSpec::new(t, er, wc).expect("default bath is valid")
    }))
}

fn log_axis(name: &str, a: &AxisArgs, default: (f64, f64, usize)) -> Axis {
    Axis::log(
        name,
        a.kappa_min.unwrap_or(default.0),
        a.kappa_max.unwrap_or(default.1),
        a.points.unwrap_or(default.2),
    )
}

/// Writes `text` to `out` and a manifest beside it, or prints it.
fn emit(run: Run, out: &Option<PathBuf>, text: &str, results: Value) -> Result<()> {
    match out {
        Some(path) => {
            let mut run = run;
            run.write_output(path, text.as_bytes())?;
            run.finish(path, results)?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn multimer(a: MultimerArgs) -> Result<()> {
    let mut run = Run::start("multimer");
    let omega = a.omega;
    let (gl_k, gr_k) = CouplingRatios::gammas(a.kappa_l, a.q, omega);
    let gamma_l = a.gamma_l.unwrap_or(gl_k);
    let gamma_r = a.gamma_r.unwrap_or(gr_k);
    let mut net = build_multimer(omega, a.omega_sp, gamma_l, gamma_r).map_err(Error::from)?;
    if let Some(b) = &a.bath {
        net = net.with_bath(Some(parse_bath(b)?)).map_err(Error::from)?;
    }
    run.parameters(json!({
        "omega_cm1": omega, "omega_sp_cm1": a.omega_sp,
        "gamma_l_cm1": gamma_l, "gamma_r_cm1": gamma_r, "bath": net.bath(),
    }));
    emit(run, &a.out, &save_network(&net), Value::Null)
}

fn validate(path: &Path) -> Result<()> {
    let bytes = fs::read(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes).map_err(|_| invalid(format!("{} is not UTF-8", path.display())))?;
    let net = parse_network(&text)
        .map_err(Error::from)
        .with_context(|| format!("{}", path.display()))?;
    let sinks: Vec<String> = net
        .sinks()
        .iter()
        .map(|s| format!("{}@{}", s.label, s.site + 1))
        .collect();
    println!("ok: {} sites, sinks [{}]", net.n_sites(), sinks.join(", "));
    Ok(())
}

fn spectrum(a: SpectrumArgs) -> Result<()> {
    let mut run = Run::start("spectrum");
    let model = load_model(&a.model, &mut run)?;
    let net = apply_sinks(&model, &a.sinks, a.model.model.is_some())?;
    let s = network_spectrum(&net)?;
    run.parameters(json!({
        "model": model.source,
        "gamma_l_cm1": net.gamma(srswitch_core::network::SinkLabel::L),
        "gamma_r_cm1": net.gamma(srswitch_core::network::SinkLabel::R),
    }));
    let results = json!({ "mean_spacing_cm1": s.mean_spacing, "max_residual": s.max_residual });
    emit(run, &a.out, &spectrum_csv(&s), results)
}

fn transitions(a: TransitionsArgs) -> Result<()> {
    let mut run = Run::start("transitions");
    let model = load_model(&a.model, &mut run)?;
    let mut spec = SweepSpec::one_d(&model.source, LawKind::VonNeumann, a.q);
    spec.axes = vec![log_axis("kappa_L", &a.axis, DEFAULT_1D)];
    spec.workers = workers(a.workers)?;
    spec.validate().map_err(Error::from)?;
    let report = transition_scan(&model.net, &spec)?;
    run.parameters(json!({ "model": model.source, "q": a.q, "axis": spec.axes[0], "workers": spec.workers }));
    let results = json!({
        "st_left": report.st_left,
        "st_right": report.st_right,
        "min_between": report.min_between,
        "kappa_switch_est": report.kappa_switch_est,
        "maxima": report.maxima.iter().map(|&i| report.kappa_grid[i]).collect::<Vec<_>>(),
    });
    eprintln!(
        "transitions: left {} right {} estimate {}",
        fmt_opt(report.st_left),
        fmt_opt(report.st_right),
        report.kappa_switch_est
    );
    emit(run, &a.out, &transitions_csv(&report), results)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), |v| format!("{v:.6e}"))
}

fn evolve(a: EvolveArgs) -> Result<()> {
    let mut run = Run::start("evolve");
    let model = load_model(&a.model, &mut run)?;
    let net = apply_sinks(&model, &a.sinks, a.model.model.is_some())?;
    let kind = parse_law(&a.law.law)?;
    let bath = resolve_bath(kind, &a.law.bath, a.law.gamma_d, &net)?;
    let law = Law::resolve(kind, bath, a.law.gamma_d).map_err(Error::from)?;
    let initial = parse_initial(&a.law.initial)?;
    let dynamics = Dynamics::prepare(&net, law)?;
    let rho0 = initial_state(&net, initial).map_err(Error::from)?;
    let mut opts = EvolveOptions::new(a.law.horizon_ps).with_integrator(match a.integrator {
        IntegratorArg::Exponential => Integrator::Exponential,
        IntegratorArg::Rk4 => Integrator::Rk4,
    });
    if let Some(dt) = a.dt_ps {
        opts = opts.with_dt(dt);
    }
    let res = dynamics.evolve(&net, &rho0, &opts)?;
    let pair = net
        .special_pair()
        .unwrap_or((0, 1.min(net.n_sites().saturating_sub(1))));
    let (eta_l, eta_r) = (*res.eta_l.last().unwrap(), *res.eta_r.last().unwrap());
    run.parameters(json!({
        "model": model.source, "law": kind.to_string(), "law_params": format!("{law:?}"),
        "bath": bath, "initial": initial.to_string(), "horizon_ps": a.law.horizon_ps,
        "dt_ps": res.dt, "integrator": format!("{:?}", opts.integrator),
        "gamma_l_cm1": net.gamma(srswitch_core::network::SinkLabel::L),
        "gamma_r_cm1": net.gamma(srswitch_core::network::SinkLabel::R),
    }));
    let results = json!({ "eta_l": eta_l, "eta_r": eta_r, "final_trace": res.final_trace });
    eprintln!("eta_L {eta_l:.6} eta_R {eta_r:.6} trace {:.6}", res.final_trace);
    emit(run, &a.out, &trajectory_csv(&res, net.n_sites(), pair), results)
}

fn sweep_spec(model: &Model, law: &LawArgs, axes: Vec<Axis>, q: Option<f64>, workers_flag: Option<usize>) -> Result<SweepSpec> {
    let kind = parse_law(&law.law)?;
    let spec = SweepSpec {
        model: model.source.clone(),
        law: kind,
        gamma_d: law.gamma_d,
        axes,
        q,
        horizon_ps: law.horizon_ps,
        bath: resolve_bath(kind, &law.bath, law.gamma_d, &model.net)?,
        initial: parse_initial(&law.initial)?,
        workers: workers(workers_flag)?,
    };
    spec.validate().map_err(Error::from)?;
    Ok(spec)
}

fn sweep1d(a: Sweep1dArgs) -> Result<()> {
    let mut run = Run::start("sweep1d");
    let model = load_model(&a.model, &mut run)?;
    let spec = sweep_spec(&model, &a.law, vec![log_axis("kappa_L", &a.axis, DEFAULT_1D)], Some(a.q), a.workers)?;
    let out = sweep_1d(&model.net, &spec)?;
    for c in &out.crossings {
        eprintln!("crossing at kappa_L = {:.6e}{}", c.kappa_l, if c.primary { " (primary)" } else { "" });
    }
    if out.crossings.is_empty() {
        eprintln!("no sign change of eta_L - eta_R");
    }
    run.parameters(serde_json::to_value(&spec)?);
    let results = json!({
        "crossings": out.crossings,
        "primary_crossing": out.primary_crossing().map(|c| c.kappa_l),
        "failures": out.failures,
    });
    emit(run, &a.out, &efficiency_csv(&out.records), results)
}

fn sweep2d(a: Sweep2dArgs) -> Result<()> {
    let mut run = Run::start("sweep2d");
    let model = load_model(&a.model, &mut run)?;
    let axes = vec![
        log_axis("kappa_L", &a.axis, DEFAULT_2D),
        log_axis("kappa_R", &a.axis, DEFAULT_2D),
    ];
    let spec = sweep_spec(&model, &a.law, axes, None, a.workers)?;
    let grid = sweep_2d(&model.net, &spec)?;
    run.parameters(serde_json::to_value(&spec)?);
    if let Some(path) = &a.contours {
        let curves: Vec<Value> = contour_extract(&grid, a.contour_ratio)
            .into_iter()
            .map(|c| json!({ "ratio": c.ratio, "closed": c.closed, "points": c.points }))
            .collect();
        let mut text = serde_json::to_string_pretty(&json!({ "ratio": a.contour_ratio, "curves": curves }))?;
        text.push('\n');
        run.write_output(path, text.as_bytes())?;
    }
    let results = json!({ "failures": grid.failures });
    emit(run, &a.out, &efficiency_csv(&grid.records), results)
}

fn scan(a: ScanArgs) -> Result<()> {
    let mut run = Run::start("scan-spectral");
    let model = load_model(&a.model, &mut run)?;
    let mut spec = SweepSpec::one_d(&model.source, LawKind::VonNeumann, a.q);
    spec.axes = vec![log_axis("kappa_L", &a.axis, DEFAULT_1D)];
    spec.workers = workers(a.workers)?;
    spec.validate().map_err(Error::from)?;
    let out = scan_spectral(&model.net, &spec)?;
    run.parameters(json!({ "model": model.source, "q": a.q, "axis": spec.axes[0], "workers": spec.workers }));
    let results = json!({ "failures": out.failures });
    emit(run, &a.out, &scan_csv(&out), results)
}
