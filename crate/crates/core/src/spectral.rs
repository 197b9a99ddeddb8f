//! Spectral analysis of the effective Hamiltonian: complex eigenvalues,
//! decay widths, localization and the superradiance transitions.

use nalgebra::linalg::Schur;
use rayon::prelude::*;

use crate::error::{NumericalError, Result};
use crate::grid::is_log_spaced;
use crate::network::{effective_hamiltonian, EffectiveHamiltonian, SinkLabel, SiteNetwork};
use crate::{CMatrix, C64};

/// Residual bound for each eigenpair, relative to the matrix norm.
pub const RESIDUAL_TOL: f64 = 1e-10;

const SCHUR_MAX_ITER: usize = 100_000;

/// Eigenpairs of ℋ ordered by ascending Re(E) (ties by width), plus the
/// derived per-state observables.
#[derive(Clone, Debug)]
pub struct SpectralResult {
    /// E^(k) − iΓ^(k)/2 in cm⁻¹.
    pub eigenvalues: Vec<C64>,
    /// Right eigenvectors as unit-norm columns.
    pub eigenvectors: CMatrix,
    /// Γ^(k) = −2 Im(eigenvalue).
    pub widths: Vec<f64>,
    /// Span of Re(eigenvalues) over N − 1.
    pub mean_spacing: f64,
    pub pr: Vec<f64>,
    /// |⟨L|Ψ_k⟩|², zero when there is no L sink.
    pub overlap_l: Vec<f64>,
    pub overlap_r: Vec<f64>,
    /// Largest ‖ℋv − λv‖ over all pairs.
    pub max_residual: f64,
}

impl SpectralResult {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Indices sorted by ascending width.
    pub fn by_width(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.dim()).collect();
        idx.sort_by(|&a, &b| self.widths[a].total_cmp(&self.widths[b]).then(a.cmp(&b)));
        idx
    }

    /// Index of the state with the largest width.
    pub fn widest(&self) -> usize {
        *self.by_width().last().expect("spectrum is never empty")
    }
}

/// Full right-eigenpair decomposition via a complex Schur form followed by
/// back-substitution on the triangular factor.
pub fn eigendecompose(h: &EffectiveHamiltonian) -> Result<SpectralResult> {
    let m = h.matrix();
    let n = m.nrows();
    if n == 0 || !m.is_square() {
        return Err(NumericalError::Domain("eigendecompose needs a non-empty square matrix".into()).into());
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(NumericalError::Domain("matrix has non-finite entries".into()).into());
    }
    let norm = m.norm();
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(NumericalError::EigenNoConvergence { residual: f64::INFINITY })?;
    let (q, mut t) = schur.unpack();
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = C64::new(0.0, 0.0);
        }
    }

    let small = (f64::EPSILON * norm).max(f64::MIN_POSITIVE);
    let mut pairs: Vec<(C64, nalgebra::DVector<C64>)> = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = nalgebra::DVector::<C64>::zeros(n);
        y[k] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for l in j + 1..=k {
                acc += t[(j, l)] * y[l];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < small {
                denom = C64::new(small, 0.0);
            }
            y[j] = -acc / denom;
        }
        let mut v = &q * y;
        let vn = v.norm();
        v.unscale_mut(vn);
        pairs.push((lambda, v));
    }

    let mut max_residual = 0.0_f64;
    for (lambda, v) in &pairs {
        let r = (m * v - v * *lambda).norm();
        max_residual = max_residual.max(r);
    }
    if !(max_residual <= RESIDUAL_TOL * norm.max(f64::MIN_POSITIVE)) && norm > 0.0 {
        return Err(NumericalError::EigenNoConvergence { residual: max_residual }.into());
    }

    pairs.sort_by(|a, b| {
        a.0.re
            .total_cmp(&b.0.re)
            .then((-a.0.im).total_cmp(&(-b.0.im)))
    });

    let eigenvalues: Vec<C64> = pairs.iter().map(|p| p.0).collect();
    let eigenvectors = CMatrix::from_columns(&pairs.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
    let widths: Vec<f64> = eigenvalues.iter().map(|z| -2.0 * z.im).collect();
    let (lo, hi) = eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| (lo.min(z.re), hi.max(z.re)));
    let mean_spacing = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    let pr = (0..n)
        .map(|k| participation_ratio(eigenvectors.column(k).iter().copied()))
        .collect::<Result<Vec<_>>>()?;
    let overlap = |site: Option<usize>| -> Vec<f64> {
        match site {
            Some(s) => (0..n).map(|k| eigenvectors[(s, k)].norm_sqr()).collect(),
            None => vec![0.0; n],
        }
    };
    Ok(SpectralResult {
        overlap_l: overlap(h.sink_site(SinkLabel::L)),
        overlap_r: overlap(h.sink_site(SinkLabel::R)),
        eigenvalues,
        eigenvectors,
        widths,
        mean_spacing,
        pr,
        max_residual,
    })
}

/// Spectrum of a network's effective Hamiltonian.
pub fn network_spectrum(net: &SiteNetwork) -> Result<SpectralResult> {
    eigendecompose(&effective_hamiltonian(net))
}

/// PR = (Σ|c_n|²)² / Σ|c_n|⁴, which is 1/Σ|c_n|⁴ for a unit vector.
pub fn participation_ratio(amplitudes: impl IntoIterator<Item = C64>) -> Result<f64> {
    let (s2, s4) = amplitudes.into_iter().fold((0.0, 0.0), |(s2, s4), c| {
        let p = c.norm_sqr();
        (s2 + p, s4 + p * p)
    });
    if !(s4 > 0.0) {
        return Err(NumericalError::Domain("participation ratio of a zero vector".into()).into());
    }
    Ok(s2 * s2 / s4)
}

/// Mean width of the N − 2 narrowest states divided by the mean level spacing.
pub fn subradiant_average_width(spec: &SpectralResult) -> Result<f64> {
    let n = spec.dim();
    if n < 3 {
        return Err(NumericalError::Domain(format!("subradiant average needs N >= 3, got {n}")).into());
    }
    let order = spec.by_width();
    let mean = order[..n - 2].iter().map(|&k| spec.widths[k]).sum::<f64>() / (n - 2) as f64;
    if mean == 0.0 {
        return Ok(0.0);
    }
    Ok(mean / spec.mean_spacing)
}

/// Sink-resolved widths Γ_{L,R} = γ_{L,R} Σ_k |⟨L,R|k⟩|² over subradiant k.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartialWidths {
    pub gamma_l: f64,
    pub gamma_r: f64,
    /// Number of widest states left out of the sum.
    pub excluded: usize,
}

/// Number of sinks past their transition, κ_s = γ_s/(2Ω) > 1; each one
/// contributes one superradiant state.
pub fn superradiant_count(net: &SiteNetwork) -> usize {
    let omega = net.reference_coupling();
    if !(omega > 0.0) {
        return 0;
    }
    net.sinks().iter().filter(|s| s.gamma / (2.0 * omega) > 1.0).count()
}

/// Partial widths with the superradiant states identified by
/// [`superradiant_count`].
pub fn partial_widths(spec: &SpectralResult, net: &SiteNetwork) -> PartialWidths {
    partial_widths_excluding(spec, net, superradiant_count(net))
}

/// Partial widths leaving out the `excluded` widest states.
pub fn partial_widths_excluding(spec: &SpectralResult, net: &SiteNetwork, excluded: usize) -> PartialWidths {
    let order = spec.by_width();
    let keep = &order[..spec.dim().saturating_sub(excluded)];
    let sum = |ov: &[f64]| keep.iter().map(|&k| ov[k]).sum::<f64>();
    PartialWidths {
        gamma_l: net.gamma(SinkLabel::L) * sum(&spec.overlap_l),
        gamma_r: net.gamma(SinkLabel::R) * sum(&spec.overlap_r),
        excluded,
    }
}

/// κ_L at which transport switches from the left to the right sink, ≈ √q.
pub fn switching_point_estimate(q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(NumericalError::Domain(format!("q must be positive, got {q}")).into());
    }
    Ok(q.sqrt())
}

/// Interior local maxima with a 3-point stencil; a plateau reports its
/// smallest-κ point.
pub fn local_maxima(curve: &[f64]) -> Vec<usize> {
    (1..curve.len().saturating_sub(1))
        .filter(|&i| curve[i] > curve[i - 1] && curve[i] >= curve[i + 1])
        .collect()
}

/// Interior local minima, mirror of [`local_maxima`].
pub fn local_minima(curve: &[f64]) -> Vec<usize> {
    (1..curve.len().saturating_sub(1))
        .filter(|&i| curve[i] < curve[i - 1] && curve[i] <= curve[i + 1])
        .collect()
}

#[derive(Clone, Debug)]
pub struct TransitionReport {
    pub kappa_grid: Vec<f64>,
    /// ⟨Γ⟩_{N−2}/D per grid point.
    pub avg_sub_width: Vec<f64>,
    /// Grid indices of every interior local maximum.
    pub maxima: Vec<usize>,
    pub st_left: Option<f64>,
    pub st_right: Option<f64>,
    /// κ of the lowest point between the two transitions.
    pub min_between: Option<f64>,
    pub kappa_switch_est: f64,
}

impl TransitionReport {
    pub fn two_peaks_found(&self) -> bool {
        self.st_left.is_some() && self.st_right.is_some()
    }
}

/// Scans κ_L over `kappa_grid` at fixed q (κ_R = κ_L/q) and locates the two
/// superradiance transitions as the two highest peaks of the subradiant
/// average width.
pub fn detect_transitions(template: &SiteNetwork, q: f64, kappa_grid: &[f64]) -> Result<TransitionReport> {
    let kappa_switch_est = switching_point_estimate(q)?;
    if kappa_grid.len() < 30 {
        return Err(NumericalError::Domain(format!(
            "transition scan needs at least 30 grid points, got {}",
            kappa_grid.len()
        ))
        .into());
    }
    if !is_log_spaced(kappa_grid, 1e-6) {
        return Err(NumericalError::Domain("transition scan grid must be log-spaced and increasing".into()).into());
    }
    let (lo, hi) = (kappa_grid[0], kappa_grid[kappa_grid.len() - 1]);
    if lo > 0.1 * (1.0 + 1e-12) || hi < 10.0 * q * (1.0 - 1e-12) {
        return Err(NumericalError::Domain(format!(
            "transition scan grid [{lo}, {hi}] must span at least [0.1, {}]",
            10.0 * q
        ))
        .into());
    }
    let omega = template.reference_coupling();
    if !(omega > 0.0) {
        return Err(NumericalError::Domain("network has no couplings to set the κ scale".into()).into());
    }

    let avg_sub_width = kappa_grid
        .par_iter()
        .map(|&k| {
            let (gl, gr) = crate::network::CouplingRatios::gammas(k, q, omega);
            let net = template.with_gammas(gl, gr)?;
            subradiant_average_width(&network_spectrum(&net)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    if avg_sub_width.iter().all(|&w| w == 0.0) {
        return Err(NumericalError::Domain("decay widths vanish on the whole grid".into()).into());
    }

    let maxima = local_maxima(&avg_sub_width);
    let mut ranked = maxima.clone();
    ranked.sort_by(|&a, &b| avg_sub_width[b].total_cmp(&avg_sub_width[a]).then(a.cmp(&b)));
    ranked.truncate(2);
    ranked.sort_unstable();
    let (st_left, st_right, min_between) = match ranked.as_slice() {
        [a, b] => {
            let lowest = (*a..=*b)
                .min_by(|&i, &j| avg_sub_width[i].total_cmp(&avg_sub_width[j]))
                .expect("non-empty range");
            (Some(kappa_grid[*a]), Some(kappa_grid[*b]), Some(kappa_grid[lowest]))
        }
        [a] => (Some(kappa_grid[*a]), None, None),
        _ => (None, None, None),
    };
    Ok(TransitionReport {
        kappa_grid: kappa_grid.to_vec(),
        avg_sub_width,
        maxima,
        st_left,
        st_right,
        min_between,
        kappa_switch_est,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_multimer;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn two_site_matches_quadratic_formula() {
        for &(omega, gamma) in &[(100.0, 30.0), (100.0, 1000.0), (1.0, 4.0)] {
            let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(omega, 0.0), c(omega, 0.0), c(0.0, -gamma / 2.0)]);
            let spec = eigendecompose(&EffectiveHamiltonian::from_matrix(m)).unwrap();
            let disc = c(omega * omega - gamma * gamma / 16.0, 0.0).sqrt();
            let expect = [c(0.0, -gamma / 4.0) + disc, c(0.0, -gamma / 4.0) - disc];
            for want in expect {
                let err = spec.eigenvalues.iter().map(|got| (got - want).norm()).fold(f64::INFINITY, f64::min);
                assert!(err <= 1e-10 * (omega + gamma), "{want}: {:?}", spec.eigenvalues);
            }
        }
    }

    #[test]
    fn widths_sum_to_total_decay() {
        let net = build_multimer(100.0, 200.0, 200.0, 2.0).unwrap();
        let spec = network_spectrum(&net).unwrap();
        let total: f64 = spec.widths.iter().sum();
        assert!((total - 202.0).abs() <= 1e-9 * 202.0);
        assert!(spec.widths.iter().all(|&w| w >= -1e-10));
    }

    #[test]
    fn closed_system_has_real_spectrum() {
        let net = build_multimer(100.0, 200.0, 0.0, 0.0).unwrap();
        let spec = network_spectrum(&net).unwrap();
        assert!(spec.widths.iter().all(|w| w.abs() < 1e-10));
    }

    #[test]
    fn uniform_chain_spectrum_and_pr() {
        let net = build_multimer(1.0, 1.0, 0.0, 0.0).unwrap();
        let spec = network_spectrum(&net).unwrap();
        let oracle = SymmetricEigen::new(net.closed_hamiltonian());
        let mut closed: Vec<f64> = oracle.eigenvalues.iter().copied().collect();
        closed.sort_by(f64::total_cmp);
        let mut analytic: Vec<f64> = (1..=6)
            .map(|k| 2.0 * (k as f64 * std::f64::consts::PI / 7.0).cos())
            .collect();
        analytic.sort_by(f64::total_cmp);
        for ((got, o), a) in spec.eigenvalues.iter().zip(&closed).zip(&analytic) {
            assert!((got.re - o).abs() < 1e-12 && (o - a).abs() < 1e-12);
        }
        for k in 0..6 {
            let direct = 1.0 / oracle.eigenvectors.column(k).iter().map(|x| x.powi(4)).sum::<f64>();
            assert!((direct - 14.0 / 3.0).abs() < 1e-9);
            assert!((spec.pr[k] - 14.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn participation_ratio_examples() {
        let site = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        assert_eq!(participation_ratio(site).unwrap(), 1.0);
        let u = 1.0 / 6f64.sqrt();
        let uniform = vec![c(u, 0.0); 6];
        assert!((participation_ratio(uniform).unwrap() - 6.0).abs() < 1e-12);
        assert!(participation_ratio(vec![c(0.0, 0.0); 4]).is_err());
    }

    #[test]
    fn eigenvectors_are_unit_and_satisfy_residual() {
        let net = build_multimer(100.0, 200.0, 2e6, 2e4).unwrap();
        let h = effective_hamiltonian(&net);
        let spec = eigendecompose(&h).unwrap();
        for k in 0..6 {
            let v = spec.eigenvectors.column(k);
            assert!((v.norm() - 1.0).abs() < 1e-12);
            let r = (h.matrix() * v - v * spec.eigenvalues[k]).norm();
            assert!(r <= RESIDUAL_TOL * h.matrix().norm());
        }
    }

    #[test]
    fn first_order_widths_for_weak_sink() {
        // Single weak sink: Γ_k ≈ γ |⟨sink|Ψ_k⁰⟩|² with closed-system eigenvectors.
        let omega = 100.0;
        let gamma = 1e-3 * omega;
        let net = build_multimer(omega, 200.0, gamma, 0.0).unwrap();
        let spec = network_spectrum(&net).unwrap();
        let oracle = SymmetricEigen::new(net.closed_hamiltonian());
        for k in 0..6 {
            let e = oracle.eigenvalues[k];
            let j = (0..6)
                .min_by(|&a, &b| (spec.eigenvalues[a].re - e).abs().total_cmp(&(spec.eigenvalues[b].re - e).abs()))
                .unwrap();
            let predicted = gamma * oracle.eigenvectors[(4, k)].powi(2);
            assert!(
                (spec.widths[j] - predicted).abs() <= 0.05 * predicted,
                "state {k}: {} vs {predicted}",
                spec.widths[j]
            );
        }
    }

    #[test]
    fn subradiant_average_scales_linearly_for_weak_coupling() {
        let a = network_spectrum(&build_multimer(100.0, 200.0, 0.1, 0.0).unwrap()).unwrap();
        let b = network_spectrum(&build_multimer(100.0, 200.0, 0.2, 0.0).unwrap()).unwrap();
        let ratio = subradiant_average_width(&b).unwrap() / subradiant_average_width(&a).unwrap();
        assert!((ratio - 2.0).abs() < 1e-3, "{ratio}");
        let closed = network_spectrum(&build_multimer(100.0, 200.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(subradiant_average_width(&closed).unwrap(), 0.0);
    }

    #[test]
    fn partial_widths_symmetric_and_closed() {
        let closed = build_multimer(100.0, 200.0, 0.0, 0.0).unwrap();
        let pw = partial_widths(&network_spectrum(&closed).unwrap(), &closed);
        assert_eq!((pw.gamma_l, pw.gamma_r), (0.0, 0.0));
        for g in [20.0, 150.0, 900.0] {
            let net = build_multimer(100.0, 200.0, g, g).unwrap();
            let spec = network_spectrum(&net).unwrap();
            for excluded in 0..=2 {
                let pw = partial_widths_excluding(&spec, &net, excluded);
                assert!((pw.gamma_l - pw.gamma_r).abs() <= 1e-9 * g, "{pw:?}");
            }
        }
    }

    #[test]
    fn superradiant_count_follows_kappa() {
        let at = |kl: f64| {
            let net = build_multimer(100.0, 200.0, 200.0 * kl, 2.0 * kl).unwrap();
            superradiant_count(&net)
        };
        assert_eq!(at(0.5), 0);
        assert_eq!(at(10.0), 1);
        assert_eq!(at(500.0), 2);
    }

    #[test]
    fn switching_estimate() {
        assert_eq!(switching_point_estimate(100.0).unwrap(), 10.0);
        assert_eq!(switching_point_estimate(1.0).unwrap(), 1.0);
        assert_eq!(switching_point_estimate(25.0).unwrap(), 5.0);
        assert!(switching_point_estimate(0.0).is_err());
    }

    #[test]
    fn peak_stencil_breaks_ties_toward_small_kappa() {
        assert_eq!(local_maxima(&[0.0, 1.0, 1.0, 0.0]), vec![1]);
        assert_eq!(local_maxima(&[0.0, 2.0, 1.0, 3.0, 0.0]), vec![1, 3]);
        assert_eq!(local_minima(&[3.0, 1.0, 2.0]), vec![1]);
    }

    #[test]
    fn detect_rejects_coarse_or_narrow_grids() {
        let net = build_multimer(100.0, 200.0, 0.0, 0.0).unwrap();
        assert!(detect_transitions(&net, 100.0, &crate::grid::log_space(1e-2, 1e4, 20)).is_err());
        assert!(detect_transitions(&net, 100.0, &crate::grid::log_space(1.0, 1e4, 40)).is_err());
        assert!(detect_transitions(&net, 100.0, &crate::grid::lin_space(1e-2, 1e4, 40)).is_err());
    }

    #[test]
    fn detect_fails_without_sinks() {
        let net = SiteNetwork::new(vec![0.0; 3], DMatrix::from_element(3, 3, 0.0), vec![], None).unwrap();
        assert!(detect_transitions(&net, 100.0, &crate::grid::log_space(1e-2, 1e4, 61)).is_err());
    }
}
