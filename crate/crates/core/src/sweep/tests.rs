use super::*;
use crate::network::build_multimer;

fn multimer() -> SiteNetwork {
    build_multimer(100.0, 200.0, 0.0, 0.0).unwrap()
}

fn small_1d(law: LawKind, q: f64, points: usize) -> SweepSpec {
    let mut s = SweepSpec::one_d("multimer", law, q);
    s.axes = vec![Axis::log("kappa_L", 1e-2, 1e4, points)];
    s
}

fn small_2d(law: LawKind, points: usize) -> SweepSpec {
    let mut s = SweepSpec::two_d("multimer", law);
    s.axes = vec![
        Axis::log("kappa_L", 1e-2, 1e2, points),
        Axis::log("kappa_R", 1e-2, 1e2, points),
    ];
    s
}

fn rec(kappa_l: f64, unbalanced: f64) -> EfficiencyRecord {
    EfficiencyRecord {
        kappa_l,
        kappa_r: kappa_l,
        eta_l: 0.5 + unbalanced / 2.0,
        eta_r: 0.5 - unbalanced / 2.0,
        unbalanced,
        final_trace: 0.0,
    }
}

#[test]
fn axis_validation() {
    assert!(Axis::log("kappa_L", 1.0, 10.0, 1).validate().is_err());
    assert!(Axis::log("kappa_L", 10.0, 1.0, 5).validate().is_err());
    assert!(Axis::log("kappa_L", 0.0, 1.0, 5).validate().is_err());
    assert!(Axis::linear("kappa_L", 0.0, 1.0, 5).validate().is_ok());
    assert!(Axis::log("kappa_L", f64::NAN, 1.0, 5).validate().is_err());
    let mut s = small_1d(LawKind::VonNeumann, 100.0, 5);
    s.workers = 0;
    assert!(s.validate().is_err());
}

#[test]
fn default_grids() {
    let s = SweepSpec::one_d("m", LawKind::VonNeumann, 100.0);
    let k = s.axis("kappa_L").unwrap().values();
    assert_eq!((k.len(), k[0], k[60]), (61, 1e-2, 1e4));
    let s = SweepSpec::two_d("m", LawKind::Classical);
    for name in ["kappa_L", "kappa_R"] {
        let a = s.axis(name).unwrap();
        assert_eq!((a.min, a.max, a.points, a.scale), (1e-2, 1e2, 41, Scale::Log));
    }
}

#[test]
fn spec_round_trips_through_json() {
    let mut s = small_1d(LawKind::Lindblad, 100.0, 7);
    s.bath = Some(BathSpec::new(300.0, 35.0, 150.0).unwrap());
    s.initial = InitialState::Site(2);
    let text = serde_json::to_string(&s).unwrap();
    assert!(text.contains("\"law\":\"lindblad\"") && text.contains("\"initial\":\"site:3\""));
    let back: SweepSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s);
}

#[test]
fn run_indexed_keeps_order() {
    let v = run_indexed(3, 100, |i| i * i).unwrap();
    assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
    assert!(run_indexed(0, 3, |i| i).is_err());
}

#[test]
fn crossing_is_exact_for_log_linear_data() {
    let recs: Vec<_> = [1.0, 5.0, 20.0, 50.0].iter().map(|&k: &f64| rec(k, -(k / 10.0).ln() / 10.0)).collect();
    let c = find_crossings(&recs, Scale::Log, 100.0);
    assert_eq!(c.len(), 1);
    assert!((c[0].kappa_l - 10.0).abs() < 1e-12);
    assert_eq!(c[0].lower_index, 1);
    assert!(c[0].primary);
}

#[test]
fn primary_crossing_is_nearest_sqrt_q() {
    let recs = vec![rec(0.1, 0.2), rec(0.3, -0.1), rec(2.0, -0.1), rec(8.0, 0.3), rec(12.0, -0.3)];
    let c = find_crossings(&recs, Scale::Log, 100.0);
    assert_eq!(c.len(), 3);
    assert_eq!(c.iter().filter(|c| c.primary).count(), 1);
    assert!(c[2].primary, "{c:?}");
}

#[test]
fn tiny_unbalance_has_no_sign() {
    let recs = vec![rec(1.0, 1e-15), rec(2.0, -1e-15), rec(3.0, 1e-16)];
    assert!(find_crossings(&recs, Scale::Log, 4.0).is_empty());
}

#[test]
fn balanced_sinks_give_zero_unbalance() {
    let out = sweep_1d(&multimer(), &small_1d(LawKind::VonNeumann, 1.0, 9)).unwrap();
    assert!(out.records.iter().all(|r| r.unbalanced.abs() < 1e-12));
    assert!(out.crossings.is_empty());
    assert!(out.failures.is_empty());
}

#[test]
fn quantum_sweep_switches_sign() {
    let out = sweep_1d(&multimer(), &small_1d(LawKind::VonNeumann, 100.0, 13)).unwrap();
    assert!(out.records.iter().all(|r| r.is_consistent(1e-9)));
    let c = out.primary_crossing().expect("crossing");
    assert!(c.kappa_l > 1.0 && c.kappa_l < 100.0);
    assert!(out.nearest(1.0).unbalanced > 0.7);
    assert!(out.nearest(100.0).unbalanced < -0.7);
    assert!(out.records.windows(2).all(|w| w[0].kappa_l < w[1].kappa_l));
    assert!(out.records.iter().all(|r| (r.kappa_l / r.kappa_r - 100.0).abs() < 1e-9));
}

#[test]
fn classical_sweep_never_switches() {
    let out = sweep_1d(&multimer(), &small_1d(LawKind::Classical, 100.0, 13)).unwrap();
    assert!(out.records.iter().all(|r| r.unbalanced >= 0.0));
    assert!(out.crossings.is_empty());
}

#[test]
fn csv_independent_of_worker_count() {
    let mut spec = small_2d(LawKind::VonNeumann, 6);
    let one = efficiency_csv(&sweep_2d(&multimer(), &spec).unwrap().records);
    spec.workers = 4;
    let many = efficiency_csv(&sweep_2d(&multimer(), &spec).unwrap().records);
    assert_eq!(one, many);
}

#[test]
fn exchanging_sinks_swaps_efficiencies() {
    let g = sweep_2d(&multimer(), &small_2d(LawKind::VonNeumann, 5)).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let (a, b) = (g.get(i, j), g.get(j, i));
            assert_eq!((a.kappa_l, a.kappa_r), (b.kappa_r, b.kappa_l));
            // Mirror networks agree up to propagator rounding.
            assert!((a.eta_l - b.eta_r).abs() < 1e-10 && (a.eta_r - b.eta_l).abs() < 1e-10, "{a:?} {b:?}");
        }
    }
}

/// Sign of η_L − η_R at grid points mirrored across each switching line.
fn flips(law: LawKind) -> (bool, bool) {
    let g = sweep_2d(&multimer(), &small_2d(law, 5)).unwrap();
    // Axis values 1e-2, 1e-1, 1, 10, 1e2.
    let s = |i: usize, j: usize| g.get(i, j).unbalanced.signum();
    // (κ_L, κ_R) = (1, 0.01) against its mirror images.
    let diagonal = s(2, 0) != s(0, 2);
    let anti = s(2, 0) != s(4, 2);
    (diagonal, anti)
}

#[test]
fn quantum_grid_switches_across_both_lines() {
    assert_eq!(flips(LawKind::VonNeumann), (true, true));
}

#[test]
fn classical_grid_switches_only_across_diagonal() {
    assert_eq!(flips(LawKind::Classical), (true, false));
}

#[test]
fn rebuild_grid_from_records() {
    let g = sweep_2d(&multimer(), &small_2d(LawKind::Classical, 3)).unwrap();
    let back = Sweep2d::from_records(parse_efficiency_csv(&efficiency_csv(&g.records)).unwrap()).unwrap();
    assert_eq!(back.kappa_l, g.kappa_l);
    assert_eq!(back.kappa_r, g.kappa_r);
    assert_eq!(back.records, g.records);
    let mut shuffled = g.records.clone();
    shuffled.swap(0, 4);
    assert!(Sweep2d::from_records(shuffled).is_err());
}

fn cell_of(g: &Sweep2d, p: (f64, f64)) -> (usize, usize) {
    let find = |axis: &[f64], v: f64| {
        axis.windows(2)
            .position(|w| v >= w[0] * (1.0 - 1e-12) && v <= w[1] * (1.0 + 1e-12))
            .expect("point inside grid")
    };
    (find(&g.kappa_l, p.0), find(&g.kappa_r, p.1))
}

#[test]
fn unit_ratio_contour_follows_sign_changes() {
    let g = sweep_2d(&multimer(), &small_2d(LawKind::VonNeumann, 9)).unwrap();
    let lines = contour_extract(&g, 1.0);
    assert!(!lines.is_empty());
    let n = g.kappa_l.len();
    let mut sign_cells = std::collections::BTreeSet::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            // Corners on the diagonal carry rounding-level ratios and no sign.
            let s: Vec<bool> = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
                .iter()
                .map(|&(a, b)| (g.get(a, b).eta_l / g.get(a, b).eta_r).ln())
                .filter(|f| f.abs() > 1e-9)
                .map(|f| f > 0.0)
                .collect();
            if s.iter().any(|&x| x != s[0]) {
                sign_cells.insert((i, j));
            }
        }
    }
    let mut hit = std::collections::BTreeSet::new();
    for l in &lines {
        assert_eq!(l.ratio, 1.0);
        for w in l.points.windows(2) {
            if ((w[0].0 / w[1].0).ln().abs() + (w[0].1 / w[1].1).ln().abs()) < 1e-6 {
                continue;
            }
            let mid = ((w[0].0 * w[1].0).sqrt(), (w[0].1 * w[1].1).sqrt());
            let c = cell_of(&g, mid);
            assert!(sign_cells.contains(&c), "segment outside a sign-change cell at {c:?}");
            hit.insert(c);
        }
    }
    assert_eq!(hit, sign_cells);
    // Both switching lines: every diagonal cell, plus cells far off it.
    assert!((0..n - 1).all(|i| hit.contains(&(i, i))));
    assert!(hit.iter().filter(|(i, j)| i.abs_diff(*j) >= 3).count() >= 4);
}

#[test]
fn ratio_nine_gives_both_families() {
    let g = sweep_2d(&multimer(), &small_2d(LawKind::VonNeumann, 9)).unwrap();
    let lines = contour_extract(&g, 9.0);
    assert!(lines.iter().any(|l| (l.ratio - 9.0).abs() < 1e-12));
    assert!(lines.iter().any(|l| (l.ratio - 1.0 / 9.0).abs() < 1e-12));
    for l in &lines {
        for &(kl, kr) in &l.points {
            assert!(kl >= 1e-2 * (1.0 - 1e-12) && kr <= 1e2 * (1.0 + 1e-12));
        }
    }
}

#[test]
fn balanced_grid_has_no_ratio_nine_curve() {
    let mut g = sweep_2d(&multimer(), &small_2d(LawKind::Classical, 3)).unwrap();
    for r in &mut g.records {
        r.eta_l = 0.4;
        r.eta_r = 0.4;
        r.unbalanced = 0.0;
    }
    assert!(contour_extract(&g, 9.0).is_empty());
    assert!(contour_extract(&g, f64::NAN).is_empty());
}

#[test]
fn contour_polylines_are_joined() {
    // Synthetic field ln(η_L/η_R) = ln κ_L − ln κ_R: one straight diagonal.
    let k: Vec<f64> = crate::grid::log_space(1e-2, 1e2, 6);
    let mut records = Vec::new();
    for &kl in &k {
        for &kr in &k {
            let f = (kl / kr).ln() + 0.1;
            let eta_l = 1.0 / (1.0 + (-f).exp());
            records.push(EfficiencyRecord {
                kappa_l: kl,
                kappa_r: kr,
                eta_l,
                eta_r: 1.0 - eta_l,
                unbalanced: 2.0 * eta_l - 1.0,
                final_trace: 0.0,
            });
        }
    }
    let g = Sweep2d::from_records(records).unwrap();
    let lines = contour_extract(&g, 1.0);
    assert_eq!(lines.len(), 1);
    assert!(!lines[0].closed);
    for &(kl, kr) in &lines[0].points {
        assert!(((kl / kr).ln() + 0.1).abs() < 1e-9);
    }
}

#[test]
fn failures_are_isolated() {
    let e: Result<(), String> = isolated(|| Err(NumericalError::Domain("bad point".into()).into()));
    assert_eq!(e.unwrap_err(), "bad point");
    let p: Result<(), String> = isolated(|| panic!("boom"));
    assert_eq!(p.unwrap_err(), "boom");
    let r = EfficiencyRecord::failed(1.0, 0.01);
    assert!(r.is_failed());
    let csv = efficiency_csv(&[r]);
    assert!(csv.lines().nth(1).unwrap().contains("NaN"));
    assert!(parse_efficiency_csv(&csv).unwrap()[0].is_failed());
}

#[test]
fn csv_numbers_round_trip() {
    for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
        let s = fmt_num(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        if x != 0.0 {
            assert_eq!(s.split('e').next().unwrap().replace(['-', '.'], "").len(), 17);
        }
    }
    assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
}

#[test]
fn csv_reader_rejects_bad_tables() {
    assert!(read_table("").is_err());
    assert!(read_table("a,b\n1,2,3\n").is_err());
    assert!(read_table("a,b\n1,x\n").is_err());
    assert!(parse_efficiency_csv("kappa_R,kappa_L,eta_L,eta_R,unbalanced,final_trace\n").is_err());
    let t = read_table("a,b\n1,2\n3,4\n").unwrap();
    assert_eq!(t.column("b").unwrap(), vec![2.0, 4.0]);
}

#[test]
fn trajectory_header_layout() {
    assert_eq!(
        trajectory_header(3, (0, 1)),
        "t_ps,rho_1_1,rho_2_2,rho_3_3,abs_rho_1_2,eta_L,eta_R,trace"
    );
}

#[test]
fn closed_endpoint_of_scan_matches_chain() {
    let chain = build_multimer(100.0, 100.0, 0.0, 0.0).unwrap();
    let mut spec = small_1d(LawKind::VonNeumann, 100.0, 3);
    spec.axes = vec![Axis::linear("kappa_L", 0.0, 1.0, 3)];
    let scan = scan_spectral(&chain, &spec).unwrap();
    assert!(scan.points[0].pr.iter().all(|p| (p - 14.0 / 3.0).abs() < 1e-9));
    assert!(scan.points[0].widths.iter().all(|w| w.abs() < 1e-12));
    let csv = scan_csv(&scan);
    let t = read_table(&csv).unwrap();
    t.expect_header(SCAN_HEADER).unwrap();
    assert_eq!(t.rows.len(), 18);
}

#[test]
fn widest_state_moves_to_left_sink_at_switch() {
    let mut spec = small_1d(LawKind::VonNeumann, 100.0, 3);
    spec.axes = vec![Axis::log("kappa_L", 1.0, 100.0, 3)];
    let scan = scan_spectral(&multimer(), &spec).unwrap();
    let p = &scan.points[1];
    let widest = (0..6).max_by(|&a, &b| p.widths[a].total_cmp(&p.widths[b])).unwrap();
    assert!(p.overlap_l[widest] >= 0.95);
}
