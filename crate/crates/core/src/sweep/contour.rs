//! Iso-ratio curves η_L/η_R = const on a (κ_L, κ_R) grid by marching
//! squares in (ln κ_L, ln κ_R).

use std::collections::HashMap;

use super::Sweep2d;

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    /// η_L/η_R along the curve.
    pub ratio: f64,
    /// (κ_L, κ_R) vertices.
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

/// Grid edge: `(horizontal, i, j)`; horizontal edges join (i, j)–(i+1, j),
/// vertical ones (i, j)–(i, j+1).
type Edge = (bool, usize, usize);

/// Curves where η_L/η_R equals `ratio` or 1/`ratio`. Cells touching a failed
/// or non-positive efficiency are skipped.
pub fn contour_extract(grid: &Sweep2d, ratio: f64) -> Vec<Polyline> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Vec::new();
    }
    let level = ratio.ln().abs();
    let field: Vec<Option<f64>> = grid
        .records
        .iter()
        .map(|r| (r.eta_l > 0.0 && r.eta_r > 0.0).then(|| (r.eta_l / r.eta_r).ln()))
        .collect();
    let high = ratio.max(1.0 / ratio);
    let mut levels = vec![(level, high)];
    if level > 0.0 {
        levels.push((-level, 1.0 / high));
    }
    levels
        .into_iter()
        .flat_map(|(lv, r)| trace_level(grid, &field, lv, r))
        .collect()
}

fn trace_level(grid: &Sweep2d, field: &[Option<f64>], level: f64, ratio: f64) -> Vec<Polyline> {
    let (nl, nr) = (grid.kappa_l.len(), grid.kappa_r.len());
    let x: Vec<f64> = grid.kappa_l.iter().map(|k| k.ln()).collect();
    let y: Vec<f64> = grid.kappa_r.iter().map(|k| k.ln()).collect();
    let v = |i: usize, j: usize| field[i * nr + j].map(|f| f - level);

    let point_on = |e: Edge| -> (f64, f64) {
        let (h, i, j) = e;
        let (a, b) = if h { ((i, j), (i + 1, j)) } else { ((i, j), (i, j + 1)) };
        let (va, vb) = (v(a.0, a.1).unwrap(), v(b.0, b.1).unwrap());
        let t = va / (va - vb);
        let px = x[a.0] + t * (x[b.0] - x[a.0]);
        let py = y[a.1] + t * (y[b.1] - y[a.1]);
        (px.exp(), py.exp())
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..nl.saturating_sub(1) {
        for j in 0..nr.saturating_sub(1) {
            let (Some(c0), Some(c1), Some(c2), Some(c3)) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)) else {
                continue;
            };
            let up = [c0 > 0.0, c1 > 0.0, c2 > 0.0, c3 > 0.0];
            // bottom, right, top, left
            let edges: [Edge; 4] = [(true, i, j), (false, i + 1, j), (true, i, j + 1), (false, i, j)];
            let cut: Vec<usize> = (0..4).filter(|&e| up[e] != up[(e + 1) % 4]).collect();
            match cut.len() {
                2 => segments.push((edges[cut[0]], edges[cut[1]])),
                4 => {
                    let center = (c0 + c1 + c2 + c3) / 4.0 > 0.0;
                    if center == up[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut by_edge: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(s);
        by_edge.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let walk = |start: usize, from: Edge, used: &mut Vec<bool>| -> (Vec<Edge>, bool) {
        let mut path = vec![from];
        let mut seg = start;
        let mut at = from;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            path.push(next);
            at = next;
            match by_edge[&at].iter().copied().find(|&s| !used[s]) {
                Some(s) => seg = s,
                None => break,
            }
        }
        let closed = path.len() > 2 && path.first() == path.last();
        (path, closed)
    };

    let mut lines = Vec::new();
    // Open chains start at an edge used by a single segment.
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        let (a, b) = segments[s];
        let start = if by_edge[&a].len() == 1 {
            Some(a)
        } else if by_edge[&b].len() == 1 {
            Some(b)
        } else {
            None
        };
        if let Some(e) = start {
            let (path, closed) = walk(s, e, &mut used);
            lines.push(Polyline {
                ratio,
                points: path.into_iter().map(point_on).collect(),
                closed,
            });
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (path, _) = walk(s, segments[s].0, &mut used);
            lines.push(Polyline {
                ratio,
                points: path.into_iter().map(point_on).collect(),
                closed: true,
            });
        }
    }
    lines
}
