//! Parameter grids.

/// `points` values evenly spaced in log10 between `min` and `max`, with the
/// endpoints reproduced exactly.
pub fn log_space(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(min > 0.0 && max > 0.0, "log grid needs positive bounds");
    let (a, b) = (min.log10(), max.log10());
    spaced(points, |t| 10f64.powf(a + t * (b - a)), min, max)
}

/// `points` values evenly spaced between `min` and `max`.
pub fn lin_space(min: f64, max: f64, points: usize) -> Vec<f64> {
    spaced(points, |t| min + t * (max - min), min, max)
}

fn spaced(points: usize, f: impl Fn(f64) -> f64, min: f64, max: f64) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..points)
            .map(|i| match i {
                0 => min,
                i if i == points - 1 => max,
                i => f(i as f64 / (points - 1) as f64),
            })
            .collect(),
    }
}

/// True when consecutive ratios agree to a relative tolerance.
pub fn is_log_spaced(grid: &[f64], rel_tol: f64) -> bool {
    if grid.len() < 2 || grid.iter().any(|&k| !(k > 0.0)) {
        return false;
    }
    let step = (grid[1] / grid[0]).ln();
    step > 0.0
        && grid
            .windows(2)
            .all(|w| ((w[1] / w[0]).ln() - step).abs() <= rel_tol * step)
}
