//! Least-squares slope fitting for decay-law measurements.

/// Ordinary least-squares line through `(x, y)` pairs; returns `(slope, intercept)`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    assert!(points.len() >= 2, "need at least two points to fit a line");
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}

/// Slope of `log |y|` against `log |x|`; zero-valued samples are skipped.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logged: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x != 0.0 && *y != 0.0)
        .map(|(x, y)| (x.abs().ln(), y.abs().ln()))
        .collect();
    linear_fit(&logged).0
}
