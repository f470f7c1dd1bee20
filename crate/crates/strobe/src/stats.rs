//! Small statistics helpers shared by the sweeps: log-log slope fits and
//! error summaries.

/// Least-squares slope of ln(err) against ln(eps).
///
/// Returns `None` when fewer than two usable points remain (non-positive
/// entries are skipped, so errors at an exact-arithmetic floor of zero do
/// not poison the fit).
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Maximum and root-mean-square of a sample of absolute errors.
pub fn max_and_rms(errors: &[f64]) -> (f64, f64) {
    let max = errors.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let rms = if errors.is_empty() {
        0.0
    } else {
        (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
    };
    (max, rms)
}
