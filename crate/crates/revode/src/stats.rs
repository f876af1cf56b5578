//! Tiny fitting helpers for convergence studies.

/// Least-squares slope of `y` against `x`.
///
/// Returns `None` when fewer than two points are given or the x-spread is zero.
pub fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Slope of log(y) against log(x); pairs with non-positive entries are dropped.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (&x, &y) in xs.iter().zip(ys) {
        if x > 0.0 && y > 0.0 {
            lx.push(x.ln());
            ly.push(y.ln());
        }
    }
    slope(&lx, &ly)
}

/// Vertex of the parabola through three points; used to refine a grid argmin.
///
/// Expects `x` strictly increasing and `y1 <= y0`, `y1 <= y2` (a discrete
/// minimum at the middle point). Falls back to the middle x when the fitted
/// curvature is non-positive.
pub fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> f64 {
    let d21 = (y[1] - y[0]) / (x[1] - x[0]);
    let d32 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d32 - d21) / (x[2] - x[0]);
    if curv <= 0.0 {
        return x[1];
    }
    0.5 * (x[0] + x[1] - d21 / curv)
}
