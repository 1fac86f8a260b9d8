use serde::Serialize;

use super::sweep::{SweepAxis, SweepTable};
use crate::error::{Error, Result};

/// Interpolated maximum of a sampled curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakEstimate {
    pub position: f64,
    pub height: f64,
    /// Full width at half maximum; `None` when the curve never drops below
    /// half the height on one side.
    pub width: Option<f64>,
    /// Index of the discrete maximum.
    pub index: usize,
    pub estimator: String,
    pub column: String,
    pub n_points: usize,
}

/// Vertex of the parabola through three points, or the middle point when the
/// three points are not strictly concave.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d12 - d01) / (x[2] - x[0]);
    if !(a < 0.0) {
        return (x[1], y[1]);
    }
    let b = d01 - a * (x[0] + x[1]);
    let xv = -b / (2.0 * a);
    let yv = y[0] + (xv - x[0]) * d01 + a * (xv - x[0]) * (xv - x[1]);
    (xv, yv)
}

/// Half-maximum crossing walking from `k` in direction `step`.
fn half_crossing(xs: &[f64], ys: &[f64], k: usize, half: f64, forward: bool) -> Option<f64> {
    let mut i = k;
    loop {
        let next = if forward {
            (i + 1 < xs.len()).then_some(i + 1)?
        } else {
            i.checked_sub(1)?
        };
        if ys[next] < half {
            let t = (ys[i] - half) / (ys[i] - ys[next]);
            return Some(xs[i] + t * (xs[next] - xs[i]));
        }
        i = next;
    }
}

/// Peak of `ys(xs)` from the discrete maximum and its two neighbours.
/// `xs` must be strictly ascending.
pub fn locate_peak(xs: &[f64], ys: &[f64]) -> Result<PeakEstimate> {
    if xs.len() != ys.len() {
        return Err(Error::Config("abscissa and ordinate lengths differ".into()));
    }
    if xs.len() < 3 {
        return Err(Error::NoInteriorPeak(format!("{} points", xs.len())));
    }
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("abscissae must be strictly ascending".into()));
    }
    // first index of the maximum, so plateaus starting at an edge count as edge maxima
    let k = (0..ys.len()).fold(0, |best, i| if ys[i] > ys[best] { i } else { best });
    if k == 0 || k + 1 == ys.len() {
        return Err(Error::NoInteriorPeak(format!("maximum at grid edge x = {}", xs[k])));
    }
    let (position, height) = parabola_vertex([xs[k - 1], xs[k], xs[k + 1]], [ys[k - 1], ys[k], ys[k + 1]]);
    let half = 0.5 * height;
    let width = match (half_crossing(xs, ys, k, half, false), half_crossing(xs, ys, k, half, true)) {
        (Some(l), Some(r)) => Some(r - l),
        _ => None,
    };
    Ok(PeakEstimate {
        position,
        height,
        width,
        index: k,
        estimator: "quadratic".into(),
        column: String::new(),
        n_points: xs.len(),
    })
}

/// Boundary estimate `J*` from the maximum of a fluctuation column.
pub fn fluctuation_peak(table: &SweepTable, column: &str) -> Result<PeakEstimate> {
    let (xs, ys) = table.column(column);
    if xs.is_empty() {
        return Err(Error::Config(format!("table has no values for `{column}`")));
    }
    let mut p = locate_peak(&xs, &ys)?;
    p.estimator = "fluctuation_peak".into();
    p.column = column.into();
    Ok(p)
}

/// Crossover coupling `g*` at the maximum of the polaron photon number,
/// which stays a reliable locator for antiferroelectric couplings where
/// the bare photon number does not.
pub fn crossover_polaron_peak(table: &SweepTable) -> Result<PeakEstimate> {
    if table.spec.axis != SweepAxis::G {
        return Err(Error::Config("crossover locators need a sweep along g".into()));
    }
    let mut p = fluctuation_peak(table, "polaron_photon_number")?;
    p.estimator = "polaron_photon_peak".into();
    Ok(p)
}

/// `(midpoints, -Δy/Δx)` of a sampled curve.
pub fn negative_gradient(xs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<f64>) {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| (0.5 * (x[0] + x[1]), -(y[1] - y[0]) / (x[1] - x[0])))
        .unzip()
}

/// Crossover coupling at the steepest drop of `column` (default `fluct_abs_p`) along g.
pub fn crossover_gradient_drop(table: &SweepTable, column: Option<&str>) -> Result<PeakEstimate> {
    if table.spec.axis != SweepAxis::G {
        return Err(Error::Config("crossover locators need a sweep along g".into()));
    }
    let column = column.unwrap_or("fluct_abs_p");
    let (xs, ys) = table.column(column);
    let (mx, dy) = negative_gradient(&xs, &ys);
    let mut p = locate_peak(&mx, &dy)?;
    p.estimator = "gradient_drop".into();
    p.column = column.into();
    Ok(p)
}
