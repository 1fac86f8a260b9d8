use serde::{Deserialize, Serialize};

use super::peaks::{locate_peak, PeakEstimate};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Collapse {
    pub reference: usize,
    pub peaks: Vec<PeakEstimate>,
    /// Scale of each curve's distance from its peak; 1 for the reference.
    pub alphas: Vec<f64>,
    /// RMS mismatch of each rescaled curve against the reference.
    pub residuals: Vec<f64>,
    /// Largest entry of `residuals`.
    pub quality: f64,
    /// `(α (x - x*), y / y*)` per curve.
    pub rescaled: Vec<Vec<(f64, f64)>>,
}

/// Linear interpolation inside the sampled range.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if x < xs[0] || x > *xs.last()? {
        return None;
    }
    let i = xs.partition_point(|&v| v < x).max(1).min(xs.len() - 1);
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    Some(ys[i - 1] + t * (ys[i] - ys[i - 1]))
}

/// Normalized curve in peak-centred coordinates.
struct Centred {
    u: Vec<f64>,
    y: Vec<f64>,
}

/// Mean squared mismatch of `a` sampled against `b` at scale ratio `s`
/// (`a`'s coordinate `u` corresponds to `b`'s `u / s`).
fn one_way(a: &Centred, b: &Centred, s: f64) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (u, y) in a.u.iter().zip(&a.y) {
        if let Some(v) = interpolate(&b.u, &b.y, u / s) {
            sum += (y - v).powi(2);
            count += 1;
        }
    }
    (count >= 2).then(|| sum / count as f64)
}

/// Symmetric mismatch between the reference and `c` rescaled by `alpha`.
fn mismatch(reference: &Centred, c: &Centred, alpha: f64) -> f64 {
    match (one_way(reference, c, alpha), one_way(c, reference, 1.0 / alpha)) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        _ => f64::INFINITY,
    }
}

const LOG_ALPHA_RANGE: f64 = 3.0;
const SCAN_POINTS: usize = 241;

fn best_alpha(reference: &Centred, c: &Centred) -> (f64, f64) {
    let f = |t: f64| mismatch(reference, c, t.exp());
    let step = 2.0 * LOG_ALPHA_RANGE / (SCAN_POINTS - 1) as f64;
    let (mut best_t, mut best_f) = (0.0, f(0.0));
    for i in 0..SCAN_POINTS {
        let t = -LOG_ALPHA_RANGE + i as f64 * step;
        let v = f(t);
        if v < best_f {
            best_t = t;
            best_f = v;
        }
    }
    // golden-section refinement inside the neighbouring scan cells
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best_t - step, best_t + step);
    let mut c1 = b - r * (b - a);
    let mut c2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(c1), f(c2));
    for _ in 0..60 {
        if f1 <= f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - r * (b - a);
            f1 = f(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + r * (b - a);
            f2 = f(c2);
        }
    }
    let t = 0.5 * (a + b);
    let v = f(t);
    if v <= best_f {
        (t.exp(), v)
    } else {
        (best_t.exp(), best_f)
    }
}

/// Rescales each curve to `(α (x - x*), y / y*)` around its interpolated
/// peak `(x*, y*)`, choosing α by least squares against the reference curve
/// over their common support.
pub fn rescale_collapse(curves: &[Curve], reference: usize) -> Result<Collapse> {
    if curves.len() < 2 {
        return Err(Error::Config("collapse needs at least two curves".into()));
    }
    if reference >= curves.len() {
        return Err(Error::Config(format!("reference index {reference} out of range")));
    }
    let mut peaks = Vec::with_capacity(curves.len());
    let mut centred = Vec::with_capacity(curves.len());
    for c in curves {
        let mut p = locate_peak(&c.xs, &c.ys).map_err(|e| match e {
            Error::NoInteriorPeak(m) => Error::NoInteriorPeak(format!("{}: {m}", c.label)),
            e => e,
        })?;
        p.column = c.label.clone();
        p.estimator = "collapse".into();
        centred.push(Centred {
            u: c.xs.iter().map(|x| x - p.position).collect(),
            y: c.ys.iter().map(|y| y / p.height).collect(),
        });
        peaks.push(p);
    }
    let mut alphas = Vec::with_capacity(curves.len());
    let mut residuals = Vec::with_capacity(curves.len());
    for (i, c) in centred.iter().enumerate() {
        if i == reference {
            alphas.push(1.0);
            residuals.push(0.0);
        } else {
            let (a, r) = best_alpha(&centred[reference], c);
            alphas.push(a);
            residuals.push(r.sqrt());
        }
    }
    let rescaled = centred
        .iter()
        .zip(&alphas)
        .map(|(c, a)| c.u.iter().zip(&c.y).map(|(u, y)| (a * u, *y)).collect())
        .collect();
    Ok(Collapse {
        reference,
        quality: residuals.iter().cloned().fold(0.0, f64::max),
        peaks,
        alphas,
        residuals,
        rescaled,
    })
}
