//! Ground-state measurements.
//!
//! Everything diagonal in the σ_x encoding is evaluated from the spin
//! marginal `P(s) = Σ_n |ψ(n, s)|²`. Photon moments use shifted ladder
//! operators `c = a - γ(S_x)`, which covers both photon numbers in both frames:
//!
//! | frame    | `⟨a†a⟩`        | polaron number  |
//! |----------|----------------|-----------------|
//! | standard | `γ = 0`        | `γ = -β S_x`    |
//! | polaron  | `γ = β S_x`    | `γ = 0`         |
//!
//! with `β = g/ω_c`. The polaron number is the occupation of `b = a + β S_x`,
//! which vanishes identically in the electrostatic limit.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::displacement_elements;
use crate::hilbert::{twice_sx, Frame, QuantumState};
use crate::lattice::{named_momentum, Geometry, LatticeCluster, Momentum};

/// Default number of bins per axis of the complex 3SL histogram.
pub const DEFAULT_3SL_BINS: usize = 121;
/// Half-width of the square box holding the 3SL hexagon (vertices at radius 2).
pub const P3SL_EXTENT: f64 = 2.0;

/// `P(s)` per spin slot of the state's basis.
pub fn spin_marginal(state: &QuantumState) -> Vec<f64> {
    let d = &state.descriptor;
    let ns = d.n_spin_states();
    let mut p = vec![0.0; ns];
    for (i, a) in state.amplitudes.iter().enumerate() {
        p[i % ns] += a * a;
    }
    p
}

/// Iterates `(config, probability)` over the spin marginal, skipping empty slots.
fn weighted_configs<'a>(state: &'a QuantumState, marginal: &'a [f64]) -> impl Iterator<Item = (u64, f64)> + 'a {
    marginal
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(move |(slot, p)| (state.descriptor.spin_config(slot), *p))
}

fn check_cluster(state: &QuantumState, cluster: &LatticeCluster) -> Result<()> {
    if state.n_sites() != cluster.n_sites() {
        return Err(Error::Config(format!(
            "state has {} sites, cluster {}",
            state.n_sites(),
            cluster.n_sites()
        )));
    }
    Ok(())
}

/// `C_ij = ⟨σ_x^i σ_x^j⟩`.
pub fn correlation_matrix(state: &QuantumState) -> DMatrix<f64> {
    let n = state.n_sites();
    let marginal = spin_marginal(state);
    let mut anti = vec![0.0; n * n];
    let mask = state.descriptor.all_up_mask();
    for (s, p) in weighted_configs(state, &marginal) {
        for i in 0..n {
            // bits differing from site i
            let mut diff = if (s >> i) & 1 == 1 { !s & mask } else { s };
            while diff != 0 {
                let j = diff.trailing_zeros() as usize;
                diff &= diff - 1;
                anti[i * n + j] += p;
            }
        }
    }
    let total: f64 = marginal.iter().sum();
    DMatrix::from_fn(n, n, |i, j| total - 2.0 * anti[i * n + j])
}

/// Structure factor with its fixed-reference-site counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureFactor {
    /// `(1/N²) Σ_ij e^{-ik·(r_i - r_j)} ⟨σ_i σ_j⟩`.
    pub value: f64,
    /// `(1/N) Σ_i e^{-ik·(r_i - r_0)} ⟨σ_i σ_0⟩`, real part.
    pub fixed_site: f64,
    /// Imaginary part of the fixed-site sum; zero for reflection-symmetric states.
    pub fixed_site_imag: f64,
}

fn structure_factor_from(c: &DMatrix<f64>, cluster: &LatticeCluster, k: &Momentum) -> StructureFactor {
    let n = cluster.n_sites();
    let phase: Vec<f64> = cluster.sites.iter().map(|&r| k.phase(r)).collect();
    let mut value = 0.0;
    for i in 0..n {
        for j in 0..n {
            value += (phase[i] - phase[j]).cos() * c[(i, j)];
        }
    }
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..n {
        let a = -(phase[i] - phase[0]);
        re += a.cos() * c[(i, 0)];
        im += a.sin() * c[(i, 0)];
    }
    StructureFactor {
        value: value / (n * n) as f64,
        fixed_site: re / n as f64,
        fixed_site_imag: im / n as f64,
    }
}

pub fn structure_factor(state: &QuantumState, cluster: &LatticeCluster, k: &Momentum) -> Result<StructureFactor> {
    check_cluster(state, cluster)?;
    if !cluster.contains_momentum(k) {
        return Err(Error::MissingPoint(k.to_string()));
    }
    Ok(structure_factor_from(&correlation_matrix(state), cluster, k))
}

/// Structure factor at every cluster momentum, in the cluster's momentum order.
pub fn structure_factor_all(state: &QuantumState, cluster: &LatticeCluster) -> Result<Vec<(Momentum, StructureFactor)>> {
    check_cluster(state, cluster)?;
    if cluster.momenta.is_empty() {
        return Err(Error::MissingPoint("cluster defines no momenta".into()));
    }
    let c = correlation_matrix(state);
    Ok(cluster
        .momenta
        .iter()
        .map(|k| (*k, structure_factor_from(&c, cluster, k)))
        .collect())
}

/// Order-parameter correlators: Γ always, M on the square lattice, the ±K average on the triangular one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderCorrelations {
    pub ferro: f64,
    pub stag: Option<f64>,
    pub three_sl: Option<f64>,
    /// Largest |reference-averaged - fixed-site| over the evaluated momenta.
    pub fixed_site_deviation: f64,
}

pub fn order_correlations(state: &QuantumState, cluster: &LatticeCluster) -> Result<OrderCorrelations> {
    check_cluster(state, cluster)?;
    let c = correlation_matrix(state);
    let mut dev: f64 = 0.0;
    let mut at = |label: &str| -> Result<f64> {
        let k = named_momentum(cluster.geometry, label).expect("label table");
        if !cluster.contains_momentum(&k) {
            return Err(Error::MissingPoint(format!("{label} = {k}")));
        }
        let s = structure_factor_from(&c, cluster, &k);
        dev = dev.max((s.value - s.fixed_site).abs());
        Ok(s.value)
    };
    let ferro = at("Gamma")?;
    let (stag, three_sl) = match cluster.geometry {
        Geometry::Square => (Some(at("M")?), None),
        Geometry::Triangular => (None, Some(0.5 * (at("K")? + at("-K")?))),
    };
    Ok(OrderCorrelations {
        ferro,
        stag,
        three_sl,
        fixed_site_deviation: dev,
    })
}

/// Per-configuration order parameters, built once per cluster.
struct OrderParams {
    n: usize,
    /// `e^{-ik·r_i}` at M (±1) for square clusters.
    stag_sign: Option<Vec<f64>>,
    /// `e^{-iK·r_i}` for triangular clusters.
    k_phase: Option<Vec<(f64, f64)>>,
}

impl OrderParams {
    fn new(cluster: &LatticeCluster) -> Self {
        let n = cluster.n_sites();
        match cluster.geometry {
            Geometry::Square => OrderParams {
                n,
                stag_sign: Some(
                    cluster
                        .sublattice_of
                        .iter()
                        .map(|&c| if c == 0 { 1.0 } else { -1.0 })
                        .collect(),
                ),
                k_phase: None,
            },
            Geometry::Triangular => OrderParams {
                n,
                stag_sign: None,
                k_phase: Some(
                    cluster
                        .sublattice_of
                        .iter()
                        .map(|&c| {
                            let a = -4.0 * PI * c as f64 / 3.0;
                            (a.cos(), a.sin())
                        })
                        .collect(),
                ),
            },
        }
    }

    fn sigma(s: u64, i: usize) -> f64 {
        if (s >> i) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// `p = S_x`.
    fn p(&self, s: u64) -> f64 {
        0.5 * twice_sx(s, self.n) as f64
    }

    /// `p_A - p_B`.
    fn p_stag(&self, s: u64) -> Option<f64> {
        self.stag_sign
            .as_ref()
            .map(|w| 0.5 * (0..self.n).map(|i| w[i] * Self::sigma(s, i)).sum::<f64>())
    }

    /// `p_A + p_B e^{-i4π/3} + p_C e^{i4π/3}`.
    fn p3sl(&self, s: u64) -> Option<(f64, f64)> {
        self.k_phase.as_ref().map(|w| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &(c, sn)) in w.iter().enumerate() {
                let sg = Self::sigma(s, i);
                re += c * sg;
                im += sn * sg;
            }
            (0.5 * re, 0.5 * im)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fluctuation {
    P,
    AbsP,
    PStag,
    AbsPStag,
    AbsP3sl,
    Photon,
}

impl Fluctuation {
    pub const ALL: [Fluctuation; 6] = [
        Fluctuation::P,
        Fluctuation::AbsP,
        Fluctuation::PStag,
        Fluctuation::AbsPStag,
        Fluctuation::AbsP3sl,
        Fluctuation::Photon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fluctuation::P => "fluct_p",
            Fluctuation::AbsP => "fluct_abs_p",
            Fluctuation::PStag => "fluct_p_stag",
            Fluctuation::AbsPStag => "fluct_abs_p_stag",
            Fluctuation::AbsP3sl => "fluct_abs_p3sl",
            Fluctuation::Photon => "fluct_photon",
        }
    }
}

/// First and second moments of the diagonal order parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct OrderMoments {
    pub p: f64,
    pub p2: f64,
    pub abs_p: f64,
    pub p_stag: Option<f64>,
    pub p_stag2: Option<f64>,
    pub abs_p_stag: Option<f64>,
    pub abs_p3sl: Option<f64>,
    pub abs_p3sl2: Option<f64>,
}

pub fn order_moments(state: &QuantumState, cluster: &LatticeCluster) -> Result<OrderMoments> {
    check_cluster(state, cluster)?;
    let op = OrderParams::new(cluster);
    let marginal = spin_marginal(state);
    let mut m = OrderMoments::default();
    let (mut ps, mut ps2, mut aps, mut a3, mut a32) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (s, w) in weighted_configs(state, &marginal) {
        let p = op.p(s);
        m.p += w * p;
        m.p2 += w * p * p;
        m.abs_p += w * p.abs();
        if let Some(v) = op.p_stag(s) {
            ps += w * v;
            ps2 += w * v * v;
            aps += w * v.abs();
        }
        if let Some((re, im)) = op.p3sl(s) {
            let r2 = re * re + im * im;
            a3 += w * r2.sqrt();
            a32 += w * r2;
        }
    }
    if op.stag_sign.is_some() {
        m.p_stag = Some(ps);
        m.p_stag2 = Some(ps2);
        m.abs_p_stag = Some(aps);
    }
    if op.k_phase.is_some() {
        m.abs_p3sl = Some(a3);
        m.abs_p3sl2 = Some(a32);
    }
    Ok(m)
}

fn variance(mean: f64, second: f64) -> f64 {
    let v = second - mean * mean;
    debug_assert!(v >= -1e-10 * second.abs().max(1.0), "negative variance {v}");
    v.max(0.0)
}

/// Variance of the designated quantity. Photon fluctuations need `beta` in the polaron frame.
pub fn fluctuations(state: &QuantumState, cluster: &LatticeCluster, which: Fluctuation, beta: f64) -> Result<f64> {
    if which == Fluctuation::Photon {
        return Ok(photon_moments(state, beta)?.fluct_number);
    }
    let m = order_moments(state, cluster)?;
    let geometry_err = || Error::Config(format!("{} undefined on {} clusters", which.name(), cluster.geometry));
    Ok(match which {
        Fluctuation::P => variance(m.p, m.p2),
        Fluctuation::AbsP => variance(m.abs_p, m.p2),
        Fluctuation::PStag => variance(m.p_stag.ok_or_else(geometry_err)?, m.p_stag2.unwrap()),
        Fluctuation::AbsPStag => variance(m.abs_p_stag.ok_or_else(geometry_err)?, m.p_stag2.unwrap()),
        Fluctuation::AbsP3sl => variance(m.abs_p3sl.ok_or(Error::WrongGeometry)?, m.abs_p3sl2.unwrap()),
        Fluctuation::Photon => unreachable!(),
    })
}

/// Photon numbers and their variances in the standard-frame sense.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhotonMoments {
    pub number: f64,
    pub fluct_number: f64,
    pub polaron_number: f64,
    pub fluct_polaron_number: f64,
}

/// `(⟨c†c⟩, ⟨(c†c)²⟩)` for `c = a - γ(S_x)`, evaluated on the photon
/// columns with one extra Fock level so truncation never clips the operators.
fn shifted_number_moments(state: &QuantumState, gamma: impl Fn(f64) -> f64) -> (f64, f64) {
    let d = &state.descriptor;
    let ns = d.n_spin_states();
    let nmax = d.n_ph_max;
    let psi = &state.amplitudes;
    let mut first = 0.0;
    let mut second = 0.0;
    let mut u = vec![0.0; nmax + 2];
    for slot in 0..ns {
        let g = gamma(0.5 * twice_sx(d.spin_config(slot), d.n_sites) as f64);
        let phi = |n: usize| if n <= nmax { psi[n * ns + slot] } else { 0.0 };
        for (n, un) in u.iter_mut().enumerate().take(nmax + 1) {
            *un = ((n + 1) as f64).sqrt() * phi(n + 1) - g * phi(n);
        }
        u[nmax + 1] = 0.0;
        first += u[..=nmax].iter().map(|x| x * x).sum::<f64>();
        for n in 0..=nmax + 1 {
            let up = if n > 0 { (n as f64).sqrt() * u[n - 1] } else { 0.0 };
            let v = up - g * u[n];
            second += v * v;
        }
    }
    (first, second)
}

/// Photon statistics of a Standard- or Polaron-frame state; `beta = g/ω_c`.
pub fn photon_moments(state: &QuantumState, beta: f64) -> Result<PhotonMoments> {
    let (std_shift, pol_shift): (Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) = match state.descriptor.frame {
        Frame::Standard => (Box::new(|_| 0.0), Box::new(move |m| -beta * m)),
        Frame::Polaron => (Box::new(move |m| beta * m), Box::new(|_| 0.0)),
        f => return Err(Error::WrongFrame(f.to_string())),
    };
    let (n1, n2) = shifted_number_moments(state, std_shift);
    let (p1, p2) = shifted_number_moments(state, pol_shift);
    for v in [n1, p1] {
        assert!(v >= -1e-10, "negative photon number {v}");
    }
    Ok(PhotonMoments {
        number: n1.max(0.0),
        fluct_number: variance(n1, n2),
        polaron_number: p1.max(0.0),
        fluct_polaron_number: variance(p1, p2),
    })
}

pub fn photon_number(state: &QuantumState, beta: f64) -> Result<f64> {
    Ok(photon_moments(state, beta)?.number)
}

pub fn photon_fluctuations(state: &QuantumState, beta: f64) -> Result<f64> {
    Ok(photon_moments(state, beta)?.fluct_number)
}

pub fn polaron_photon_number(state: &QuantumState, beta: f64) -> Result<f64> {
    Ok(photon_moments(state, beta)?.polaron_number)
}

/// `⟨S²⟩ = ⟨S_x²⟩ + N/2 + Σ_{i<j} ⟨exchange of antiparallel i, j⟩`.
pub fn total_spin(state: &QuantumState) -> f64 {
    let d = &state.descriptor;
    let ns = d.n_spin_states();
    let n_ph = state.amplitudes.len() / ns;
    let n = d.n_sites;
    let mask = d.all_up_mask();
    let psi = &state.amplitudes;
    let mut sx2 = 0.0;
    let mut exchange = 0.0;
    for slot in 0..ns {
        let s = d.spin_config(slot);
        let m = 0.5 * twice_sx(s, n) as f64;
        let mut partners: Vec<usize> = Vec::new();
        let mut ups = s;
        while ups != 0 {
            let i = ups.trailing_zeros();
            ups &= ups - 1;
            let mut downs = !s & mask;
            while downs != 0 {
                let j = downs.trailing_zeros();
                downs &= downs - 1;
                if let Some(t) = d.slot_of(s ^ (1 << i) ^ (1 << j)) {
                    partners.push(t);
                }
            }
        }
        for ph in 0..n_ph {
            let a = psi[ph * ns + slot];
            if a == 0.0 {
                continue;
            }
            sx2 += m * m * a * a;
            exchange += partners.iter().map(|&t| a * psi[ph * ns + t]).sum::<f64>();
        }
    }
    sx2 + 0.5 * n as f64 + exchange
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramKind {
    PolarizationSx,
    PhotonNumber,
    Complex3sl,
}

/// Weights over bin centres. One axis for 1D kinds; for the complex 3SL kind
/// `axes = [re centres, im centres]` and `weights[iy * nx + ix]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub kind: HistogramKind,
    pub axes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Probability outside the binned range (photon tails beyond the output cutoff).
    pub outside: f64,
}

impl Histogram {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ x^k P(x)` for 1D histograms.
    pub fn moment(&self, k: i32) -> f64 {
        self.axes[0].iter().zip(&self.weights).map(|(x, w)| x.powi(k) * w).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.axes.len() {
            1 => {
                let name = match self.kind {
                    HistogramKind::PolarizationSx => "sx",
                    _ => "n",
                };
                out.push_str(&format!("{name},weight\n"));
                for (x, w) in self.axes[0].iter().zip(&self.weights) {
                    out.push_str(&format!("{x},{w:.17e}\n"));
                }
            }
            _ => {
                out.push_str("re,im,weight\n");
                let nx = self.axes[0].len();
                for (iy, y) in self.axes[1].iter().enumerate() {
                    for (ix, x) in self.axes[0].iter().enumerate() {
                        out.push_str(&format!("{x:.6},{y:.6},{:.17e}\n", self.weights[iy * nx + ix]));
                    }
                }
            }
        }
        out
    }

    /// Local maxima of a 2D histogram holding at least `rel` of the global maximum,
    /// strongest first.
    pub fn peaks(&self, rel: f64) -> Vec<Peak> {
        if self.axes.len() != 2 {
            return Vec::new();
        }
        let (nx, ny) = (self.axes[0].len(), self.axes[1].len());
        let wmax = self.weights.iter().cloned().fold(0.0, f64::max);
        let mut out = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let w = self.weights[iy * nx + ix];
                if w <= 0.0 || w < rel * wmax {
                    continue;
                }
                let mut is_max = true;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (x, y) = (ix as i64 + dx, iy as i64 + dy);
                        if (dx, dy) == (0, 0) || x < 0 || y < 0 || x >= nx as i64 || y >= ny as i64 {
                            continue;
                        }
                        let v = self.weights[y as usize * nx + x as usize];
                        // ties resolved towards the lower index
                        if v > w || (v == w && (y, x) < (iy as i64, ix as i64)) {
                            is_max = false;
                        }
                    }
                }
                if is_max {
                    let (x, y) = (self.axes[0][ix], self.axes[1][iy]);
                    out.push(Peak {
                        re: x,
                        im: y,
                        radius: x.hypot(y),
                        theta: y.atan2(x).rem_euclid(2.0 * PI),
                        weight: w,
                    });
                }
            }
        }
        out.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        out
    }

    /// Bin width of the first axis.
    pub fn bin_width(&self) -> f64 {
        let a = &self.axes[0];
        if a.len() < 2 {
            1.0
        } else {
            a[1] - a[0]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub re: f64,
    pub im: f64,
    pub radius: f64,
    /// Angle in `[0, 2π)`.
    pub theta: f64,
    pub weight: f64,
}

/// Distribution of S_x over `-N/2, ..., N/2`.
pub fn polarization_histogram(state: &QuantumState) -> Histogram {
    let n = state.n_sites();
    let marginal = spin_marginal(state);
    let mut w = vec![0.0; n + 1];
    for (s, p) in weighted_configs(state, &marginal) {
        w[s.count_ones() as usize] += p;
    }
    Histogram {
        kind: HistogramKind::PolarizationSx,
        axes: vec![(0..=n).map(|k| k as f64 - 0.5 * n as f64).collect()],
        weights: w,
        outside: 0.0,
    }
}

/// Distribution of the standard-frame photon number. Polaron-frame states
/// are displaced back per S_x sector onto `0..=n_out` (default: the larger
/// of the state's cutoff and `max (β S_x)² + 12 β |S_x| + 24`).
pub fn photon_histogram(state: &QuantumState, beta: f64, n_out: Option<usize>) -> Result<Histogram> {
    let d = &state.descriptor;
    let ns = d.n_spin_states();
    let nmax = d.n_ph_max;
    let psi = &state.amplitudes;
    match d.frame {
        Frame::Standard => {
            let mut w = vec![0.0; nmax + 1];
            for (i, a) in psi.iter().enumerate() {
                w[i / ns] += a * a;
            }
            Ok(Histogram {
                kind: HistogramKind::PhotonNumber,
                axes: vec![(0..=nmax).map(|n| n as f64).collect()],
                weights: w,
                outside: 0.0,
            })
        }
        Frame::Polaron => {
            let half_n = 0.5 * d.n_sites as f64;
            let reach = beta.abs() * half_n;
            let n_out = n_out.unwrap_or_else(|| nmax.max((reach * reach + 12.0 * reach + 24.0).ceil() as usize));
            let size = n_out.max(nmax);
            let mut w = vec![0.0; n_out + 1];
            let mut by_sx: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
            for slot in 0..ns {
                by_sx.entry(twice_sx(d.spin_config(slot), d.n_sites)).or_default().push(slot);
            }
            let mut col = vec![0.0; nmax + 1];
            for (twice, slots) in by_sx {
                // standard-frame column = D(-β S_x) · polaron column
                let disp = displacement_elements(-beta * 0.5 * twice as f64, size);
                for slot in slots {
                    for (n, c) in col.iter_mut().enumerate() {
                        *c = psi[n * ns + slot];
                    }
                    for (m, wm) in w.iter_mut().enumerate() {
                        let amp: f64 = (0..=nmax).map(|n| disp[(m, n)] * col[n]).sum();
                        *wm += amp * amp;
                    }
                }
            }
            let total: f64 = w.iter().sum();
            Ok(Histogram {
                kind: HistogramKind::PhotonNumber,
                axes: vec![(0..=n_out).map(|n| n as f64).collect()],
                weights: w,
                outside: (1.0 - total).max(0.0),
            })
        }
        f => Err(Error::WrongFrame(f.to_string())),
    }
}

/// Distribution of `p̂ = Σ_I (2 p_I / N_I) e^{iφ_I}`, the 3SL order parameter
/// with each sublattice polarization normalized to `[-1, 1]`, on a
/// `bins × bins` grid over `[-2, 2]²`.
pub fn complex_3sl_histogram(state: &QuantumState, cluster: &LatticeCluster, bins: usize) -> Result<Histogram> {
    check_cluster(state, cluster)?;
    if cluster.geometry != Geometry::Triangular {
        return Err(Error::WrongGeometry);
    }
    if bins == 0 {
        return Err(Error::Config("histogram needs at least one bin".into()));
    }
    let sizes = cluster.sublattice_sizes();
    let weight_of: Vec<(f64, f64)> = cluster
        .sublattice_of
        .iter()
        .map(|&c| {
            let a = -4.0 * PI * c as f64 / 3.0;
            let scale = 1.0 / sizes[c] as f64;
            (scale * a.cos(), scale * a.sin())
        })
        .collect();
    let width = 2.0 * P3SL_EXTENT / bins as f64;
    let centres: Vec<f64> = (0..bins).map(|i| -P3SL_EXTENT + (i as f64 + 0.5) * width).collect();
    let index = |v: f64| (((v + P3SL_EXTENT) / width).floor() as i64).clamp(0, bins as i64 - 1) as usize;
    let marginal = spin_marginal(state);
    let mut w = vec![0.0; bins * bins];
    for (s, p) in weighted_configs(state, &marginal) {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, &(c, sn)) in weight_of.iter().enumerate() {
            let sg = if (s >> i) & 1 == 1 { 1.0 } else { -1.0 };
            re += c * sg;
            im += sn * sg;
        }
        // snap values within roundoff of a bin edge to the same side every time
        let (re, im) = (round_fine(re), round_fine(im));
        w[index(im) * bins + index(re)] += p;
    }
    Ok(Histogram {
        kind: HistogramKind::Complex3sl,
        axes: vec![centres.clone(), centres],
        weights: w,
        outside: 0.0,
    })
}

fn round_fine(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

/// Measurements on one ground level, averaged over the states passed in
/// (both sector states of a degenerate doublet).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSet {
    pub energy: f64,
    pub n_sites: usize,
    pub photon_number: Option<f64>,
    pub polaron_photon_number: Option<f64>,
    pub fluct_photon: Option<f64>,
    pub corr_ferro: Option<f64>,
    pub corr_stag: Option<f64>,
    pub corr_3sl: Option<f64>,
    pub fluct_p: f64,
    pub fluct_abs_p: f64,
    pub fluct_p_stag: Option<f64>,
    pub fluct_abs_p_stag: Option<f64>,
    pub fluct_abs_p3sl: Option<f64>,
    pub sx_abs: f64,
    pub sx2: f64,
    pub total_spin: f64,
    /// Largest deviation between reference-averaged and fixed-site structure factors.
    pub fixed_site_deviation: Option<f64>,
    pub n_states: usize,
}

impl ObservableSet {
    /// Column names for tabular output, in [`ObservableSet::values`] order.
    pub const COLUMNS: [&'static str; 17] = [
        "energy",
        "photon_number",
        "polaron_photon_number",
        "fluct_photon",
        "corr_ferro",
        "corr_stag",
        "corr_3sl",
        "fluct_p",
        "fluct_abs_p",
        "fluct_p_stag",
        "fluct_abs_p_stag",
        "fluct_abs_p3sl",
        "sx_abs",
        "sx2",
        "total_spin",
        "fixed_site_deviation",
        "n_states",
    ];

    pub fn values(&self) -> Vec<Option<f64>> {
        vec![
            Some(self.energy),
            self.photon_number,
            self.polaron_photon_number,
            self.fluct_photon,
            self.corr_ferro,
            self.corr_stag,
            self.corr_3sl,
            Some(self.fluct_p),
            Some(self.fluct_abs_p),
            self.fluct_p_stag,
            self.fluct_abs_p_stag,
            self.fluct_abs_p3sl,
            Some(self.sx_abs),
            Some(self.sx2),
            Some(self.total_spin),
            self.fixed_site_deviation,
            Some(self.n_states as f64),
        ]
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        Self::COLUMNS
            .iter()
            .position(|c| *c == column)
            .and_then(|i| self.values()[i])
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }
}

/// Photon-number convention for spin-only states, which stand for
/// `U† (|spin⟩ ⊗ |0⟩_polaron)`: `⟨a†a⟩ = β²⟨S_x²⟩`, polaron number zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhotonContext {
    /// Photon observables unavailable (OBD manifold states).
    None,
    /// `β = g/ω_c` of the model that produced the state.
    Beta(f64),
}

/// Full measurement; `beta` is needed for polaron-frame and spin-only photon numbers.
pub fn measure(states: &[&QuantumState], cluster: &LatticeCluster, energy: f64, photons: PhotonContext) -> Result<ObservableSet> {
    if states.is_empty() {
        return Err(Error::Config("no states to measure".into()));
    }
    let k = states.len() as f64;
    let mut acc: Option<ObservableSet> = None;
    for state in states {
        let m = order_moments(state, cluster)?;
        let corr = if cluster.momenta.is_empty() {
            None
        } else {
            Some(order_correlations(state, cluster)?)
        };
        let (photon_number, polaron_photon_number, fluct_photon) = match (state.descriptor.frame, photons) {
            (Frame::Standard | Frame::Polaron, PhotonContext::Beta(beta)) => {
                let pm = photon_moments(state, beta)?;
                (Some(pm.number), Some(pm.polaron_number), Some(pm.fluct_number))
            }
            (Frame::Standard, PhotonContext::None) => {
                let pm = photon_moments(state, 0.0)?;
                (Some(pm.number), None, Some(pm.fluct_number))
            }
            (Frame::SpinOnly, PhotonContext::Beta(beta)) => (Some(beta * beta * m.p2), Some(0.0), None),
            _ => (None, None, None),
        };
        let one = ObservableSet {
            energy,
            n_sites: cluster.n_sites(),
            photon_number,
            polaron_photon_number,
            fluct_photon,
            corr_ferro: corr.map(|c| c.ferro),
            corr_stag: corr.and_then(|c| c.stag),
            corr_3sl: corr.and_then(|c| c.three_sl),
            fluct_p: variance(m.p, m.p2),
            fluct_abs_p: variance(m.abs_p, m.p2),
            fluct_p_stag: m.p_stag.map(|v| variance(v, m.p_stag2.unwrap())),
            fluct_abs_p_stag: m.abs_p_stag.map(|v| variance(v, m.p_stag2.unwrap())),
            fluct_abs_p3sl: m.abs_p3sl.map(|v| variance(v, m.abs_p3sl2.unwrap())),
            sx_abs: m.abs_p,
            sx2: m.p2,
            total_spin: total_spin(state),
            fixed_site_deviation: corr.map(|c| c.fixed_site_deviation),
            n_states: states.len(),
        };
        acc = Some(match acc {
            None => one,
            Some(a) => add_sets(a, one),
        });
    }
    let mut a = acc.unwrap();
    scale_set(&mut a, 1.0 / k);
    a.energy = energy;
    a.n_states = states.len();
    Ok(a)
}

fn add_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    a.zip(b).map(|(x, y)| x + y)
}

fn add_sets(a: ObservableSet, b: ObservableSet) -> ObservableSet {
    ObservableSet {
        energy: a.energy,
        n_sites: a.n_sites,
        photon_number: add_opt(a.photon_number, b.photon_number),
        polaron_photon_number: add_opt(a.polaron_photon_number, b.polaron_photon_number),
        fluct_photon: add_opt(a.fluct_photon, b.fluct_photon),
        corr_ferro: add_opt(a.corr_ferro, b.corr_ferro),
        corr_stag: add_opt(a.corr_stag, b.corr_stag),
        corr_3sl: add_opt(a.corr_3sl, b.corr_3sl),
        fluct_p: a.fluct_p + b.fluct_p,
        fluct_abs_p: a.fluct_abs_p + b.fluct_abs_p,
        fluct_p_stag: add_opt(a.fluct_p_stag, b.fluct_p_stag),
        fluct_abs_p_stag: add_opt(a.fluct_abs_p_stag, b.fluct_abs_p_stag),
        fluct_abs_p3sl: add_opt(a.fluct_abs_p3sl, b.fluct_abs_p3sl),
        sx_abs: a.sx_abs + b.sx_abs,
        sx2: a.sx2 + b.sx2,
        total_spin: a.total_spin + b.total_spin,
        fixed_site_deviation: a.fixed_site_deviation.zip(b.fixed_site_deviation).map(|(x, y)| x.max(y)),
        n_states: a.n_states,
    }
}

fn scale_set(a: &mut ObservableSet, s: f64) {
    for v in [
        &mut a.photon_number,
        &mut a.polaron_photon_number,
        &mut a.fluct_photon,
        &mut a.corr_ferro,
        &mut a.corr_stag,
        &mut a.corr_3sl,
        &mut a.fluct_p_stag,
        &mut a.fluct_abs_p_stag,
        &mut a.fluct_abs_p3sl,
    ] {
        if let Some(x) = v.as_mut() {
            *x *= s;
        }
    }
    a.fluct_p *= s;
    a.fluct_abs_p *= s;
    a.sx_abs *= s;
    a.sx2 *= s;
    a.total_spin *= s;
}

#[cfg(test)]
mod tests;
