use super::{bond_sum, ModelParams};
use crate::hilbert::{twice_sx, BasisDescriptor};
use crate::linop::for_each_chunk;

/// Standard-frame cavity Hamiltonian. Everything except the photon ladder
/// and the spin flips from ω_d S_z is diagonal and precomputed per spin configuration.
pub(super) struct FullEngine {
    omega_c: f64,
    half_omega_d: f64,
    g: f64,
    n_sites: usize,
    /// (g²/ω_c) S_x² + Σ (J/4) σσ
    spin_diag: Vec<f64>,
    /// S_x per configuration
    sx: Vec<f64>,
}

impl FullEngine {
    pub(super) fn new(p: &ModelParams) -> Self {
        let n = p.n_sites();
        let bonds = &p.cluster.bonds;
        let depol = p.g * p.g / p.omega_c;
        let mut spin_diag = Vec::with_capacity(1 << n);
        let mut sx = Vec::with_capacity(1 << n);
        for s in 0..(1u64 << n) {
            let m = 0.5 * twice_sx(s, n) as f64;
            sx.push(m);
            spin_diag.push(depol * m * m + 0.25 * p.j * bond_sum(s, bonds) as f64);
        }
        FullEngine {
            omega_c: p.omega_c,
            half_omega_d: 0.5 * p.omega_d,
            g: p.g,
            n_sites: n,
            spin_diag,
            sx,
        }
    }

    pub(super) fn apply(&self, desc: &BasisDescriptor, x: &[f64], y: &mut [f64]) {
        let ns = 1usize << self.n_sites;
        let n_max = desc.n_ph_max;
        let chunk = ns.min(4096);
        for_each_chunk(y, chunk, |c, out| {
            let start = c * chunk;
            for (k, o) in out.iter_mut().enumerate() {
                let idx = start + k;
                let n = idx / ns;
                let s = idx % ns;
                let mut acc = (self.omega_c * n as f64 + self.spin_diag[s]) * x[idx];
                let coupling = self.g * self.sx[s];
                if coupling != 0.0 {
                    if n > 0 {
                        acc += coupling * (n as f64).sqrt() * x[idx - ns];
                    }
                    if n < n_max {
                        acc += coupling * ((n + 1) as f64).sqrt() * x[idx + ns];
                    }
                }
                if self.half_omega_d != 0.0 {
                    let base = idx - s;
                    let mut flips = 0.0;
                    for i in 0..self.n_sites {
                        flips += x[base + (s ^ (1 << i))];
                    }
                    acc += self.half_omega_d * flips;
                }
                *o = acc;
            }
        });
    }
}
