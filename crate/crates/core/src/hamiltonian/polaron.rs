use nalgebra::DMatrix;

use super::{bond_sum, displacement_elements, ModelParams};
use crate::hilbert::BasisDescriptor;
use crate::linop::for_each_chunk;

/// Polaron-frame Hamiltonian. A flip of spin `i` changes S_x by ∓1 and is
/// dressed by the photon displacement `D(±β)`, so each spin flip couples all
/// photon levels ("dense photonic" blocks).
pub(super) struct PolaronEngine {
    omega_c: f64,
    half_omega_d: f64,
    n_sites: usize,
    ising: Vec<f64>,
    /// Row-major `D(β)` and `D(-β)`.
    d_plus: Vec<f64>,
    d_minus: Vec<f64>,
    n_ph_max: usize,
}

impl PolaronEngine {
    pub(super) fn new(p: &ModelParams) -> Self {
        let n = p.n_sites();
        let ising = (0..(1u64 << n))
            .map(|s| 0.25 * p.j * bond_sum(s, &p.cluster.bonds) as f64)
            .collect();
        let beta = p.beta();
        PolaronEngine {
            omega_c: p.omega_c,
            half_omega_d: 0.5 * p.omega_d,
            n_sites: n,
            ising,
            d_plus: row_major(&displacement_elements(beta, p.n_ph_max)),
            d_minus: row_major(&displacement_elements(-beta, p.n_ph_max)),
            n_ph_max: p.n_ph_max,
        }
    }

    pub(super) fn apply(&self, desc: &BasisDescriptor, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(desc.n_ph_max, self.n_ph_max);
        let ns = 1usize << self.n_sites;
        let np = self.n_ph_max + 1;

        // Work spin-major so each photon column is contiguous.
        let mut xt = vec![0.0; x.len()];
        for n in 0..np {
            for s in 0..ns {
                xt[s * np + n] = x[n * ns + s];
            }
        }
        let mut yt = vec![0.0; x.len()];
        for_each_chunk(&mut yt, np, |s, out| {
            for (m, o) in out.iter_mut().enumerate() {
                *o = (self.omega_c * m as f64 + self.ising[s]) * xt[s * np + m];
            }
            if self.half_omega_d == 0.0 {
                return;
            }
            for i in 0..self.n_sites {
                let src = s ^ (1 << i);
                let col = &xt[src * np..(src + 1) * np];
                // <m,s| U S_z U† |n,src> = D(β (S_x(s) - S_x(src)))[m, n] / 2
                let d = if (s >> i) & 1 == 1 { &self.d_plus } else { &self.d_minus };
                for (row, o) in d.chunks_exact(np).zip(out.iter_mut()) {
                    let acc: f64 = row.iter().zip(col).map(|(a, b)| a * b).sum();
                    *o += self.half_omega_d * acc;
                }
            }
        });
        for n in 0..np {
            for s in 0..ns {
                y[n * ns + s] = yt[s * np + n];
            }
        }
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}
