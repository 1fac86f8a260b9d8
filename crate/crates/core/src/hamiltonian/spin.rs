use super::bond_sum;
use crate::hilbert::BasisDescriptor;
use crate::lattice::LatticeCluster;
use crate::linop::for_each_chunk;

/// Effective spin model. In the σ_x encoding `S² - S_x² = S_y² + S_z²` equals
/// `N/2 + Σ_{i<j}` (exchange of antiparallel spins i, j), which is real and
/// conserves S_x; `S_z` flips single spins.
pub(super) struct SpinEngine {
    n_sites: usize,
    half_hz: f64,
    j_c: f64,
    diag: Vec<f64>,
}

impl SpinEngine {
    pub(super) fn new(
        cluster: &LatticeCluster,
        j: f64,
        h_z: f64,
        j_c: f64,
        desc: &BasisDescriptor,
    ) -> Self {
        let n = cluster.n_sites();
        let diag = (0..desc.n_spin_states())
            .map(|slot| {
                let s = desc.spin_config(slot);
                0.25 * j * bond_sum(s, &cluster.bonds) as f64 - j_c * 0.5 * n as f64
            })
            .collect();
        SpinEngine {
            n_sites: n,
            half_hz: 0.5 * h_z,
            j_c,
            diag,
        }
    }

    pub(super) fn apply(&self, desc: &BasisDescriptor, x: &[f64], y: &mut [f64]) {
        let mask = desc.all_up_mask();
        let chunk = 1024;
        for_each_chunk(y, chunk, |c, out| {
            for (k, o) in out.iter_mut().enumerate() {
                let slot = c * chunk + k;
                let s = desc.spin_config(slot);
                let mut acc = self.diag[slot] * x[slot];
                if self.half_hz != 0.0 {
                    let mut flips = 0.0;
                    for i in 0..self.n_sites {
                        if let Some(t) = desc.slot_of(s ^ (1 << i)) {
                            flips += x[t];
                        }
                    }
                    acc += self.half_hz * flips;
                }
                if self.j_c != 0.0 {
                    let mut swaps = 0.0;
                    let mut ups = s;
                    while ups != 0 {
                        let i = ups.trailing_zeros();
                        ups &= ups - 1;
                        let mut downs = !s & mask;
                        while downs != 0 {
                            let j = downs.trailing_zeros();
                            downs &= downs - 1;
                            if let Some(t) = desc.slot_of(s ^ (1 << i) ^ (1 << j)) {
                                swaps += x[t];
                            }
                        }
                    }
                    acc -= self.j_c * swaps;
                }
                *o = acc;
            }
        });
    }
}
