//! Classical ground manifold of the triangular Ising antiferromagnet and the
//! collective-coupling operator projected onto it.

use serde::Serialize;

use super::{bond_sum, HamiltonianOp};
use crate::eigensolver::{dense_solve_with_budget, lanczos_ground, LanczosConfig};
use crate::error::{Error, Result};
use crate::hilbert::{twice_sx, BasisDescriptor, HalfInt};
use crate::lattice::{Geometry, LatticeCluster};
use crate::linop::for_each_chunk;

pub const DEFAULT_MANIFOLD_BUDGET: usize = 1 << 24;

/// Largest cluster enumerated by brute force in [`ManifoldMethod::Auto`].
pub const EXHAUSTIVE_MAX_SITES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldMethod {
    /// Scan all 2^N configurations for the minimum of Σ_bonds σσ.
    Exhaustive,
    /// Depth-first assignment rejecting any completed triangle with three equal spins.
    Search,
    Auto,
}

/// Sorted configurations minimizing `Σ_bonds σ_x σ_x` on a triangular cluster.
pub fn enumerate_manifold(
    cluster: &LatticeCluster,
    method: ManifoldMethod,
    budget: usize,
) -> Result<Vec<u64>> {
    if cluster.geometry != Geometry::Triangular || !cluster.periodic {
        return Err(Error::WrongGeometry);
    }
    let n = cluster.n_sites();
    let method = match method {
        ManifoldMethod::Auto if n <= EXHAUSTIVE_MAX_SITES => ManifoldMethod::Exhaustive,
        ManifoldMethod::Auto => ManifoldMethod::Search,
        m => m,
    };
    let mut configs = match method {
        ManifoldMethod::Exhaustive => exhaustive(cluster, budget)?,
        _ => search(cluster, budget)?,
    };
    configs.sort_unstable();
    Ok(configs)
}

fn exhaustive(cluster: &LatticeCluster, budget: usize) -> Result<Vec<u64>> {
    let n = cluster.n_sites();
    if n > 30 {
        return Err(Error::Config(format!("exhaustive enumeration of 2^{n} states refused")));
    }
    let mut best = i64::MAX;
    let mut out = Vec::new();
    for s in 0..(1u64 << n) {
        let e = bond_sum(s, &cluster.bonds);
        if e < best {
            best = e;
            out.clear();
        }
        if e == best {
            out.push(s);
            if out.len() > budget {
                return Err(Error::ManifoldOverflow { budget });
            }
        }
    }
    Ok(out)
}

fn search(cluster: &LatticeCluster, budget: usize) -> Result<Vec<u64>> {
    let n = cluster.n_sites();
    if n > 64 {
        return Err(Error::Config("at most 64 sites fit a configuration word".into()));
    }
    let mut closing: Vec<Vec<u64>> = vec![Vec::new(); n];
    for t in cluster.triangles()? {
        let last = *t.iter().max().unwrap();
        closing[last].push(t.iter().fold(0u64, |m, &i| m | (1 << i)));
    }
    let mut out = Vec::new();
    let mut stack: Vec<(usize, u64)> = vec![(0, 0)];
    while let Some((k, config)) = stack.pop() {
        if k == n {
            out.push(config);
            if out.len() > budget {
                return Err(Error::ManifoldOverflow { budget });
            }
            continue;
        }
        for bit in [1u64, 0] {
            let c = config | (bit << k);
            let ok = closing[k].iter().all(|&tri| {
                let up = c & tri;
                up != 0 && up != tri
            });
            if ok {
                stack.push((k + 1, c));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::RejectedCell("no configuration satisfies every triangle".into()));
    }
    Ok(out)
}

/// `-(N/2) - A` where `A` is the adjacency of manifold states connected by
/// the exchange of two antiparallel spins.
pub(super) struct ObdEngine {
    half_n: f64,
    offsets: Vec<usize>,
    cols: Vec<u32>,
}

impl ObdEngine {
    pub(super) fn new(cluster: &LatticeCluster, desc: &BasisDescriptor) -> Result<Self> {
        if cluster.geometry != Geometry::Triangular {
            return Err(Error::WrongGeometry);
        }
        let n = cluster.n_sites();
        let dim = desc.n_spin_states();
        if dim > u32::MAX as usize {
            return Err(Error::ManifoldOverflow { budget: u32::MAX as usize });
        }
        let nb = cluster.neighbours();
        let nb_mask: Vec<u64> = nb
            .iter()
            .map(|l| l.iter().fold(0u64, |m, &j| m | (1 << j)))
            .collect();

        let mut offsets = Vec::with_capacity(dim + 1);
        let mut cols: Vec<u32> = Vec::new();
        offsets.push(0);
        let mut field = vec![0i32; n];
        let mut row: Vec<u32> = Vec::new();
        for slot in 0..dim {
            let s = desc.spin_config(slot);
            for i in 0..n {
                let bi = (s >> i) & 1;
                field[i] = nb[i]
                    .iter()
                    .map(|&j| if (s >> j) & 1 == bi { 1 } else { -1 })
                    .sum();
            }
            row.clear();
            let mut push = |t: u64| {
                if let Some(c) = desc.slot_of(t) {
                    row.push(c as u32);
                }
            };
            // Zero-cost exchange of two non-adjacent spins needs both to be free
            // (vanishing local field); adjacent pairs need h_i + h_j = -2.
            let free: Vec<usize> = (0..n).filter(|&i| field[i] == 0).collect();
            for (a, &i) in free.iter().enumerate() {
                for &j in &free[a + 1..] {
                    if ((s >> i) ^ (s >> j)) & 1 == 1 && nb_mask[i] & (1 << j) == 0 {
                        push(s ^ (1 << i) ^ (1 << j));
                    }
                }
            }
            for &(i, j) in &cluster.bonds {
                if ((s >> i) ^ (s >> j)) & 1 == 1 && field[i] + field[j] == -2 {
                    push(s ^ (1 << i) ^ (1 << j));
                }
            }
            row.sort_unstable();
            cols.extend_from_slice(&row);
            offsets.push(cols.len());
        }
        Ok(ObdEngine {
            half_n: 0.5 * n as f64,
            offsets,
            cols,
        })
    }

    pub(super) fn apply(&self, x: &[f64], y: &mut [f64]) {
        let chunk = 4096;
        for_each_chunk(y, chunk, |c, out| {
            for (k, o) in out.iter_mut().enumerate() {
                let r = c * chunk + k;
                let sum: f64 = self.cols[self.offsets[r]..self.offsets[r + 1]]
                    .iter()
                    .map(|&j| x[j as usize])
                    .sum();
                *o = -self.half_n * x[r] - sum;
            }
        });
    }

    #[cfg(test)]
    pub(super) fn nnz(&self) -> usize {
        self.cols.len()
    }
}

/// Per-sector OBD ground levels and the polarization of the global ground level.
#[derive(Debug, Clone, Serialize)]
pub struct ObdSxMax {
    pub n_sites: usize,
    pub manifold_dim: usize,
    /// `(S_x, lowest eigenvalue of H_OBD in that sector, sector dimension)` for S_x >= 0.
    pub sector_minima: Vec<(HalfInt, f64, usize)>,
    pub ground_energy: f64,
    /// Every |S_x| whose sector minimum lies within the degeneracy tolerance of the ground energy.
    pub sx_max: Vec<HalfInt>,
}

impl ObdSxMax {
    /// Largest |S_x| among the degenerate ground sectors.
    pub fn sx_max_value(&self) -> HalfInt {
        *self.sx_max.iter().max().expect("at least one ground sector")
    }
}

pub const DEGENERACY_TOL: f64 = 1e-8;

/// Diagonalizes the projected operator in each S_x >= 0 sector of the manifold.
pub fn obd_sx_max(cluster: &LatticeCluster) -> Result<ObdSxMax> {
    obd_sx_max_with(cluster, DEFAULT_MANIFOLD_BUDGET, &LanczosConfig::default())
}

pub fn obd_sx_max_with(
    cluster: &LatticeCluster,
    budget: usize,
    lanczos: &LanczosConfig,
) -> Result<ObdSxMax> {
    let n = cluster.n_sites();
    let manifold = enumerate_manifold(cluster, ManifoldMethod::Auto, budget)?;
    let manifold_dim = manifold.len();
    let mut by_sector: std::collections::BTreeMap<i64, Vec<u64>> = Default::default();
    for &s in &manifold {
        let t = twice_sx(s, n);
        if t >= 0 {
            by_sector.entry(t).or_default().push(s);
        }
    }
    drop(manifold);

    let mut sector_minima = Vec::new();
    for (twice, configs) in by_sector {
        let dim = configs.len();
        let op = HamiltonianOp::build_obd_on(cluster, configs)?;
        let e0 = if dim <= 1500 {
            dense_solve_with_budget(&op, 1500)?.energies[0]
        } else {
            lanczos_ground(&op, lanczos)?.energies[0]
        };
        sector_minima.push((HalfInt(twice), e0, dim));
    }
    let ground_energy = sector_minima
        .iter()
        .map(|s| s.1)
        .fold(f64::INFINITY, f64::min);
    let sx_max = sector_minima
        .iter()
        .filter(|s| s.1 - ground_energy <= DEGENERACY_TOL * ground_energy.abs().max(1.0))
        .map(|s| s.0)
        .collect();
    Ok(ObdSxMax {
        n_sites: n,
        manifold_dim,
        sector_minima,
        ground_energy,
        sx_max,
    })
}
