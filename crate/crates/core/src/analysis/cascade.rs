use serde::Serialize;

use crate::eigensolver::{solve, LanczosConfig, DEGENERACY_TOL};
use crate::error::{Error, Result};
use crate::hamiltonian::{obd_sx_max, HamiltonianOp, ModelParams, SpinOverrides};
use crate::hilbert::{HalfInt, Parity};
use crate::lattice::{Geometry, LatticeCluster};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeRow {
    pub jc_over_j: f64,
    /// Largest |S_x| among the degenerate ground sectors.
    pub sx: HalfInt,
    pub energy: f64,
    /// Lowest energy per sector `S_x >= 0`; empty at the OBD endpoint, where
    /// the energies are those of the projected operator.
    pub sector_minima: Vec<(HalfInt, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeStep {
    /// Grid interval containing the level crossing.
    pub between: (f64, f64),
    pub from: HalfInt,
    pub to: HalfInt,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cascade {
    pub n_sites: usize,
    pub rows: Vec<CascadeRow>,
    pub steps: Vec<CascadeStep>,
    pub monotone: bool,
}

impl Cascade {
    pub fn csv_header(&self) -> Vec<String> {
        ["Jc_over_J", "sx", "energy"].map(String::from).to_vec()
    }

    pub fn csv_records(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| vec![r.jc_over_j.to_string(), r.sx.to_string(), format!("{:.12e}", r.energy)])
            .collect()
    }
}

/// Ground S_x sector of the effective spin model with `h_z = 0`, `J = 1`
/// across `jc_over_j` (ascending, non-negative). A zero entry is evaluated
/// with the projected order-by-disorder operator, the limit `J_c/J → 0⁺`.
pub fn obd_cascade(cluster: &LatticeCluster, jc_over_j: &[f64], cfg: &LanczosConfig) -> Result<Cascade> {
    if cluster.geometry != Geometry::Triangular {
        return Err(Error::WrongGeometry);
    }
    if jc_over_j.windows(2).any(|w| !(w[0] < w[1])) || jc_over_j.iter().any(|&r| !(r >= 0.0)) {
        return Err(Error::Config("J_c/J grid must be ascending and non-negative".into()));
    }
    let n = cluster.n_sites();
    let params = ModelParams::new(cluster.clone(), 0.0, 1.0, 1.0, 0);
    let mut rows = Vec::with_capacity(jc_over_j.len());
    for &r in jc_over_j {
        if r == 0.0 {
            let obd = obd_sx_max(cluster)?;
            rows.push(CascadeRow {
                jc_over_j: 0.0,
                sx: obd.sx_max_value(),
                energy: obd.ground_energy,
                sector_minima: Vec::new(),
            });
            continue;
        }
        let overrides = SpinOverrides {
            h_z: Some(0.0),
            j_c: Some(r),
        };
        let mut minima = Vec::new();
        for twice in (0..=n as i64).filter(|t| (t + n as i64) % 2 == 0) {
            let op = HamiltonianOp::build_effective_spin_sector(&params, overrides, twice)?;
            let e = solve(&op, Parity::Both, cfg)?.ground_energy();
            minima.push((HalfInt(twice), e));
        }
        let energy = minima.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
        let sx = minima
            .iter()
            .filter(|m| m.1 - energy <= DEGENERACY_TOL * energy.abs().max(1.0))
            .map(|m| m.0)
            .max()
            .expect("at least one sector");
        rows.push(CascadeRow {
            jc_over_j: r,
            sx,
            energy,
            sector_minima: minima,
        });
    }
    let steps: Vec<CascadeStep> = rows
        .windows(2)
        .filter(|w| w[0].sx != w[1].sx)
        .map(|w| CascadeStep {
            between: (w[0].jc_over_j, w[1].jc_over_j),
            from: w[0].sx,
            to: w[1].sx,
        })
        .collect();
    let monotone = steps.iter().all(|s| s.to < s.from);
    Ok(Cascade {
        n_sites: n,
        rows,
        steps,
        monotone,
    })
}
