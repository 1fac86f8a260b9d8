use serde::{Deserialize, Serialize};

use crate::eigensolver::{solve_both_parities, LanczosConfig, ParitySolution};
use crate::error::Result;
use crate::hamiltonian::{HamiltonianOp, ModelKind, ModelParams, SpinOverrides};
use crate::hilbert::Parity;
use crate::lattice::LatticeCluster;
use crate::observables::{measure, ObservableSet, PhotonContext};

/// Physical parameters of one point, in units of ω_c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointParams {
    pub omega_d: f64,
    pub g: f64,
    pub j: f64,
    /// Effective-model transverse field; `ω_d e^{-g²/2}` when absent.
    #[serde(default)]
    pub h_z: Option<f64>,
    /// Effective-model collective coupling; `ω_d²/2g²` when absent.
    #[serde(default)]
    pub j_c: Option<f64>,
}

impl PointParams {
    pub fn model(&self, cluster: &LatticeCluster, n_ph_max: usize) -> ModelParams {
        ModelParams::new(cluster.clone(), self.omega_d, self.g, self.j, n_ph_max)
    }

    pub fn overrides(&self) -> SpinOverrides {
        SpinOverrides {
            h_z: self.h_z,
            j_c: self.j_c,
        }
    }
}

/// Ground-state record of one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSolution {
    pub observables: ObservableSet,
    pub ground_sector: Parity,
    pub even_energy: f64,
    pub odd_energy: f64,
    /// `E_odd - E_even`.
    pub gap: f64,
    pub degenerate: bool,
    pub iterations: usize,
    pub method: String,
    pub n_ph_max: usize,
    pub dim: usize,
}

/// Solves both parity sectors and measures the ground level (both sector
/// states when they are degenerate).
pub fn ground_point(
    kind: ModelKind,
    params: &ModelParams,
    overrides: SpinOverrides,
    cfg: &LanczosConfig,
) -> Result<(PointSolution, ParitySolution)> {
    let op = HamiltonianOp::build(kind, params, overrides)?;
    let sol = solve_both_parities(&op, cfg)?;
    let photons = match kind {
        ModelKind::Obd => PhotonContext::None,
        _ => PhotonContext::Beta(params.beta()),
    };
    let observables = measure(&sol.ground_states(), &params.cluster, sol.ground_energy(), photons)?;
    let point = PointSolution {
        observables,
        ground_sector: sol.ground_sector,
        even_energy: sol.even.ground_energy(),
        odd_energy: sol.odd.ground_energy(),
        gap: sol.gap,
        degenerate: sol.is_degenerate(),
        iterations: sol.even.iterations + sol.odd.iterations,
        method: sol.ground().method.to_string(),
        n_ph_max: op.descriptor.n_ph_max,
        dim: op.descriptor.dim(),
    };
    Ok((point, sol))
}
