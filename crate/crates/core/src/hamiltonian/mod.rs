//! Matrix-free Hamiltonians: the cavity model in the standard and polaron
//! frames, the effective spin model, and the projected order-by-disorder model.

mod displacement;
mod full;
pub mod obd;
mod polaron;
mod spin;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BasisDescriptor, Frame, Parity, DEFAULT_AMPLITUDE_BUDGET};
use crate::lattice::LatticeCluster;
use crate::linop::LinearOperator;

pub use displacement::displacement_elements;
pub use obd::{enumerate_manifold, obd_sx_max, ManifoldMethod, ObdSxMax};

/// Parameters of one Hamiltonian instance. Energies are in units of ω_c.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub omega_c: f64,
    pub omega_d: f64,
    pub g: f64,
    /// Nearest-neighbour Ising coupling, positive for antiferroelectric.
    pub j: f64,
    pub cluster: Arc<LatticeCluster>,
    pub n_ph_max: usize,
}

impl ModelParams {
    /// Parameters with ω_c = 1.
    pub fn new(cluster: LatticeCluster, omega_d: f64, g: f64, j: f64, n_ph_max: usize) -> Self {
        ModelParams {
            omega_c: 1.0,
            omega_d,
            g,
            j,
            cluster: Arc::new(cluster),
            n_ph_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_c > 0.0) {
            return Err(Error::Config("omega_c must be positive".into()));
        }
        if ![self.omega_d, self.g, self.j].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.cluster.n_sites()
    }

    /// Dressed transverse field ω_d exp(-g²/2ω_c²).
    pub fn h_z(&self) -> f64 {
        self.omega_d * (-self.g * self.g / (2.0 * self.omega_c * self.omega_c)).exp()
    }

    /// Cavity-mediated collective coupling ω_d² ω_c / 2g²; infinite at g = 0.
    pub fn j_c(&self) -> f64 {
        self.omega_d * self.omega_d * self.omega_c / (2.0 * self.g * self.g)
    }

    /// Displacement per unit S_x, g/ω_c.
    pub fn beta(&self) -> f64 {
        self.g / self.omega_c
    }

    pub fn with_cutoff(&self, n_ph_max: usize) -> Self {
        ModelParams {
            n_ph_max,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "omega_c": self.omega_c,
            "omega_d": self.omega_d,
            "g": self.g,
            "J": self.j,
            "n_ph_max": self.n_ph_max,
            "h_z": self.h_z(),
            "J_c": self.j_c(),
            "cluster": self.cluster.to_json(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Full,
    Polaron,
    EffectiveSpin,
    Obd,
}

impl ModelKind {
    pub fn frame(self) -> Frame {
        match self {
            ModelKind::Full => Frame::Standard,
            ModelKind::Polaron => Frame::Polaron,
            ModelKind::EffectiveSpin => Frame::SpinOnly,
            ModelKind::Obd => Frame::ObdManifold,
        }
    }
}

/// Overrides for the couplings of the effective spin model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpinOverrides {
    pub h_z: Option<f64>,
    pub j_c: Option<f64>,
}

enum Engine {
    Full(full::FullEngine),
    Polaron(polaron::PolaronEngine),
    Spin(spin::SpinEngine),
    Obd(obd::ObdEngine),
}

/// A Hamiltonian ready for matrix-vector products.
pub struct HamiltonianOp {
    pub kind: ModelKind,
    pub params: Option<ModelParams>,
    pub descriptor: BasisDescriptor,
    engine: Engine,
}

impl std::fmt::Debug for HamiltonianOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianOp")
            .field("kind", &self.kind)
            .field("dim", &self.descriptor.dim())
            .finish()
    }
}

/// `Σ_bonds σ_x^i σ_x^j` for a configuration.
#[inline]
pub(crate) fn bond_sum(config: u64, bonds: &[(usize, usize)]) -> i64 {
    bonds
        .iter()
        .map(|&(i, j)| if ((config >> i) ^ (config >> j)) & 1 == 0 { 1 } else { -1 })
        .sum()
}

impl HamiltonianOp {
    pub fn build_full(params: &ModelParams) -> Result<Self> {
        Self::build_full_with_budget(params, DEFAULT_AMPLITUDE_BUDGET)
    }

    /// `ω_c a†a + g(a†+a)S_x + (g²/ω_c)S_x² + ω_d S_z + Σ_bonds (J/4) σ_x σ_x`.
    pub fn build_full_with_budget(params: &ModelParams, budget: u128) -> Result<Self> {
        params.validate()?;
        let descriptor = BasisDescriptor::build_with_budget(
            params.n_sites(),
            params.n_ph_max,
            Frame::Standard,
            Parity::Both,
            budget,
        )?;
        Ok(HamiltonianOp {
            kind: ModelKind::Full,
            engine: Engine::Full(full::FullEngine::new(params)),
            params: Some(params.clone()),
            descriptor,
        })
    }

    pub fn build_polaron(params: &ModelParams) -> Result<Self> {
        Self::build_polaron_with_budget(params, DEFAULT_AMPLITUDE_BUDGET)
    }

    /// `ω_c a†a + Σ_bonds (J/4) σ_x σ_x + ω_d U S_z U†` with `U = exp(β S_x (a† - a))`,
    /// realized exactly through displacement matrix elements.
    pub fn build_polaron_with_budget(params: &ModelParams, budget: u128) -> Result<Self> {
        params.validate()?;
        let descriptor = BasisDescriptor::build_with_budget(
            params.n_sites(),
            params.n_ph_max,
            Frame::Polaron,
            Parity::Both,
            budget,
        )?;
        Ok(HamiltonianOp {
            kind: ModelKind::Polaron,
            engine: Engine::Polaron(polaron::PolaronEngine::new(params)),
            params: Some(params.clone()),
            descriptor,
        })
    }

    /// `Σ_bonds (J/4) σ_x σ_x + h_z S_z - J_c (S² - S_x²)` on the 2^N spin space.
    pub fn build_effective_spin(params: &ModelParams, overrides: SpinOverrides) -> Result<Self> {
        params.validate()?;
        let (h_z, j_c) = spin_couplings(params, overrides)?;
        let descriptor = BasisDescriptor::build(params.n_sites(), 0, Frame::SpinOnly, Parity::Both)?;
        Ok(HamiltonianOp {
            kind: ModelKind::EffectiveSpin,
            engine: Engine::Spin(spin::SpinEngine::new(&params.cluster, params.j, h_z, j_c, &descriptor)),
            params: Some(params.clone()),
            descriptor,
        })
    }

    /// Effective spin model restricted to the sector `2 S_x = twice_sx`.
    /// Only valid when the transverse field vanishes, since S_z mixes sectors.
    pub fn build_effective_spin_sector(
        params: &ModelParams,
        overrides: SpinOverrides,
        twice_sx: i64,
    ) -> Result<Self> {
        params.validate()?;
        let (h_z, j_c) = spin_couplings(params, overrides)?;
        if h_z != 0.0 {
            return Err(Error::Config(
                "S_x sectors require a vanishing transverse field".into(),
            ));
        }
        let n = params.n_sites();
        if n >= 64 || twice_sx.abs() > n as i64 || (twice_sx + n as i64) % 2 != 0 {
            return Err(Error::Config(format!("no S_x sector {twice_sx}/2 for N = {n}")));
        }
        let n_up = ((twice_sx + n as i64) / 2) as u32;
        let configs = configs_with_popcount(n, n_up);
        let descriptor = BasisDescriptor::restricted(n, Frame::SpinOnly, configs);
        Ok(HamiltonianOp {
            kind: ModelKind::EffectiveSpin,
            engine: Engine::Spin(spin::SpinEngine::new(&params.cluster, params.j, 0.0, j_c, &descriptor)),
            params: Some(params.clone()),
            descriptor,
        })
    }

    /// `-P (S² - S_x²) P` on the classical ground manifold of a triangular cluster.
    pub fn build_obd(cluster: &LatticeCluster) -> Result<Self> {
        let manifold = enumerate_manifold(cluster, ManifoldMethod::Auto, obd::DEFAULT_MANIFOLD_BUDGET)?;
        Self::build_obd_on(cluster, manifold)
    }

    /// OBD operator on a set of manifold configurations closed under the
    /// allowed pair swaps, e.g. the whole manifold or one S_x sector of it.
    pub fn build_obd_on(cluster: &LatticeCluster, configs: Vec<u64>) -> Result<Self> {
        let descriptor = BasisDescriptor::restricted(cluster.n_sites(), Frame::ObdManifold, configs);
        let engine = obd::ObdEngine::new(cluster, &descriptor)?;
        Ok(HamiltonianOp {
            kind: ModelKind::Obd,
            params: None,
            descriptor,
            engine: Engine::Obd(engine),
        })
    }

    pub fn build(kind: ModelKind, params: &ModelParams, overrides: SpinOverrides) -> Result<Self> {
        match kind {
            ModelKind::Full => Self::build_full(params),
            ModelKind::Polaron => Self::build_polaron(params),
            ModelKind::EffectiveSpin => Self::build_effective_spin(params, overrides),
            ModelKind::Obd => Self::build_obd(&params.cluster),
        }
    }

    /// Whether the operator commutes with the spin/photon parity and its basis is closed under it.
    pub fn has_parity(&self) -> bool {
        match self.kind {
            ModelKind::Full | ModelKind::Polaron => true,
            ModelKind::EffectiveSpin | ModelKind::Obd => self.descriptor.supports_parity(),
        }
    }

    /// Manifold dimension for OBD operators.
    pub fn manifold_dim(&self) -> Option<usize> {
        matches!(self.kind, ModelKind::Obd).then(|| self.descriptor.n_spin_states())
    }

    pub fn provenance(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind,
            "params": self.params.as_ref().map(|p| p.to_json()),
            "frame": self.descriptor.frame,
            "n_ph_max": self.descriptor.n_ph_max,
            "dim": self.descriptor.dim(),
        })
    }
}

impl LinearOperator for HamiltonianOp {
    fn descriptor(&self) -> &BasisDescriptor {
        &self.descriptor
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.descriptor.dim());
        assert_eq!(y.len(), self.descriptor.dim());
        match &self.engine {
            Engine::Full(e) => e.apply(&self.descriptor, x, y),
            Engine::Polaron(e) => e.apply(&self.descriptor, x, y),
            Engine::Spin(e) => e.apply(&self.descriptor, x, y),
            Engine::Obd(e) => e.apply(x, y),
        }
    }
}

fn spin_couplings(params: &ModelParams, overrides: SpinOverrides) -> Result<(f64, f64)> {
    let h_z = overrides.h_z.unwrap_or_else(|| params.h_z());
    let j_c = match overrides.j_c {
        Some(v) => v,
        None if params.g == 0.0 => {
            return Err(Error::Config(
                "J_c diverges at g = 0; supply an override".into(),
            ))
        }
        None => params.j_c(),
    };
    Ok((h_z, j_c))
}

/// All N-bit configurations with `n_up` set bits, ascending.
pub fn configs_with_popcount(n: usize, n_up: u32) -> Vec<u64> {
    let mut out = Vec::new();
    if n_up as usize > n {
        return out;
    }
    if n_up == 0 {
        out.push(0);
        return out;
    }
    // Gosper's hack
    let mut c: u64 = (1u64 << n_up) - 1;
    let limit = 1u64 << n;
    while c < limit {
        out.push(c);
        let t = c & c.wrapping_neg();
        let r = c + t;
        c = (((r ^ c) >> 2) / t) | r;
    }
    out
}
