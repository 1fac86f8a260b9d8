use std::path::{Path, PathBuf};

use cqed_core::analysis::{CutoffOptions, CutoffPolicy, Grid, PointParams, Spacing, SweepAxis};
use cqed_core::eigensolver::LanczosConfig;
use cqed_core::hamiltonian::obd::DEFAULT_MANIFOLD_BUDGET;
use cqed_core::hamiltonian::ModelKind;
use cqed_core::lattice::{preset_cluster, Geometry, LatticeCluster};
use cqed_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Everything a run reads. Energies are in units of ω_c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model")]
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterConfig>,
    #[serde(default)]
    pub point: PointConfig,
    /// Resolved per model when absent: automatic with photons, none without.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffPolicy>,
    #[serde(default)]
    pub lanczos: LanczosConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hist: Option<HistConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obd: Option<ObdConfig>,
}

fn default_model() -> ModelKind {
    ModelKind::Full
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub geometry: Geometry,
    /// Preset size; exclusive with `cell`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<[[i64; 2]; 2]>,
}

impl ClusterConfig {
    pub fn build(&self) -> Result<LatticeCluster> {
        match (self.n, self.cell) {
            (Some(n), None) => preset_cluster(self.geometry, n),
            (None, Some(cell)) => LatticeCluster::build(self.geometry, cell),
            _ => Err(Error::Config("cluster needs exactly one of `n` and `cell`".into())),
        }
    }
}

/// `omega_d` is ω_d/ω_c and `g` is g/ω_c. The Ising coupling is given either
/// as `j_over_omega_d` or, where ω_d = 0 makes that ratio meaningless, as `j`
/// in units of ω_c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    #[serde(default = "one")]
    pub omega_d: f64,
    #[serde(default)]
    pub g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_over_omega_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_c: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl Default for PointConfig {
    fn default() -> Self {
        PointConfig {
            omega_d: 1.0,
            g: 0.0,
            j_over_omega_d: None,
            j: None,
            h_z: None,
            j_c: None,
        }
    }
}

impl PointConfig {
    pub fn params(&self) -> Result<PointParams> {
        let j = match (self.j_over_omega_d, self.j) {
            (Some(r), None) => {
                if self.omega_d == 0.0 {
                    return Err(Error::Config("`j_over_omega_d` needs omega_d != 0; give `j` instead".into()));
                }
                r * self.omega_d
            }
            (None, Some(j)) => j,
            (None, None) => 0.0,
            (Some(_), Some(_)) => return Err(Error::Config("give only one of `j_over_omega_d` and `j`".into())),
        };
        Ok(PointParams {
            omega_d: self.omega_d,
            g: self.g,
            j,
            h_z: self.h_z,
            j_c: self.j_c,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "linear")]
    pub spacing: Spacing,
    /// Observable columns; empty records all of them.
    #[serde(default)]
    pub columns: Vec<String>,
    #[serde(default)]
    pub extract: Vec<Extraction>,
}

fn linear() -> Spacing {
    Spacing::Linear
}

impl SweepConfig {
    pub fn grid(&self) -> Grid {
        Grid {
            min: self.min,
            max: self.max,
            count: self.count,
            spacing: self.spacing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractMethod {
    FluctuationPeak,
    PolaronPhotonPeak,
    GradientDrop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extraction {
    pub method: ExtractMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistName {
    Photon,
    Polarization,
    Complex3sl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistConfig {
    /// Empty selects every kind the model supports.
    #[serde(default)]
    pub kinds: Vec<HistName>,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Extra cutoffs at which the photon distribution is recomputed.
    #[serde(default)]
    pub photon_cutoffs: Vec<usize>,
    /// Largest photon number of polaron-frame distributions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_out: Option<usize>,
}

fn default_bins() -> usize {
    cqed_core::observables::DEFAULT_3SL_BINS
}

impl Default for HistConfig {
    fn default() -> Self {
        HistConfig {
            kinds: Vec::new(),
            bins: default_bins(),
            photon_cutoffs: Vec::new(),
            n_out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObdConfig {
    /// Triangular preset sizes; defaults to the configured cluster.
    #[serde(default)]
    pub sizes: Vec<usize>,
    /// J_c/J grid of the polarization cascade; empty skips it.
    #[serde(default)]
    pub jc_over_j: Vec<f64>,
    #[serde(default = "default_budget")]
    pub manifold_budget: usize,
}

fn default_budget() -> usize {
    DEFAULT_MANIFOLD_BUDGET
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fills every defaulted choice so the written config reproduces the run.
    pub fn resolve(mut self, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self> {
        if let Some(out) = out {
            self.out = Some(out);
        }
        if self.out.is_none() {
            self.out = Some(PathBuf::from("cqed-out"));
        }
        if let Some(seed) = seed {
            self.lanczos.seed = seed;
        }
        if self.cutoff.is_none() {
            self.cutoff = Some(match self.model {
                ModelKind::Full | ModelKind::Polaron => CutoffPolicy::Auto(CutoffOptions::default()),
                _ => CutoffPolicy::Fixed { n_ph_max: 0 },
            });
        }
        self.point.params()?;
        Ok(self)
    }

    pub fn out_dir(&self) -> &Path {
        self.out.as_deref().unwrap_or(Path::new("cqed-out"))
    }

    pub fn cluster(&self) -> Result<LatticeCluster> {
        self.cluster
            .as_ref()
            .ok_or_else(|| Error::Config("missing [cluster] table".into()))?
            .build()
    }

    pub fn cutoff(&self) -> &CutoffPolicy {
        self.cutoff.as_ref().expect("resolved config")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
