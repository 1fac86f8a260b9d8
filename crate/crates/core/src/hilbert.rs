//! Composite spin ⊗ photon basis.
//!
//! Spins are stored in the σ_x eigenbasis: bit `i` of a configuration is set
//! when σ_x^i = +1. The composite index is `photon * n_spin_states + spin_slot`,
//! where `spin_slot` equals the configuration itself on the full 2^N space and
//! indexes a sorted configuration list on restricted bases.
//!
//! Parity sectors are represented by projection: vectors always have the full
//! length and a sector state is one that satisfies `P ψ = ±ψ`.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Default budget: one complex vector of 16 GiB, i.e. 2^30 amplitudes.
pub const DEFAULT_AMPLITUDE_BUDGET: u128 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Standard,
    Polaron,
    SpinOnly,
    ObdManifold,
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Frame::Standard => "standard",
            Frame::Polaron => "polaron",
            Frame::SpinOnly => "spin_only",
            Frame::ObdManifold => "obd_manifold",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    Both,
}

impl Parity {
    pub fn sign(self) -> Option<f64> {
        match self {
            Parity::Even => Some(1.0),
            Parity::Odd => Some(-1.0),
            Parity::Both => None,
        }
    }
}

/// Half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInt(pub i64);

impl HalfInt {
    pub fn from_twice(twice: i64) -> Self {
        HalfInt(twice)
    }

    pub fn twice(self) -> i64 {
        self.0
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl std::fmt::Display for HalfInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// 2 S_x of a configuration: n_plus - n_minus.
#[inline]
pub fn twice_sx(config: u64, n_sites: usize) -> i64 {
    2 * config.count_ones() as i64 - n_sites as i64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub n_sites: usize,
    pub n_ph_max: usize,
    pub frame: Frame,
    pub parity: Parity,
    /// Sorted configuration list for restricted spin bases (manifolds, S_x sectors).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spin_configs: Option<Arc<Vec<u64>>>,
}

impl BasisDescriptor {
    pub fn build(n_sites: usize, n_ph_max: usize, frame: Frame, parity: Parity) -> Result<Self> {
        Self::build_with_budget(n_sites, n_ph_max, frame, parity, DEFAULT_AMPLITUDE_BUDGET)
    }

    pub fn build_with_budget(
        n_sites: usize,
        n_ph_max: usize,
        frame: Frame,
        parity: Parity,
        budget: u128,
    ) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::Config("basis needs at least one site".into()));
        }
        if frame == Frame::ObdManifold {
            return Err(Error::Config(
                "manifold bases are built from a configuration list".into(),
            ));
        }
        let n_ph_max = if frame == Frame::SpinOnly { 0 } else { n_ph_max };
        let dim = if n_sites >= 64 {
            u128::MAX
        } else {
            (1u128 << n_sites) * (n_ph_max as u128 + 1)
        };
        // dim must also index memory on 32-bit targets
        let budget = budget.min(usize::MAX as u128);
        if dim > budget {
            return Err(Error::DimensionOverflow { dim, budget });
        }
        Ok(BasisDescriptor {
            n_sites,
            n_ph_max,
            frame,
            parity,
            spin_configs: None,
        })
    }

    /// Spin-only basis restricted to a sorted list of configurations.
    pub fn restricted(n_sites: usize, frame: Frame, mut configs: Vec<u64>) -> Self {
        configs.sort_unstable();
        configs.dedup();
        BasisDescriptor {
            n_sites,
            n_ph_max: 0,
            frame,
            parity: Parity::Both,
            spin_configs: Some(Arc::new(configs)),
        }
    }

    pub fn n_spin_states(&self) -> usize {
        match &self.spin_configs {
            Some(c) => c.len(),
            None => 1usize << self.n_sites,
        }
    }

    pub fn n_photon_states(&self) -> usize {
        self.n_ph_max + 1
    }

    /// Length of state vectors.
    pub fn dim(&self) -> usize {
        self.n_spin_states() * self.n_photon_states()
    }

    /// Dimension of the selected parity sector. The spin flip has no fixed
    /// configurations for N >= 1, so every orbit is a pair and both sectors
    /// have half the full dimension.
    pub fn sector_dim(&self) -> usize {
        match self.parity {
            Parity::Both => self.dim(),
            Parity::Even | Parity::Odd => self.dim() / 2,
        }
    }

    #[inline]
    pub fn index(&self, photon: usize, slot: usize) -> usize {
        photon * self.n_spin_states() + slot
    }

    #[inline]
    pub fn decompose(&self, idx: usize) -> (usize, usize) {
        let ns = self.n_spin_states();
        (idx / ns, idx % ns)
    }

    #[inline]
    pub fn spin_config(&self, slot: usize) -> u64 {
        match &self.spin_configs {
            Some(c) => c[slot],
            None => slot as u64,
        }
    }

    pub fn slot_of(&self, config: u64) -> Option<usize> {
        match &self.spin_configs {
            Some(c) => c.binary_search(&config).ok(),
            None => ((config >> self.n_sites) == 0).then_some(config as usize),
        }
    }

    pub fn all_up_mask(&self) -> u64 {
        if self.n_sites == 64 {
            u64::MAX
        } else {
            (1u64 << self.n_sites) - 1
        }
    }

    /// S_x eigenvalue of a basis state.
    pub fn sx_eigenvalue(&self, idx: usize) -> HalfInt {
        let (_, slot) = self.decompose(idx);
        HalfInt(twice_sx(self.spin_config(slot), self.n_sites))
    }

    /// Whether the real parity operator `P` maps the basis onto itself.
    pub fn supports_parity(&self) -> bool {
        match &self.spin_configs {
            None => true,
            Some(c) => {
                let mask = self.all_up_mask();
                c.iter().all(|&s| c.binary_search(&(s ^ mask)).is_ok())
            }
        }
    }

    /// Index of the partner `P|idx>` and the sign of the matrix element.
    #[inline]
    pub fn parity_partner(&self, idx: usize) -> (usize, f64) {
        let (n, slot) = self.decompose(idx);
        let flipped = self.spin_config(slot) ^ self.all_up_mask();
        let partner = self.slot_of(flipped).expect("basis closed under spin flip");
        let photon_odd = matches!(self.frame, Frame::Standard | Frame::Polaron) && n % 2 == 1;
        let sign = if photon_odd ^ (self.n_sites % 2 == 1) { -1.0 } else { 1.0 };
        (self.index(n, partner), sign)
    }

    /// Representatives of the parity orbits: basis states whose highest spin
    /// bit is clear. Each sector basis vector is `(|i> ± P|i>)/sqrt 2`.
    pub fn sector_representatives(&self) -> Vec<usize> {
        let top = 1u64 << (self.n_sites - 1);
        (0..self.dim())
            .filter(|&i| self.spin_config(self.decompose(i).1) & top == 0)
            .collect()
    }

    pub fn with_parity(&self, parity: Parity) -> Self {
        BasisDescriptor {
            parity,
            ..self.clone()
        }
    }
}

/// Applies the real parity operator `P = exp(-iπ(a†a + S_z + N/2)) = (-1)^{a†a} ∏_i (-σ_z^i)`.
///
/// In the σ_x encoding `∏ σ_z^i` flips every spin bit. The symmetry operator
/// `S = exp(-iπ(a†a + S_z))` equals `i^N P`, so both share eigenvectors and
/// `S² = (-1)^N`. Sectors are labelled by the eigenvalue of `P`, which is +1
/// on the photon vacuum with all spins in the lower σ_z state.
pub fn apply_parity_raw(desc: &BasisDescriptor, x: &[f64], out: &mut [f64]) {
    assert_eq!(x.len(), desc.dim());
    for (i, o) in out.iter_mut().enumerate() {
        let (j, sign) = desc.parity_partner(i);
        *o = sign * x[j];
    }
}

/// Complex phase relating `S` to `P`: `S = parity_phase(N) · P`.
pub fn parity_phase(n_sites: usize) -> (f64, f64) {
    match n_sites % 4 {
        0 => (1.0, 0.0),
        1 => (0.0, 1.0),
        2 => (-1.0, 0.0),
        _ => (0.0, -1.0),
    }
}

/// Projects `x` in place onto the `P = sign` eigenspace.
pub fn project_parity(desc: &BasisDescriptor, sign: f64, x: &mut [f64]) {
    for i in 0..x.len() {
        let (j, s) = desc.parity_partner(i);
        if j < i {
            continue;
        }
        if i == j {
            if s != sign {
                x[i] = 0.0;
            }
            continue;
        }
        // P|i> = s|j>, P|j> = s|i>; (1 + sign P)/2 mixes the pair
        let (a, b) = (x[i], x[j]);
        x[i] = 0.5 * (a + sign * s * b);
        x[j] = 0.5 * (b + sign * s * a);
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Normalized real amplitude vector tagged with its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub descriptor: BasisDescriptor,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StateHeader {
    descriptor: BasisDescriptor,
    spin_configs: Option<Vec<u64>>,
    dim: usize,
    norm: f64,
    sha256: String,
}

const STATE_MAGIC: &[u8; 8] = b"CQEDSTv1";

impl QuantumState {
    /// Normalizes `amplitudes`; panics on a zero vector or a length mismatch.
    pub fn new(descriptor: BasisDescriptor, mut amplitudes: Vec<f64>) -> Self {
        assert_eq!(amplitudes.len(), descriptor.dim(), "length does not match basis");
        let n = norm(&amplitudes);
        assert!(n > 0.0, "cannot normalize the zero vector");
        amplitudes.iter_mut().for_each(|a| *a /= n);
        QuantumState {
            descriptor,
            amplitudes,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.descriptor.n_sites
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `P|ψ>` with `P` the real parity operator (see [`apply_parity_raw`]).
    pub fn apply_parity(&self) -> Result<QuantumState> {
        if !matches!(self.descriptor.frame, Frame::Standard | Frame::Polaron) {
            return Err(Error::WrongFrame(self.descriptor.frame.to_string()));
        }
        let mut out = vec![0.0; self.amplitudes.len()];
        apply_parity_raw(&self.descriptor, &self.amplitudes, &mut out);
        Ok(QuantumState {
            descriptor: self.descriptor.clone(),
            amplitudes: out,
        })
    }

    /// `<ψ|P|ψ>`.
    pub fn parity_expectation(&self) -> f64 {
        let mut out = vec![0.0; self.amplitudes.len()];
        apply_parity_raw(&self.descriptor, &self.amplitudes, &mut out);
        dot(&self.amplitudes, &out)
    }

    fn checksum(bytes: &[u8]) -> String {
        hex::encode(Sha256::digest(bytes))
    }

    /// Writes `magic | u64 header length | JSON header | little-endian f64 amplitudes`.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let payload: Vec<u8> = self
            .amplitudes
            .iter()
            .flat_map(|a| a.to_le_bytes())
            .collect();
        let mut descriptor = self.descriptor.clone();
        let spin_configs = descriptor.spin_configs.take().map(|c| c.as_ref().clone());
        let header = StateHeader {
            descriptor,
            spin_configs,
            dim: self.amplitudes.len(),
            norm: self.norm(),
            sha256: Self::checksum(&payload),
        };
        let header = serde_json::to_vec(&header).map_err(|e| Error::Io(e.to_string()))?;
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(STATE_MAGIC)?;
        f.write_all(&(header.len() as u64).to_le_bytes())?;
        f.write_all(&header)?;
        f.write_all(&payload)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<QuantumState> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        f.read_exact(&mut magic)?;
        if &magic != STATE_MAGIC {
            return Err(Error::Io("not a state file".into()));
        }
        let mut len = [0u8; 8];
        f.read_exact(&mut len)?;
        let mut header = vec![0u8; u64::from_le_bytes(len) as usize];
        f.read_exact(&mut header)?;
        let header: StateHeader =
            serde_json::from_slice(&header).map_err(|e| Error::Io(e.to_string()))?;
        let mut payload = vec![0u8; header.dim * 8];
        f.read_exact(&mut payload)?;
        if Self::checksum(&payload) != header.sha256 {
            return Err(Error::Io("state checksum mismatch".into()));
        }
        let mut descriptor = header.descriptor;
        descriptor.spin_configs = header.spin_configs.map(Arc::new);
        let amplitudes = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(QuantumState {
            descriptor,
            amplitudes,
        })
    }
}
