//! Ground states and low-lying levels: restarted Lanczos for large spaces,
//! dense diagonalization as the small-space oracle.

mod dense;
mod lanczos;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Parity, QuantumState};
use crate::linop::LinearOperator;

pub use dense::{dense_sector, dense_solve, dense_solve_with_budget, DEFAULT_DENSE_BUDGET};
pub use lanczos::lanczos_solve;

/// Levels closer than this (in units of ω_c) are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Seed of the ChaCha8 start-vector generator when none is given.
pub const DEFAULT_SEED: u64 = 0x0c0f_fee5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanczosConfig {
    pub k_states: usize,
    /// Relative residual target: `‖Hψ - Eψ‖ <= tol · max(1, |E|)`.
    pub tol: f64,
    /// Budget of operator applications over all requested states.
    pub max_iter: usize,
    pub seed: u64,
    /// Krylov basis size that triggers a restart.
    pub max_krylov: usize,
    /// Ritz vectors kept across a restart.
    pub keep: usize,
    /// Sector dimension up to which [`solve`] uses dense diagonalization.
    pub dense_threshold: usize,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig {
            k_states: 1,
            tol: 1e-10,
            max_iter: 20_000,
            seed: DEFAULT_SEED,
            max_krylov: 64,
            keep: 12,
            dense_threshold: 256,
        }
    }
}

impl LanczosConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_states(mut self, k: usize) -> Self {
        self.k_states = k;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Eigenpairs in ascending order. `states[i]` belongs to `energies[i]`; dense
/// solves may list more energies than states.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub energies: Vec<f64>,
    pub states: Vec<QuantumState>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub converged: bool,
    pub method: &'static str,
    pub sector: Parity,
}

impl SolveReport {
    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn ground_state(&self) -> &QuantumState {
        &self.states[0]
    }

    /// Runs of indices into `energies` whose neighbours lie within [`DEGENERACY_TOL`].
    pub fn degenerate_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, e) in self.energies.iter().enumerate() {
            match groups.last_mut() {
                Some(g) if (e - self.energies[*g.last().unwrap()]).abs() <= DEGENERACY_TOL => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        groups
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "energies": self.energies,
            "residuals": self.residuals,
            "iterations": self.iterations,
            "seed": self.seed,
            "converged": self.converged,
            "method": self.method,
            "sector": self.sector,
            "n_states": self.states.len(),
        })
    }
}

/// Lowest eigenpairs of the whole space.
pub fn lanczos_ground(op: &dyn LinearOperator, cfg: &LanczosConfig) -> Result<SolveReport> {
    lanczos_solve(op, Parity::Both, cfg)
}

/// Dense below `cfg.dense_threshold`, Lanczos above.
pub fn solve(op: &dyn LinearOperator, parity: Parity, cfg: &LanczosConfig) -> Result<SolveReport> {
    let desc = op.descriptor();
    let dim = match parity {
        Parity::Both => desc.dim(),
        _ => desc.sector_dim(),
    };
    if dim <= cfg.dense_threshold {
        dense_sector(op, parity, Some(cfg.k_states), cfg.dense_threshold)
    } else {
        lanczos_solve(op, parity, cfg)
    }
}

/// Sector-resolved solution for an operator commuting with the parity.
#[derive(Debug, Clone)]
pub struct ParitySolution {
    pub even: SolveReport,
    pub odd: SolveReport,
    /// Sector of the lower ground energy; `Even` on an exact tie.
    pub ground_sector: Parity,
    /// `E_odd - E_even`.
    pub gap: f64,
}

impl ParitySolution {
    pub fn ground(&self) -> &SolveReport {
        match self.ground_sector {
            Parity::Odd => &self.odd,
            _ => &self.even,
        }
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground().ground_energy()
    }

    pub fn is_degenerate(&self) -> bool {
        self.gap.abs() <= DEGENERACY_TOL
    }

    /// Both sector ground states when degenerate, otherwise the ground state alone.
    pub fn ground_states(&self) -> Vec<&QuantumState> {
        if self.is_degenerate() {
            vec![self.even.ground_state(), self.odd.ground_state()]
        } else {
            vec![self.ground().ground_state()]
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "even": self.even.to_json(),
            "odd": self.odd.to_json(),
            "ground_sector": self.ground_sector,
            "gap": self.gap,
            "degenerate": self.is_degenerate(),
        })
    }
}

pub fn solve_both_parities(op: &dyn LinearOperator, cfg: &LanczosConfig) -> Result<ParitySolution> {
    if !op.descriptor().supports_parity() {
        return Err(Error::Config("operator basis is not closed under parity".into()));
    }
    let even = solve(op, Parity::Even, cfg)?;
    let odd = solve(op, Parity::Odd, cfg)?;
    let gap = odd.ground_energy() - even.ground_energy();
    Ok(ParitySolution {
        ground_sector: if gap >= 0.0 { Parity::Even } else { Parity::Odd },
        gap,
        even,
        odd,
    })
}
