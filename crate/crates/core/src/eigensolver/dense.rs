use nalgebra::{DMatrix, SymmetricEigen};

use super::SolveReport;
use crate::error::{Error, Result};
use crate::hilbert::{project_parity, Parity, QuantumState};
use crate::linop::LinearOperator;

pub const DEFAULT_DENSE_BUDGET: usize = 8192;

/// Full spectrum of `op` by dense diagonalization; every eigenvector is returned.
pub fn dense_solve(op: &dyn LinearOperator) -> Result<SolveReport> {
    dense_solve_with_budget(op, DEFAULT_DENSE_BUDGET)
}

pub fn dense_solve_with_budget(op: &dyn LinearOperator, budget: usize) -> Result<SolveReport> {
    dense_sector(op, Parity::Both, None, budget)
}

/// Dense diagonalization inside a parity sector, keeping the lowest `keep` states
/// (all of them when `None`).
pub fn dense_sector(
    op: &dyn LinearOperator,
    parity: Parity,
    keep: Option<usize>,
    budget: usize,
) -> Result<SolveReport> {
    let desc = op.descriptor();
    let dim = desc.dim();
    // orthonormal basis of the sector as sparse columns (index, weight)
    let columns: Vec<Vec<(usize, f64)>> = match parity.sign() {
        None => (0..dim).map(|i| vec![(i, 1.0)]).collect(),
        Some(sign) => {
            if !desc.supports_parity() {
                return Err(Error::Config("basis is not closed under parity".into()));
            }
            let mut cols = Vec::new();
            for i in 0..dim {
                let (j, s) = desc.parity_partner(i);
                if j == i {
                    if s == sign {
                        cols.push(vec![(i, 1.0)]);
                    }
                } else if i < j {
                    let r = std::f64::consts::FRAC_1_SQRT_2;
                    cols.push(vec![(i, r), (j, sign * s * r)]);
                }
            }
            cols
        }
    };
    let n = columns.len();
    if n > budget {
        return Err(Error::DimensionOverflow {
            dim: n as u128,
            budget: budget as u128,
        });
    }
    let mut h = DMatrix::<f64>::zeros(n, n);
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    for (c, col) in columns.iter().enumerate() {
        x.fill(0.0);
        for &(i, w) in col {
            x[i] = w;
        }
        op.apply(&x, &mut y);
        for (r, row) in columns.iter().enumerate() {
            h[(r, c)] = row.iter().map(|&(i, w)| w * y[i]).sum();
        }
    }
    let h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let keep = keep.unwrap_or(n).min(n);
    let sector_desc = desc.with_parity(parity);
    let mut energies = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(keep);
    let mut residuals = Vec::with_capacity(keep);
    for (rank, &k) in order.iter().enumerate() {
        let e = eig.eigenvalues[k];
        energies.push(e);
        if rank >= keep {
            continue;
        }
        let mut v = vec![0.0; dim];
        for (c, col) in columns.iter().enumerate() {
            let a = eig.eigenvectors[(c, k)];
            for &(i, w) in col {
                v[i] += a * w;
            }
        }
        if let Some(s) = parity.sign() {
            project_parity(desc, s, &mut v);
        }
        op.apply(&v, &mut y);
        let nv = crate::hilbert::norm(&v);
        residuals.push(
            y.iter()
                .zip(&v)
                .map(|(hy, vi)| (hy - e * vi).powi(2))
                .sum::<f64>()
                .sqrt()
                / nv,
        );
        states.push(QuantumState::new(sector_desc.clone(), v));
    }
    Ok(SolveReport {
        energies,
        states,
        residuals,
        iterations: n,
        seed: 0,
        converged: true,
        method: "dense",
        sector: parity,
    })
}
