//! Thick-restart Lanczos with full reorthogonalization.
//!
//! The projected matrix is accumulated from Gram-Schmidt coefficients, so
//! after a restart the arrowhead coupling between kept Ritz vectors and the
//! continuation vector appears without special casing. Several eigenpairs
//! are found one at a time, each run orthogonal to the pairs already locked,
//! which resolves exact degeneracies a single Krylov space cannot see.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LanczosConfig, SolveReport};
use crate::error::{Error, Result, RitzVector};
use crate::hilbert::{dot, norm, project_parity, Parity, QuantumState};
use crate::linop::LinearOperator;

/// Lowest `cfg.k_states` eigenpairs of `op`, optionally inside a parity sector.
pub fn lanczos_solve(op: &dyn LinearOperator, parity: Parity, cfg: &LanczosConfig) -> Result<SolveReport> {
    if cfg.k_states == 0 {
        return Err(Error::Config("k_states must be at least 1".into()));
    }
    let desc = op.descriptor();
    let dim = desc.dim();
    let sign = parity.sign();
    if sign.is_some() && !desc.supports_parity() {
        return Err(Error::Config("basis is not closed under parity".into()));
    }
    let sector_dim = if sign.is_some() { desc.sector_dim() } else { dim };
    if cfg.k_states > sector_dim {
        return Err(Error::Config(format!(
            "requested {} states from a space of dimension {sector_dim}",
            cfg.k_states
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut energies = Vec::new();
    let mut residuals = Vec::new();
    let mut iterations = 0;
    for _ in 0..cfg.k_states {
        let budget = cfg.max_iter.saturating_sub(iterations);
        let run = single_pair(op, sign, &locked, &mut rng, cfg, budget)?;
        iterations += run.iterations;
        energies.push(run.energy);
        residuals.push(run.residual);
        locked.push(run.vector);
    }
    // sequential deflation can return near-degenerate pairs out of order
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| energies[a].total_cmp(&energies[b]));
    let sector_desc = desc.with_parity(parity);
    Ok(SolveReport {
        energies: order.iter().map(|&i| energies[i]).collect(),
        residuals: order.iter().map(|&i| residuals[i]).collect(),
        states: order
            .iter()
            .map(|&i| QuantumState::new(sector_desc.clone(), std::mem::take(&mut locked[i])))
            .collect(),
        iterations,
        seed: cfg.seed,
        converged: true,
        method: "lanczos",
        sector: parity,
    })
}

const BREAKDOWN: f64 = 1e-10;

struct Pair {
    energy: f64,
    residual: f64,
    vector: Vec<f64>,
    iterations: usize,
}

/// Removes from `x` its components along `fixed` and `basis` (both orthonormal),
/// accumulating the `basis` coefficients. Two interleaved sweeps keep `x`
/// orthogonal to both sets at machine precision.
fn orthogonalize(x: &mut [f64], fixed: &[Vec<f64>], basis: &[Vec<f64>], coeffs: Option<&mut [f64]>) {
    let mut acc = coeffs;
    for _ in 0..2 {
        for v in fixed {
            let c = dot(v, x);
            x.iter_mut().zip(v).for_each(|(xi, vi)| *xi -= c * vi);
        }
        for (k, v) in basis.iter().enumerate() {
            let c = dot(v, x);
            x.iter_mut().zip(v).for_each(|(xi, vi)| *xi -= c * vi);
            if let Some(a) = acc.as_deref_mut() {
                a[k] += c;
            }
        }
    }
}

fn random_start(
    dim: usize,
    sign: Option<f64>,
    op: &dyn LinearOperator,
    locked: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if let Some(s) = sign {
            project_parity(op.descriptor(), s, &mut v);
        }
        orthogonalize(&mut v, locked, &[], None);
        let n = norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            return Ok(v);
        }
    }
    Err(Error::Config("no start vector outside the locked subspace".into()))
}

fn single_pair(
    op: &dyn LinearOperator,
    sign: Option<f64>,
    locked: &[Vec<f64>],
    rng: &mut ChaCha8Rng,
    cfg: &LanczosConfig,
    budget: usize,
) -> Result<Pair> {
    let dim = op.dim();
    let m_max = cfg.max_krylov.max(cfg.keep + 2).min(dim.max(1));
    let keep = cfg.keep.min(m_max.saturating_sub(2)).max(1);

    let mut basis: Vec<Vec<f64>> = vec![random_start(dim, sign, op, locked, rng)?];
    // projected matrix; upper triangle filled from Gram-Schmidt coefficients
    let mut t = DMatrix::<f64>::zeros(m_max, m_max);
    let mut iterations = 0;
    let mut w = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut best = (f64::INFINITY, f64::INFINITY, basis[0].clone());
    // running estimate of ‖H‖ for the breakdown test
    let mut scale = f64::MIN_POSITIVE;

    loop {
        // extend the basis; on exit `w` is the residual of the last processed vector
        loop {
            let j = basis.len() - 1;
            op.apply(&basis[j], &mut w);
            iterations += 1;
            if let Some(s) = sign {
                project_parity(op.descriptor(), s, &mut w);
            }
            scale = scale.max(norm(&w));
            let mut h = vec![0.0; basis.len()];
            orthogonalize(&mut w, locked, &basis, Some(&mut h));
            for (i, hi) in h.iter().enumerate() {
                t[(i, j)] = *hi;
                t[(j, i)] = *hi;
            }
            let beta = norm(&w);
            if beta <= BREAKDOWN * scale || basis.len() == m_max || iterations >= budget {
                break;
            }
            if basis.len() >= 4 && basis.len() % 4 == 0 {
                let (theta, y) = lowest_ritz(&t, basis.len());
                if beta * y[basis.len() - 1].abs() < 0.1 * cfg.tol * theta.abs().max(1.0) {
                    break;
                }
            }
            basis.push(w.iter().map(|x| x / beta).collect());
        }

        let m = basis.len();
        let eig = SymmetricEigen::new(t.view((0, 0), (m, m)).into_owned());
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let theta = eig.eigenvalues[order[0]];
        let x = combine(&basis, eig.eigenvectors.column(order[0]).as_slice());
        let residual = true_residual(op, &x, theta, &mut scratch);
        if residual < best.1 {
            best = (theta, residual, x.clone());
        }
        if residual <= cfg.tol * theta.abs().max(1.0) {
            return Ok(Pair {
                energy: theta,
                residual,
                vector: x,
                iterations,
            });
        }
        if iterations >= budget {
            return Err(Error::NoConvergence {
                iterations,
                residual: best.1,
                energy: best.0,
                ritz_vector: RitzVector(Arc::new(best.2)),
            });
        }

        // thick restart: lowest Ritz vectors plus the normalized residual, whose
        // couplings to them are picked up when it is processed
        t.fill(0.0);
        let k = keep.min(m);
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
        for (slot, &c) in order.iter().take(k).enumerate() {
            kept.push(combine(&basis, eig.eigenvectors.column(c).as_slice()));
            t[(slot, slot)] = eig.eigenvalues[c];
        }
        orthogonalize(&mut w, locked, &kept, None);
        let mut nw = norm(&w);
        if nw <= BREAKDOWN * scale {
            // invariant subspace without meeting tol: continue in a fresh random direction
            let mut outside: Vec<Vec<f64>> = locked.to_vec();
            outside.extend(kept.iter().cloned());
            match random_start(dim, sign, op, &outside, rng) {
                Ok(v) => {
                    w = v;
                    nw = 1.0;
                }
                Err(_) => {
                    return Err(Error::NoConvergence {
                        iterations,
                        residual: best.1,
                        energy: best.0,
                        ritz_vector: RitzVector(Arc::new(best.2)),
                    })
                }
            }
        }
        if k + 1 > m_max {
            kept.truncate(m_max - 1);
        }
        kept.push(w.iter().map(|v| v / nw).collect());
        basis = kept;
    }
}

fn lowest_ritz(t: &DMatrix<f64>, m: usize) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(t.view((0, 0), (m, m)).into_owned());
    let (i, theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .unwrap();
    (theta, eig.eigenvectors.column(i).iter().copied().collect())
}

fn combine(basis: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; basis[0].len()];
    for (v, &c) in basis.iter().zip(y) {
        x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += c * vi);
    }
    let n = norm(&x);
    x.iter_mut().for_each(|xi| *xi /= n);
    x
}

fn true_residual(op: &dyn LinearOperator, x: &[f64], theta: f64, w: &mut [f64]) -> f64 {
    op.apply(x, w);
    w.iter()
        .zip(x)
        .map(|(hx, xi)| (hx - theta * xi).powi(2))
        .sum::<f64>()
        .sqrt()
}
