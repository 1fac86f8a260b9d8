use serde::{Deserialize, Serialize};

use super::point::ground_point;
use crate::eigensolver::LanczosConfig;
use crate::error::{Error, Result};
use crate::hamiltonian::{ModelKind, ModelParams, SpinOverrides};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffOptions {
    /// Observable columns that must settle, `energy` included.
    pub observables: Vec<String>,
    pub rtol: f64,
    /// Floor of the tolerance, so observables that vanish can settle.
    pub atol: f64,
    pub n_start: usize,
    /// Largest cutoff the protocol may try.
    pub max_cutoff: usize,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        CutoffOptions {
            observables: vec!["energy".into(), "photon_number".into()],
            rtol: 1e-6,
            atol: 1e-6,
            n_start: 8,
            max_cutoff: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffLevel {
    pub n_ph_max: usize,
    /// In the order of [`CutoffOptions::observables`].
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffReport {
    pub kind: ModelKind,
    pub observables: Vec<String>,
    pub rtol: f64,
    pub atol: f64,
    pub levels: Vec<CutoffLevel>,
    pub accepted: usize,
}

impl CutoffReport {
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["n_ph_max".to_string()];
        h.extend(self.observables.iter().cloned());
        h
    }

    pub fn csv_records(&self) -> Vec<Vec<String>> {
        self.levels
            .iter()
            .map(|l| {
                let mut r = vec![l.n_ph_max.to_string()];
                r.extend(l.values.iter().map(|v| format!("{v:.15e}")));
                r
            })
            .collect()
    }
}

fn settled(a: &[f64], b: &[f64], rtol: f64, atol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < (rtol * y.abs()).max(atol))
}

/// Doubles the cutoff from `n_start` until no tracked observable moves by
/// more than `max(rtol |value|, atol)` between consecutive levels, and
/// returns the lower cutoff of the first settled pair with the level trace.
pub fn converge_cutoff(
    kind: ModelKind,
    params: &ModelParams,
    overrides: SpinOverrides,
    opts: &CutoffOptions,
    cfg: &LanczosConfig,
) -> Result<(usize, CutoffReport)> {
    if !matches!(kind, ModelKind::Full | ModelKind::Polaron) {
        return Err(Error::Config(format!("{kind:?} has no photon cutoff")));
    }
    if opts.n_start < 1 {
        return Err(Error::Config("n_start must be at least 1".into()));
    }
    if opts.observables.is_empty() {
        return Err(Error::Config("no observables to track".into()));
    }
    let mut levels: Vec<CutoffLevel> = Vec::new();
    let budget_error = |levels: &[CutoffLevel], last: usize| Error::BudgetExceeded {
        last_cutoff: last,
        trace: levels.iter().map(|l| (l.n_ph_max, l.values.clone())).collect(),
    };
    let mut n = opts.n_start;
    loop {
        if n > opts.max_cutoff {
            return Err(budget_error(&levels, n / 2));
        }
        let (sol, _) = match ground_point(kind, &params.with_cutoff(n), overrides, cfg) {
            Err(Error::DimensionOverflow { .. }) => return Err(budget_error(&levels, n / 2)),
            r => r?,
        };
        let values = opts
            .observables
            .iter()
            .map(|c| {
                sol.observables
                    .get(c)
                    .ok_or_else(|| Error::Config(format!("observable `{c}` unavailable for {kind:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(prev) = levels.last() {
            if settled(&prev.values, &values, opts.rtol, opts.atol) {
                let accepted = prev.n_ph_max;
                levels.push(CutoffLevel { n_ph_max: n, values });
                return Ok((
                    accepted,
                    CutoffReport {
                        kind,
                        observables: opts.observables.clone(),
                        rtol: opts.rtol,
                        atol: opts.atol,
                        levels,
                        accepted,
                    },
                ));
            }
        }
        levels.push(CutoffLevel { n_ph_max: n, values });
        n *= 2;
    }
}
