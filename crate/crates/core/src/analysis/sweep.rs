use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cutoff::{converge_cutoff, CutoffOptions, CutoffReport};
use super::point::{ground_point, PointParams, PointSolution};
use crate::eigensolver::LanczosConfig;
use crate::error::{Error, ErrorRecord, Result};
use crate::hamiltonian::ModelKind;
use crate::lattice::LatticeCluster;
use crate::observables::ObservableSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// g/ω_c.
    G,
    /// J/ω_d.
    JOverOmegaD,
    /// J_c/J of the effective spin model.
    JcOverJ,
}

impl SweepAxis {
    pub fn column(self) -> &'static str {
        match self {
            SweepAxis::G => "g",
            SweepAxis::JOverOmegaD => "J_over_omega_d",
            SweepAxis::JcOverJ => "Jc_over_J",
        }
    }

    /// Parameters at axis value `v`, the rest taken from `base`.
    pub fn apply(self, base: &PointParams, v: f64) -> PointParams {
        let mut p = *base;
        match self {
            SweepAxis::G => p.g = v,
            SweepAxis::JOverOmegaD => p.j = v * base.omega_d,
            SweepAxis::JcOverJ => p.j_c = Some(v * base.j),
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "linear")]
    pub spacing: Spacing,
}

fn linear() -> Spacing {
    Spacing::Linear
}

impl Grid {
    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        Grid {
            min,
            max,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 3 {
            return Err(Error::Config(format!("grid needs at least 3 points, got {}", self.count)));
        }
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Config(format!("grid needs min < max, got [{}, {}]", self.min, self.max)));
        }
        if self.spacing == Spacing::Log && self.min <= 0.0 {
            return Err(Error::Config("log grid needs a positive minimum".into()));
        }
        Ok(())
    }

    /// Ascending grid values; the endpoints are exact.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i + 1 == self.count {
                    return self.max;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + t * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", deny_unknown_fields)]
pub enum CutoffPolicy {
    Fixed { n_ph_max: usize },
    /// Doubling protocol of [`converge_cutoff`] at every point.
    Auto(CutoffOptions),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub cluster: LatticeCluster,
    pub base: PointParams,
    pub axis: SweepAxis,
    pub grid: Grid,
    pub cutoff: CutoffPolicy,
    /// Observable columns to record; empty records all of them.
    #[serde(default)]
    pub columns: Vec<String>,
    pub lanczos: LanczosConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        for c in &self.columns {
            if !ObservableSet::COLUMNS.contains(&c.as_str()) {
                return Err(Error::Config(format!("unknown observable column `{c}`")));
            }
        }
        if self.axis == SweepAxis::JcOverJ {
            if self.model != ModelKind::EffectiveSpin {
                return Err(Error::Config("J_c/J sweeps need the effective spin model".into()));
            }
            if self.base.j == 0.0 {
                return Err(Error::Config("J_c/J sweeps need J != 0".into()));
            }
        }
        if self.axis == SweepAxis::JOverOmegaD && self.base.omega_d == 0.0 {
            return Err(Error::Config("J/omega_d sweeps need omega_d != 0".into()));
        }
        if self.model == ModelKind::Obd {
            return Err(Error::Config("the OBD model has no parameters to sweep".into()));
        }
        if matches!(self.cutoff, CutoffPolicy::Auto(_)) && !matches!(self.model, ModelKind::Full | ModelKind::Polaron) {
            return Err(Error::Config("automatic cutoffs need a model with photons".into()));
        }
        Ok(())
    }

    pub fn recorded_columns(&self) -> Vec<String> {
        if self.columns.is_empty() {
            ObservableSet::COLUMNS.iter().map(|s| s.to_string()).collect()
        } else {
            self.columns.clone()
        }
    }

    /// Hash identifying one grid point: everything that influences its result.
    pub fn point_hash(&self, value: f64) -> String {
        let key = serde_json::json!({
            "model": self.model,
            "cluster": self.cluster,
            "base": self.base,
            "axis": self.axis,
            "value": value.to_bits(),
            "cutoff": self.cutoff,
            "lanczos": self.lanczos,
        });
        hex::encode(Sha256::digest(key.to_string().as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub hash: String,
    pub params: PointParams,
    /// Cutoff actually used (the accepted one under the automatic policy).
    pub n_ph_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// Observable value from the stored solution.
    pub fn value(&self, column: &str) -> Option<f64> {
        let sol = self.solution.as_ref()?;
        sol.get("observables")?.get(column)?.as_f64()
    }

    pub fn field(&self, name: &str) -> Option<&serde_json::Value> {
        self.solution.as_ref()?.get(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub spec: SweepSpec,
    /// Sorted by axis value, one row per grid point.
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `(axis values, column values)` over the successful rows that define the column.
    pub fn column(&self, name: &str) -> (Vec<f64>, Vec<f64>) {
        self.rows
            .iter()
            .filter_map(|r| r.value(name).map(|v| (r.axis_value, v)))
            .unzip()
    }

    pub fn n_failed(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec![self.spec.axis.column().to_string()];
        h.extend(self.spec.recorded_columns());
        h.extend(["n_ph_max", "ground_sector", "gap", "status"].map(String::from));
        h
    }

    pub fn csv_records(&self) -> Vec<Vec<String>> {
        let columns = self.spec.recorded_columns();
        self.rows
            .iter()
            .map(|r| {
                let mut rec = vec![format!("{}", r.axis_value)];
                for c in &columns {
                    rec.push(r.value(c).map(|v| format!("{v:.12e}")).unwrap_or_default());
                }
                rec.push(r.n_ph_max.map(|n| n.to_string()).unwrap_or_default());
                rec.push(
                    r.field("ground_sector")
                        .and_then(|v| v.as_str())
                        .unwrap_or_default()
                        .to_string(),
                );
                rec.push(
                    r.field("gap")
                        .and_then(|v| v.as_f64())
                        .map(|v| format!("{v:.12e}"))
                        .unwrap_or_default(),
                );
                rec.push(match &r.error {
                    None => "ok".into(),
                    Some(e) => format!("error:{}", e.kind),
                });
                rec
            })
            .collect()
    }

    pub fn provenance(&self) -> serde_json::Value {
        serde_json::json!({
            "spec": self.spec,
            "cluster": self.spec.cluster.to_json(),
            "n_points": self.rows.len(),
            "n_failed": self.n_failed(),
            "cutoffs_used": self.rows.iter().map(|r| r.n_ph_max).collect::<Vec<_>>(),
        })
    }
}

fn solve_row(spec: &SweepSpec, value: f64) -> SweepRow {
    let params = spec.axis.apply(&spec.base, value);
    let mut row = SweepRow {
        axis_value: value,
        hash: spec.point_hash(value),
        params,
        n_ph_max: None,
        solution: None,
        error: None,
    };
    let result: Result<(PointSolution, Option<CutoffReport>)> = (|| match &spec.cutoff {
        CutoffPolicy::Fixed { n_ph_max } => {
            let model = params.model(&spec.cluster, *n_ph_max);
            let (sol, _) = ground_point(spec.model, &model, params.overrides(), &spec.lanczos)?;
            Ok((sol, None))
        }
        CutoffPolicy::Auto(opts) => {
            let model = params.model(&spec.cluster, opts.n_start);
            let (n, report) = converge_cutoff(spec.model, &model, params.overrides(), opts, &spec.lanczos)?;
            let (sol, _) = ground_point(spec.model, &model.with_cutoff(n), params.overrides(), &spec.lanczos)?;
            Ok((sol, Some(report)))
        }
    })();
    match result {
        Ok((sol, report)) => {
            row.n_ph_max = Some(sol.n_ph_max);
            let mut v = serde_json::to_value(&sol).expect("plain data");
            if let Some(r) = report {
                v["cutoff_report"] = serde_json::to_value(r).expect("plain data");
            }
            row.solution = Some(v);
        }
        Err(e) => row.error = Some(e.record()),
    }
    row
}

/// Solves every grid point. Failures are recorded per row, never skipped.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    run_sweep_with(spec, &HashMap::new(), &|_| {})
}

/// Like [`run_sweep`], reusing rows of `done` whose hash matches and reporting
/// each newly solved row to `on_row` as soon as it completes.
pub fn run_sweep_with(
    spec: &SweepSpec,
    done: &HashMap<String, SweepRow>,
    on_row: &(dyn Fn(&SweepRow) + Sync),
) -> Result<SweepTable> {
    spec.validate()?;
    let values = spec.grid.values();
    let task = |&v: &f64| {
        if let Some(row) = done.get(&spec.point_hash(v)) {
            return row.clone();
        }
        let row = solve_row(spec, v);
        on_row(&row);
        row
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<SweepRow> = {
        use rayon::prelude::*;
        values.par_iter().map(task).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<SweepRow> = values.iter().map(task).collect();
    Ok(SweepTable { spec: spec.clone(), rows })
}
