use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::sync::Mutex;

use cqed_core::analysis::{
    converge_cutoff, crossover_gradient_drop, crossover_polaron_peak, fluctuation_peak, ground_point, obd_cascade,
    CutoffOptions, CutoffPolicy, CutoffReport, PeakEstimate, SweepAxis, SweepRow, SweepSpec, SweepTable,
};
use cqed_core::hamiltonian::obd::obd_sx_max_with;
use cqed_core::hamiltonian::{ModelKind, ModelParams};
use cqed_core::hilbert::QuantumState;
use cqed_core::lattice::{preset_cluster, preset_table, Geometry, LatticeCluster};
use cqed_core::observables::{complex_3sl_histogram, photon_histogram, polarization_histogram, Histogram};
use cqed_core::{Error, Result};
use serde_json::{json, Value};

use crate::config::{ExtractMethod, HistConfig, HistName, RunConfig};
use crate::output::{Plot, RunDir};

/// Number of recorded failures that do not abort the run (sweep points,
/// boundary extractions).
pub type Failures = usize;

fn model_params(cfg: &RunConfig, cluster: &LatticeCluster, n_ph_max: usize) -> Result<ModelParams> {
    Ok(cfg.point.params()?.model(cluster, n_ph_max))
}

fn has_photons(kind: ModelKind) -> bool {
    matches!(kind, ModelKind::Full | ModelKind::Polaron)
}

/// Cutoff of a single-point run, with the doubling trace when it was converged.
fn point_cutoff(cfg: &RunConfig, cluster: &LatticeCluster) -> Result<(usize, Option<CutoffReport>)> {
    match cfg.cutoff() {
        CutoffPolicy::Fixed { n_ph_max } => Ok((*n_ph_max, None)),
        CutoffPolicy::Auto(opts) => {
            if !has_photons(cfg.model) {
                return Err(Error::Config(format!("{:?} has no photon cutoff to converge", cfg.model)));
            }
            let params = model_params(cfg, cluster, opts.n_start)?;
            let (n, report) = converge_cutoff(cfg.model, &params, cfg.point.params()?.overrides(), opts, &cfg.lanczos)?;
            Ok((n, Some(report)))
        }
    }
}

fn cutoff_csv(run: &RunDir, name: &str, report: &CutoffReport) -> Result<()> {
    run.write_csv(name, &report.csv_header(), &report.csv_records())?;
    let mut plot = Plot::lines("n_ph_max", (2..=report.observables.len() + 1).collect());
    plot.logx = true;
    run.gnuplot(name, &plot)
}

pub fn ground(cfg: &RunConfig, run: &RunDir, force_hist: bool) -> Result<Failures> {
    let cluster = cfg.cluster()?;
    let (n, report) = point_cutoff(cfg, &cluster)?;
    let params = model_params(cfg, &cluster, n)?;
    let overrides = cfg.point.params()?.overrides();
    let (sol, parity) = ground_point(cfg.model, &params, overrides, &cfg.lanczos)?;
    run.write_json(
        "ground.json",
        json!({
            "model": cfg.model,
            "params": params.to_json(),
            "cluster": cluster.to_json(),
            "solution": sol,
            "sectors": parity.to_json(),
            "cutoff_report": report,
        }),
    )?;
    run.write_json("observables.json", sol.observables.to_json())?;
    if let Some(r) = &report {
        cutoff_csv(run, "cutoff_trace.csv", r)?;
    }
    let hist = match (&cfg.hist, force_hist) {
        (Some(h), _) => Some(h.clone()),
        (None, true) => Some(HistConfig::default()),
        (None, false) => None,
    };
    if let Some(h) = hist {
        let states: Vec<QuantumState> = parity.ground_states().into_iter().cloned().collect();
        histograms(cfg, run, &h, &cluster, &states, n)?;
    }
    println!(
        "E0 = {:.12} ({:?} sector, n_ph_max = {}, dim = {})",
        sol.observables.energy, sol.ground_sector, sol.n_ph_max, sol.dim
    );
    Ok(0)
}

/// Equal-weight mixture of per-state histograms.
fn mixture(states: &[QuantumState], f: impl Fn(&QuantumState) -> Result<Histogram>) -> Result<Histogram> {
    let mut acc: Option<Histogram> = None;
    for s in states {
        let h = f(s)?;
        match &mut acc {
            None => acc = Some(h),
            Some(a) => {
                if a.weights.len() != h.weights.len() {
                    return Err(Error::Config("histograms of the ground level differ in shape".into()));
                }
                a.weights.iter_mut().zip(&h.weights).for_each(|(x, y)| *x += y);
                a.outside += h.outside;
            }
        }
    }
    let mut h = acc.ok_or_else(|| Error::Config("no states".into()))?;
    let k = states.len() as f64;
    h.weights.iter_mut().for_each(|w| *w /= k);
    h.outside /= k;
    Ok(h)
}

fn histograms(
    cfg: &RunConfig,
    run: &RunDir,
    hist: &HistConfig,
    cluster: &LatticeCluster,
    states: &[QuantumState],
    n: usize,
) -> Result<()> {
    let kinds = if hist.kinds.is_empty() {
        let mut k = vec![HistName::Polarization];
        if has_photons(cfg.model) {
            k.push(HistName::Photon);
        }
        if cluster.geometry == Geometry::Triangular {
            k.push(HistName::Complex3sl);
        }
        k
    } else {
        hist.kinds.clone()
    };
    let beta = cfg.point.g;
    for kind in kinds {
        match kind {
            HistName::Polarization => {
                let h = mixture(states, |s| Ok(polarization_histogram(s)))?;
                run.write_csv_text("hist_polarization.csv", &h.to_csv())?;
                run.gnuplot("hist_polarization.csv", &Plot::lines("S_x", vec![2]))?;
            }
            HistName::Photon => {
                let h = mixture(states, |s| photon_histogram(s, beta, hist.n_out))?;
                run.write_csv_text("hist_photon.csv", &h.to_csv())?;
                run.gnuplot("hist_photon.csv", &Plot::lines("n", vec![2]))?;
                for &m in hist.photon_cutoffs.iter().filter(|&&m| m != n) {
                    let params = model_params(cfg, cluster, m)?;
                    let (_, parity) = ground_point(cfg.model, &params, cfg.point.params()?.overrides(), &cfg.lanczos)?;
                    let other: Vec<QuantumState> = parity.ground_states().into_iter().cloned().collect();
                    let h = mixture(&other, |s| photon_histogram(s, beta, hist.n_out))?;
                    let name = format!("hist_photon_n{m}.csv");
                    run.write_csv_text(&name, &h.to_csv())?;
                    run.gnuplot(&name, &Plot::lines("n", vec![2]))?;
                }
            }
            HistName::Complex3sl => {
                let h = mixture(states, |s| complex_3sl_histogram(s, cluster, hist.bins))?;
                run.write_csv_text("hist_3sl.csv", &h.to_csv())?;
                let mut plot = Plot::lines("Re p3SL", vec![3]);
                plot.ylabel = Some("Im p3SL".into());
                plot.heatmap = Some(0.6);
                run.gnuplot("hist_3sl.csv", &plot)?;
                let sixth = std::f64::consts::PI / 6.0;
                let peaks: Vec<Value> = h
                    .peaks(0.5)
                    .iter()
                    .map(|p| {
                        json!({
                            "re": p.re, "im": p.im, "radius": p.radius,
                            "theta_over_pi_6": p.theta / sixth, "weight": p.weight,
                        })
                    })
                    .collect();
                run.write_json("hist_3sl_peaks.json", json!({ "bin_width": h.bin_width(), "min_rel_weight": 0.5, "peaks": peaks }))?;
            }
        }
    }
    Ok(())
}

fn read_points(path: &std::path::Path) -> Result<HashMap<String, SweepRow>> {
    let mut done = HashMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(e.into()),
    };
    for line in BufReader::new(file).lines() {
        let line = line?;
        // a torn last line from an interrupted run is simply recomputed
        if let Ok(row) = serde_json::from_str::<SweepRow>(&line) {
            if row.is_ok() {
                done.insert(row.hash.clone(), row);
            }
        }
    }
    Ok(done)
}

fn sweep_spec(cfg: &RunConfig) -> Result<SweepSpec> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing [sweep] table".into()))?;
    let spec = SweepSpec {
        model: cfg.model,
        cluster: cfg.cluster()?,
        base: cfg.point.params()?,
        axis: sweep.axis,
        grid: sweep.grid(),
        cutoff: cfg.cutoff().clone(),
        columns: sweep.columns.clone(),
        lanczos: cfg.lanczos.clone(),
    };
    spec.validate()?;
    Ok(spec)
}

pub fn sweep(cfg: &RunConfig, run: &RunDir, resume: bool) -> Result<Failures> {
    let spec = sweep_spec(cfg)?;
    let points = run.path("points.jsonl");
    let done = if resume { read_points(&points)? } else { HashMap::new() };
    let file = OpenOptions::new()
        .create(true)
        .write(true)
        .append(resume)
        .truncate(!resume)
        .open(&points)?;
    let sink = Mutex::new((file, None::<Error>));
    let on_row = |row: &SweepRow| {
        let line = serde_json::to_string(row).expect("plain data");
        let mut guard = sink.lock().expect("sink lock");
        let (f, err) = &mut *guard;
        if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
            err.get_or_insert(e.into());
        }
    };
    if !done.is_empty() {
        println!("resuming: {} completed points reused", done.len());
    }
    let table = cqed_core::analysis::run_sweep_with(&spec, &done, &on_row)?;
    if let Some(e) = sink.into_inner().expect("sink lock").1 {
        return Err(e);
    }
    write_table(run, &table)?;
    let mut failures = table.n_failed();
    if let Some(sweep) = &cfg.sweep {
        if !sweep.extract.is_empty() {
            let mut results = Vec::new();
            for x in &sweep.extract {
                let r: Result<PeakEstimate> = match x.method {
                    ExtractMethod::FluctuationPeak => {
                        let col = x.column.as_deref().unwrap_or(default_fluctuation(spec.axis, spec.base.j));
                        fluctuation_peak(&table, col)
                    }
                    ExtractMethod::PolaronPhotonPeak => crossover_polaron_peak(&table),
                    ExtractMethod::GradientDrop => crossover_gradient_drop(&table, x.column.as_deref()),
                };
                results.push(match r {
                    Ok(p) => {
                        println!("{:?}: {} at {} = {:.6}", x.method, p.column, spec.axis.column(), p.position);
                        json!({ "method": x.method, "estimate": p })
                    }
                    Err(e) => {
                        failures += 1;
                        json!({ "method": x.method, "column": x.column, "error": e.record() })
                    }
                });
            }
            run.write_json("boundary.json", json!({ "axis": spec.axis.column(), "results": results }))?;
        }
    }
    println!("{} points, {} failed", table.rows.len(), table.n_failed());
    Ok(failures)
}

/// Fluctuation column that marks the transition a J/ω_d sweep crosses.
fn default_fluctuation(axis: SweepAxis, j: f64) -> &'static str {
    match axis {
        SweepAxis::JOverOmegaD if j >= 0.0 => "fluct_abs_p_stag",
        _ => "fluct_abs_p",
    }
}

fn write_table(run: &RunDir, table: &SweepTable) -> Result<()> {
    let header = table.csv_header();
    run.write_csv("sweep.csv", &header, &table.csv_records())?;
    run.write_json("sweep.json", json!({ "table": table.provenance(), "rows": table.rows }))?;
    let columns = table.spec.recorded_columns();
    let ycols: Vec<usize> = columns
        .iter()
        .enumerate()
        .filter(|(_, c)| !table.spec.columns.is_empty() || c.starts_with("fluct_"))
        .map(|(i, _)| i + 2)
        .collect();
    let mut plot = Plot::lines(table.spec.axis.column(), ycols);
    plot.logx = table.spec.grid.spacing == cqed_core::analysis::Spacing::Log;
    run.gnuplot("sweep.csv", &plot)
}

pub fn cutoff_scan(cfg: &RunConfig, run: &RunDir) -> Result<Failures> {
    let cluster = cfg.cluster()?;
    let opts = match cfg.cutoff() {
        CutoffPolicy::Auto(o) => o.clone(),
        CutoffPolicy::Fixed { .. } => CutoffOptions::default(),
    };
    let params = model_params(cfg, &cluster, opts.n_start)?;
    match converge_cutoff(cfg.model, &params, cfg.point.params()?.overrides(), &opts, &cfg.lanczos) {
        Ok((n, report)) => {
            cutoff_csv(run, "cutoff_scan.csv", &report)?;
            run.write_json("cutoff_scan.json", json!({ "accepted": n, "report": report }))?;
            println!("accepted n_ph_max = {n}");
            Ok(0)
        }
        Err(Error::BudgetExceeded { last_cutoff, trace }) => {
            let mut header = vec!["n_ph_max".to_string()];
            header.extend(opts.observables.iter().cloned());
            let records: Vec<Vec<String>> = trace
                .iter()
                .map(|(n, v)| std::iter::once(n.to_string()).chain(v.iter().map(|x| format!("{x:.15e}"))).collect())
                .collect();
            run.write_csv("cutoff_scan.csv", &header, &records)?;
            Err(Error::BudgetExceeded { last_cutoff, trace })
        }
        Err(e) => Err(e),
    }
}

pub fn obd(cfg: &RunConfig, run: &RunDir) -> Result<Failures> {
    let obd = cfg.obd.clone().unwrap_or(crate::config::ObdConfig {
        sizes: Vec::new(),
        jc_over_j: Vec::new(),
        manifold_budget: cqed_core::hamiltonian::obd::DEFAULT_MANIFOLD_BUDGET,
    });
    let clusters: Vec<LatticeCluster> = if obd.sizes.is_empty() {
        vec![cfg.cluster()?]
    } else {
        obd.sizes
            .iter()
            .map(|&n| preset_cluster(Geometry::Triangular, n))
            .collect::<Result<_>>()?
    };
    let mut records = Vec::new();
    let mut reports = Vec::new();
    let mut cascades = Vec::new();
    for c in &clusters {
        let n = c.n_sites();
        let r = obd_sx_max_with(c, obd.manifold_budget, &cfg.lanczos)?;
        let sx = r.sx_max_value();
        println!("N = {n}: manifold {} states, S_x^max = {sx}", r.manifold_dim);
        records.push(vec![
            n.to_string(),
            r.manifold_dim.to_string(),
            format!("{:.12}", (r.manifold_dim as f64).ln() / n as f64),
            sx.to_f64().to_string(),
            format!("{:.6}", sx.to_f64() / n as f64),
            format!("{:.12e}", r.ground_energy),
        ]);
        reports.push(r);
        if !obd.jc_over_j.is_empty() {
            let cascade = obd_cascade(c, &obd.jc_over_j, &cfg.lanczos)?;
            let name = format!("cascade_N{n}.csv");
            run.write_csv(&name, &cascade.csv_header(), &cascade.csv_records())?;
            run.gnuplot(&name, &Plot::lines("J_c/J", vec![2]))?;
            cascades.push(cascade);
        }
    }
    let header = ["N", "manifold_dim", "ln_dim_over_N", "sx_max", "sx_max_over_N", "ground_energy"].map(String::from);
    run.write_csv("obd_scaling.csv", &header, &records)?;
    run.gnuplot("obd_scaling.csv", &Plot::lines("N", vec![4]))?;
    run.write_json("obd.json", json!({ "sizes": reports, "cascades": cascades }))?;
    Ok(0)
}

/// Preset clusters as CSV on stdout.
pub fn presets() -> Result<Failures> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["geometry", "N", "cell", "bonds", "sublattice_sizes"]).map_err(io)?;
    for g in [Geometry::Square, Geometry::Triangular] {
        for &(n, cell) in preset_table(g) {
            let c = preset_cluster(g, n)?;
            w.write_record([
                g.to_string(),
                n.to_string(),
                format!("{cell:?}"),
                c.bonds.len().to_string(),
                format!("{:?}", c.sublattice_sizes()),
            ])
            .map_err(io)?;
        }
    }
    w.flush()?;
    Ok(0)
}
