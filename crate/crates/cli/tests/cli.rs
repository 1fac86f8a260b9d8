use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqed"))
        .args(args)
        .output()
        .expect("spawn cqed")
}

fn run_with(dir: &Path, name: &str, config: &str, sub: &str, extra: &[&str]) -> (Output, std::path::PathBuf) {
    let cfg = dir.join(format!("{name}.toml"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(name);
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (cqed(&args), out)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

const PARAELECTRIC: &str = r#"
model = "full"
[cluster]
geometry = "square"
n = 8
[point]
omega_d = 1.0
g = 0.0
j_over_omega_d = 0.0
[cutoff]
policy = "fixed"
n_ph_max = 2
"#;

#[test]
fn paraelectric_point_is_uncorrelated() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, out) = run_with(tmp.path(), "para", PARAELECTRIC, "ground", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let obs = json(&out.join("observables.json"));
    assert!((obs["corr_ferro"].as_f64().unwrap() - 1.0 / 8.0).abs() < 1e-10);
    assert!((obs["energy"].as_f64().unwrap() + 4.0).abs() < 1e-10);
    assert!(obs["photon_number"].as_f64().unwrap() < 1e-20);
    let hash = obs["provenance"]["hash"].as_str().unwrap().to_string();
    let resolved = fs::read_to_string(out.join("config.resolved.toml")).unwrap();
    assert!(resolved.starts_with(&format!("# provenance {hash}")));
    assert!(resolved.contains("[lanczos]"), "defaults are written out");
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = PARAELECTRIC.replace("g = 0.0", "omega_x = 0.0");
    let (o, out) = run_with(tmp.path(), "bad", &bad, "ground", &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = json(&out.join("error.json"));
    assert_eq!(err["error"]["kind"], "config");
    assert!(err["error"]["message"].as_str().unwrap().contains("omega_x"));

    let nested = PARAELECTRIC.replace("n_ph_max = 2", "n_ph_max = 2\nextra = 1");
    let (o, _) = run_with(tmp.path(), "nested", &nested, "ground", &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resolved_config_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = PARAELECTRIC.replace("g = 0.0", "g = 0.7").replace("j_over_omega_d = 0.0", "j_over_omega_d = 0.4");
    let (o, out) = run_with(tmp.path(), "rt", &cfg, "ground", &[]);
    assert!(o.status.success());
    let first = fs::read_to_string(out.join("ground.json")).unwrap();
    let resolved = out.join("config.resolved.toml");
    let copy = tmp.path().join("resolved.toml");
    fs::copy(&resolved, &copy).unwrap();
    let o = cqed(&["ground", "--config", copy.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(first, fs::read_to_string(out.join("ground.json")).unwrap());
}

const TFI_SWEEP: &str = r#"
model = "full"
[cluster]
geometry = "square"
n = 8
[point]
omega_d = 1.0
g = 0.0
[cutoff]
policy = "fixed"
n_ph_max = 0
[sweep]
axis = "j_over_omega_d"
min = 0.2
max = 1.4
count = 13
columns = ["corr_stag", "fluct_abs_p_stag"]
[[sweep.extract]]
method = "fluctuation_peak"
"#;

#[test]
fn sweep_extracts_boundary() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, out) = run_with(tmp.path(), "tfi", TFI_SWEEP, "sweep", &["--emit-gnuplot"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = data_lines(&out.join("sweep.csv"));
    assert_eq!(lines[0], "J_over_omega_d,corr_stag,fluct_abs_p_stag,n_ph_max,ground_sector,gap,status");
    assert_eq!(lines.len(), 14);
    let b = json(&out.join("boundary.json"));
    let x = b["results"][0]["estimate"]["position"].as_f64().unwrap();
    assert!(x > 0.4 && x < 1.0, "J* = {x}");
    assert!(out.join("sweep.gp").exists());
}

#[test]
fn resumed_sweep_matches_uninterrupted() {
    let tmp = tempfile::tempdir().unwrap();
    let (o, out) = run_with(tmp.path(), "full", TFI_SWEEP, "sweep", &[]);
    assert!(o.status.success());
    let reference = fs::read_to_string(out.join("sweep.csv")).unwrap();

    // keep five finished rows and a torn sixth, as after an interrupt
    let points = out.join("points.jsonl");
    let text = fs::read_to_string(&points).unwrap();
    let mut partial: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    partial.push_str(&text.lines().nth(5).unwrap()[..20]);
    fs::write(&points, partial).unwrap();
    fs::remove_file(out.join("sweep.csv")).unwrap();

    let cfg = tmp.path().join("full.toml");
    let o = cqed(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--resume"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("5 completed points reused"));
    assert_eq!(reference, fs::read_to_string(out.join("sweep.csv")).unwrap());
}

#[test]
fn failed_points_are_recorded_and_fail_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    // the effective spin model is undefined at g = 0
    let cfg = TFI_SWEEP.replace("model = \"full\"", "model = \"effective_spin\"");
    let (o, out) = run_with(tmp.path(), "spin", &cfg, "sweep", &[]);
    assert_eq!(o.status.code(), Some(1));
    let lines = data_lines(&out.join("sweep.csv"));
    assert!(lines[1..].iter().all(|l| l.ends_with("error:config")));
    let b = json(&out.join("boundary.json"));
    assert_eq!(b["results"][0]["error"]["kind"], "config");
}

#[test]
fn reduced_size_order_parameter_sweep_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"
model = "full"
[cluster]
geometry = "square"
n = 10
[point]
g = 0.5
[cutoff]
policy = "fixed"
n_ph_max = 4
[sweep]
axis = "j_over_omega_d"
min = 0.0
max = 1.0
count = 3
columns = ["corr_stag", "photon_number"]
"#;
    let (o, out) = run_with(tmp.path(), "fig", cfg, "sweep", &["--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = data_lines(&out.join("sweep.csv"));
    assert!(lines[0].starts_with("J_over_omega_d,corr_stag,photon_number,"));
    let last: Vec<&str> = lines[3].split(',').collect();
    let stag: f64 = last[1].parse().unwrap();
    let first_stag: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(stag > first_stag, "staggered correlations grow with J");
}

#[test]
fn cutoff_scan_trace_and_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"
model = "polaron"
[cluster]
geometry = "square"
n = 8
[point]
omega_d = 0.0
g = 2.0
j = 0.5
[cutoff]
policy = "auto"
n_start = 4
"#;
    let (o, out) = run_with(tmp.path(), "scan", cfg, "cutoff-scan", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&out.join("cutoff_scan.json"))["accepted"], 4);
    assert_eq!(data_lines(&out.join("cutoff_scan.csv"))[0], "n_ph_max,energy,photon_number");

    let tight = cfg.replace("omega_d = 0.0", "omega_d = 1.0").replace("n_start = 4", "n_start = 4\nmax_cutoff = 8\nrtol = 0.0\natol = 1e-12");
    let (o, out) = run_with(tmp.path(), "tight", &tight, "cutoff-scan", &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = json(&out.join("error.json"));
    assert_eq!(err["error"]["kind"], "budget_exceeded");
    assert_eq!(err["detail"]["trace"].as_array().unwrap().len(), 2);
    assert_eq!(data_lines(&out.join("cutoff_scan.csv")).len(), 3);
}

fn histogram(path: &Path) -> Vec<(f64, f64)> {
    data_lines(path)[1..]
        .iter()
        .map(|l| {
            let mut it = l.split(',').map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

#[test]
fn photon_histograms_at_two_cutoffs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"
model = "full"
[cluster]
geometry = "square"
n = 8
[point]
g = 1.0
j_over_omega_d = -1.0
[cutoff]
policy = "fixed"
n_ph_max = 24
[hist]
kinds = ["photon", "polarization"]
photon_cutoffs = [48]
"#;
    let (o, out) = run_with(tmp.path(), "hist", cfg, "hist", &["--emit-gnuplot"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = histogram(&out.join("hist_photon.csv"));
    let b = histogram(&out.join("hist_photon_n48.csv"));
    assert_eq!((a.len(), b.len()), (25, 49));
    for h in [&a, &b] {
        assert!((h.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-10);
    }
    let mean = |h: &[(f64, f64)]| h.iter().map(|(n, w)| n * w).sum::<f64>();
    let obs = json(&out.join("observables.json"));
    assert!((mean(&a) - obs["photon_number"].as_f64().unwrap()).abs() < 1e-9);
    let p = histogram(&out.join("hist_polarization.csv"));
    assert_eq!(p.len(), 9);
    assert!(out.join("hist_photon_n48.gp").exists());
}

#[test]
fn ordered_3sl_histogram_peaks() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"
model = "effective_spin"
[cluster]
geometry = "triangular"
n = 12
[point]
g = 1.0
j = 1.0
h_z = 0.3
j_c = 0.01
[hist]
kinds = ["complex3sl"]
"#;
    let (o, out) = run_with(tmp.path(), "tsl", cfg, "hist", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let peaks = json(&out.join("hist_3sl_peaks.json"));
    let peaks = peaks["peaks"].as_array().unwrap();
    let top = peaks[0]["weight"].as_f64().unwrap();
    let angles: Vec<f64> = peaks
        .iter()
        .filter(|p| p["weight"].as_f64().unwrap() > top * (1.0 - 1e-9))
        .map(|p| p["theta_over_pi_6"].as_f64().unwrap())
        .collect();
    assert_eq!(angles.len(), 6);
    for a in angles {
        let odd = (a - 1.0) / 2.0;
        assert!((odd - odd.round()).abs() < 0.05, "angle {a} pi/6");
    }
}

#[test]
fn obd_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = "model = \"obd\"\n[obd]\nsizes = [9, 12]\njc_over_j = [0.0, 0.5]\n";
    let (o, out) = run_with(tmp.path(), "obd", cfg, "obd", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = data_lines(&out.join("obd_scaling.csv"));
    assert!(lines[1].starts_with("9,42,"));
    assert!(lines[2].starts_with("12,120,"));
    assert_eq!(data_lines(&out.join("cascade_N12.csv")).len(), 3);
}

#[test]
fn presets_lists_clusters() {
    let o = cqed(&["presets"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("geometry,N,cell,bonds,sublattice_sizes"));
    assert!(text.contains("triangular,24,"));
    assert!(text.contains("square,16,\"[[4, 0], [0, 4]]\",32,"));
}

#[test]
fn missing_config_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("none");
    let o = cqed(&["ground", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&out.join("error.json"))["error"]["kind"], "config");
}
