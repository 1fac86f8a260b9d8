use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::eigensolver::{lanczos_ground, LanczosConfig};
use crate::hamiltonian::{HamiltonianOp, ModelParams};
use crate::hilbert::{BasisDescriptor, Parity};
use crate::lattice::preset_cluster;

fn spin_state(n: usize, amp: impl FnMut(u64) -> f64) -> QuantumState {
    let d = BasisDescriptor::build(n, 0, Frame::SpinOnly, Parity::Both).unwrap();
    QuantumState::new(d, (0..1u64 << n).map(amp).collect())
}

fn random_spin_state(n: usize, seed: u64) -> QuantumState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    spin_state(n, |_| rng.random_range(-1.0..1.0))
}

fn config_of(cluster: &LatticeCluster, mut up: impl FnMut(usize, usize) -> bool) -> u64 {
    (0..cluster.n_sites())
        .filter(|&i| up(i, cluster.sublattice_of[i]))
        .fold(0, |s, i| s | (1 << i))
}

/// Product state with every dipole along -z: amplitude (-1)^{#(-x)} / 2^{N/2}.
fn paraelectric(n: usize) -> QuantumState {
    spin_state(n, |s| if (n as u32 - s.count_ones()) % 2 == 0 { 1.0 } else { -1.0 })
}

#[test]
fn neel_state_is_fully_staggered() {
    let c = preset_cluster(Geometry::Square, 8).unwrap();
    let neel = config_of(&c, |_, sub| sub == 0);
    let flipped = !neel & 0xff;
    let st = spin_state(8, |s| if s == neel || s == flipped { 1.0 } else { 0.0 });
    let oc = order_correlations(&st, &c).unwrap();
    assert!((oc.stag.unwrap() - 1.0).abs() < 1e-14);
    assert!(oc.ferro.abs() < 1e-14);
    assert!(oc.fixed_site_deviation < 1e-14);
    assert!(oc.three_sl.is_none());
    assert!(fluctuations(&st, &c, Fluctuation::AbsPStag, 0.0).unwrap().abs() < 1e-14);
    assert!((fluctuations(&st, &c, Fluctuation::PStag, 0.0).unwrap() - 16.0).abs() < 1e-12);
}

#[test]
fn structure_factor_sum_rule() {
    for (geometry, n) in [(Geometry::Square, 8), (Geometry::Triangular, 12)] {
        let c = preset_cluster(geometry, n).unwrap();
        let st = random_spin_state(n, 5);
        let all = structure_factor_all(&st, &c).unwrap();
        assert_eq!(all.len(), n);
        let total: f64 = all.iter().map(|(_, s)| s.value).sum();
        assert!((total - 1.0).abs() < 1e-12, "{geometry}: {total}");
    }
}

#[test]
fn correlators_equal_order_parameter_moments() {
    let sq = preset_cluster(Geometry::Square, 10).unwrap();
    let st = random_spin_state(10, 6);
    let oc = order_correlations(&st, &sq).unwrap();
    let m = order_moments(&st, &sq).unwrap();
    assert!((oc.ferro - 4.0 * m.p2 / 100.0).abs() < 1e-12);
    assert!((oc.stag.unwrap() - 4.0 * m.p_stag2.unwrap() / 100.0).abs() < 1e-12);

    let tri = preset_cluster(Geometry::Triangular, 12).unwrap();
    let st = random_spin_state(12, 7);
    let oc = order_correlations(&st, &tri).unwrap();
    let m = order_moments(&st, &tri).unwrap();
    assert!((oc.ferro - 4.0 * m.p2 / 144.0).abs() < 1e-12);
    assert!((oc.three_sl.unwrap() - 4.0 * m.abs_p3sl2.unwrap() / 144.0).abs() < 1e-12);
    // translation-invariant states agree with the fixed-site form
    let k = named_momentum(Geometry::Triangular, "K").unwrap();
    let para = paraelectric(12);
    let s = structure_factor(&para, &tri, &k).unwrap();
    assert!((s.value - s.fixed_site).abs() < 1e-14);
}

#[test]
fn paraelectric_state() {
    let c = preset_cluster(Geometry::Square, 8).unwrap();
    let st = paraelectric(8);
    let oc = order_correlations(&st, &c).unwrap();
    assert!((oc.ferro - 0.125).abs() < 1e-14);
    assert!((oc.stag.unwrap() - 0.125).abs() < 1e-14);
    assert!((fluctuations(&st, &c, Fluctuation::P, 0.0).unwrap() - 2.0).abs() < 1e-12);
    let h = polarization_histogram(&st);
    let binom = [1.0, 8.0, 28.0, 56.0, 70.0, 56.0, 28.0, 8.0, 1.0];
    for (w, b) in h.weights.iter().zip(binom) {
        assert!((w - b / 256.0).abs() < 1e-15);
    }
    assert!((h.total() - 1.0).abs() < 1e-14);
    assert!(h.moment(1).abs() < 1e-14);
    assert!((h.moment(2) - 2.0).abs() < 1e-13);
    // every dipole along -z: S = N/2
    assert!((total_spin(&st) - 20.0).abs() < 1e-12);
}

/// `⟨S²⟩` from explicit σ_y and σ_z actions in the σ_x basis.
fn total_spin_oracle(st: &QuantumState) -> f64 {
    let n = st.n_sites();
    let psi = &st.amplitudes;
    let sign = |t: u64, i: usize| if (t >> i) & 1 == 1 { 1.0 } else { -1.0 };
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sz = 0.0;
    for t in 0..psi.len() as u64 {
        let x: f64 = (0..n).map(|i| sign(t, i)).sum::<f64>() * 0.5 * psi[t as usize];
        let z: f64 = (0..n).map(|i| 0.5 * psi[(t ^ (1 << i)) as usize]).sum();
        let y: f64 = (0..n).map(|i| 0.5 * sign(t, i) * psi[(t ^ (1 << i)) as usize]).sum();
        sx += x * x;
        sy += y * y;
        sz += z * z;
    }
    sx + sy + sz
}

#[test]
fn total_spin_matches_explicit_operators() {
    for seed in 0..3 {
        let st = random_spin_state(5, seed);
        assert!((total_spin(&st) - total_spin_oracle(&st)).abs() < 1e-12);
    }
    let singlet = spin_state(2, |s| match s {
        0b01 => 1.0,
        0b10 => -1.0,
        _ => 0.0,
    });
    assert!(total_spin(&singlet).abs() < 1e-14);
    let up = spin_state(4, |s| if s == 0b1111 { 1.0 } else { 0.0 });
    assert!((total_spin(&up) - 6.0).abs() < 1e-14);
}

fn coherent(alpha: f64, nmax: usize) -> Vec<f64> {
    let mut c = vec![0.0; nmax + 1];
    c[0] = (-0.5 * alpha * alpha).exp();
    for n in 1..=nmax {
        c[n] = c[n - 1] * alpha / (n as f64).sqrt();
    }
    c
}

#[test]
fn coherent_photons_in_both_frames() {
    // standard frame: one dipole along +x, coherent field of amplitude 1.5
    let d = BasisDescriptor::build(1, 40, Frame::Standard, Parity::Both).unwrap();
    let c = coherent(1.5, 40);
    let amps = (0..d.dim()).map(|i| if i % 2 == 1 { c[i / 2] } else { 0.0 }).collect();
    let st = QuantumState::new(d, amps);
    let m = photon_moments(&st, 0.0).unwrap();
    assert!((m.number - 2.25).abs() < 1e-12);
    assert!((m.fluct_number - 2.25).abs() < 1e-10);
    // b = a + β S_x with β = -3 removes the displacement: polaron number zero
    let m = photon_moments(&st, -3.0).unwrap();
    assert!(m.polaron_number.abs() < 1e-12);

    // polaron vacuum with S_x = 1 and β = 1.5: coherent state of amplitude -1.5
    let d = BasisDescriptor::build(2, 6, Frame::Polaron, Parity::Both).unwrap();
    let amps = (0..d.dim()).map(|i| if i == 0b11 { 1.0 } else { 0.0 }).collect();
    let st = QuantumState::new(d, amps);
    let m = photon_moments(&st, 1.5).unwrap();
    assert!((m.number - 2.25).abs() < 1e-12);
    assert!((m.fluct_number - 2.25).abs() < 1e-12);
    assert!(m.polaron_number.abs() < 1e-14);
    let h = photon_histogram(&st, 1.5, Some(60)).unwrap();
    for (n, w) in h.weights.iter().enumerate() {
        let poisson = c[n.min(40)].powi(2);
        if n <= 40 {
            assert!((w - poisson).abs() < 1e-12, "n = {n}");
        }
    }
    assert!(h.outside < 1e-12);
    assert!((h.moment(1) - 2.25).abs() < 1e-10);
}

#[test]
fn photon_statistics_agree_between_frames() {
    let c = LatticeCluster::with_bonds(Geometry::Square, 2, &[(0, 1)]);
    let base = ModelParams::new(c.clone(), 1.0, 2.0, 0.5, 0);
    let cfg = LanczosConfig::default();
    let full = lanczos_ground(&HamiltonianOp::build_full(&base.with_cutoff(120)).unwrap(), &cfg).unwrap();
    let pol = lanczos_ground(&HamiltonianOp::build_polaron(&base.with_cutoff(32)).unwrap(), &cfg).unwrap();
    let a = photon_moments(full.ground_state(), 2.0).unwrap();
    let b = photon_moments(pol.ground_state(), 2.0).unwrap();
    for (x, y) in [
        (a.number, b.number),
        (a.fluct_number, b.fluct_number),
        (a.polaron_number, b.polaron_number),
        (a.fluct_polaron_number, b.fluct_polaron_number),
    ] {
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }
    let ha = photon_histogram(full.ground_state(), 2.0, None).unwrap();
    let hb = photon_histogram(pol.ground_state(), 2.0, Some(120)).unwrap();
    for (x, y) in ha.weights.iter().zip(&hb.weights) {
        assert!((x - y).abs() < 1e-7);
    }
    let sa = measure(&[full.ground_state()], &c, full.ground_energy(), PhotonContext::Beta(2.0)).unwrap();
    assert!((sa.total_spin - total_spin(pol.ground_state())).abs() < 1e-6);
}

#[test]
fn three_sublattice_histogram_peaks() {
    let c = preset_cluster(Geometry::Triangular, 12).unwrap();
    // sublattice polarizations (1, 0, -1) and its images under the hexagonal symmetries
    let pattern = |a: i32, b: i32, cc: i32| {
        let mut counts = [0usize; 3];
        config_of(&c, |_, sub| {
            let p = [a, b, cc][sub];
            counts[sub] += 1;
            p == 1 || (p == 0 && counts[sub] % 2 == 0)
        })
    };
    let perms = [(1, 0, -1), (0, 1, -1), (-1, 1, 0), (-1, 0, 1), (0, -1, 1), (1, -1, 0)];
    let configs: Vec<u64> = perms.iter().map(|&(a, b, cc)| pattern(a, b, cc)).collect();
    let st = spin_state(12, |s| if configs.contains(&s) { 1.0 } else { 0.0 });
    let h = complex_3sl_histogram(&st, &c, DEFAULT_3SL_BINS).unwrap();
    assert!((h.total() - 1.0).abs() < 1e-14);
    let peaks = h.peaks(0.5);
    assert_eq!(peaks.len(), 6);
    let w = h.bin_width();
    for l in 0..6 {
        let theta = PI / 6.0 + l as f64 * PI / 3.0;
        let (x, y) = (3f64.sqrt() * theta.cos(), 3f64.sqrt() * theta.sin());
        assert!(
            peaks.iter().any(|p| (p.re - x).abs() <= w && (p.im - y).abs() <= w),
            "no peak near angle {theta}"
        );
    }
    let m = order_moments(&st, &c).unwrap();
    // |p3SL| = (N/6)·√3 for every face-centre pattern
    assert!((m.abs_p3sl.unwrap() - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    assert!(fluctuations(&st, &c, Fluctuation::AbsP3sl, 0.0).unwrap().abs() < 1e-12);
}

#[test]
fn hexagon_vertex() {
    let c = preset_cluster(Geometry::Triangular, 12).unwrap();
    let s = config_of(&c, |_, sub| sub != 2);
    let st = spin_state(12, |t| if t == s { 1.0 } else { 0.0 });
    let h = complex_3sl_histogram(&st, &c, DEFAULT_3SL_BINS).unwrap();
    let p = h.peaks(0.5)[0];
    assert!((p.radius - 2.0).abs() < h.bin_width());
    assert!((p.theta - PI / 3.0).abs() < 0.02);
}

#[test]
fn errors() {
    let sq = preset_cluster(Geometry::Square, 8).unwrap();
    let st = paraelectric(8);
    assert!(matches!(complex_3sl_histogram(&st, &sq, 11), Err(Error::WrongGeometry)));
    assert!(matches!(photon_number(&st, 1.0), Err(Error::WrongFrame(_))));
    let open = LatticeCluster::with_bonds(Geometry::Square, 8, &[(0, 1)]);
    assert!(matches!(
        structure_factor(&st, &open, &Momentum::gamma()),
        Err(Error::MissingPoint(_))
    ));
    assert!(order_correlations(&st, &open).is_err());
    assert!(fluctuations(&st, &sq, Fluctuation::AbsP3sl, 0.0).is_err());
    let small = preset_cluster(Geometry::Square, 10).unwrap();
    assert!(order_moments(&st, &small).is_err());
}

#[test]
fn measure_averages_and_exposes_columns() {
    let c = preset_cluster(Geometry::Square, 8).unwrap();
    let a = paraelectric(8);
    let up = spin_state(8, |s| if s == 0xff { 1.0 } else { 0.0 });
    let set = measure(&[&a, &up], &c, -1.0, PhotonContext::Beta(2.0)).unwrap();
    assert_eq!(set.n_states, 2);
    assert!((set.corr_ferro.unwrap() - 0.5 * (0.125 + 1.0)).abs() < 1e-14);
    assert!((set.photon_number.unwrap() - 4.0 * 0.5 * (2.0 + 16.0)).abs() < 1e-12);
    assert_eq!(set.polaron_photon_number, Some(0.0));
    assert_eq!(set.get("energy"), Some(-1.0));
    assert_eq!(set.get("corr_3sl"), None);
    assert_eq!(ObservableSet::COLUMNS.len(), set.values().len());
}
