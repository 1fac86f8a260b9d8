//! Periodic square and triangular clusters.
//!
//! A cluster is the quotient of the infinite lattice by the sublattice spanned
//! by two integer cell vectors `T1`, `T2`. Site coordinates are integers in the
//! lattice-vector basis: `(1,0),(0,1)` for the square lattice and
//! `(1,0),(1/2,sqrt(3)/2)` for the triangular lattice.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Square,
    Triangular,
}

impl Geometry {
    /// Number of sublattices of the antiferroelectric order this geometry hosts.
    pub fn n_sublattices(self) -> usize {
        match self {
            Geometry::Square => 2,
            Geometry::Triangular => 3,
        }
    }

    pub fn coordination(self) -> usize {
        match self {
            Geometry::Square => 4,
            Geometry::Triangular => 6,
        }
    }

    /// Half of the nearest-neighbour displacement set; the other half is the negation.
    fn forward_neighbours(self) -> &'static [[i64; 2]] {
        match self {
            Geometry::Square => &[[1, 0], [0, 1]],
            Geometry::Triangular => &[[1, 0], [0, 1], [-1, 1]],
        }
    }

    /// Squared Euclidean length of an integer vector in units of the lattice constant.
    pub fn norm2(self, v: [i64; 2]) -> i64 {
        match self {
            Geometry::Square => v[0] * v[0] + v[1] * v[1],
            Geometry::Triangular => v[0] * v[0] + v[0] * v[1] + v[1] * v[1],
        }
    }

    /// Sublattice colour of an integer site; bonds always join different colours.
    fn colour(self, r: [i64; 2]) -> usize {
        match self {
            Geometry::Square => (r[0] + r[1]).rem_euclid(2) as usize,
            Geometry::Triangular => (r[0] + 2 * r[1]).rem_euclid(3) as usize,
        }
    }

    /// Cartesian position of an integer site.
    pub fn cartesian(self, r: [i64; 2]) -> [f64; 2] {
        match self {
            Geometry::Square => [r[0] as f64, r[1] as f64],
            Geometry::Triangular => [
                r[0] as f64 + 0.5 * r[1] as f64,
                0.5 * 3f64.sqrt() * r[1] as f64,
            ],
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Square => write!(f, "square"),
            Geometry::Triangular => write!(f, "triangular"),
        }
    }
}

/// Crystal momentum stored exactly through its phases on the two primitive
/// lattice vectors: `k . a_j = 2 pi * num[j] / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Momentum {
    pub num: [i64; 2],
    pub den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Momentum {
    pub fn new(num: [i64; 2], den: i64) -> Self {
        assert!(den != 0, "momentum denominator must be nonzero");
        let (num, den) = if den < 0 {
            ([-num[0], -num[1]], -den)
        } else {
            (num, den)
        };
        let n0 = num[0].rem_euclid(den);
        let n1 = num[1].rem_euclid(den);
        let g = gcd(gcd(n0, n1), den).max(1);
        Momentum {
            num: [n0 / g, n1 / g],
            den: den / g,
        }
    }

    pub fn gamma() -> Self {
        Momentum::new([0, 0], 1)
    }

    /// Phase `k . r / 2pi` of an integer lattice site, as an exact fraction `(num, den)`.
    pub fn phase_fraction(&self, r: [i64; 2]) -> (i64, i64) {
        (
            (self.num[0] * r[0] + self.num[1] * r[1]).rem_euclid(self.den),
            self.den,
        )
    }

    /// `k . r` in radians, reduced to `[0, 2pi)`.
    pub fn phase(&self, r: [i64; 2]) -> f64 {
        let (n, d) = self.phase_fraction(r);
        2.0 * PI * n as f64 / d as f64
    }

    pub fn negate(&self) -> Self {
        Momentum::new([-self.num[0], -self.num[1]], self.den)
    }

    /// Cartesian vector in the first reciprocal cell (not folded to the Brillouin zone).
    pub fn cartesian(&self, geometry: Geometry) -> [f64; 2] {
        let p1 = 2.0 * PI * self.num[0] as f64 / self.den as f64;
        let p2 = 2.0 * PI * self.num[1] as f64 / self.den as f64;
        match geometry {
            Geometry::Square => [p1, p2],
            Geometry::Triangular => [p1, (p2 - 0.5 * p1) * 2.0 / 3f64.sqrt()],
        }
    }
}

impl fmt::Display for Momentum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2pi({}, {})/{}", self.num[0], self.num[1], self.den)
    }
}

/// Finite periodic cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeCluster {
    pub geometry: Geometry,
    pub cell_vectors: [[i64; 2]; 2],
    pub sites: Vec<[i64; 2]>,
    pub bonds: Vec<(usize, usize)>,
    pub sublattice_of: Vec<usize>,
    pub momenta: Vec<Momentum>,
    /// False for clusters assembled from an explicit bond list.
    pub periodic: bool,
}

fn cross(a: [i64; 2], b: [i64; 2]) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

struct Cell {
    t1: [i64; 2],
    t2: [i64; 2],
    det: i64,
}

impl Cell {
    fn new(t1: [i64; 2], t2: [i64; 2]) -> Self {
        Cell {
            t1,
            t2,
            det: cross(t1, t2),
        }
    }

    /// Reduced coordinates scaled by |det|: `r = (u T1 + v T2) / |det|`.
    fn reduced(&self, r: [i64; 2]) -> (i64, i64) {
        let s = self.det.signum();
        (s * cross(r, self.t2), s * cross(self.t1, r))
    }

    fn wrap(&self, r: [i64; 2]) -> [i64; 2] {
        let d = self.det.abs();
        let (u, v) = self.reduced(r);
        let a = u.div_euclid(d);
        let b = v.div_euclid(d);
        [
            r[0] - a * self.t1[0] - b * self.t2[0],
            r[1] - a * self.t1[1] - b * self.t2[1],
        ]
    }
}

impl LatticeCluster {
    /// Builds the periodic cluster spanned by `cell_vectors`.
    pub fn build(geometry: Geometry, cell_vectors: [[i64; 2]; 2]) -> Result<Self> {
        let [t1, t2] = cell_vectors;
        let cell = Cell::new(t1, t2);
        if cell.det == 0 {
            return Err(Error::RejectedCell("cell vectors are collinear".into()));
        }
        let n = cell.det.unsigned_abs() as usize;
        let k = geometry.n_sublattices();
        if n % k != 0 {
            return Err(Error::RejectedCell(format!(
                "N = {n} is not divisible by {k} on the {geometry} lattice"
            )));
        }
        if geometry.norm2(t1) != geometry.norm2(t2) {
            return Err(Error::RejectedCell(format!(
                "aspect ratio != 1: |T1|^2 = {}, |T2|^2 = {}",
                geometry.norm2(t1),
                geometry.norm2(t2)
            )));
        }
        if geometry.colour(t1) != 0 || geometry.colour(t2) != 0 {
            return Err(Error::RejectedCell(format!(
                "cell frustrates the {k}-sublattice colouring"
            )));
        }

        // Enumerate the integer points of the half-open parallelogram.
        let xs = [0, t1[0], t2[0], t1[0] + t2[0]];
        let ys = [0, t1[1], t2[1], t1[1] + t2[1]];
        let d = cell.det.abs();
        let mut keyed = Vec::with_capacity(n);
        for x in *xs.iter().min().unwrap()..=*xs.iter().max().unwrap() {
            for y in *ys.iter().min().unwrap()..=*ys.iter().max().unwrap() {
                let (u, v) = cell.reduced([x, y]);
                if (0..d).contains(&u) && (0..d).contains(&v) {
                    keyed.push(((u, v), [x, y]));
                }
            }
        }
        keyed.sort();
        debug_assert_eq!(keyed.len(), n);
        let sites: Vec<[i64; 2]> = keyed.into_iter().map(|(_, r)| r).collect();
        let index: BTreeMap<[i64; 2], usize> =
            sites.iter().enumerate().map(|(i, &r)| (r, i)).collect();

        let mut bonds = Vec::with_capacity(n * geometry.coordination() / 2);
        let mut degree = vec![0usize; n];
        for (i, &r) in sites.iter().enumerate() {
            for delta in geometry.forward_neighbours() {
                let j = index[&cell.wrap([r[0] + delta[0], r[1] + delta[1]])];
                if i == j {
                    return Err(Error::RejectedCell("site bonded to itself".into()));
                }
                bonds.push((i.min(j), i.max(j)));
                degree[i] += 1;
                degree[j] += 1;
            }
        }
        let mut unique = bonds.clone();
        unique.sort();
        unique.dedup();
        if unique.len() != bonds.len() {
            return Err(Error::RejectedCell(
                "cell too small: nearest-neighbour bonds coincide".into(),
            ));
        }
        debug_assert!(degree.iter().all(|&z| z == geometry.coordination()));
        bonds.sort();

        let sublattice_of: Vec<usize> = sites.iter().map(|&r| geometry.colour(r)).collect();

        // Allowed momenta satisfy k.T1 = k.T2 = 0 mod 2pi; k = 2pi (p G1 + q G2)
        // with G_i the dual cell vectors, so k.a_j = 2pi (p u(a_j) + q v(a_j)) / det.
        let (u1, v1) = cell.reduced([1, 0]);
        let (u2, v2) = cell.reduced([0, 1]);
        let mut momenta: Vec<Momentum> = Vec::with_capacity(n);
        for p in 0..d {
            for q in 0..d {
                let m = Momentum::new([p * u1 + q * v1, p * u2 + q * v2], d);
                momenta.push(m);
            }
        }
        momenta.sort();
        momenta.dedup();
        debug_assert_eq!(momenta.len(), n);

        Ok(LatticeCluster {
            geometry,
            cell_vectors,
            sites,
            bonds,
            sublattice_of,
            momenta,
            periodic: true,
        })
    }

    /// Cluster defined by an explicit bond list, for small oracle checks on
    /// geometries no periodic cell can produce (pairs, open plaquettes).
    /// Sites sit on a line, sublattices alternate and no momenta are defined.
    pub fn with_bonds(geometry: Geometry, n_sites: usize, bonds: &[(usize, usize)]) -> Self {
        let k = geometry.n_sublattices();
        let mut bonds: Vec<(usize, usize)> = bonds
            .iter()
            .map(|&(i, j)| {
                assert!(i < n_sites && j < n_sites && i != j, "invalid bond ({i}, {j})");
                (i.min(j), i.max(j))
            })
            .collect();
        bonds.sort();
        bonds.dedup();
        LatticeCluster {
            geometry,
            cell_vectors: [[n_sites as i64, 0], [0, 1]],
            sites: (0..n_sites as i64).map(|i| [i, 0]).collect(),
            bonds,
            sublattice_of: (0..n_sites).map(|i| i % k).collect(),
            momenta: Vec::new(),
            periodic: false,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn contains_momentum(&self, k: &Momentum) -> bool {
        self.momenta.binary_search(k).is_ok()
    }

    pub fn sublattice_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.geometry.n_sublattices()];
        for &s in &self.sublattice_of {
            sizes[s] += 1;
        }
        sizes
    }

    /// Bond lists per site.
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.n_sites()];
        for &(i, j) in &self.bonds {
            nb[i].push(j);
            nb[j].push(i);
        }
        nb
    }

    /// Elementary triangles `(i, j, k)` of a periodic triangular cluster, 2N of them.
    pub fn triangles(&self) -> Result<Vec<[usize; 3]>> {
        if self.geometry != Geometry::Triangular || !self.periodic {
            return Err(Error::WrongGeometry);
        }
        let cell = Cell::new(self.cell_vectors[0], self.cell_vectors[1]);
        let index: BTreeMap<[i64; 2], usize> =
            self.sites.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let at = |r: [i64; 2]| index[&cell.wrap(r)];
        let mut tris = Vec::with_capacity(2 * self.n_sites());
        for (i, &r) in self.sites.iter().enumerate() {
            // up triangle r, r+a1, r+a2 and down triangle r, r+a2, r+a2-a1
            tris.push([i, at([r[0] + 1, r[1]]), at([r[0], r[1] + 1])]);
            tris.push([i, at([r[0], r[1] + 1]), at([r[0] - 1, r[1] + 1])]);
        }
        Ok(tris)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "geometry": self.geometry,
            "cell_vectors": self.cell_vectors,
            "n_sites": self.n_sites(),
            "sites": self.sites,
            "bonds": self.bonds,
            "periodic": self.periodic,
        })
    }
}

/// High-symmetry momenta used by the order-parameter correlators.
pub fn named_momentum(geometry: Geometry, label: &str) -> Option<Momentum> {
    match (geometry, label) {
        (_, "Gamma") => Some(Momentum::gamma()),
        (Geometry::Square, "M") => Some(Momentum::new([1, 1], 2)),
        // K = (4pi/3, 0): k.a1 = 4pi/3, k.a2 = 2pi/3
        (Geometry::Triangular, "K") => Some(Momentum::new([2, 1], 3)),
        (Geometry::Triangular, "-K") => Some(Momentum::new([1, 2], 3)),
        _ => None,
    }
}

/// Γ for both geometries, M on the square lattice, ±K on the triangular lattice.
pub fn special_points(cluster: &LatticeCluster) -> Result<BTreeMap<String, Momentum>> {
    let labels: &[&str] = match cluster.geometry {
        Geometry::Square => &["Gamma", "M"],
        Geometry::Triangular => &["Gamma", "K", "-K"],
    };
    let mut out = BTreeMap::new();
    for &label in labels {
        let k = named_momentum(cluster.geometry, label).expect("label table");
        if !cluster.contains_momentum(&k) {
            return Err(Error::MissingPoint(format!("{label} = {k}")));
        }
        out.insert(label.to_string(), k);
    }
    Ok(out)
}

const SQUARE_PRESETS: &[(usize, [[i64; 2]; 2])] = &[
    (8, [[2, 2], [-2, 2]]),
    (10, [[3, 1], [-1, 3]]),
    (16, [[4, 0], [0, 4]]),
    (18, [[3, 3], [-3, 3]]),
    (20, [[4, 2], [-2, 4]]),
    (26, [[5, 1], [-1, 5]]),
];

const TRIANGULAR_PRESETS: &[(usize, [[i64; 2]; 2])] = &[
    (9, [[3, 0], [0, 3]]),
    (12, [[2, 2], [-2, 4]]),
    (21, [[4, 1], [-1, 5]]),
    (24, [[5, -1], [-1, 5]]),
    (27, [[3, 3], [-3, 6]]),
    (36, [[6, 0], [0, 6]]),
    (48, [[4, 4], [-4, 8]]),
];

pub fn preset_table(geometry: Geometry) -> &'static [(usize, [[i64; 2]; 2])] {
    match geometry {
        Geometry::Square => SQUARE_PRESETS,
        Geometry::Triangular => TRIANGULAR_PRESETS,
    }
}

pub fn preset_cell(geometry: Geometry, n: usize) -> Result<[[i64; 2]; 2]> {
    preset_table(geometry)
        .iter()
        .find(|(m, _)| *m == n)
        .map(|(_, c)| *c)
        .ok_or(Error::UnknownPreset {
            geometry: geometry.to_string(),
            n,
        })
}

pub fn preset_cluster(geometry: Geometry, n: usize) -> Result<LatticeCluster> {
    LatticeCluster::build(geometry, preset_cell(geometry, n)?)
}
