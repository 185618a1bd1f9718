//! Planar atom positions and the physical constants that turn them into
//! couplings.
//!
//! Frequencies are angular (rad/us). A frequency quoted as "x MHz" is stored
//! as `2 pi x`; see [`angular`]. Distances are in micrometres.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::graphs::{wire_platonic, AtomRole, Graph, PlatonicSolid, WiredGraph};

/// Converts a quoted frequency (value / 2 pi, in MHz) to rad/us.
#[inline]
pub fn angular(mhz: f64) -> f64 {
    TAU * mhz
}

/// Inverse of [`angular`].
#[inline]
pub fn quoted(rad_per_us: f64) -> f64 {
    rad_per_us / TAU
}

/// Peak two-photon Rabi frequency of the experiment, quoted MHz.
pub const OMEGA0_MHZ: f64 = 0.74;
/// Blockade distance at [`OMEGA0_MHZ`], um.
pub const BLOCKADE_RADIUS_UM: f64 = 10.55;
/// Nearest-neighbour spacing, um.
pub const SPACING_UM: f64 = 8.0;
/// Allowed deviation of a table edge from [`SPACING_UM`].
pub const SPACING_TOLERANCE_UM: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// van der Waals coefficient, rad/us * um^6.
    pub c6: f64,
    /// Peak Rabi frequency, rad/us.
    pub omega0: f64,
    /// Nearest-neighbour spacing, um.
    pub d: f64,
}

impl PhysicalParams {
    /// Values of the reported experiment, with C6 fixed by the blockade radius.
    pub fn experiment() -> Self {
        let omega0 = angular(OMEGA0_MHZ);
        let c6 = calibrate_c6(BLOCKADE_RADIUS_UM, omega0).expect("positive constants");
        Self { c6, omega0, d: SPACING_UM }
    }

    pub fn new(c6: f64, omega0: f64, d: f64) -> Result<Self> {
        let p = Self { c6: positive("C6", c6)?, omega0: positive("Omega0", omega0)?, d: positive("d", d)? };
        let d_r = p.blockade_radius();
        if d >= d_r {
            return Err(Error::DegenerateGeometry(format!(
                "spacing {d} um not below blockade radius {d_r:.3} um"
            )));
        }
        Ok(p)
    }

    pub fn blockade_radius(&self) -> f64 {
        (self.c6 / self.omega0).powf(1.0 / 6.0)
    }

    /// Nearest-neighbour interaction `U = C6 / d^6`.
    pub fn nearest_neighbor_u(&self) -> f64 {
        self.c6 / self.d.powi(6)
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::experiment()
    }
}

/// `C6 / r^6`.
pub fn interaction_strength(dist: f64, c6: f64) -> Result<f64> {
    positive("distance", dist)?;
    Ok(c6 / dist.powi(6))
}

/// `(C6 / Omega)^(1/6)` with hbar = 1.
pub fn blockade_radius(c6: f64, omega: f64) -> Result<f64> {
    positive("C6", c6)?;
    positive("Omega", omega)?;
    Ok((c6 / omega).powf(1.0 / 6.0))
}

/// `C6 = Omega * d_R^6`, the inverse of [`blockade_radius`].
pub fn calibrate_c6(d_r: f64, omega: f64) -> Result<f64> {
    positive("d_R", d_r)?;
    positive("Omega", omega)?;
    Ok(omega * d_r.powi(6))
}

/// Two-photon effective Rabi frequency `Omega_red * Omega_blue / (2 Delta_m)`.
pub fn effective_rabi(omega_red: f64, omega_blue: f64, delta_m: f64) -> Result<f64> {
    if delta_m == 0.0 || !delta_m.is_finite() {
        return Err(Error::NonPositive { name: "intermediate detuning", value: delta_m });
    }
    Ok(omega_red * omega_blue / (2.0 * delta_m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    positions: Vec<[f64; 2]>,
    graph: WiredGraph,
}

impl Layout {
    pub fn new(graph: WiredGraph, positions: Vec<[f64; 2]>) -> Result<Self> {
        if positions.len() != graph.num_atoms() {
            return Err(Error::DimensionMismatch { expected: graph.num_atoms(), got: positions.len() });
        }
        Ok(Self { positions, graph })
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn graph(&self) -> &WiredGraph {
        &self.graph
    }

    pub fn num_atoms(&self) -> usize {
        self.positions.len()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let [xi, yi] = self.positions[i];
        let [xj, yj] = self.positions[j];
        (xi - xj).hypot(yi - yj)
    }

    pub fn distance_matrix(&self) -> DMatrix<f64> {
        let n = self.num_atoms();
        DMatrix::from_fn(n, n, |i, j| self.distance(i, j))
    }

    /// Largest `|len - d|` over wired-graph edges and smallest non-edge
    /// distance.
    pub fn spacing_report(&self, d: f64) -> SpacingReport {
        let n = self.num_atoms();
        let mut max_edge_deviation = 0.0f64;
        let mut min_non_edge = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                let r = self.distance(i, j);
                if self.graph.all_edges().contains(&(i, j)) {
                    max_edge_deviation = max_edge_deviation.max((r - d).abs());
                } else {
                    min_non_edge = min_non_edge.min(r);
                }
            }
        }
        SpacingReport { max_edge_deviation, min_non_edge }
    }

    /// Permutation induced by a rigid motion of the plane, if it maps the
    /// atom set onto itself within `tol`.
    pub fn symmetry_permutation(&self, transform: impl Fn([f64; 2]) -> [f64; 2], tol: f64) -> Option<Vec<usize>> {
        let mut perm = Vec::with_capacity(self.num_atoms());
        for &p in &self.positions {
            let [x, y] = transform(p);
            let hit = self
                .positions
                .iter()
                .position(|&[u, v]| (u - x).hypot(v - y) <= tol)?;
            perm.push(hit);
        }
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        sorted.dedup();
        (sorted.len() == perm.len()).then_some(perm)
    }

    /// CSV with header `atom_id,role,x_um,y_um`, coordinates at 0.1 um.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("atom_id,role,x_um,y_um\n");
        for (i, [x, y]) in self.positions.iter().enumerate() {
            let _ = writeln!(out, "{},{},{:.1},{:.1}", i, self.graph.atom_label(i), x, y);
        }
        out
    }

    pub fn from_csv(graph: WiredGraph, csv: &str) -> Result<Self> {
        let mut positions = vec![None; graph.num_atoms()];
        for (lineno, line) in csv.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Format(format!("layout CSV line {}: {line:?}", lineno + 1));
            if fields.len() != 4 {
                return Err(bad());
            }
            let id: usize = fields[0].parse().map_err(|_| bad())?;
            let x: f64 = fields[2].parse().map_err(|_| bad())?;
            let y: f64 = fields[3].parse().map_err(|_| bad())?;
            let slot = positions.get_mut(id).ok_or_else(bad)?;
            *slot = Some([x, y]);
        }
        let positions = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| Error::Format(format!("layout CSV missing atom {i}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(graph, positions)
    }

    pub fn to_document(&self) -> LayoutDocument {
        LayoutDocument {
            graph: self.graph.name(),
            atoms: self
                .positions
                .iter()
                .enumerate()
                .map(|(i, &[x, y])| AtomRecord { atom_id: i, role: self.graph.atom_label(i), x_um: x, y_um: y })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingReport {
    pub max_edge_deviation: f64,
    pub min_non_edge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub atom_id: usize,
    pub role: String,
    pub x_um: f64,
    pub y_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutDocument {
    pub graph: String,
    pub atoms: Vec<AtomRecord>,
}

/// Atom coordinates of the three experimental arrays, in atom order.
pub fn experimental_layout(solid: PlatonicSolid) -> Layout {
    let positions: Vec<[f64; 2]> = match solid {
        PlatonicSolid::Tetrahedron => vec![
            [-4.0, 0.0],
            [4.0, 0.0],
            [-10.9, 4.0],
            [-10.9, -4.0],
            [10.9, -4.0],
            [10.9, 4.0],
        ],
        // The printed W3 row, "(-4.0, +-15.3)", collides with W1; the wire
        // bridging vertices 7 and 8 sits at y = -15.3.
        PlatonicSolid::Cube => vec![
            [4.0, 15.3],
            [-4.0, 15.3],
            [-15.3, 4.0],
            [-15.3, -4.0],
            [-4.0, -15.3],
            [4.0, -15.3],
            [15.3, -4.0],
            [15.3, 4.0],
            [-4.0, 4.0],
            [-4.0, -4.0],
            [4.0, -4.0],
            [4.0, 4.0],
            [9.7, 9.7],
            [-9.7, 9.7],
            [-9.7, -9.7],
            [9.7, -9.7],
        ],
        PlatonicSolid::Octahedron => vec![
            [-6.9, 13.8],
            [-14.9, 13.8],
            [-18.9, 6.9],
            [-14.9, 0.0],
            [-8.0, -12.0],
            [-4.0, -18.9],
            [4.0, -18.9],
            [8.0, -12.0],
            [14.9, 0.0],
            [18.9, 6.9],
            [14.9, 13.8],
            [6.9, 13.8],
            [0.0, 9.8],
            [-4.0, 2.9],
            [-8.0, -4.0],
            [0.0, -4.0],
            [8.0, -4.0],
            [4.0, 2.9],
        ],
    };
    Layout::new(wire_platonic(solid), positions).expect("table sizes match the wired graphs")
}

pub fn experimental_layout_by_name(name: &str) -> Result<Layout> {
    Ok(experimental_layout(name.parse()?))
}

/// K4'-like array with dimer edges of length `d` and the five wire edges of
/// length `d * d_ratio`.
///
/// Wire atoms sit at `(-+d'/2, 0)`; vertices 1, 2 at
/// `(-d'/2 - sqrt(d'^2 - d^2/4), +-d/2)` and 3, 4 mirrored in x.
pub fn k4_family_layout(d: f64, d_ratio: f64) -> Result<Layout> {
    positive("d", d)?;
    positive("d_ratio", d_ratio)?;
    let dp = d * d_ratio;
    let reach2 = dp * dp - d * d / 4.0;
    if reach2 < 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "d' = {dp} um shorter than d/2 = {} um",
            d / 2.0
        )));
    }
    let x = dp / 2.0 + reach2.sqrt();
    let h = d / 2.0;
    let positions = vec![[-dp / 2.0, 0.0], [dp / 2.0, 0.0], [-x, h], [-x, -h], [x, -h], [x, h]];
    Layout::new(wire_platonic(PlatonicSolid::Tetrahedron), positions)
}

/// Unit-disk graph over atoms: edge iff distance <= cutoff.
pub fn derive_adjacency(layout: &Layout, cutoff: f64) -> Graph {
    let n = layout.num_atoms();
    let edges = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| layout.distance(i, j) <= cutoff);
    Graph::new(format!("{} (unit disk {cutoff} um)", layout.graph().name()), n, edges)
        .expect("pairs i < j are valid edges")
}

/// Full `C6 / r_ij^6` matrix, zero diagonal.
pub fn pairwise_couplings(layout: &Layout, c6: f64) -> Result<DMatrix<f64>> {
    positive("C6", c6)?;
    let n = layout.num_atoms();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let r = layout.distance(i, j);
            if r <= 1e-9 {
                return Err(Error::CoincidentAtoms(i, j));
            }
            let u = c6 / r.powi(6);
            m[(i, j)] = u;
            m[(j, i)] = u;
        }
    }
    Ok(m)
}

/// Whether `atom` is a wire atom of `layout`'s graph.
pub fn is_wire_atom(layout: &Layout, atom: usize) -> bool {
    matches!(layout.graph().role(atom), AtomRole::Wire { .. })
}
