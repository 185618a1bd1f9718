//! Platonic graphs and their quantum-wired planar counterparts.
//!
//! Base vertices are numbered `0..V` in the order of the atom-position table
//! (label `k` in the table is vertex `k - 1`). In a [`WiredGraph`] every atom
//! gets an id: wire atoms first, wire by wire, then the base vertices, so base
//! vertex `v` is atom `num_wire_atoms + v`. This ordering is the bit order of
//! every spin configuration in the crate and is part of the public contract.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::atom_bit;
use crate::error::{Error, Result};

pub type Edge = (usize, usize);

#[inline]
fn ordered(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlatonicSolid {
    Tetrahedron,
    Cube,
    Octahedron,
}

impl PlatonicSolid {
    pub const ALL: [PlatonicSolid; 3] = [Self::Tetrahedron, Self::Cube, Self::Octahedron];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tetrahedron => "tetrahedron",
            Self::Cube => "cube",
            Self::Octahedron => "octahedron",
        }
    }

    /// Graph-theory symbol of the base graph.
    pub fn symbol(self) -> &'static str {
        match self {
            Self::Tetrahedron => "K4",
            Self::Cube => "Q3",
            Self::Octahedron => "K222",
        }
    }
}

impl fmt::Display for PlatonicSolid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlatonicSolid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().trim_end_matches('\'') {
            "tetrahedron" | "k4" => Ok(Self::Tetrahedron),
            "cube" | "q3" => Ok(Self::Cube),
            "octahedron" | "k222" | "k2,2,2" => Ok(Self::Octahedron),
            _ => Err(Error::UnsupportedGraph(s.to_string())),
        }
    }
}

/// Simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    name: String,
    num_vertices: usize,
    edges: BTreeSet<Edge>,
}

impl Graph {
    pub fn new(
        name: impl Into<String>,
        num_vertices: usize,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {a}")));
            }
            if a >= num_vertices || b >= num_vertices {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {num_vertices} vertices"
                )));
            }
            if !set.insert(ordered(a, b)) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(Self { name: name.into(), num_vertices, edges: set })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(lo, hi)` pairs in lexicographic order.
    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&ordered(a, b))
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Facet count from Euler's polyhedron formula, `2 - V + E`.
    pub fn euler_faces(&self) -> i64 {
        2 - self.num_vertices as i64 + self.edges.len() as i64
    }

    /// Neighbor bit masks, using the configuration bit convention of
    /// [`crate::basis`].
    pub fn neighbor_masks(&self) -> Vec<u64> {
        let n = self.num_vertices;
        let mut masks = vec![0u64; n];
        for &(a, b) in &self.edges {
            masks[a] |= atom_bit(n, b);
            masks[b] |= atom_bit(n, a);
        }
        masks
    }

    /// Number of edges with both endpoints excited in `bits`.
    pub fn excited_pairs(&self, bits: u64) -> usize {
        let n = self.num_vertices;
        self.edges
            .iter()
            .filter(|&&(a, b)| bits & atom_bit(n, a) != 0 && bits & atom_bit(n, b) != 0)
            .count()
    }

    pub fn is_independent(&self, bits: u64) -> bool {
        self.excited_pairs(bits) == 0
    }

    /// True iff `perm` (vertex `i` maps to `perm[i]`) preserves the edge set.
    pub fn is_automorphism(&self, perm: &[usize]) -> bool {
        if perm.len() != self.num_vertices {
            return false;
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return false;
            }
        }
        self.edges.iter().all(|&(a, b)| self.contains_edge(perm[a], perm[b]))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Standard adjacency of the three supported Platonic graphs, numbered as in
/// the atom-position table.
pub fn platonic_graph(solid: PlatonicSolid) -> Graph {
    // 1-based labels, converted below
    let edges: &[(usize, usize)] = match solid {
        PlatonicSolid::Tetrahedron => &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)],
        // inner square 1-4, outer square 5-8, spokes 4-5, 1-6, 2-7, 3-8
        PlatonicSolid::Cube => &[
            (1, 2),
            (2, 3),
            (3, 4),
            (4, 1),
            (4, 5),
            (1, 6),
            (2, 7),
            (3, 8),
            (5, 6),
            (6, 7),
            (7, 8),
            (8, 5),
        ],
        // every pair except the antipodal ones 1-4, 2-5, 3-6
        PlatonicSolid::Octahedron => &[
            (1, 2),
            (1, 3),
            (1, 5),
            (1, 6),
            (2, 3),
            (2, 4),
            (2, 6),
            (3, 4),
            (3, 5),
            (4, 5),
            (4, 6),
            (5, 6),
        ],
    };
    let n = match solid {
        PlatonicSolid::Tetrahedron => 4,
        PlatonicSolid::Cube => 8,
        PlatonicSolid::Octahedron => 6,
    };
    Graph::new(solid.symbol(), n, edges.iter().map(|&(a, b)| (a - 1, b - 1)))
        .expect("static platonic adjacency is valid")
}

/// Parses a graph name and builds it.
pub fn platonic_graph_by_name(name: &str) -> Result<Graph> {
    Ok(platonic_graph(name.parse()?))
}

/// An even chain of auxiliary atoms standing in for one or more base edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wire {
    /// Atom ids along the chain.
    pub atoms: Vec<usize>,
    /// Base vertices attached to the first and to the last chain atom.
    pub terminals: [Vec<usize>; 2],
    /// Base edges this wire replaces.
    pub replaced_edges: Vec<Edge>,
}

impl Wire {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Recipe for one wire, used by [`WiredGraph::new`].
#[derive(Debug, Clone)]
pub struct WireSpec {
    pub length: usize,
    pub head: Vec<usize>,
    pub tail: Vec<usize>,
    pub replaces: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomRole {
    /// `position` along wire `wire`, both 0-based.
    Wire { wire: usize, position: usize },
    Vertex(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WiredGraph {
    base: Graph,
    wires: Vec<Wire>,
    all_edges: BTreeSet<Edge>,
    num_wire_atoms: usize,
}

impl WiredGraph {
    pub fn new(base: Graph, specs: &[WireSpec]) -> Result<Self> {
        let num_wire_atoms: usize = specs.iter().map(|s| s.length).sum();
        let v = base.num_vertices();
        let vertex_atom = |x: usize| num_wire_atoms + x;
        let mut replaced = BTreeSet::new();
        let mut wires = Vec::with_capacity(specs.len());
        let mut all_edges = BTreeSet::new();
        let mut next = 0usize;
        for spec in specs {
            if spec.length < 2 || spec.length % 2 != 0 {
                return Err(Error::OddWireLength(spec.length));
            }
            for &t in spec.head.iter().chain(&spec.tail) {
                if t >= v {
                    return Err(Error::InvalidGraph(format!("terminal {t} out of range")));
                }
            }
            let mut replaced_edges = Vec::with_capacity(spec.replaces.len());
            for &(a, b) in &spec.replaces {
                let e = ordered(a, b);
                if !base.edges().contains(&e) {
                    return Err(Error::InvalidGraph(format!("wire replaces missing edge {e:?}")));
                }
                if !replaced.insert(e) {
                    return Err(Error::InvalidGraph(format!("edge {e:?} replaced twice")));
                }
                replaced_edges.push(e);
            }
            replaced_edges.sort_unstable();
            let atoms: Vec<usize> = (next..next + spec.length).collect();
            next += spec.length;
            for pair in atoms.windows(2) {
                all_edges.insert((pair[0], pair[1]));
            }
            let (first, last) = (atoms[0], atoms[atoms.len() - 1]);
            for &t in &spec.head {
                all_edges.insert(ordered(first, vertex_atom(t)));
            }
            for &t in &spec.tail {
                all_edges.insert(ordered(last, vertex_atom(t)));
            }
            let mut head = spec.head.clone();
            let mut tail = spec.tail.clone();
            head.sort_unstable();
            tail.sort_unstable();
            wires.push(Wire { atoms, terminals: [head, tail], replaced_edges });
        }
        for &(a, b) in base.edges() {
            if !replaced.contains(&(a, b)) {
                all_edges.insert((vertex_atom(a), vertex_atom(b)));
            }
        }
        Ok(Self { base, wires, all_edges, num_wire_atoms })
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn wires(&self) -> &[Wire] {
        &self.wires
    }

    /// Edges over atom ids, lexicographically ordered.
    pub fn all_edges(&self) -> &BTreeSet<Edge> {
        &self.all_edges
    }

    pub fn num_atoms(&self) -> usize {
        self.num_wire_atoms + self.base.num_vertices()
    }

    pub fn num_wire_atoms(&self) -> usize {
        self.num_wire_atoms
    }

    pub fn vertex_atom(&self, vertex: usize) -> usize {
        self.num_wire_atoms + vertex
    }

    pub fn role(&self, atom: usize) -> AtomRole {
        if atom >= self.num_wire_atoms {
            return AtomRole::Vertex(atom - self.num_wire_atoms);
        }
        let mut offset = 0;
        for (w, wire) in self.wires.iter().enumerate() {
            if atom < offset + wire.len() {
                return AtomRole::Wire { wire: w, position: atom - offset };
            }
            offset += wire.len();
        }
        unreachable!("atom id below wire-atom count belongs to some wire")
    }

    /// Display label for a wire: `W` when there is a single wire, else `W1..`.
    pub fn wire_label(&self, wire: usize) -> String {
        if self.wires.len() == 1 {
            "W".to_string()
        } else {
            format!("W{}", wire + 1)
        }
    }

    /// Role label such as `W2.1` (wire 2, first atom) or `V5` (vertex 5), 1-based.
    pub fn atom_label(&self, atom: usize) -> String {
        match self.role(atom) {
            AtomRole::Wire { wire, position } => format!("{}.{}", self.wire_label(wire), position + 1),
            AtomRole::Vertex(v) => format!("V{}", v + 1),
        }
    }

    pub fn name(&self) -> String {
        format!("{}'", self.base.name())
    }

    /// The interaction graph over all atoms.
    pub fn atom_graph(&self) -> Graph {
        Graph {
            name: self.name(),
            num_vertices: self.num_atoms(),
            edges: self.all_edges.clone(),
        }
    }

    /// Splits a full configuration word into per-wire words (MSB-first along
    /// each chain) and the base-vertex word.
    pub fn split_config(&self, bits: u64) -> (Vec<u64>, u64) {
        let n = self.num_atoms();
        let v = self.base.num_vertices();
        let base_bits = bits & ((1u64 << v) - 1);
        let wires = self
            .wires
            .iter()
            .map(|w| {
                let first = w.atoms[0];
                let shift = n - first - w.len();
                (bits >> shift) & ((1u64 << w.len()) - 1)
            })
            .collect();
        (wires, base_bits)
    }
}

/// The quantum-wired version of a Platonic graph.
///
/// Each wire's first atom is the one listed first in the position table, so
/// its head terminals are the vertices next to that atom.
pub fn wire_platonic(solid: PlatonicSolid) -> WiredGraph {
    let base = platonic_graph(solid);
    let e = |a: usize, b: usize| (a - 1, b - 1);
    let specs = match solid {
        // one chain a-b: a touches 1,2 and b touches 3,4; replaces 13,14,23,24
        PlatonicSolid::Tetrahedron => vec![WireSpec {
            length: 2,
            head: vec![0, 1],
            tail: vec![2, 3],
            replaces: vec![e(1, 3), e(1, 4), e(2, 3), e(2, 4)],
        }],
        // outer square replaced, chains run counter-clockwise
        PlatonicSolid::Cube => [(5, 6), (6, 7), (7, 8), (8, 5)]
            .iter()
            .map(|&(h, t)| WireSpec {
                length: 2,
                head: vec![h - 1],
                tail: vec![t - 1],
                replaces: vec![e(h, t)],
            })
            .collect(),
        PlatonicSolid::Octahedron => [(1, 3), (3, 5), (5, 1)]
            .iter()
            .map(|&(h, t)| WireSpec {
                length: 4,
                head: vec![h - 1],
                tail: vec![t - 1],
                replaces: vec![e(h, t)],
            })
            .collect(),
    };
    WiredGraph::new(base, &specs).expect("static wiring is valid")
}

pub fn wire_platonic_by_name(name: &str) -> Result<WiredGraph> {
    Ok(wire_platonic(name.parse()?))
}

/// Removes the wires and restores the edges they replaced.
pub fn strip_wires(wg: &WiredGraph) -> Graph {
    let offset = wg.num_wire_atoms();
    let mut edges: BTreeSet<Edge> = wg
        .all_edges()
        .iter()
        .filter(|&&(a, b)| a >= offset && b >= offset)
        .map(|&(a, b)| (a - offset, b - offset))
        .collect();
    for w in wg.wires() {
        edges.extend(w.replaced_edges.iter().copied());
    }
    Graph::new(wg.base().name(), wg.base().num_vertices(), edges)
        .expect("restored edges stay within the base vertex range")
}

/// One `(N, N')` point of the atom-number scaling report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub label: String,
    pub n: usize,
    pub n_prime: usize,
}

pub fn scaling_point(label: impl Into<String>, n: usize, n_prime: usize) -> Result<ScalingRecord> {
    if n == 0 {
        return Err(Error::InvalidGraph("scaling point needs N >= 1".into()));
    }
    if n_prime < n {
        return Err(Error::InvalidScalingPoint { n, n_prime });
    }
    Ok(ScalingRecord { label: label.into(), n, n_prime })
}

/// Points computed from the constructed wired graphs.
pub fn builtin_scaling_points() -> Vec<ScalingRecord> {
    PlatonicSolid::ALL
        .iter()
        .map(|&s| {
            let wg = wire_platonic(s);
            ScalingRecord {
                label: s.name().to_string(),
                n: wg.base().num_vertices(),
                n_prime: wg.num_atoms(),
            }
        })
        .collect()
}

/// Atom counts as quoted in the scaling discussion. The octahedron value (22)
/// differs from the 18 atoms of the constructed layout.
pub fn reported_scaling_points() -> Vec<ScalingRecord> {
    vec![
        ScalingRecord { label: "tetrahedron".into(), n: 4, n_prime: 6 },
        ScalingRecord { label: "cube".into(), n: 8, n_prime: 16 },
        ScalingRecord { label: "octahedron".into(), n: 6, n_prime: 22 },
    ]
}

/// JSON form shared by plain and wired graphs. `vertices` counts base
/// vertices, `edges` are over atom ids (base vertices shifted past the wire
/// atoms when wires are present).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub name: String,
    pub vertices: usize,
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub wires: Vec<Wire>,
}

impl From<&Graph> for GraphDocument {
    fn from(g: &Graph) -> Self {
        Self {
            name: g.name().to_string(),
            vertices: g.num_vertices(),
            edges: g.edges().iter().copied().collect(),
            wires: Vec::new(),
        }
    }
}

impl From<&WiredGraph> for GraphDocument {
    fn from(wg: &WiredGraph) -> Self {
        Self {
            name: wg.name(),
            vertices: wg.base().num_vertices(),
            edges: wg.all_edges().iter().copied().collect(),
            wires: wg.wires().to_vec(),
        }
    }
}

impl GraphDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }

    /// Rebuilds a wired graph and checks that the stored edges match what
    /// the wire recipes produce.
    pub fn to_wired(&self) -> Result<WiredGraph> {
        let offset: usize = self.wires.iter().map(Wire::len).sum();
        let mut expected_atom = 0;
        for w in &self.wires {
            if w.atoms.iter().copied().ne(expected_atom..expected_atom + w.len()) {
                return Err(Error::InvalidGraph("wire atoms must be numbered consecutively from 0".into()));
            }
            expected_atom += w.len();
        }
        let mut base_edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|&&(a, b)| a >= offset && b >= offset)
            .map(|&(a, b)| (a - offset, b - offset))
            .collect();
        for w in &self.wires {
            base_edges.extend(w.replaced_edges.iter().copied());
        }
        let base_name = self.name.trim_end_matches('\'').to_string();
        let base = Graph::new(base_name, self.vertices, base_edges)?;
        let specs: Vec<WireSpec> = self
            .wires
            .iter()
            .map(|w| WireSpec {
                length: w.len(),
                head: w.terminals[0].clone(),
                tail: w.terminals[1].clone(),
                replaces: w.replaced_edges.clone(),
            })
            .collect();
        let wg = WiredGraph::new(base, &specs)?;
        let stored: BTreeSet<Edge> = self.edges.iter().map(|&(a, b)| ordered(a, b)).collect();
        if &stored != wg.all_edges() {
            return Err(Error::InvalidGraph("edge list inconsistent with wires".into()));
        }
        Ok(wg)
    }
}
