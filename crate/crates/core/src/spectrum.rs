//! Static analysis: classical (Omega = 0) phase structure, maximum
//! independent sets, the closed-form reference states, and finite-Omega
//! ground states.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::basis::SpinConfig;
use crate::error::{Error, Result};
use crate::graphs::{platonic_graph, wire_platonic, Graph, PlatonicSolid};
use crate::hamiltonian::{Drive, HamiltonianParams, RydbergOperator, StateVector, C64};
use crate::krylov::{lowest_eigenpair, DrivenOperator, EigenOptions};

/// Largest graph handled by exhaustive enumeration.
pub const BRUTE_FORCE_MAX_ATOMS: usize = 24;
/// Largest graph handled by [`ground_state`].
pub const GROUND_STATE_MAX_ATOMS: usize = 20;

fn check_brute_force(graph: &Graph) -> Result<()> {
    let n = graph.num_vertices();
    if n > BRUTE_FORCE_MAX_ATOMS {
        return Err(Error::TooManyAtoms { what: "exhaustive enumeration", max: BRUTE_FORCE_MAX_ATOMS, got: n });
    }
    Ok(())
}

/// For every excitation count `k`, the fewest excited edges `p_k` any
/// `k`-configuration has, and the configurations attaining it.
#[derive(Debug, Clone)]
pub struct SectorMinima {
    pub min_pairs: Vec<usize>,
    pub configs: Vec<Vec<SpinConfig>>,
}

pub fn sector_minima(graph: &Graph) -> Result<SectorMinima> {
    check_brute_force(graph)?;
    let n = graph.num_vertices();
    let masks = graph.neighbor_masks();
    let mut min_pairs = vec![usize::MAX; n + 1];
    let mut configs: Vec<Vec<SpinConfig>> = vec![Vec::new(); n + 1];
    for bits in 0..(1u64 << n) {
        let k = bits.count_ones() as usize;
        let mut twice = 0u32;
        for (atom, &m) in masks.iter().enumerate() {
            if bits & crate::basis::atom_bit(n, atom) != 0 {
                twice += (m & bits).count_ones();
            }
        }
        let p = (twice / 2) as usize;
        if p < min_pairs[k] {
            min_pairs[k] = p;
            configs[k].clear();
        }
        if p == min_pairs[k] {
            configs[k].push(SpinConfig::new(bits, n)?);
        }
    }
    Ok(SectorMinima { min_pairs, configs })
}

/// All minimizers of the classical energy `-Delta k + U p` by exhaustive
/// search, ties included.
pub fn classical_ground_configs(graph: &Graph, delta: f64, u: f64) -> Result<Vec<SpinConfig>> {
    let sectors = sector_minima(graph)?;
    let energies: Vec<f64> = sectors
        .min_pairs
        .iter()
        .enumerate()
        .map(|(k, &p)| -delta * k as f64 + u * p as f64)
        .collect();
    let best = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = (delta.abs() + u.abs()) * graph.num_vertices().max(1) as f64;
    let tol = 1e-12 * scale.max(1e-300);
    let mut out: Vec<SpinConfig> = energies
        .iter()
        .enumerate()
        .filter(|&(_, &e)| e - best <= tol)
        .flat_map(|(k, _)| sectors.configs[k].iter().copied())
        .collect();
    out.sort();
    Ok(out)
}

/// Interval of `Delta / U` with one classical ground sector.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRegion {
    pub lo: Ratio<i64>,
    pub hi: Ratio<i64>,
    pub excitation_count: usize,
    /// Excited edges in every ground configuration of the region.
    pub pair_count: usize,
    pub ground_configs: Vec<SpinConfig>,
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub graph: String,
    pub regions: Vec<PhaseRegion>,
}

impl PhaseDiagram {
    /// Interior phase boundaries, in units of U.
    pub fn boundaries(&self) -> Vec<Ratio<i64>> {
        self.regions.iter().skip(1).map(|r| r.lo).collect()
    }

    pub fn to_records(&self) -> Vec<PhaseRecord> {
        self.regions
            .iter()
            .map(|r| PhaseRecord {
                delta_lo_over_u: ratio_f64(r.lo),
                delta_hi_over_u: ratio_f64(r.hi),
                delta_lo_exact: r.lo.to_string(),
                delta_hi_exact: r.hi.to_string(),
                excitation_count: r.excitation_count,
                pair_count: r.pair_count,
                configs: r.ground_configs.iter().map(|c| c.index().0).collect(),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_records()).expect("phase records serialize")
    }

    /// One row per region: bounds, excitation count, multiplicity and the
    /// space-separated ground-configuration indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta_lo_over_U,delta_hi_over_U,excitation_count,pair_count,multiplicity,configs\n");
        for r in &self.regions {
            let idx: Vec<String> = r.ground_configs.iter().map(|c| c.index().0.to_string()).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                ratio_f64(r.lo),
                ratio_f64(r.hi),
                r.excitation_count,
                r.pair_count,
                r.ground_configs.len(),
                idx.join(" ")
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    #[serde(rename = "delta_lo_over_U")]
    pub delta_lo_over_u: f64,
    #[serde(rename = "delta_hi_over_U")]
    pub delta_hi_over_u: f64,
    pub delta_lo_exact: String,
    pub delta_hi_exact: String,
    pub excitation_count: usize,
    pub pair_count: usize,
    pub configs: Vec<u64>,
}

/// Classical phase diagram over `Delta/U` in `(-1, 4)`.
pub fn phase_diagram(graph: &Graph) -> Result<PhaseDiagram> {
    phase_diagram_in(graph, Ratio::from_integer(-1), Ratio::from_integer(4))
}

/// Lower envelope of the sector lines `E_k / U = p_k - k x` on `(lo, hi)`.
/// Breakpoints are exact rationals `(p_k' - p_k) / (k' - k)`.
pub fn phase_diagram_in(graph: &Graph, lo: Ratio<i64>, hi: Ratio<i64>) -> Result<PhaseDiagram> {
    if lo >= hi {
        return Err(Error::InvalidConfig(format!("empty window ({lo}, {hi})")));
    }
    let sectors = sector_minima(graph)?;
    let p: Vec<i64> = sectors.min_pairs.iter().map(|&x| x as i64).collect();
    let line = |k: usize, x: Ratio<i64>| Ratio::from_integer(p[k]) - x * k as i64;

    // winning sector just right of `lo`: lowest value, ties to the steeper line
    let mut current = 0usize;
    for k in 1..p.len() {
        if line(k, lo) <= line(current, lo) {
            current = k;
        }
    }
    let mut regions = Vec::new();
    let mut x = lo;
    loop {
        let mut next: Option<(Ratio<i64>, usize)> = None;
        for k in current + 1..p.len() {
            let cross = Ratio::new(p[k] - p[current], (k - current) as i64);
            if cross <= x {
                continue;
            }
            next = match next {
                Some((bx, bk)) if cross > bx || (cross == bx && k < bk) => Some((bx, bk)),
                _ => Some((cross, k)),
            };
        }
        let end = match next {
            Some((bx, _)) if bx < hi => bx,
            _ => hi,
        };
        regions.push(PhaseRegion {
            lo: x,
            hi: end,
            excitation_count: current,
            pair_count: sectors.min_pairs[current],
            ground_configs: sectors.configs[current].clone(),
        });
        match next {
            Some((bx, bk)) if bx < hi => {
                x = bx;
                current = bk;
            }
            _ => break,
        }
    }
    Ok(PhaseDiagram { graph: graph.name().to_string(), regions })
}

/// All maximum independent sets, by exhaustive search.
pub fn mis_set(graph: &Graph) -> Result<Vec<SpinConfig>> {
    let sectors = sector_minima(graph)?;
    let k = (0..sectors.min_pairs.len())
        .rev()
        .find(|&k| sectors.min_pairs[k] == 0)
        .unwrap_or(0);
    Ok(sectors.configs[k].clone())
}

/// Orbits of `configs` under the group generated by atom permutations
/// `generators` (atom `i` goes to `perm[i]`). Configurations outside the
/// input set that an orbit reaches are included.
pub fn config_orbits(configs: &[SpinConfig], generators: &[Vec<usize>]) -> Vec<Vec<SpinConfig>> {
    let mut seen = BTreeSet::new();
    let mut orbits = Vec::new();
    for &c in configs {
        if seen.contains(&c) {
            continue;
        }
        let mut orbit = BTreeSet::from([c]);
        let mut frontier = vec![c];
        while let Some(x) = frontier.pop() {
            for g in generators {
                let y = x.permuted(g);
                if orbit.insert(y) {
                    frontier.push(y);
                }
            }
        }
        seen.extend(orbit.iter().copied());
        orbits.push(orbit.into_iter().collect());
    }
    orbits
}

/// The six closed-form MIS states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReferenceState {
    MisK4,
    MisQ3,
    MisK222,
    MisK4Wired,
    MisQ3Wired,
    MisK222Wired,
}

impl ReferenceState {
    pub const ALL: [ReferenceState; 6] = [
        Self::MisK4,
        Self::MisQ3,
        Self::MisK222,
        Self::MisK4Wired,
        Self::MisQ3Wired,
        Self::MisK222Wired,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::MisK4 => "MIS(K4)",
            Self::MisQ3 => "MIS(Q3)",
            Self::MisK222 => "MIS(K222)",
            Self::MisK4Wired => "MIS(K4')",
            Self::MisQ3Wired => "MIS(Q3')",
            Self::MisK222Wired => "MIS(K222')",
        }
    }

    pub fn solid(self) -> PlatonicSolid {
        match self {
            Self::MisK4 | Self::MisK4Wired => PlatonicSolid::Tetrahedron,
            Self::MisQ3 | Self::MisQ3Wired => PlatonicSolid::Cube,
            Self::MisK222 | Self::MisK222Wired => PlatonicSolid::Octahedron,
        }
    }

    pub fn is_wired(self) -> bool {
        matches!(self, Self::MisK4Wired | Self::MisQ3Wired | Self::MisK222Wired)
    }

    /// The graph the state lives on (base or wired atom graph).
    pub fn graph(self) -> Graph {
        if self.is_wired() {
            wire_platonic(self.solid()).atom_graph()
        } else {
            platonic_graph(self.solid())
        }
    }
}

impl FromStr for ReferenceState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '(' | ')' | ' ' | ',' | '_' | '-'))
            .collect();
        let key = key.strip_prefix("mis").unwrap_or(&key);
        Ok(match key {
            "k4" => Self::MisK4,
            "q3" => Self::MisQ3,
            "k222" => Self::MisK222,
            "k4'" => Self::MisK4Wired,
            "q3'" => Self::MisQ3Wired,
            "k222'" => Self::MisK222Wired,
            _ => return Err(Error::UnsupportedGraph(s.to_string())),
        })
    }
}

/// Exact amplitudes of a reference state.
pub fn reference_state(which: ReferenceState) -> StateVector {
    let c = |segs: &[&str]| SpinConfig::from_segments(segs).expect("static bitstrings");
    let amp = |x: f64| C64::new(x, 0.0);
    let terms: Vec<(SpinConfig, C64)> = match which {
        ReferenceState::MisK4 => ["1000", "0100", "0010", "0001"].iter().map(|s| (c(&[s]), amp(0.5))).collect(),
        ReferenceState::MisQ3 => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            vec![(c(&["01010101"]), amp(h)), (c(&["10101010"]), amp(h))]
        }
        ReferenceState::MisK222 => {
            let t = (1.0f64 / 3.0).sqrt();
            ["100100", "010010", "001001"].iter().map(|s| (c(&[s]), amp(t))).collect()
        }
        ReferenceState::MisK4Wired => {
            let af = (3.0f64 / 32.0).sqrt();
            let free = (5.0f64 / 32.0).sqrt();
            let mut v = vec![
                (c(&["10", "0001"]), amp(af)),
                (c(&["10", "0010"]), amp(af)),
                (c(&["01", "0100"]), amp(af)),
                (c(&["01", "1000"]), amp(af)),
            ];
            for s in ["0101", "0110", "1001", "1010"] {
                v.push((c(&["00", s]), amp(free)));
            }
            v
        }
        ReferenceState::MisQ3Wired => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            vec![
                (c(&["01", "10", "01", "10", "10101010"]), amp(h)),
                (c(&["10", "01", "10", "01", "01010101"]), amp(h)),
            ]
        }
        ReferenceState::MisK222Wired => {
            let a = (20.0f64 / 243.0).sqrt();
            let b = (41.0f64 / 243.0).sqrt();
            let free = [("0101", a), ("1010", a), ("1001", b)];
            let mut v = Vec::new();
            for (w, x) in free {
                v.push((c(&["1010", "0101", w, "001001"]), amp(x)));
                v.push((c(&[w, "1010", "0101", "010010"]), amp(x)));
                v.push((c(&["0101", w, "1010", "100100"]), amp(x)));
            }
            v
        }
    };
    let n = terms[0].0.num_atoms();
    let mut s = StateVector::zeros(n).expect("reference states are small");
    for (cfg, a) in terms {
        s.amplitudes_mut()[cfg.bits() as usize] = a;
    }
    s
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    pub residual: f64,
    pub matvecs: usize,
}

/// Deterministic Krylov start vector. For `Omega > 0` the ground state is,
/// up to the sign gauge `(-1)^(#excited)`, a positive vector, so the gauged
/// uniform vector always overlaps it.
pub fn start_vector(n: usize, omega: f64) -> Vec<C64> {
    let dim = 1usize << n;
    let amp = 1.0 / (dim as f64).sqrt();
    (0..dim)
        .map(|c| {
            let odd = (c as u64).count_ones() % 2 == 1;
            if omega > 0.0 && odd {
                C64::new(-amp, 0.0)
            } else {
                C64::new(amp, 0.0)
            }
        })
        .collect()
}

/// Lowest eigenpair with `||H psi - E psi|| <= tol`.
pub fn ground_state(params: &HamiltonianParams, tol: f64) -> Result<GroundState> {
    let op = RydbergOperator::from_params(params)?;
    ground_state_of(&op, params.drive(), &EigenOptions { tol, ..EigenOptions::default() })
}

pub fn ground_state_of(op: &RydbergOperator, drive: Drive, opts: &EigenOptions) -> Result<GroundState> {
    let n = op.num_atoms();
    if n > GROUND_STATE_MAX_ATOMS {
        return Err(Error::TooManyAtoms { what: "ground state", max: GROUND_STATE_MAX_ATOMS, got: n });
    }
    let driven = DrivenOperator { op, drive };
    let start = start_vector(n, drive.omega);
    let pair = lowest_eigenpair(&driven, &start, opts)?;
    let state = StateVector::from_amplitudes(n, pair.vector)?;
    Ok(GroundState { energy: pair.value, state, residual: pair.residual, matvecs: pair.matvecs })
}

/// Ground-state probabilities at a sequence of small Rabi frequencies and
/// their `Omega -> 0` limit, extrapolated linearly in `Omega^2` through the
/// two smallest values (larger ones carry higher-order terms).
#[derive(Debug, Clone)]
pub struct SmallOmegaLimit {
    pub omegas: Vec<f64>,
    pub probabilities: Vec<Vec<f64>>,
    pub extrapolated: Vec<f64>,
}

pub fn small_omega_limit(op: &RydbergOperator, delta: f64, omegas: &[f64], opts: &EigenOptions) -> Result<SmallOmegaLimit> {
    if omegas.is_empty() || omegas.iter().any(|&o| o <= 0.0) {
        return Err(Error::InvalidConfig("small-Omega sequence needs positive values".into()));
    }
    let probabilities: Vec<Vec<f64>> = omegas
        .iter()
        .map(|&o| ground_state_of(op, Drive::new(o, delta), opts).map(|g| g.state.probabilities()))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..omegas.len()).collect();
    order.sort_by(|&a, &b| omegas[a].total_cmp(&omegas[b]));
    let extrapolated = match order[..] {
        [lo, hi, ..] if omegas[lo] < omegas[hi] => {
            let (x0, x1) = (omegas[lo].powi(2), omegas[hi].powi(2));
            let mut out: Vec<f64> = probabilities[lo]
                .iter()
                .zip(&probabilities[hi])
                .map(|(p0, p1)| (p0 - (p1 - p0) * x0 / (x1 - x0)).max(0.0))
                .collect();
            let total: f64 = out.iter().sum();
            out.iter_mut().for_each(|p| *p /= total);
            out
        }
        _ => probabilities[order[0]].clone(),
    };
    Ok(SmallOmegaLimit { omegas: omegas.to_vec(), probabilities, extrapolated })
}
