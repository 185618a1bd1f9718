//! Projective sampling, classical readout errors, wire post-selection and
//! the shot-budget formulas.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{bitstring, SpinConfig, MAX_ATOMS};
use crate::error::{positive, probability, Error, Result};
use crate::evolution::DensityOperator;
use crate::graphs::{Graph, WiredGraph};
use crate::hamiltonian::StateVector;
use crate::spectrum::mis_set;

const DOMAIN_SAMPLE: u64 = 1;
const DOMAIN_DETECT: u64 = 2;

/// Generator for one shot: the seed picks the key, `(domain, shot)` the
/// stream, so every shot is reproducible on its own.
fn shot_rng(seed: u64, domain: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(domain << 56 | shot);
    rng
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(2 * bytes.len());
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Anything with a diagonal to sample from.
pub trait Populations {
    fn num_atoms(&self) -> usize;
    fn populations(&self) -> Vec<f64>;
    /// SHA-256 of the exact numerical content, hex encoded.
    fn digest(&self) -> String;
}

impl Populations for StateVector {
    fn num_atoms(&self) -> usize {
        StateVector::num_atoms(self)
    }

    fn populations(&self) -> Vec<f64> {
        self.probabilities()
    }

    fn digest(&self) -> String {
        hex(&Sha256::digest(self.to_bytes()))
    }
}

impl Populations for DensityOperator {
    fn num_atoms(&self) -> usize {
        DensityOperator::num_atoms(self)
    }

    fn populations(&self) -> Vec<f64> {
        DensityOperator::populations(self)
    }

    fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.num_atoms() as u64).to_le_bytes());
        for z in self.matrix().iter() {
            h.update(z.re.to_le_bytes());
            h.update(z.im.to_le_bytes());
        }
        hex(&h.finalize())
    }
}

impl Populations for Distribution {
    fn num_atoms(&self) -> usize {
        self.n
    }

    fn populations(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.n];
        for (c, p) in self.iter() {
            out[c as usize] = p;
        }
        out
    }

    fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        for (c, p) in self.iter() {
            h.update(c.to_le_bytes());
            h.update(p.to_le_bytes());
        }
        hex(&h.finalize())
    }
}

/// Provenance of a shot set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSource {
    pub state_sha256: String,
    pub seed: u64,
    /// `(p01, p10, seed)` once readout errors have been applied.
    pub detection: Option<(f64, f64, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotSet {
    n: usize,
    shots: Vec<u64>,
    pub source: ShotSource,
}

impl ShotSet {
    pub fn new(n: usize, shots: Vec<u64>, source: ShotSource) -> Result<Self> {
        if n > MAX_ATOMS {
            return Err(Error::TooManyAtoms { what: "shot set", max: MAX_ATOMS, got: n });
        }
        if let Some(bad) = shots.iter().find(|&&b| n < 64 && b >> n != 0) {
            return Err(Error::InvalidConfig(format!("shot {bad:#x} has more than {n} atoms")));
        }
        Ok(Self { n, shots, source })
    }

    pub fn num_atoms(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    pub fn bits(&self) -> &[u64] {
        &self.shots
    }

    pub fn configs(&self) -> impl Iterator<Item = SpinConfig> + '_ {
        self.shots.iter().map(|&b| SpinConfig::new(b, self.n).expect("checked on construction"))
    }

    /// `shot_index,bitstring`, one line per shot.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("shot_index,bitstring\n");
        for (i, &b) in self.shots.iter().enumerate() {
            let _ = writeln!(out, "{i},{}", bitstring(b, self.n));
        }
        out
    }

    /// Reads the CSV form; provenance is not stored in the file.
    pub fn from_csv(csv: &str) -> Result<Self> {
        let mut lines = csv.lines();
        if lines.next().map(str::trim) != Some("shot_index,bitstring") {
            return Err(Error::Format("expected header `shot_index,bitstring`".into()));
        }
        let mut n = None;
        let mut shots = Vec::new();
        for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let (idx, bits) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("shot row {row}: `{line}`")))?;
            if idx.trim().parse::<usize>().ok() != Some(row) {
                return Err(Error::Format(format!("shot row {row} has index `{idx}`")));
            }
            let c = SpinConfig::from_bitstring(bits.trim())?;
            if *n.get_or_insert(c.num_atoms()) != c.num_atoms() {
                return Err(Error::Format(format!("shot row {row} has a different atom count")));
            }
            shots.push(c.bits());
        }
        let source = ShotSource { state_sha256: String::new(), seed: 0, detection: None };
        Self::new(n.unwrap_or(0), shots, source)
    }
}

fn map_shots(m: usize, f: impl Fn(u64) -> u64 + Sync + Send) -> Vec<u64> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..m as u64).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..m as u64).map(f).collect()
    }
}

/// `m` independent Born-rule samples.
pub fn sample_shots<P: Populations + ?Sized>(source: &P, m: usize, seed: u64) -> Result<ShotSet> {
    if m == 0 {
        return Err(Error::NonPositive { name: "shots", value: 0.0 });
    }
    let probs = source.populations();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in &probs {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    if (acc - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized(acc));
    }
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let shots = map_shots(m, |shot| {
        let u: f64 = shot_rng(seed, DOMAIN_SAMPLE, shot).random::<f64>() * acc;
        cdf.partition_point(|&c| c <= u).min(last) as u64
    });
    let src = ShotSource { state_sha256: source.digest(), seed, detection: None };
    ShotSet::new(source.num_atoms(), shots, src)
}

/// Independent bit flips: `0 -> 1` with probability `p01`, `1 -> 0` with
/// `p10`.
pub fn apply_detection_errors(shots: &ShotSet, p01: f64, p10: f64, seed: u64) -> Result<ShotSet> {
    probability("p01", p01)?;
    probability("p10", p10)?;
    let n = shots.n;
    let flipped = map_shots(shots.len(), |i| {
        let mut rng = shot_rng(seed, DOMAIN_DETECT, i);
        let mut b = shots.shots[i as usize];
        for atom in 0..n {
            let mask = 1u64 << (n - 1 - atom);
            let u: f64 = rng.random();
            let p = if b & mask == 0 { p01 } else { p10 };
            if u < p {
                b ^= mask;
            }
        }
        b
    });
    let mut source = shots.source.clone();
    source.detection = Some((p01, p10, seed));
    ShotSet::new(n, flipped, source)
}

/// Largest register for [`detection_channel`], which is quadratic in `2^N`.
pub const CHANNEL_MAX_ATOMS: usize = 14;

/// Exact readout-error channel on a distribution: the `M -> infinity` limit
/// of [`apply_detection_errors`] applied to samples of `dist`.
pub fn detection_channel(dist: &Distribution, p01: f64, p10: f64) -> Result<Distribution> {
    probability("p01", p01)?;
    probability("p10", p10)?;
    let n = dist.num_atoms();
    if n > CHANNEL_MAX_ATOMS {
        return Err(Error::TooManyAtoms { what: "detection channel", max: CHANNEL_MAX_ATOMS, got: n });
    }
    let mut out = vec![0.0; 1 << n];
    for (c, p) in dist.iter() {
        for (read, slot) in out.iter_mut().enumerate() {
            let read = read as u64;
            let mut w = p;
            for atom in 0..n {
                let mask = 1u64 << atom;
                w *= match (c & mask != 0, read & mask != 0) {
                    (false, false) => 1.0 - p01,
                    (false, true) => p01,
                    (true, true) => 1.0 - p10,
                    (true, false) => p10,
                };
            }
            *slot += w;
        }
    }
    Distribution::from_probabilities(n, &out)
}

/// Sparse distribution over configurations of `n` atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    n: usize,
    probs: BTreeMap<u64, f64>,
    counts: Option<BTreeMap<u64, u64>>,
    total_count: Option<u64>,
}

impl Distribution {
    /// From a dense probability vector; zero entries are dropped.
    pub fn from_probabilities(n: usize, probs: &[f64]) -> Result<Self> {
        let expected = 1usize << n;
        if probs.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: probs.len() });
        }
        let sparse = probs.iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(c, &p)| (c as u64, p));
        Self::from_sparse(n, sparse, None)
    }

    fn from_sparse(n: usize, entries: impl IntoIterator<Item = (u64, f64)>, counts: Option<BTreeMap<u64, u64>>) -> Result<Self> {
        let mut probs = BTreeMap::new();
        for (c, p) in entries {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::NotAProbability { name: "probability", value: p });
            }
            if p > 0.0 {
                *probs.entry(c).or_insert(0.0) += p;
            }
        }
        let total: f64 = probs.values().sum();
        if total <= 0.0 {
            return Err(Error::EmptyPostselection { raw: None, raw_weight: 0.0 });
        }
        let total_count: Option<u64> = counts.as_ref().map(|c| c.values().sum());
        match (&counts, total_count) {
            // frequencies straight from the counts, so files round-trip exactly
            (Some(c), Some(m)) if m > 0 => {
                for (k, p) in probs.iter_mut() {
                    *p = c.get(k).copied().unwrap_or(0) as f64 / m as f64;
                }
            }
            _ if total != 1.0 => probs.values_mut().for_each(|p| *p /= total),
            _ => {}
        }
        Ok(Self { n, probs, counts, total_count })
    }

    pub fn from_shots(shots: &ShotSet) -> Result<Self> {
        let mut counts = BTreeMap::new();
        for &b in shots.bits() {
            *counts.entry(b).or_insert(0u64) += 1;
        }
        let entries: Vec<(u64, f64)> = counts.iter().map(|(&c, &k)| (c, k as f64)).collect();
        Self::from_sparse(shots.num_atoms(), entries, Some(counts))
    }

    pub fn num_atoms(&self) -> usize {
        self.n
    }

    /// Events behind the estimate; `None` for exact distributions.
    pub fn total_count(&self) -> Option<u64> {
        self.total_count
    }

    pub fn probability(&self, bits: u64) -> f64 {
        self.probs.get(&bits).copied().unwrap_or(0.0)
    }

    pub fn count(&self, bits: u64) -> Option<u64> {
        self.counts.as_ref().map(|c| c.get(&bits).copied().unwrap_or(0))
    }

    /// `sqrt(p (1 - p) / M)`; zero for exact distributions.
    pub fn stderr(&self, bits: u64) -> f64 {
        match self.total_count {
            Some(m) if m > 0 => {
                let p = self.probability(bits);
                (p * (1.0 - p) / m as f64).sqrt()
            }
            _ => 0.0,
        }
    }

    /// `(bits, probability)` in increasing configuration order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs.iter().map(|(&c, &p)| (c, p))
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// Highest-probability configuration, ties to the lower index.
    pub fn mode(&self) -> Option<u64> {
        self.iter().fold(None, |best: Option<(u64, f64)>, (c, p)| match best {
            Some((_, q)) if q >= p => best,
            _ => Some((c, p)),
        }).map(|x| x.0)
    }

    /// The `k` most likely configurations.
    pub fn top(&self, k: usize) -> Vec<(u64, f64)> {
        let mut v: Vec<(u64, f64)> = self.iter().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.truncate(k);
        v
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        let keys: std::collections::BTreeSet<u64> = self.probs.keys().chain(other.probs.keys()).copied().collect();
        keys.iter().map(|&c| (self.probability(c) - other.probability(c)).abs()).sum::<f64>() / 2.0
    }

    pub fn to_records(&self) -> Vec<DistributionRecord> {
        self.iter()
            .map(|(c, p)| DistributionRecord {
                index: c + 1,
                bitstring: bitstring(c, self.n),
                probability: p,
                stderr: self.stderr(c),
                count: self.count(c),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_records()).expect("distribution serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let records: Vec<DistributionRecord> = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        let first = records.first().ok_or_else(|| Error::Format("empty distribution".into()))?;
        let n = first.bitstring.len();
        let mut entries = Vec::new();
        let mut counts = BTreeMap::new();
        for r in &records {
            let c = SpinConfig::from_bitstring(&r.bitstring)?;
            if c.num_atoms() != n || c.index().0 != r.index {
                return Err(Error::Format(format!("record {} inconsistent with `{}`", r.index, r.bitstring)));
            }
            entries.push((c.bits(), r.probability));
            if let Some(k) = r.count {
                counts.insert(c.bits(), k);
            }
        }
        let counts = (!counts.is_empty()).then_some(counts);
        Self::from_sparse(n, entries, counts)
    }
}

/// On-disk distribution entry; `index` is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRecord {
    pub index: u64,
    pub bitstring: String,
    pub probability: f64,
    pub stderr: f64,
    pub count: Option<u64>,
}

/// True when the chain holds `len/2` excitations with no two adjacent.
pub fn af_condition(wire_bits: u64, wire_length: usize) -> Result<bool> {
    if wire_length % 2 == 1 {
        return Err(Error::OddWireLength(wire_length));
    }
    let independent = wire_bits & (wire_bits >> 1) == 0;
    Ok(independent && wire_bits.count_ones() as usize == wire_length / 2)
}

/// Every wire of `bits` is in an AF configuration.
pub fn wires_af(graph: &WiredGraph, bits: u64) -> bool {
    let (wires, _) = graph.split_config(bits);
    wires
        .iter()
        .zip(graph.wires())
        .all(|(&w, wire)| af_condition(w, wire.len()).expect("wires are built with even length"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Postselection {
    /// Over base-vertex configurations.
    pub distribution: Distribution,
    /// Kept and raw event counts, for shot input.
    pub kept: Option<u64>,
    pub raw: Option<u64>,
    /// Probability mass that passed the AF filter.
    pub kept_weight: f64,
}

impl Postselection {
    pub fn kept_fraction(&self) -> f64 {
        match (self.kept, self.raw) {
            (Some(k), Some(r)) if r > 0 => k as f64 / r as f64,
            _ => self.kept_weight,
        }
    }
}

fn check_atoms(graph: &WiredGraph, n: usize) -> Result<()> {
    if graph.num_atoms() != n {
        return Err(Error::DimensionMismatch { expected: graph.num_atoms(), got: n });
    }
    Ok(())
}

fn postselect_weighted(
    graph: &WiredGraph,
    entries: impl IntoIterator<Item = (u64, f64)>,
    counts: Option<&BTreeMap<u64, u64>>,
) -> Result<Postselection> {
    let mut kept = BTreeMap::new();
    let mut kept_counts: BTreeMap<u64, u64> = BTreeMap::new();
    let mut raw_weight = 0.0;
    let mut kept_weight = 0.0;
    for (bits, p) in entries {
        raw_weight += p;
        if !wires_af(graph, bits) {
            continue;
        }
        kept_weight += p;
        let (_, base) = graph.split_config(bits);
        *kept.entry(base).or_insert(0.0) += p;
        if let Some(c) = counts {
            *kept_counts.entry(base).or_insert(0) += c.get(&bits).copied().unwrap_or(0);
        }
    }
    let raw = counts.map(|c| c.values().sum::<u64>());
    if kept_weight <= 0.0 {
        return Err(Error::EmptyPostselection { raw, raw_weight });
    }
    let kept_total = counts.map(|_| kept_counts.values().sum::<u64>());
    let n = graph.base().num_vertices();
    let distribution = Distribution::from_sparse(n, kept, counts.map(|_| kept_counts))?;
    Ok(Postselection { distribution, kept: kept_total, raw, kept_weight: kept_weight / raw_weight })
}

/// Keeps shots whose wires are all AF and drops the wire atoms.
pub fn postselect_shots(shots: &ShotSet, graph: &WiredGraph) -> Result<Postselection> {
    check_atoms(graph, shots.num_atoms())?;
    let dist = Distribution::from_shots(shots)?;
    postselect_distribution(&dist, graph)
}

/// Post-selection of a distribution over all atoms.
pub fn postselect_distribution(dist: &Distribution, graph: &WiredGraph) -> Result<Postselection> {
    check_atoms(graph, dist.num_atoms())?;
    postselect_weighted(graph, dist.iter(), dist.counts.as_ref())
}

/// Exact post-selection at the amplitude level:
/// `P(c) ~ sum over AF wire words w of |psi(w, c)|^2`.
pub fn project_wires_af(state: &StateVector, graph: &WiredGraph) -> Result<Postselection> {
    check_atoms(graph, state.num_atoms())?;
    let p = state.norm().powi(2);
    if (p - 1.0).abs() > 1e-8 {
        return Err(Error::Unnormalized(p));
    }
    let entries = state.probabilities().into_iter().enumerate().map(|(c, p)| (c as u64, p));
    postselect_weighted(graph, entries, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Total probability of the maximum independent sets of `graph`, with the
/// binomial error from the event count.
pub fn mis_probability(dist: &Distribution, graph: &Graph) -> Result<Estimate> {
    if dist.num_atoms() != graph.num_vertices() {
        return Err(Error::DimensionMismatch { expected: graph.num_vertices(), got: dist.num_atoms() });
    }
    let value: f64 = mis_set(graph)?.iter().map(|c| dist.probability(c.bits())).sum();
    let stderr = match dist.total_count() {
        Some(m) if m > 0 => (value * (1.0 - value) / m as f64).sqrt(),
        _ => 0.0,
    };
    Ok(Estimate { value, stderr })
}

/// Single-atom survival `exp(-t / t0)`.
pub fn survival(t: f64, t0: f64) -> Result<f64> {
    positive("t0", t0)?;
    if t < 0.0 {
        return Err(Error::NonPositive { name: "t", value: t });
    }
    Ok((-t / t0).exp())
}

/// Probability that all `n_prime` atoms are loaded, `p^N'`.
pub fn rearrangement_probability(p_single: f64, n_prime: usize) -> Result<f64> {
    probability("p_single", p_single)?;
    Ok(p_single.powi(n_prime as i32))
}

/// Rearrangement time and vacuum lifetime of the experiment, s.
pub const REARRANGE_TIME_S: f64 = 0.6;
pub const ATOM_LIFETIME_S: f64 = 16.0;

/// `P_r(N')` for the experimental rearrangement time and lifetime.
pub fn experimental_success_probability(n_prime: usize) -> f64 {
    (-REARRANGE_TIME_S / ATOM_LIFETIME_S * n_prime as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRequirement {
    pub p_g_prime: f64,
    pub p_others: f64,
    /// Repetitions for `|P_g' - P_others| = sqrt(P_g' (1 - P_g') / M)`.
    pub shots: f64,
}

/// Repetitions needed before the correct outcome stands out from its
/// single-flip neighbours.
pub fn required_shots(p01: f64, p10: f64, n_prime: usize, p_g: f64) -> Result<ShotRequirement> {
    probability("p01", p01)?;
    probability("p10", p10)?;
    probability("P_g", p_g)?;
    let half = n_prime as f64 / 2.0;
    let p_g_prime = (1.0 - p01).powf(half) * (1.0 - p10).powf(half) * p_g;
    let p_others = if p01 == 0.0 { 0.0 } else { p01 * (1.0 - p01).powf(half - 1.0) * (1.0 - p10).powf(half) * p_g };
    let gap = p_g_prime - p_others;
    if gap == 0.0 {
        return Err(Error::UnboundedShots);
    }
    Ok(ShotRequirement { p_g_prime, p_others, shots: p_g_prime * (1.0 - p_g_prime) / (gap * gap) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{platonic_graph, wire_platonic, PlatonicSolid};
    use crate::spectrum::{reference_state, ReferenceState};
    use approx::assert_abs_diff_eq;

    fn basis_shots(bits: &str, m: usize) -> ShotSet {
        let s = StateVector::basis(SpinConfig::from_bitstring(bits).unwrap()).unwrap();
        sample_shots(&s, m, 3).unwrap()
    }

    #[test]
    fn basis_state_sampling() {
        let shots = basis_shots("011010", 50);
        assert!(shots.bits().iter().all(|&b| b == 0b011010));
        assert_eq!(shots.len(), 50);
    }

    #[test]
    fn sampling_checks_input() {
        let bad = StateVector::from_amplitudes(2, vec![crate::C64::new(1.0, 0.0); 4]).unwrap();
        assert!(matches!(sample_shots(&bad, 10, 0), Err(Error::Unnormalized(_))));
        let ok = StateVector::ground(2).unwrap();
        assert!(sample_shots(&ok, 0, 0).is_err());
    }

    #[test]
    fn q3_reference_sampling() {
        let s = reference_state(ReferenceState::MisQ3);
        let d = Distribution::from_shots(&sample_shots(&s, 100_000, 11).unwrap()).unwrap();
        assert_eq!(d.support_len(), 2);
        assert_abs_diff_eq!(d.probability(0b01010101), 0.5, epsilon = 0.005);
    }

    #[test]
    fn k222_prime_reference_sampling() {
        let s = reference_state(ReferenceState::MisK222Wired);
        let d = Distribution::from_shots(&sample_shots(&s, 100_000, 12).unwrap()).unwrap();
        let b2 = 41.0 / 243.0;
        let w = |segs: &[&str]| SpinConfig::from_segments(segs).unwrap().bits();
        for c in [
            w(&["1010", "0101", "1001", "001001"]),
            w(&["1001", "1010", "0101", "010010"]),
            w(&["0101", "1001", "1010", "100100"]),
        ] {
            let p = d.probability(c);
            assert!((p - b2).abs() < 3.0 * 4.0 * d.stderr(c), "{p} vs {b2}");
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let s = reference_state(ReferenceState::MisK4Wired);
        let a = sample_shots(&s, 1000, 5).unwrap();
        assert_eq!(a, sample_shots(&s, 1000, 5).unwrap());
        assert_ne!(a.bits(), sample_shots(&s, 1000, 6).unwrap().bits());
        assert_eq!(a.source.state_sha256.len(), 64);
    }

    #[test]
    fn detection_identity_and_saturation() {
        let shots = basis_shots("000000", 100);
        assert_eq!(apply_detection_errors(&shots, 0.0, 0.0, 1).unwrap().bits(), shots.bits());
        let all = apply_detection_errors(&shots, 1.0, 0.0, 1).unwrap();
        assert!(all.bits().iter().all(|&b| b == 0b111111));
        assert!(apply_detection_errors(&shots, 1.2, 0.0, 1).is_err());
    }

    #[test]
    fn detection_survival_fraction() {
        // binomial oracle: (1 - 0.12)^6
        let shots = basis_shots("000000", 100_000);
        let noisy = apply_detection_errors(&shots, 0.12, 0.09, 7).unwrap();
        let clean = noisy.bits().iter().filter(|&&b| b == 0).count() as f64 / 1e5;
        let expect = 0.88f64.powi(6);
        assert_abs_diff_eq!(expect, 0.464, epsilon = 0.001);
        let sigma = (expect * (1.0 - expect) / 1e5).sqrt();
        assert!((clean - expect).abs() < 3.0 * sigma);
        assert_eq!(noisy.len(), shots.len());
    }

    #[test]
    fn flip_fractions_within_binomial_bounds() {
        let shots = basis_shots("111000", 20_000);
        let noisy = apply_detection_errors(&shots, 0.12, 0.09, 8).unwrap();
        let (mut up, mut down) = (0usize, 0usize);
        for &b in noisy.bits() {
            up += (b & 0b000111).count_ones() as usize;
            down += 3 - (b & 0b111000).count_ones() as usize;
        }
        let trials = 60_000.0;
        for (k, p) in [(up, 0.12f64), (down, 0.09)] {
            let sigma = (p * (1.0 - p) / trials).sqrt();
            assert!((k as f64 / trials - p).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn detection_channel_matches_shots() {
        let s = reference_state(ReferenceState::MisK4Wired);
        let exact = detection_channel(&Distribution::from_probabilities(6, &s.probabilities()).unwrap(), 0.12, 0.09).unwrap();
        assert_abs_diff_eq!(exact.total(), 1.0, epsilon = 1e-12);
        let noisy = apply_detection_errors(&sample_shots(&s, 200_000, 1).unwrap(), 0.12, 0.09, 2).unwrap();
        let sampled = Distribution::from_shots(&noisy).unwrap();
        assert!(sampled.total_variation(&exact) < 0.02);
        let zero = Distribution::from_probabilities(2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let flipped = detection_channel(&zero, 0.12, 0.0).unwrap();
        assert_abs_diff_eq!(flipped.probability(0), 0.88 * 0.88, epsilon = 1e-15);
        assert_abs_diff_eq!(flipped.probability(0b11), 0.12 * 0.12, epsilon = 1e-15);
    }

    #[test]
    fn af_rule() {
        assert!(af_condition(0b01, 2).unwrap());
        assert!(af_condition(0b10, 2).unwrap());
        assert!(!af_condition(0b00, 2).unwrap());
        assert!(!af_condition(0b11, 2).unwrap());
        let len4: Vec<u64> = (0..16).filter(|&b| af_condition(b, 4).unwrap()).collect();
        assert_eq!(len4, vec![0b0101, 0b1001, 0b1010]);
        assert!(!af_condition(0b1100, 4).unwrap());
        assert!(matches!(af_condition(0b1, 3), Err(Error::OddWireLength(3))));
    }

    #[test]
    fn exact_postselection_of_references() {
        let k4p = wire_platonic(PlatonicSolid::Tetrahedron);
        let ps = project_wires_af(&reference_state(ReferenceState::MisK4Wired), &k4p).unwrap();
        assert_abs_diff_eq!(ps.kept_weight, 12.0 / 32.0, epsilon = 1e-12);
        for c in [0b1000, 0b0100, 0b0010, 0b0001] {
            assert_abs_diff_eq!(ps.distribution.probability(c), 0.25, epsilon = 1e-12);
        }
        let q3p = wire_platonic(PlatonicSolid::Cube);
        let ps = project_wires_af(&reference_state(ReferenceState::MisQ3Wired), &q3p).unwrap();
        assert_abs_diff_eq!(ps.distribution.probability(0b01010101), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ps.distribution.probability(0b10101010), 0.5, epsilon = 1e-12);
        let k222p = wire_platonic(PlatonicSolid::Octahedron);
        let ps = project_wires_af(&reference_state(ReferenceState::MisK222Wired), &k222p).unwrap();
        assert_abs_diff_eq!(ps.kept_weight, 1.0, epsilon = 1e-12);
        for idx in [10u64, 19, 37] {
            assert_abs_diff_eq!(ps.distribution.probability(idx - 1), 1.0 / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn product_state_fails_postselection() {
        let k4p = wire_platonic(PlatonicSolid::Tetrahedron);
        let err = project_wires_af(&StateVector::ground(6).unwrap(), &k4p).unwrap_err();
        assert!(matches!(err, Error::EmptyPostselection { .. }));
        let shots = basis_shots("000000", 10);
        match postselect_shots(&shots, &k4p).unwrap_err() {
            Error::EmptyPostselection { raw, .. } => assert_eq!(raw, Some(10)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn shot_postselection_converges() {
        let k4p = wire_platonic(PlatonicSolid::Tetrahedron);
        let s = reference_state(ReferenceState::MisK4Wired);
        let exact = project_wires_af(&s, &k4p).unwrap();
        let ps = postselect_shots(&sample_shots(&s, 100_000, 21).unwrap(), &k4p).unwrap();
        assert!(ps.distribution.total_variation(&exact.distribution) <= 0.02);
        assert_eq!(ps.raw, Some(100_000));
        assert_eq!(ps.distribution.total_count(), ps.kept);
    }

    #[test]
    fn postselection_commutes_with_automorphism() {
        // K4' reflection x -> -x: a<->b, 1<->4, 2<->3
        let k4p = wire_platonic(PlatonicSolid::Tetrahedron);
        let perm = [1usize, 0, 5, 4, 3, 2];
        let base_perm = [3usize, 2, 1, 0];
        assert!(k4p.atom_graph().is_automorphism(&perm));
        let probs: Vec<f64> = (0..64).map(|c| ((c * 7 + 3) % 11) as f64).collect();
        let total: f64 = probs.iter().sum();
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let mut permuted = vec![0.0; 64];
        for (c, &p) in probs.iter().enumerate() {
            permuted[SpinConfig::new(c as u64, 6).unwrap().permuted(&perm).bits() as usize] = p;
        }
        let a = postselect_distribution(&Distribution::from_probabilities(6, &probs).unwrap(), &k4p).unwrap();
        let b = postselect_distribution(&Distribution::from_probabilities(6, &permuted).unwrap(), &k4p).unwrap();
        for c in 0..16u64 {
            let pc = SpinConfig::new(c, 4).unwrap().permuted(&base_perm).bits();
            assert_abs_diff_eq!(a.distribution.probability(c), b.distribution.probability(pc), epsilon = 1e-15);
        }
    }

    #[test]
    fn mis_probabilities() {
        let q3p = wire_platonic(PlatonicSolid::Cube);
        let ps = project_wires_af(&reference_state(ReferenceState::MisQ3Wired), &q3p).unwrap();
        let est = mis_probability(&ps.distribution, &platonic_graph(PlatonicSolid::Cube)).unwrap();
        assert_abs_diff_eq!(est.value, 1.0, epsilon = 1e-12);
        let uniform = Distribution::from_probabilities(6, &[1.0 / 64.0; 64]).unwrap();
        let est = mis_probability(&uniform, &platonic_graph(PlatonicSolid::Octahedron)).unwrap();
        assert_abs_diff_eq!(est.value, 3.0 / 64.0, epsilon = 1e-12);
    }

    #[test]
    fn binomial_error_from_kept_events() {
        // 0.33 from 469 kept events
        let mut counts = BTreeMap::new();
        counts.insert(0b1000u64, 155u64);
        counts.insert(0b0000u64, 314u64);
        let entries: Vec<(u64, f64)> = counts.iter().map(|(&c, &k)| (c, k as f64)).collect();
        let d = Distribution::from_sparse(4, entries, Some(counts)).unwrap();
        let est = mis_probability(&d, &platonic_graph(PlatonicSolid::Tetrahedron)).unwrap();
        assert_abs_diff_eq!(est.value, 0.33, epsilon = 0.005);
        assert_abs_diff_eq!(est.stderr, 0.022, epsilon = 0.001);
    }

    #[test]
    fn distribution_json_roundtrip() {
        let shots = sample_shots(&reference_state(ReferenceState::MisK4Wired), 500, 4).unwrap();
        let d = Distribution::from_shots(&shots).unwrap();
        let json = d.to_json();
        let back = Distribution::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
        assert_abs_diff_eq!(d.total(), 1.0, epsilon = 1e-12);
        let recs = d.to_records();
        assert!(recs.windows(2).all(|w| w[0].index < w[1].index));
    }

    #[test]
    fn shot_csv_roundtrip() {
        let shots = sample_shots(&reference_state(ReferenceState::MisK4), 20, 4).unwrap();
        let back = ShotSet::from_csv(&shots.to_csv()).unwrap();
        assert_eq!(back.bits(), shots.bits());
        assert!(ShotSet::from_csv("a,b\n").is_err());
    }

    #[test]
    fn survival_and_rearrangement() {
        let p = survival(0.6, 16.0).unwrap();
        assert_abs_diff_eq!(p, 0.963, epsilon = 0.001);
        assert_eq!(rearrangement_probability(1.0, 80).unwrap(), 1.0);
        assert_abs_diff_eq!(rearrangement_probability(0.97, 80).unwrap(), 0.0874, epsilon = 0.0005);
        assert!(rearrangement_probability(1.1, 3).is_err());
    }

    #[test]
    fn shot_budget() {
        let m25 = required_shots(0.12, 0.09, 25, experimental_success_probability(25)).unwrap();
        let m80 = required_shots(0.12, 0.09, 80, experimental_success_probability(80)).unwrap();
        assert!(m25.shots > 50.0 && m25.shots < 200.0, "{}", m25.shots);
        assert!(m80.shots > 1e5 && m80.shots < 4e5, "{}", m80.shots);
        let clean = required_shots(0.0, 0.0, 25, 0.5).unwrap();
        assert_eq!(clean.p_others, 0.0);
        assert_abs_diff_eq!(clean.shots, 1.0, epsilon = 1e-12);
        assert!(matches!(required_shots(0.0, 0.0, 10, 0.0), Err(Error::UnboundedShots)));
    }
}
