//! Rydberg Ising Hamiltonian over the `2^N` configuration basis.
//!
//! With hbar = 1 the operator is
//!
//! ```text
//! H = (Omega/2) sum_i sigma_x,i - Delta sum_i n_i + sum_{i<j} U_ij n_i n_j
//! ```
//!
//! i.e. the `-Delta sigma_z / 2` term is rewritten through
//! `n = (sigma_z + 1)/2` and the constant `+Delta N / 2` is dropped
//! everywhere. Energies are rad/us and times us.

use std::io::{self, Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{atom_bit, SpinConfig};
use crate::error::{Error, Result};
use crate::graphs::{Graph, WiredGraph};
use crate::layout::{pairwise_couplings, Layout};

pub type C64 = Complex64;

/// Largest atom count accepted by [`build_dense`].
pub const DENSE_MAX_ATOMS: usize = 14;
/// Largest atom count for a full state vector.
pub const STATE_MAX_ATOMS: usize = 26;

/// Pure state over `2^N` configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 || n > STATE_MAX_ATOMS {
            return Err(Error::TooManyAtoms { what: "state vector", max: STATE_MAX_ATOMS, got: n });
        }
        Ok(Self { n, amps: vec![C64::new(0.0, 0.0); 1 << n] })
    }

    pub fn basis(config: SpinConfig) -> Result<Self> {
        let mut s = Self::zeros(config.num_atoms())?;
        s.amps[config.bits() as usize] = C64::new(1.0, 0.0);
        Ok(s)
    }

    /// The all-ground product state.
    pub fn ground(n: usize) -> Result<Self> {
        Self::basis(SpinConfig::ground(n)?)
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        if n == 0 || n > STATE_MAX_ATOMS {
            return Err(Error::TooManyAtoms { what: "state vector", max: STATE_MAX_ATOMS, got: n });
        }
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, got: amps.len() });
        }
        Ok(Self { n, amps })
    }

    /// Normalized superposition of `(config, amplitude)` terms.
    pub fn superposition(n: usize, terms: &[(SpinConfig, C64)]) -> Result<Self> {
        let mut s = Self::zeros(n)?;
        for (c, a) in terms {
            if c.num_atoms() != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.num_atoms() });
            }
            s.amps[c.bits() as usize] += a;
        }
        s.normalize()?;
        Ok(s)
    }

    #[inline]
    pub fn num_atoms(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn amplitude(&self, config: SpinConfig) -> C64 {
        self.amps[config.bits() as usize]
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let nrm = self.norm();
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::Unnormalized(nrm * nrm));
        }
        let inv = 1.0 / nrm;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        dot(&self.amps, &other.amps)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Born-rule probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Binary checkpoint: `N` as u64 little-endian, then `2^N` pairs of
    /// little-endian f64 `(re, im)`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(8 + 16 * self.amps.len());
        self.write_binary(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let io_err = |e: io::Error| Error::Format(format!("state checkpoint: {e}"));
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(io_err)?;
        let n = u64::from_le_bytes(word) as usize;
        let mut s = Self::zeros(n)?;
        for a in s.amps.iter_mut() {
            r.read_exact(&mut word).map_err(io_err)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word).map_err(io_err)?;
            *a = C64::new(re, f64::from_le_bytes(word));
        }
        Ok(s)
    }
}

#[inline]
pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

#[inline]
pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Interaction terms of the Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// Strength `u` on every edge of `graph`, nothing elsewhere.
    Uniform { graph: Graph, u: f64 },
    /// Full symmetric `U_ij` matrix, typically from a layout.
    Pairwise(DMatrix<f64>),
}

impl Coupling {
    pub fn uniform(graph: Graph, u: f64) -> Self {
        Self::Uniform { graph, u }
    }

    pub fn uniform_wired(wg: &WiredGraph, u: f64) -> Self {
        Self::Uniform { graph: wg.atom_graph(), u }
    }

    /// `C6 / r^6` between every pair of atoms, including non-edges.
    pub fn physical(layout: &Layout, c6: f64) -> Result<Self> {
        Ok(Self::Pairwise(pairwise_couplings(layout, c6)?))
    }

    pub fn num_atoms(&self) -> usize {
        match self {
            Self::Uniform { graph, .. } => graph.num_vertices(),
            Self::Pairwise(m) => m.nrows(),
        }
    }

    /// Nonzero `(i, j, U_ij)` with `i < j`.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        match self {
            Self::Uniform { graph, u } => graph.edges().iter().map(|&(i, j)| (i, j, *u)).collect(),
            Self::Pairwise(m) => {
                let n = m.nrows();
                (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| m[(i, j)] != 0.0)
                    .map(|(i, j)| (i, j, m[(i, j)]))
                    .collect()
            }
        }
    }
}

/// Time-dependent drive: Rabi frequency and detuning, rad/us.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub omega: f64,
    pub delta: f64,
}

impl Drive {
    pub fn new(omega: f64, delta: f64) -> Self {
        Self { omega, delta }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianParams {
    pub omega: f64,
    pub delta: f64,
    pub coupling: Coupling,
}

impl HamiltonianParams {
    pub fn new(omega: f64, delta: f64, coupling: Coupling) -> Self {
        Self { omega, delta, coupling }
    }

    pub fn drive(&self) -> Drive {
        Drive::new(self.omega, self.delta)
    }
}

/// Matrix-free Hamiltonian with the interaction diagonal tabulated once.
///
/// `apply` is a pure gather: each output amplitude is computed from the input
/// alone in a fixed order, so results do not depend on threading.
#[derive(Debug, Clone)]
pub struct RydbergOperator {
    n: usize,
    interaction: Vec<f64>,
    excitations: Vec<u8>,
}

impl RydbergOperator {
    pub fn new(coupling: &Coupling) -> Result<Self> {
        let n = coupling.num_atoms();
        if n == 0 || n > STATE_MAX_ATOMS {
            return Err(Error::TooManyAtoms { what: "Hamiltonian", max: STATE_MAX_ATOMS, got: n });
        }
        let dim = 1usize << n;
        // row[i] lists U_ij for j > i as (bit of j, U_ij)
        let mut rows: Vec<Vec<(u64, f64)>> = vec![Vec::new(); n];
        for (i, j, u) in coupling.pairs() {
            rows[i].push((atom_bit(n, j), u));
        }
        let mut interaction = vec![0.0; dim];
        let mut excitations = vec![0u8; dim];
        for c in 1..dim {
            // peel the highest atom (lowest index) present
            let top_bit = 63 - (c as u64).leading_zeros() as usize;
            let atom = n - 1 - top_bit;
            let rest = c & !(1usize << top_bit);
            let mut e = interaction[rest];
            for &(bit, u) in &rows[atom] {
                if rest as u64 & bit != 0 {
                    e += u;
                }
            }
            interaction[c] = e;
            excitations[c] = excitations[rest] + 1;
        }
        Ok(Self { n, interaction, excitations })
    }

    pub fn from_params(params: &HamiltonianParams) -> Result<Self> {
        Self::new(&params.coupling)
    }

    #[inline]
    pub fn num_atoms(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.interaction.len()
    }

    /// Diagonal energy of configuration word `bits` at detuning `delta`.
    #[inline]
    pub fn diagonal(&self, bits: usize, delta: f64) -> f64 {
        self.interaction[bits] - delta * self.excitations[bits] as f64
    }

    #[inline]
    pub fn interaction_energy(&self, bits: usize) -> f64 {
        self.interaction[bits]
    }

    #[inline]
    pub fn excitations(&self, bits: usize) -> u32 {
        self.excitations[bits] as u32
    }

    /// `out = H psi`.
    pub fn apply_into(&self, drive: Drive, input: &[C64], out: &mut [C64]) {
        assert_eq!(input.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        let half = 0.5 * drive.omega;
        let n = self.n;
        let row = |c: usize| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += input[c ^ (1 << k)];
            }
            input[c] * self.diagonal(c, drive.delta) + acc * half
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            const CHUNK: usize = 1 << 12;
            out.par_chunks_mut(CHUNK).enumerate().for_each(|(k, chunk)| {
                let base = k * CHUNK;
                for (off, o) in chunk.iter_mut().enumerate() {
                    *o = row(base + off);
                }
            });
        }
        #[cfg(not(feature = "parallel"))]
        for (c, o) in out.iter_mut().enumerate() {
            *o = row(c);
        }
    }

    pub fn apply(&self, drive: Drive, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: state.dim() });
        }
        let mut out = StateVector::zeros(self.n)?;
        self.apply_into(drive, state.amplitudes(), out.amplitudes_mut());
        Ok(out)
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, drive: Drive, state: &StateVector) -> Result<f64> {
        Ok(state.inner(&self.apply(drive, state)?).re)
    }

    /// Dense real-symmetric matrix of `H`; only for small `N`.
    pub fn dense_real(&self, drive: Drive) -> Result<DMatrix<f64>> {
        if self.n > DENSE_MAX_ATOMS {
            return Err(Error::TooManyAtoms { what: "dense Hamiltonian", max: DENSE_MAX_ATOMS, got: self.n });
        }
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            m[(c, c)] = self.diagonal(c, drive.delta);
            for k in 0..self.n {
                m[(c ^ (1 << k), c)] = 0.5 * drive.omega;
            }
        }
        Ok(m)
    }
}

/// Classical (Omega = 0) energy of a configuration:
/// `-Delta * #excited + sum over excited pairs of U_ij`.
pub fn classical_energy(config: SpinConfig, delta: f64, coupling: &Coupling) -> Result<f64> {
    if config.num_atoms() != coupling.num_atoms() {
        return Err(Error::DimensionMismatch { expected: coupling.num_atoms(), got: config.num_atoms() });
    }
    let n = config.num_atoms();
    let bits = config.bits();
    let pair_energy: f64 = coupling
        .pairs()
        .iter()
        .filter(|&&(i, j, _)| bits & atom_bit(n, i) != 0 && bits & atom_bit(n, j) != 0)
        .map(|&(_, _, u)| u)
        .sum();
    Ok(pair_energy - delta * config.excitations() as f64)
}

/// `H|psi>` for the parameters' coupling.
pub fn apply_hamiltonian(state: &StateVector, params: &HamiltonianParams) -> Result<StateVector> {
    RydbergOperator::from_params(params)?.apply(params.drive(), state)
}

/// Dense Hermitian matrix of the same operator, for `N <= 14`.
pub fn build_dense(params: &HamiltonianParams) -> Result<DMatrix<C64>> {
    let n = params.coupling.num_atoms();
    if n > DENSE_MAX_ATOMS {
        return Err(Error::TooManyAtoms { what: "dense Hamiltonian", max: DENSE_MAX_ATOMS, got: n });
    }
    let op = RydbergOperator::from_params(params)?;
    Ok(op.dense_real(params.drive())?.map(|x| C64::new(x, 0.0)))
}
