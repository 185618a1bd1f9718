//! Rydberg-atom Ising simulation of quantum-wired Platonic graphs.
//!
//! The crate follows one pipeline: Platonic graph ([`graphs`]) to planar
//! wired array ([`layout`]) to Ising Hamiltonian ([`hamiltonian`]), then
//! either static analysis ([`spectrum`]) or a quasi-adiabatic sweep
//! ([`evolution`]), and finally sampling and wire post-selection
//! ([`measure`]).
//!
//! Units: hbar = 1, frequencies in rad/us (a quoted "x MHz" is `2 pi x`),
//! times in us, distances in um.

pub mod basis;
pub mod error;
pub mod evolution;
pub mod graphs;
pub mod hamiltonian;
pub mod krylov;
pub mod layout;
pub mod measure;
pub mod spectrum;

pub use basis::{BasisIndex, SpinConfig};
pub use error::{Error, Result};
pub use graphs::{platonic_graph, strip_wires, wire_platonic, Graph, PlatonicSolid, WiredGraph};
pub use hamiltonian::{Coupling, Drive, HamiltonianParams, RydbergOperator, StateVector, C64};
pub use layout::{angular, quoted, Layout, PhysicalParams};
