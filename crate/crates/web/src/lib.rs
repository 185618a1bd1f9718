//! Browser bindings. Every export returns a JSON string; the page draws it.

use rydwire::basis::bitstring;
use rydwire::evolution::{evolve_density, evolve_pure, DephasingMode, NoiseModel, StepControl, SweepSchedule};
use rydwire::graphs::platonic_graph_by_name;
use rydwire::layout::{k4_family_layout, experimental_layout, SPACING_UM};
use rydwire::measure::{detection_channel, mis_probability, postselect_distribution, Distribution};
use rydwire::spectrum::phase_diagram;
use rydwire::{angular, Coupling, PhysicalParams, PlatonicSolid, RydbergOperator, StateVector};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Coarser than the batch default; the sweeps are converged to ~1e-6 at this step.
const DT_US: f64 = 0.005;

#[derive(Serialize)]
struct Bar {
    bitstring: String,
    probability: f64,
}

fn bars(dist: &Distribution) -> Vec<Bar> {
    let n = dist.num_atoms();
    (0..1u64 << n).map(|c| Bar { bitstring: bitstring(c, n), probability: dist.probability(c) }).collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

pub fn phases(name: &str) -> rydwire::Result<String> {
    let diagram = phase_diagram(&platonic_graph_by_name(name)?)?;
    Ok(to_json(&diagram.to_records()))
}

#[derive(Serialize)]
struct Family {
    d_ratio: f64,
    /// Weight with both wire atoms down, one up, both up.
    wire_00: f64,
    wire_af: f64,
    wire_11: f64,
    bars: Vec<Bar>,
}

/// Noiseless sweep of the K4' array with wire edges `d_ratio` times the
/// dimer spacing, physical couplings.
pub fn family(d_ratio: f64) -> rydwire::Result<String> {
    let layout = k4_family_layout(SPACING_UM, d_ratio)?;
    let op = RydbergOperator::new(&Coupling::physical(&layout, PhysicalParams::experiment().c6)?)?;
    let schedule = SweepSchedule::experimental(PlatonicSolid::Tetrahedron);
    let psi = evolve_pure(&StateVector::ground(6)?, &schedule, &op, &StepControl::with_dt(DT_US))?;
    let dist = Distribution::from_probabilities(6, &psi.probabilities())?;
    let mut wire = [0.0; 4];
    for (c, p) in dist.iter() {
        wire[(c >> 4) as usize] += p;
    }
    Ok(to_json(&Family {
        d_ratio,
        wire_00: wire[0],
        wire_af: wire[1] + wire[2],
        wire_11: wire[3],
        bars: bars(&dist),
    }))
}

#[derive(Serialize)]
struct Noisy {
    gamma_mhz: f64,
    mis_probability: f64,
    kept_weight: f64,
    /// Post-selected, over the four vertices.
    bars: Vec<Bar>,
}

/// K4' sweep with collective dephasing and readout errors, post-selected on
/// antiferromagnetic wires.
pub fn noisy(gamma_mhz: f64, p01: f64, p10: f64) -> rydwire::Result<String> {
    let layout = experimental_layout(PlatonicSolid::Tetrahedron);
    let op = RydbergOperator::new(&Coupling::physical(&layout, PhysicalParams::experiment().c6)?)?;
    let noise = NoiseModel::new(angular(gamma_mhz), DephasingMode::Collective, p01, p10)?;
    let schedule = SweepSchedule::experimental(PlatonicSolid::Tetrahedron);
    let rho = evolve_density(&StateVector::ground(6)?, &schedule, &noise, &op, DT_US)?;
    let read = detection_channel(&Distribution::from_probabilities(6, &rho.populations())?, p01, p10)?;
    let post = postselect_distribution(&read, layout.graph())?;
    let mis = mis_probability(&post.distribution, layout.graph().base())?;
    Ok(to_json(&Noisy {
        gamma_mhz,
        mis_probability: mis.value,
        kept_weight: post.kept_weight,
        bars: bars(&post.distribution),
    }))
}

fn js(r: rydwire::Result<String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = phaseDiagram)]
pub fn phase_diagram_js(name: &str) -> Result<String, JsError> {
    js(phases(name))
}

#[wasm_bindgen(js_name = familySweep)]
pub fn family_js(d_ratio: f64) -> Result<String, JsError> {
    js(family(d_ratio))
}

#[wasm_bindgen(js_name = noisySweep)]
pub fn noisy_js(gamma_mhz: f64, p01: f64, p10: f64) -> Result<String, JsError> {
    js(noisy(gamma_mhz, p01, p10))
}
