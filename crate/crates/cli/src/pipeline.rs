//! Build, evolve, sample, post-select and report.

use std::fs;
use std::path::Path;

use rydwire::evolution::{
    default_schedule, evolve_density, evolve_pure, evolve_pure_converged, evolve_trajectories, DensityOperator,
    NoiseModel, ScheduleDocument, StepControl, SweepSchedule, DENSITY_MAX_ATOMS,
};
use rydwire::graphs::{wire_platonic_by_name, GraphDocument};
use rydwire::layout::{k4_family_layout, experimental_layout_by_name, SPACING_UM};
use rydwire::measure::{
    apply_detection_errors, detection_channel, mis_probability, postselect_distribution, postselect_shots,
    sample_shots, Distribution, Estimate, Populations, ShotSet, CHANNEL_MAX_ATOMS,
};
use rydwire::{quoted, Coupling, Layout, PhysicalParams, PlatonicSolid, RydbergOperator, StateVector, WiredGraph};
use serde::Serialize;

use crate::config::{CouplingMode, EvolutionMethod, ExperimentConfig, LayoutSource, ScheduleSpec};
use crate::error::CliError;

/// Step halvings allowed before a pure-state run gives up.
const MAX_HALVINGS: usize = 4;

/// Everything fixed by a config before any time evolution.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub graph: WiredGraph,
    pub layout: Layout,
    pub c6: f64,
    /// Dimer spacing used for the uniform coupling value.
    pub d_um: f64,
    pub coupling: Coupling,
    pub schedule: SweepSchedule,
    pub noise: NoiseModel,
}

impl Experiment {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let graph = match (&cfg.graph, &cfg.graph_file) {
            (Some(name), _) => wire_platonic_by_name(name)?,
            (None, Some(path)) => GraphDocument::from_json(&read(path)?)?.to_wired()?,
            (None, None) => return Err(CliError::Config("no graph given".into())),
        };
        let (layout, d_um) = match &cfg.layout {
            LayoutSource::Experimental => {
                let layout = experimental_layout_by_name(graph.base().name())?;
                if layout.graph() != &graph {
                    return Err(CliError::Config(format!(
                        "no tabulated layout for {}; use a layout file",
                        graph.name()
                    )));
                }
                (layout, SPACING_UM)
            }
            LayoutSource::K4Family { d_ratio, d_um } => {
                let layout = k4_family_layout(*d_um, *d_ratio)?;
                if layout.graph() != &graph {
                    return Err(CliError::Config("the k4_family layout needs the wired tetrahedron".into()));
                }
                (layout, *d_um)
            }
            LayoutSource::File { path } => (Layout::from_csv(graph.clone(), &read(path)?)?, SPACING_UM),
        };
        let c6 = match cfg.c6 {
            Some(c6) => c6,
            None => PhysicalParams::experiment().c6,
        };
        let coupling = match cfg.coupling {
            CouplingMode::Physical => Coupling::physical(&layout, c6)?,
            CouplingMode::Uniform => Coupling::uniform_wired(&graph, c6 / d_um.powi(6)),
        };
        let schedule = match &cfg.schedule {
            ScheduleSpec::Default => default_schedule(graph.base().name())?,
            ScheduleSpec::Explicit(doc) => doc.to_schedule()?,
        };
        let noise = cfg.noise.model()?;
        Ok(Self { graph, layout, c6, d_um, coupling, schedule, noise })
    }

    pub fn num_atoms(&self) -> usize {
        self.graph.num_atoms()
    }

    pub fn operator(&self) -> Result<RydbergOperator, CliError> {
        Ok(RydbergOperator::new(&self.coupling)?)
    }
}

/// Final state of a sweep.
#[derive(Debug, Clone)]
pub enum FinalState {
    Pure(StateVector),
    Mixed(DensityOperator),
    /// Mean populations of a trajectory ensemble.
    Sampled(Distribution),
}

impl FinalState {
    pub fn source(&self) -> &dyn Populations {
        match self {
            Self::Pure(s) => s,
            Self::Mixed(rho) => rho,
            Self::Sampled(d) => d,
        }
    }

    pub fn distribution(&self) -> Result<Distribution, CliError> {
        let src = self.source();
        Ok(Distribution::from_probabilities(src.num_atoms(), &src.populations())?)
    }
}

#[derive(Debug, Clone)]
pub struct Evolved {
    pub state: FinalState,
    pub method: EvolutionMethod,
    /// Step actually used.
    pub dt_us: f64,
    /// Last step-halving comparison, pure runs only.
    pub step_infidelity: Option<f64>,
}

pub fn resolve_method(cfg: &ExperimentConfig, n: usize) -> EvolutionMethod {
    match cfg.evolution.method {
        EvolutionMethod::Auto if cfg.noise.dephasing_mhz == 0.0 => EvolutionMethod::Pure,
        EvolutionMethod::Auto if n <= DENSITY_MAX_ATOMS => EvolutionMethod::Density,
        EvolutionMethod::Auto => EvolutionMethod::Trajectories,
        m => m,
    }
}

/// Sweeps the all-ground state through the schedule.
pub fn evolve(exp: &Experiment, cfg: &ExperimentConfig) -> Result<Evolved, CliError> {
    let op = exp.operator()?;
    let psi0 = StateVector::ground(exp.num_atoms())?;
    let dt = cfg.evolution.dt_us;
    let method = resolve_method(cfg, exp.num_atoms());
    if method == EvolutionMethod::Pure && exp.noise.dephasing_rate > 0.0 {
        return Err(CliError::Config("pure-state evolution cannot include dephasing".into()));
    }
    let step = StepControl::with_dt(dt);
    let evolved = match method {
        EvolutionMethod::Pure if cfg.evolution.step_halving => {
            let run = evolve_pure_converged(&psi0, &exp.schedule, &op, &step, cfg.evolution.halving_tol, MAX_HALVINGS)?;
            Evolved {
                state: FinalState::Pure(run.state),
                method,
                dt_us: run.dt,
                step_infidelity: Some(run.infidelity),
            }
        }
        EvolutionMethod::Pure => Evolved {
            state: FinalState::Pure(evolve_pure(&psi0, &exp.schedule, &op, &step)?),
            method,
            dt_us: dt,
            step_infidelity: None,
        },
        EvolutionMethod::Density => Evolved {
            state: FinalState::Mixed(evolve_density(&psi0, &exp.schedule, &exp.noise, &op, dt)?),
            method,
            dt_us: dt,
            step_infidelity: None,
        },
        EvolutionMethod::Trajectories => {
            let ens =
                evolve_trajectories(&psi0, &exp.schedule, &exp.noise, &op, &step, cfg.evolution.trajectories, cfg.seed)?;
            let dist = Distribution::from_probabilities(exp.num_atoms(), &ens.mean_populations())?;
            Evolved { state: FinalState::Sampled(dist), method, dt_us: dt, step_infidelity: None }
        }
        EvolutionMethod::Auto => unreachable!("resolved above"),
    };
    Ok(evolved)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterEcho {
    pub graph: String,
    pub num_atoms: usize,
    pub layout: LayoutSource,
    pub coupling: CouplingMode,
    /// rad/us um^6
    pub c6: f64,
    pub d_um: f64,
    /// `C6 / d^6`, rad/us.
    pub nearest_neighbor_u: f64,
    pub schedule: ScheduleDocument,
    pub dephasing_mhz: f64,
    pub dephasing_mode: rydwire::evolution::DephasingMode,
    pub detect_p01: f64,
    pub detect_p10: f64,
    pub method: EvolutionMethod,
    pub dt_us: f64,
    pub trajectories: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exact {
    /// AF-wire weight of the final populations.
    pub kept_weight: f64,
    pub mis_probability: f64,
    /// Same after the exact readout-error channel, small arrays only.
    pub kept_weight_with_readout: Option<f64>,
    pub mis_probability_with_readout: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub parameters: ParameterEcho,
    pub seed: u64,
    pub final_state_sha256: String,
    pub step_infidelity: Option<f64>,
    pub shots: usize,
    pub kept_events: u64,
    pub kept_fraction: f64,
    pub mis_probability: Estimate,
    pub mode_config: Option<String>,
    pub exact: Exact,
    pub notes: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// In-memory result of a full run.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub experiment: Experiment,
    pub evolved: Evolved,
    pub shots: ShotSet,
    pub raw: Distribution,
    pub postselected: Distribution,
    pub report: RunReport,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Bundle, CliError> {
    let exp = Experiment::from_config(cfg)?;
    let evolved = evolve(&exp, cfg)?;
    let source = evolved.state.source();
    let clean = sample_shots(source, cfg.shots, cfg.seed)?;
    let (p01, p10) = (exp.noise.detect_p01, exp.noise.detect_p10);
    let shots = if p01 > 0.0 || p10 > 0.0 { apply_detection_errors(&clean, p01, p10, cfg.seed)? } else { clean };
    let raw = Distribution::from_shots(&shots)?;
    let post = postselect_shots(&shots, &exp.graph)?;
    let mis = mis_probability(&post.distribution, exp.graph.base())?;

    let exact_dist = evolved.state.distribution()?;
    let exact_post = postselect_distribution(&exact_dist, &exp.graph)?;
    let exact_mis = mis_probability(&exact_post.distribution, exp.graph.base())?.value;
    let (kept_ro, mis_ro) = if exp.num_atoms() <= CHANNEL_MAX_ATOMS {
        let noisy = detection_channel(&exact_dist, p01, p10)?;
        let p = postselect_distribution(&noisy, &exp.graph)?;
        (Some(p.kept_weight), Some(mis_probability(&p.distribution, exp.graph.base())?.value))
    } else {
        (None, None)
    };

    let mut notes = Vec::new();
    if exp.noise.dephasing_rate > 0.0 {
        notes.push(
            "dephasing_mhz is a tunable placeholder, not a calibrated property of the apparatus".to_string(),
        );
    }
    let n_base = exp.graph.base().num_vertices();
    let report = RunReport {
        parameters: ParameterEcho {
            graph: exp.graph.name(),
            num_atoms: exp.num_atoms(),
            layout: cfg.layout.clone(),
            coupling: cfg.coupling,
            c6: exp.c6,
            d_um: exp.d_um,
            nearest_neighbor_u: exp.c6 / exp.d_um.powi(6),
            schedule: exp.schedule.to_document(),
            dephasing_mhz: quoted(exp.noise.dephasing_rate),
            dephasing_mode: exp.noise.mode,
            detect_p01: p01,
            detect_p10: p10,
            method: evolved.method,
            dt_us: evolved.dt_us,
            trajectories: (evolved.method == EvolutionMethod::Trajectories).then_some(cfg.evolution.trajectories),
        },
        seed: cfg.seed,
        final_state_sha256: source.digest(),
        step_infidelity: evolved.step_infidelity,
        shots: cfg.shots,
        kept_events: post.kept.unwrap_or(0),
        kept_fraction: post.kept_fraction(),
        mis_probability: mis,
        mode_config: post.distribution.mode().map(|b| rydwire::basis::bitstring(b, n_base)),
        exact: Exact {
            kept_weight: exact_post.kept_weight,
            mis_probability: exact_mis,
            kept_weight_with_readout: kept_ro,
            mis_probability_with_readout: mis_ro,
        },
        notes,
    };
    Ok(Bundle { experiment: exp, evolved, shots, raw, postselected: post.distribution, report })
}

impl Bundle {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write(dir, "layout.csv", &self.experiment.layout.to_csv())?;
        write(dir, "schedule.json", &self.experiment.schedule.to_json())?;
        write(dir, "raw_distribution.json", &self.raw.to_json())?;
        write(dir, "postselected_distribution.json", &self.postselected.to_json())?;
        write(dir, "shots.csv", &self.shots.to_csv())?;
        write(dir, "report.json", &self.report.to_json())
    }
}

/// Writes the final state of a sweep without sampling.
pub fn write_evolution(exp: &Experiment, evolved: &Evolved, dir: &Path) -> Result<(), CliError> {
    write(dir, "schedule.json", &exp.schedule.to_json())?;
    write(dir, "populations.json", &evolved.state.distribution()?.to_json())?;
    if let FinalState::Pure(psi) = &evolved.state {
        let path = dir.join("state.bin");
        fs::write(&path, psi.to_bytes()).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

/// Table-layout graphs available by name.
pub fn solid(name: &str) -> Result<PlatonicSolid, CliError> {
    Ok(name.parse()?)
}
