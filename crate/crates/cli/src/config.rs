//! Declarative experiment description, read from JSON.

use std::fs;
use std::path::{Path, PathBuf};

use rydwire::evolution::{DephasingMode, NoiseModel, ScheduleDocument, DETECT_P01, DETECT_P10};
use rydwire::layout::angular;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Platonic graph name; exclusive with `graph_file`.
    #[serde(default)]
    pub graph: Option<String>,
    /// Wired-graph JSON document.
    #[serde(default)]
    pub graph_file: Option<PathBuf>,
    #[serde(default)]
    pub layout: LayoutSource,
    #[serde(default)]
    pub coupling: CouplingMode,
    /// Van der Waals coefficient in rad/us um^6; the calibrated value when
    /// absent.
    #[serde(default)]
    pub c6: Option<f64>,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    pub shots: usize,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayoutSource {
    #[default]
    Experimental,
    K4Family {
        d_ratio: f64,
        #[serde(default = "default_spacing")]
        d_um: f64,
    },
    /// `atom_id,role,x_um,y_um` CSV over the configured graph.
    File { path: PathBuf },
}

fn default_spacing() -> f64 {
    rydwire::layout::SPACING_UM
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// Every pair at its `C6 / r^6` value.
    #[default]
    Physical,
    /// `U(d)` on graph edges only.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    /// `"default"`
    #[default]
    #[serde(with = "default_literal")]
    Default,
    Explicit(ScheduleDocument),
}

mod default_literal {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("default")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        match String::deserialize(d)?.as_str() {
            "default" => Ok(()),
            other => Err(D::Error::custom(format!("unknown schedule `{other}`"))),
        }
    }
}

/// Noise in quoted MHz; everything off by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub dephasing_mhz: f64,
    #[serde(default = "collective")]
    pub mode: DephasingMode,
    #[serde(default)]
    pub detect_p01: f64,
    #[serde(default)]
    pub detect_p10: f64,
}

fn collective() -> DephasingMode {
    DephasingMode::Collective
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { dephasing_mhz: 0.0, mode: DephasingMode::Collective, detect_p01: 0.0, detect_p10: 0.0 }
    }
}

impl NoiseConfig {
    /// Measured imaging errors, no dephasing.
    pub fn readout_only() -> Self {
        Self { detect_p01: DETECT_P01, detect_p10: DETECT_P10, ..Self::default() }
    }

    pub fn model(&self) -> rydwire::Result<NoiseModel> {
        NoiseModel::new(angular(self.dephasing_mhz), self.mode, self.detect_p01, self.detect_p10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMethod {
    /// Pure state without dephasing, density operator up to 10 atoms,
    /// trajectories beyond.
    #[default]
    Auto,
    Pure,
    Density,
    Trajectories,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    #[serde(default = "default_dt")]
    pub dt_us: f64,
    #[serde(default)]
    pub method: EvolutionMethod,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    /// Halve the pure-state step until the final state moves by less than
    /// `halving_tol` in fidelity.
    #[serde(default = "yes")]
    pub step_halving: bool,
    #[serde(default = "default_halving_tol")]
    pub halving_tol: f64,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_trajectories() -> usize {
    1000
}

fn yes() -> bool {
    true
}

fn default_halving_tol() -> f64 {
    1e-6
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt_us: default_dt(),
            method: EvolutionMethod::Auto,
            trajectories: default_trajectories(),
            step_halving: true,
            halving_tol: default_halving_tol(),
        }
    }
}

impl ExperimentConfig {
    /// Minimal config for a Platonic graph with everything else default.
    pub fn platonic(name: &str, shots: usize, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            graph: Some(name.to_string()),
            graph_file: None,
            layout: LayoutSource::Experimental,
            coupling: CouplingMode::Physical,
            c6: None,
            schedule: ScheduleSpec::Default,
            noise: NoiseConfig::default(),
            evolution: EvolutionConfig::default(),
            shots,
            seed,
            output: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check_static()?;
        Ok(cfg)
    }

    /// Reads a config; relative paths inside it are taken from its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let Some(p) = cfg.graph_file.as_mut() {
            rebase(p);
        }
        if let LayoutSource::File { path } = &mut cfg.layout {
            rebase(path);
        }
        if let Some(p) = cfg.output.as_mut() {
            rebase(p);
        }
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn check_static(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match (&self.graph, &self.graph_file) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => return Err(CliError::Config("give exactly one of `graph` and `graph_file`".into())),
        }
        if self.shots == 0 {
            return Err(CliError::Config("`shots` must be at least 1".into()));
        }
        if self.evolution.trajectories == 0 {
            return Err(CliError::Config("`evolution.trajectories` must be at least 1".into()));
        }
        Ok(())
    }

    /// Every referenced file must exist.
    pub fn check_files(&self) -> Result<(), CliError> {
        let mut files: Vec<&Path> = Vec::new();
        if let Some(p) = &self.graph_file {
            files.push(p);
        }
        if let LayoutSource::File { path } = &self.layout {
            files.push(path);
        }
        match files.into_iter().find(|p| !p.is_file()) {
            Some(p) => Err(CliError::Config(format!("referenced file {} does not exist", p.display()))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"schema_version": 1, "graph": "tetrahedron", "shots": 927, "seed": 5}"#)
            .unwrap();
        assert_eq!(cfg, ExperimentConfig::platonic("tetrahedron", 927, 5));
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn seed_is_mandatory() {
        let err = ExperimentConfig::from_json(r#"{"schema_version": 1, "graph": "cube", "shots": 10}"#).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn rejects_bad_documents() {
        for bad in [
            r#"{"schema_version": 2, "graph": "cube", "shots": 1, "seed": 0}"#,
            r#"{"schema_version": 1, "shots": 1, "seed": 0}"#,
            r#"{"schema_version": 1, "graph": "cube", "shots": 0, "seed": 0}"#,
            r#"{"schema_version": 1, "graph": "cube", "shots": 1, "seed": 0, "colour": 1}"#,
            r#"{"schema_version": 1, "graph": "cube", "shots": 1, "seed": 0, "schedule": "slow"}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn explicit_schedule_and_family_layout() {
        let cfg = ExperimentConfig::from_json(
            r#"{"schema_version": 1, "graph": "tetrahedron", "shots": 1, "seed": 0,
                "layout": {"kind": "k4_family", "d_ratio": 1.3},
                "schedule": {"t1_us": 0.2, "t2_us": 1.8, "tf_us": 2.0, "omega0_mhz": 0.74,
                             "delta_i_mhz": -3.0, "delta_f_mhz": 2.0},
                "noise": {"dephasing_mhz": 0.05, "detect_p01": 0.12}}"#,
        )
        .unwrap();
        assert_eq!(cfg.layout, LayoutSource::K4Family { d_ratio: 1.3, d_um: 8.0 });
        assert!(matches!(cfg.schedule, ScheduleSpec::Explicit(ref d) if d.tf_us == 2.0));
        assert_eq!(cfg.noise.mode, DephasingMode::Collective);
        assert_eq!(cfg.noise.detect_p10, 0.0);
    }

    #[test]
    fn missing_files_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(
            &path,
            r#"{"schema_version": 1, "graph": "tetrahedron", "shots": 1, "seed": 0,
                "layout": {"kind": "file", "path": "nowhere.csv"}}"#,
        )
        .unwrap();
        let err = ExperimentConfig::load(&path).unwrap_err();
        assert!(err.to_string().contains("nowhere.csv"));
    }
}
