use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rydwire::graphs::{builtin_scaling_points, platonic_graph, GraphDocument};
use rydwire::layout::{k4_family_layout, experimental_layout, SPACING_UM};
use rydwire::spectrum::phase_diagram;
use rydwire_cli::config::ExperimentConfig;
use rydwire_cli::pipeline::{self, evolve, write, write_evolution, Experiment};
use rydwire_cli::{scaling, CliError, OUT_ENV};

#[derive(Parser)]
#[command(name = "rydwire", version, about = "Wired Platonic graphs on Rydberg arrays")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the wired graph as JSON.
    Graph {
        name: Option<String>,
        /// The base graph, without wires.
        #[arg(long)]
        plain: bool,
    },
    /// Print atom coordinates as CSV.
    Layout {
        name: Option<String>,
        /// Wired tetrahedron with wire edges stretched by this factor.
        #[arg(long)]
        d_ratio: Option<f64>,
    },
    /// Classical phase diagram of a base graph.
    Phases { name: String },
    /// Sweep only; final state and populations.
    Evolve,
    /// Full pipeline from a config.
    Run,
    /// Atom-number scaling points and linear fit.
    Scaling {
        /// CSV with header `label,n,n_prime`; the constructed graphs otherwise.
        #[arg(long)]
        points: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// `--out`, then the config's own directory, then `$RYDWIRE_OUT/<label>`.
fn out_dir(cli: &Cli, configured: Option<&Path>, label: &str) -> PathBuf {
    if let Some(p) = &cli.out {
        return p.clone();
    }
    if let Some(p) = configured {
        return p.to_path_buf();
    }
    let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("rydwire-out"));
    root.join(label)
}

fn config_label(cli: &Cli) -> String {
    cli.config
        .as_deref()
        .and_then(Path::file_stem)
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

/// Stdout unless `--out` names a directory.
fn emit(cli: &Cli, name: &str, contents: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(dir) => write(dir, name, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn graph_name(cli: &Cli, name: &Option<String>) -> Result<String, CliError> {
    match name {
        Some(n) => Ok(n.clone()),
        None => load_config(cli)?
            .graph
            .ok_or_else(|| CliError::Config("give a graph name or a config with `graph`".into())),
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Graph { name, plain } => {
            let doc = if cli.config.is_some() && name.is_none() && !plain {
                let exp = Experiment::from_config(&load_config(cli)?)?;
                GraphDocument::from(&exp.graph)
            } else {
                let solid = pipeline::solid(&graph_name(cli, name)?)?;
                if *plain {
                    GraphDocument::from(&platonic_graph(solid))
                } else {
                    GraphDocument::from(&rydwire::wire_platonic(solid))
                }
            };
            emit(cli, "graph.json", &(doc.to_json() + "\n"))
        }
        Command::Layout { name, d_ratio } => {
            let layout = match d_ratio {
                Some(r) => k4_family_layout(SPACING_UM, *r)?,
                None if cli.config.is_some() && name.is_none() => Experiment::from_config(&load_config(cli)?)?.layout,
                None => experimental_layout(pipeline::solid(&graph_name(cli, name)?)?),
            };
            emit(cli, "layout.csv", &layout.to_csv())
        }
        Command::Phases { name } => {
            let solid = pipeline::solid(name)?;
            let diagram = phase_diagram(&platonic_graph(solid))?;
            let dir = out_dir(cli, None, &format!("phases_{}", solid.name()));
            write(&dir, "phases.json", &(diagram.to_json() + "\n"))?;
            write(&dir, "phases.csv", &diagram.to_csv())?;
            if !cli.quiet {
                let b: Vec<String> = diagram.boundaries().iter().map(|r| r.to_string()).collect();
                println!("{}: {} regions, boundaries at Delta/U = {}", solid.name(), diagram.regions.len(), b.join(", "));
            }
            Ok(())
        }
        Command::Evolve => {
            let cfg = load_config(cli)?;
            let exp = Experiment::from_config(&cfg)?;
            let evolved = evolve(&exp, &cfg)?;
            let dir = out_dir(cli, cfg.output.as_deref(), &config_label(cli));
            write_evolution(&exp, &evolved, &dir)?;
            if !cli.quiet {
                println!("{} atoms, dt {} us, state written to {}", exp.num_atoms(), evolved.dt_us, dir.display());
            }
            Ok(())
        }
        Command::Run => {
            let cfg = load_config(cli)?;
            let bundle = pipeline::run_experiment(&cfg)?;
            let dir = out_dir(cli, cfg.output.as_deref(), &config_label(cli));
            bundle.write(&dir)?;
            if !cli.quiet {
                let r = &bundle.report;
                println!(
                    "{}: kept {}/{} ({:.3}), P_MIS = {:.4} +- {:.4}",
                    r.parameters.graph,
                    r.kept_events,
                    r.shots,
                    r.kept_fraction,
                    r.mis_probability.value,
                    r.mis_probability.stderr
                );
            }
            Ok(())
        }
        Command::Scaling { points } => {
            let pts = match points {
                Some(p) => scaling::read_points(File::open(p).map_err(|e| CliError::io(p, e))?)?,
                None => builtin_scaling_points(),
            };
            let fit = scaling::fit(&pts)?;
            let dir = out_dir(cli, None, "scaling");
            write(&dir, "scaling.csv", &scaling::points_csv(&pts)?)?;
            write(&dir, "scaling_fit.json", &(serde_json::to_string_pretty(&fit).expect("fit serializes") + "\n"))?;
            if !cli.quiet {
                println!("N' = {:.4} N {:+.4} over {} points", fit.slope, fit.intercept, fit.points);
            }
            Ok(())
        }
    }
}
