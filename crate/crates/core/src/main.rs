use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cintlab::experiment::{image_from_dir, run_scenario, sweep, sweep_csv, validate, ScenarioSpec};
use cintlab::{derive_scales, Method, Scene};

#[derive(Parser)]
#[command(name = "cintlab", version, about = "Coherent interferometric SAR imaging laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the derived resolution scales of a scene as JSON.
    DeriveScales {
        /// Scene JSON file, or one of fig1..fig4.
        #[arg(long)]
        config: String,
    },
    /// Simulate one realization and write images, matrix and manifest.
    Simulate {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Override the Fourier-domain resolution estimate.
        #[arg(long)]
        h_est: Option<f64>,
    },
    /// Recompute images from a scenario directory.
    Image {
        #[arg(long)]
        method: String,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run a validation suite: moments, spectral, fourier or stability.
    Validate {
        #[arg(long)]
        suite: String,
    },
    /// Ensemble statistics along one parameter axis, as CSV on stdout.
    Sweep {
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long)]
        realizations: usize,
        #[arg(long, default_value = "fig2")]
        config: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A scene file, or a named scenario when no such file exists.
fn load_scene(config: &str) -> anyhow::Result<(String, Scene)> {
    let path = Path::new(config);
    if path.exists() {
        let scene = Scene::load(path).with_context(|| format!("reading scene {config}"))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("custom").to_string();
        return Ok((name, scene));
    }
    let scene = Scene::named(config).with_context(|| format!("no scene file or scenario named {config}"))?;
    Ok((config.to_string(), scene))
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.cmd {
        Cmd::DeriveScales { config } => {
            let (_, scene) = load_scene(&config)?;
            let s = derive_scales(&scene).context("deriving scales")?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Cmd::Simulate { config, seed, out, h_est } => {
            let (name, scene) = load_scene(&config)?;
            let seed = seed.unwrap_or(scene.seed);
            let spec = ScenarioSpec { name, scene, methods: Method::ALL.to_vec(), seed, out, h_est };
            let res = run_scenario(&spec).context("simulate")?;
            for w in &res.manifest.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", res.dir.display());
        }
        Cmd::Image { method, input } => {
            let methods = if method == "all" { Method::ALL.to_vec() } else { vec![Method::parse(&method)?] };
            let peaks = image_from_dir(&input, &methods).context("image")?;
            println!("{}", serde_json::to_string_pretty(&peaks)?);
        }
        Cmd::Validate { suite } => {
            let rep = validate(&suite)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            return Ok(rep.passed);
        }
        Cmd::Sweep { axis, values, realizations, config, seed } => {
            if values.is_empty() {
                bail!("sweep needs at least one value");
            }
            let (_, scene) = load_scene(&config)?;
            let rows = sweep(&scene, &axis, &values, realizations, seed).context("sweep")?;
            print!("{}", sweep_csv(&rows));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
