// `!(x > bound)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use griffith_core::cleavage::SolveMode;
use griffith_core::exec::Exec;

use artifacts::{claim_dir, fresh_dir, out_root, DensityInfo, Manifest, RunDir};
use config::{Config, Experiment};

#[derive(Parser)]
#[command(name = "griffith", version, about = "Discrete Griffith fracture experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Parent of the timestamped run directory; defaults to $GRIFFITH_OUT or ./runs.
        #[arg(long)]
        out_root: Option<PathBuf>,
        /// Exact output directory; must be new or empty.
        #[arg(long, conflicts_with = "out_root")]
        out: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print a config with every default spelled out.
    Template,
    /// Rebuild summary.txt of a finished run.
    Report { dir: PathBuf },
    /// Energy-versus-strain sweep of the cleavage problem.
    Cleavage {
        #[arg(long, default_value_t = 1.0)]
        l: f64,
        /// Cells across the specimen, collars excluded.
        #[arg(long, default_value_t = 32)]
        nx: usize,
        #[arg(long, default_value_t = 32)]
        ny: usize,
        /// Collar width; rounded to whole cells.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long = "alpha-from-density", default_value = "dist2")]
        density: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        a_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        eps_grid: Option<Vec<f64>>,
        #[arg(long, value_parser = parse_mode)]
        mode: Option<SolveMode>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recovery rates, liminf check and slices for one triple file.
    Gamma {
        #[arg(long)]
        triple: PathBuf,
        #[arg(long, value_delimiter = ',')]
        eps_grid: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        xi: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        sigma_grid: Option<Vec<f64>>,
        #[arg(long)]
        sequential: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<SolveMode, String> {
    match s {
        "candidates" => Ok(SolveMode::Candidates),
        "alternating" => Ok(SolveMode::Alternating),
        "both" => Ok(SolveMode::Both),
        _ => Err(format!("unknown mode {s:?}; expected candidates, alternating or both")),
    }
}

fn exec_flag(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            out_root: root,
            out,
        } => {
            let cfg = Config::load(&config)?;
            execute(&cfg, out.as_deref(), root)?;
        }
        Command::Validate { config } => {
            let cfg = Config::load(&config)?;
            let problems = cfg.lint();
            if problems.is_empty() {
                println!("{}: ok ({})", config.display(), cfg.experiment.name());
            } else {
                for p in &problems {
                    println!("{}: {p}", config.display());
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Template => print!("{}", toml::to_string_pretty(&Config::default())?),
        Command::Report { dir } => {
            let manifest = artifacts::read_manifest(&dir)?;
            print!("{}", artifacts::write_summary(&dir, &manifest)?);
        }
        Command::Cleavage {
            l,
            nx,
            ny,
            eta,
            density,
            a_grid,
            eps_grid,
            mode,
            seed,
            sequential,
            out,
        } => {
            let mut cfg = Config {
                experiment: Experiment::Cleavage,
                seed,
                exec: exec_flag(sequential),
                ..Config::default()
            };
            cfg.density.id = density;
            cfg.mesh.l = l;
            cfg.mesh.nx = nx;
            cfg.mesh.ny = ny;
            cfg.mesh.eta = eta;
            if let Some(a) = a_grid {
                cfg.cleavage.a_grid = a;
            }
            if let Some(e) = eps_grid {
                cfg.cleavage.eps_grid = e;
            }
            if let Some(m) = mode {
                cfg.cleavage.mode = m;
            }
            execute(&cfg, out.as_deref(), None)?;
        }
        Command::Gamma {
            triple,
            eps_grid,
            xi,
            sigma_grid,
            sequential,
            out,
        } => {
            let mut cfg = Config {
                experiment: Experiment::Gamma,
                exec: exec_flag(sequential),
                ..Config::default()
            };
            cfg.gamma.triple_file = Some(triple);
            if let Some(e) = eps_grid {
                cfg.gamma.eps_grid = e;
            }
            if let Some(x) = xi {
                cfg.gamma.xi = x;
            }
            if let Some(s) = sigma_grid {
                cfg.gamma.sigma_grid = s;
            }
            execute(&cfg, out.as_deref(), None)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn execute(cfg: &Config, out: Option<&Path>, root: Option<PathBuf>) -> anyhow::Result<PathBuf> {
    let problems = cfg.lint();
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(|p| p.to_string()).collect();
        anyhow::bail!("invalid config:\n  {}", list.join("\n  "));
    }
    let dir = match out {
        Some(d) => claim_dir(d)?,
        None => fresh_dir(&root.unwrap_or_else(out_root), cfg.experiment.name())?,
    };
    let density = DensityInfo::of(cfg)?;
    let mut run = RunDir::new(dir.clone());
    let summary = experiments::run(cfg, &mut run).with_context(|| format!("{} experiment", cfg.experiment.name()))?;
    let mut files = run.files().to_vec();
    files.push("summary.txt".into());
    let manifest = Manifest {
        tool: "griffith".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: griffith_core::VERSION.into(),
        experiment: cfg.experiment.name().into(),
        created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        seed: cfg.seed,
        exec: cfg.exec.name().into(),
        parallel_feature: cfg!(feature = "parallel"),
        config: cfg.clone(),
        density,
        files,
        summary,
    };
    artifacts::write_manifest(&dir, &manifest)?;
    let text = artifacts::write_summary(&dir, &manifest)?;
    print!("{text}");
    println!("\nwrote {}", dir.display());
    Ok(dir)
}
