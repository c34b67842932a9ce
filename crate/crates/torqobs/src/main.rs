use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use torqobs::report::compare_report;
use torqobs::{Run, Scenario};

#[derive(Parser)]
#[command(
    name = "torqobs",
    version,
    about = "Load-torque observer simulation and analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML); the built-in default scenario when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the drive and run the observers; writes trajectory and metrics.
    Simulate(Common),
    /// Stability margins over uncertainty cells; writes margins CSV and JSON.
    Sweep(Common),
    /// Friction and inertia identification.
    Identify(Common),
    /// Every section present in the scenario.
    Run(Common),
    /// RMS, STD and lag per observer for a trajectory CSV.
    Report {
        /// Trajectory CSV; defaults to `trajectory.csv` in `--out`.
        trajectory: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Print the default scenario.
    DefaultConfig,
}

fn load(c: &Common, fallback: impl FnOnce(&mut Scenario)) -> torqobs::Result<Run> {
    match &c.config {
        Some(path) => Run::from_config(path, &c.out, c.seed),
        None => {
            let mut s = Scenario::default();
            fallback(&mut s);
            if let Some(seed) = c.seed {
                s.seed = seed;
            }
            Ok(Run::new(s, ".", &c.out))
        }
    }
}

fn out_path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn run(cli: Cli) -> torqobs::Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let r = load(&c, |_| {})?;
            let (_, metrics) = r.simulate()?;
            for m in &metrics.observers {
                println!(
                    "{:<12} rms {:.6e} Nm  std {:.6e} Nm",
                    m.observer, m.rms_nm, m.std_abs_nm
                );
            }
            println!(
                "wrote {}",
                out_path(&c.out, torqobs::runner::TRAJECTORY_FILE)
            );
        }
        Command::Sweep(c) => {
            let r = load(&c, |s| {
                s.sweep = Some(torqobs::config::SweepSection {
                    observers: vec![
                        torqobs::config::ObserverName::Dob,
                        torqobs::config::ObserverName::Luenberger,
                    ],
                    table_km_fracs: vec![0.01, 0.1],
                    cells: Vec::new(),
                })
            })?;
            for row in r.sweep()? {
                println!(
                    "{:<14} {:<10} dKm {:+.4e} db {:+.4e}  k_c {:<12} phi {}",
                    row.group,
                    row.observer,
                    row.d_km_nm_per_a,
                    row.d_b_nm_s_per_rad,
                    row.k_c().to_string(),
                    row.phi()
                );
            }
            println!(
                "wrote {}",
                out_path(&c.out, torqobs::runner::MARGINS_CSV_FILE)
            );
        }
        Command::Identify(c) => {
            let r = load(&c, |s| s.identification = Some(Default::default()))?;
            let p = r.identify()?;
            println!("b  = {:.6e} Nm s/rad", p.b);
            println!("Cf = {:.6e} Nm", p.cf);
            println!("J  = {:.6e} kg m^2", p.j);
            println!(
                "wrote {}",
                out_path(&c.out, torqobs::runner::IDENTIFICATION_FILE)
            );
        }
        Command::Run(c) => {
            let ran = load(&c, |_| {})?.all()?;
            println!("ran {} into {}", ran.join(", "), c.out.display());
        }
        Command::Report {
            trajectory,
            config,
            out,
            seed,
        } => {
            let path = match (trajectory, config) {
                (Some(p), _) => p,
                (None, Some(cfg)) => {
                    Run::from_config(&cfg, &out, seed)?.simulate()?;
                    out.join(torqobs::runner::TRAJECTORY_FILE)
                }
                (None, None) => out.join(torqobs::runner::TRAJECTORY_FILE),
            };
            print!("{}", compare_report(&path)?);
        }
        Command::DefaultConfig => print!("{}", Scenario::default().to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
