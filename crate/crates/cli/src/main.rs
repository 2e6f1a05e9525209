use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mrbv_cli::commands;
use mrbv_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "mrbv", version, about = "Multi-rate viscous approximation of rate-independent systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config; default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct WithInput {
    #[command(flatten)]
    common: Common,
    /// Input CSV instead of a fresh simulation.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the viscous system; writes trajectory.csv and summary.json.
    Simulate(Common),
    /// Parameterize a trajectory; writes curve.csv and reparam.json.
    Reparam(WithInput),
    /// Classify a parameterized curve into regimes; writes segments.json,
    /// nodes.csv and regimes.svg.
    Classify(WithInput),
    /// Energy balance, its order under step halving and the parameterized
    /// balance; writes energy.json.
    EnergyCheck(Common),
    /// Run every eps of `eps_list`; writes sweep.json and convergence.svg.
    Sweep(Common),
    /// Pointwise Gamma-limit checks; writes gamma.json.
    GammaCheck(Common),
    /// Trajectories over the locally stable region; writes phase.svg.
    PlotPhase {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV files.
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
    },
}

fn prepare(c: &Common) -> Result<(mrbv_cli::Setup, PathBuf), CliError> {
    let config = RunConfig::load(&c.config)?.with_overrides(c.eps, c.alpha);
    let out = c
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let setup = config.setup()?;
    fs::create_dir_all(&out)?;
    Ok((setup, out))
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Simulate(c) => {
            let (setup, out) = prepare(&c)?;
            let (_, s) = commands::simulate(&setup, &out)?;
            Ok(format!(
                "{} nodes, final state u = {:?}, z = {:?} at t = {}",
                s.nodes, s.final_u, s.final_z, s.final_t
            ))
        }
        Command::Reparam(w) => {
            let (setup, out) = prepare(&w.common)?;
            let (_, s) = commands::reparam(&setup, w.input.as_deref(), &out)?;
            Ok(format!("{} curve with {} nodes, length {:.6}", s.tag, s.nodes, s.length))
        }
        Command::Classify(w) => {
            let (setup, out) = prepare(&w.common)?;
            let r = commands::classify(&setup, w.input.as_deref(), &out)?;
            let labels: Vec<&str> = r.labels.iter().map(|l| l.as_str()).collect();
            Ok(format!("regimes: {}", labels.join(" -> ")))
        }
        Command::EnergyCheck(c) => {
            let (setup, out) = prepare(&c)?;
            let r = commands::energy_check(&setup, &out)?;
            Ok(format!(
                "relative residual {:.3e}, observed orders {:?}, parameterized relative residual {:.3e}",
                r.refinements[0].balance.relative, r.observed_orders, r.parameterized.relative
            ))
        }
        Command::Sweep(c) => {
            let (setup, out) = prepare(&c)?;
            let r = commands::sweep(&setup, &out)?;
            Ok(format!(
                "{} runs, sup-distance decreasing: {}",
                r.entries.len(),
                r.sup_distance_decreasing
            ))
        }
        Command::GammaCheck(c) => {
            let (setup, out) = prepare(&c)?;
            let r = commands::gamma_check(&setup, &out)?;
            let passed = r.points.iter().filter(|p| p.report.pass).count();
            Ok(format!("{passed}/{} points pass", r.points.len()))
        }
        Command::PlotPhase { common, inputs } => {
            let (setup, out) = prepare(&common)?;
            let path = commands::plot_phase(&setup, &inputs, &out)?;
            Ok(format!("wrote {}", path.display()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
