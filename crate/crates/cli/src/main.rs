use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qsaw_cli::config::EpsOverrides;
use qsaw_cli::{rerun, resolve, run, CliError, Experiment, Model, Overrides, RunReport, RunStatus, Spacing};

/// Quantum sawtooth map on an imperfect qubit register.
#[derive(Parser)]
#[command(name = "qsaw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quasienergy branches versus imperfection strength.
    Spectrum(RunArgs),
    /// Husimi densities of one tracked Floquet level.
    Husimi(RunArgs),
    /// Disorder-averaged eigenstate entropy versus strength.
    Entropy(RunArgs),
    /// Strength at which the mean entropy reaches 1, per register size.
    Threshold(RunArgs),
    /// Fidelity between ideal and imperfect evolutions.
    Fidelity(RunArgs),
    /// Repeat the run recorded in a manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory (default: the one recorded in the manifest).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML file of `key = value` settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Qubit counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    nq: Option<Vec<usize>>,
    /// Chaos parameter K.
    #[arg(long)]
    chaos: Option<f64>,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    eps_max: Option<f64>,
    #[arg(long)]
    eps_count: Option<usize>,
    #[arg(long, value_enum)]
    eps_spacing: Option<Spacing>,
    /// Prepend eps = 0 to the grid.
    #[arg(long)]
    eps_zero: Option<bool>,
    /// Explicit strengths, comma separated; replaces the min/max/count grid.
    #[arg(long, value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    model: Option<Model>,
    /// Coupling ratio J / delta of the static chain.
    #[arg(long)]
    j_coupling: Option<f64>,
    #[arg(long)]
    tau_g: Option<f64>,
    /// Qubit carrying the single impurity (default: drawn per realization).
    #[arg(long)]
    impurity_qubit: Option<usize>,
    /// Initial state, eig:IDX or mom:N.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    tmax: Option<usize>,
    /// Tracked level, by index in ascending eigenphase order.
    #[arg(long)]
    level: Option<usize>,
    /// Husimi cells per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Husimi uncertainty ratio s.
    #[arg(long)]
    s: Option<f64>,
    /// Strengths at which `spectrum` also writes Husimi grids.
    #[arg(long, value_delimiter = ',')]
    husimi_eps: Option<Vec<f64>>,
    /// Constant A of the single-impurity fit.
    #[arg(long)]
    a: Option<f64>,
    /// Constant B of the static-model fit.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        let eps = EpsOverrides {
            min: self.eps_min,
            max: self.eps_max,
            count: self.eps_count,
            spacing: self.eps_spacing,
            zero: self.eps_zero,
            list: self.eps_list.clone(),
        };
        Overrides {
            n_qubits: self.nq.clone(),
            chaos: self.chaos,
            model: self.model,
            j_coupling: self.j_coupling,
            tau_g: self.tau_g,
            impurity_qubit: self.impurity_qubit,
            eps: (eps != EpsOverrides::default()).then_some(eps),
            realizations: self.realizations,
            seed: self.seed,
            init: self.init.clone(),
            t_max: self.tmax,
            level: self.level,
            grid: self.grid,
            s: self.s,
            husimi_eps: self.husimi_eps.clone(),
            a: self.a,
            b: self.b,
            out: self.out.clone(),
            jobs: self.jobs,
        }
    }
}

fn execute(experiment: Experiment, args: &RunArgs) -> Result<RunReport, CliError> {
    let file = match &args.config {
        Some(path) => Overrides::from_file(path)?,
        None => Overrides::default(),
    };
    let cfg = resolve(experiment, &[&file, &args.overrides()])?;
    run(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(a) => execute(Experiment::Spectrum, a),
        Command::Husimi(a) => execute(Experiment::Husimi, a),
        Command::Entropy(a) => execute(Experiment::Entropy, a),
        Command::Threshold(a) => execute(Experiment::Threshold, a),
        Command::Fidelity(a) => execute(Experiment::Fidelity, a),
        Command::Rerun { manifest, out } => rerun(manifest, out.clone()),
    };
    match result {
        Ok(report) => {
            println!("{}", report.csv.display());
            println!("{}", report.meta.display());
            for p in &report.extra {
                println!("{}", p.display());
            }
            println!("{}", report.manifest.display());
            if report.status == RunStatus::Partial {
                eprintln!("qsaw: some tasks failed; see the status column and manifest");
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("qsaw: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
