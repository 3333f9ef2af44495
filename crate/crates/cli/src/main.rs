use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ptlz_cli::config::read_config_file;
use ptlz_cli::{execute, CliError, Format, RunConfig, Scenario};

/// Simulations of PT-symmetric Landau-Zener sweeps and lattices.
#[derive(Parser, Debug)]
#[command(name = "ptlz", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output file; defaults to `$PTLZ_OUT_DIR/<scenario>.<format>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// `key = value` file; command-line values take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parameter scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

macro_rules! scenario_args {
    ($name:ident { $($(#[$doc:meta])* $field:ident),* $(,)? }) => {
        #[derive(Args, Debug)]
        struct $name {
            $(
                $(#[$doc])*
                #[arg(long, allow_hyphen_values = true)]
                $field: Option<String>,
            )*
        }

        impl $name {
            fn values(&self) -> Vec<(String, String)> {
                let mut v = Vec::new();
                $(
                    if let Some(x) = &self.$field {
                        v.push((stringify!($field).to_string(), x.clone()));
                    }
                )*
                v
            }
        }
    };
}

scenario_args!(SpectrumArgs {
    /// Gain/loss rate γ.
    gamma,
    v_min,
    v_max,
    n_points,
    ep_tolerance,
});

scenario_args!(SweepArgs {
    gamma,
    /// Sweep rate; v(t) = αt.
    alpha,
    v_initial,
    v_final,
    /// eigenstate_plus, eigenstate_minus, diabatic_2 or random.
    initial,
    /// pt_imaginary or hermitian_real.
    mode,
    rel_tolerance,
    abs_tolerance,
});

scenario_args!(PtrCurveArgs {
    gamma,
    alpha_min,
    alpha_max,
    n_points,
    /// analytic, numeric or both.
    mode,
    /// Sweep from −Rγ to Rγ for numeric points.
    range_in_gamma,
    rel_tolerance,
    abs_tolerance,
});

scenario_args!(LatticeArgs {
    /// Lattice gain/loss Γ.
    gamma_lattice,
    force,
    q0,
    k0,
    sigma_sq,
    /// Defaults to half a Bloch period.
    t_final,
    n_samples,
    n_sites,
    site_offset,
    rel_tolerance,
    abs_tolerance,
});

scenario_args!(DispersionArgs { gamma_lattice, n_k });

scenario_args!(LatticeScanArgs {
    gamma_lattice,
    f_min,
    f_max,
    n_points,
    q0,
    k0,
    sigma_sq,
    rel_tolerance,
    abs_tolerance,
});

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues and biorthogonal overlap over a detuning range.
    Spectrum(SpectrumArgs),
    /// Time evolution through a linear sweep.
    Sweep(SweepArgs),
    /// Transmission probability against sweep rate.
    PtrCurve(PtrCurveArgs),
    /// Wave packet in the tilted gain/loss lattice.
    Lattice(LatticeArgs),
    /// Complex band structure.
    Dispersion(DispersionArgs),
    /// Branch populations after half a Bloch period over a range of forces.
    LatticeScan(LatticeScanArgs),
    /// Run the scenario named in `--config`.
    Run,
}

impl Command {
    fn resolve(&self) -> (Option<Scenario>, Vec<(String, String)>) {
        match self {
            Command::Spectrum(a) => (Some(Scenario::SpectrumScan), a.values()),
            Command::Sweep(a) => (Some(Scenario::TwoLevelSweep), a.values()),
            Command::PtrCurve(a) => (Some(Scenario::PtrCurve), a.values()),
            Command::Lattice(a) => (Some(Scenario::LatticeEvolution), a.values()),
            Command::Dispersion(a) => (Some(Scenario::DispersionScan), a.values()),
            Command::LatticeScan(a) => (Some(Scenario::LatticeTransmissionScan), a.values()),
            Command::Run => (None, Vec::new()),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(format!("--threads: {e}")))?;
    }
    let file = match &cli.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let (scenario, mut flags) = cli.command.resolve();
    if scenario.is_none() && cli.config.is_none() {
        return Err(CliError::validation("`run` needs --config"));
    }
    if let Some(seed) = cli.seed {
        flags.push(("seed".to_string(), seed.to_string()));
    }
    let config = RunConfig::from_sources(scenario, file, flags, cli.out, cli.format)?;
    for path in execute(&config)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
