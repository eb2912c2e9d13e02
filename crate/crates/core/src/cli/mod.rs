//! The `rasgw` command-line front end.
//!
//! Subcommands: `dist`, `flow`, `ablate`, `replay`. Every result carries a
//! [`RunManifest`] recording the exact argument list; `replay` re-runs it.
//!
//! Exit codes: 0 success, 1 numeric failure, 2 usage error, 3 data error.

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::spec::{Energy, EstimatorSpec, Family, Method, ScaleFamily};

pub mod ablate;
pub mod dist;
pub mod flow;
pub mod manifest;
pub mod replay;

pub use manifest::RunManifest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

/// An error tagged with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(msg: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: msg.to_string(),
        }
    }

    pub fn data(msg: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_DATA,
            message: msg.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numeric(_) => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "rasgw",
    version,
    about = "Relation-aware sliced Gromov-Wasserstein discrepancies"
)]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "RA_SGW_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Discrepancy between two CSV point clouds.
    Dist(dist::DistArgs),
    /// Gradient flow of a Gaussian source cloud onto a target.
    Flow(flow::FlowArgs),
    /// Sweep a hyperparameter over a dist or flow scenario.
    Ablate(ablate::AblateArgs),
    /// Re-run the command recorded in a manifest.
    Replay(replay::ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sgw,
    MaxSgw,
    Dsgw,
    Ebsgw,
    Rpsgw,
    Rasgw,
    Iwrasgw,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sgw => Method::Sgw,
            MethodArg::MaxSgw => Method::MaxSgw,
            MethodArg::Dsgw => Method::Dsgw,
            MethodArg::Ebsgw => Method::Ebsgw,
            MethodArg::Rpsgw => Method::Rpsgw,
            MethodArg::Rasgw => Method::Rasgw,
            MethodArg::Iwrasgw => Method::Iwrasgw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Vmf,
    Ps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnergyArg {
    Exp,
    Id,
}

/// Estimator flags shared by `dist`, `flow` and `ablate`.
#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long, value_enum, default_value = "rasgw")]
    pub method: MethodArg,
    /// M: directions for sgw, rpsgw, rasgw.
    #[arg(long, default_value_t = EstimatorSpec::DEFAULT_PROJECTIONS)]
    pub projections: usize,
    /// L: directions per group (iwrasgw) or per evaluation (ebsgw, dsgw).
    #[arg(long, default_value_t = 50)]
    pub inner: usize,
    /// H: groups averaged by iwrasgw.
    #[arg(long, default_value_t = 1)]
    pub outer: usize,
    #[arg(long, default_value_t = EstimatorSpec::DEFAULT_KAPPA)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value = "vmf")]
    pub family: FamilyArg,
    #[arg(long, value_enum, default_value = "exp")]
    pub energy: EnergyArg,
    /// T: ascent iterations for max-sgw and dsgw.
    #[arg(long, default_value_t = 100)]
    pub opt_iters: usize,
    #[arg(long, default_value_t = 0.05)]
    pub step_size: f64,
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
}

impl EstimatorArgs {
    pub fn to_spec(&self) -> CliResult<EstimatorSpec> {
        let family = match self.family {
            FamilyArg::Vmf => Family::VonMisesFisher,
            FamilyArg::Ps => Family::PowerSpherical,
        };
        let energy = match self.energy {
            EnergyArg::Exp => Energy::Exp,
            EnergyArg::Id => Energy::Identity,
        };
        let spec = EstimatorSpec::new(self.method.into())
            .with_projections(self.projections)
            .with_inner(self.inner)
            .with_outer(self.outer)
            .with_scale(ScaleFamily {
                family,
                kappa: self.kappa,
            })
            .with_energy(energy)
            .with_opt_iters(self.opt_iters)
            .with_step_size(self.step_size)
            .with_restarts(self.restarts);
        spec.validate().map_err(CliError::usage)?;
        Ok(spec)
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Messages go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli, recorded) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("rasgw: {}", e.message);
            e.code
        }
    }
}

fn execute(cli: Cli, recorded: Vec<String>) -> CliResult<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Dist(a) => dist::run(&a, recorded),
        Command::Flow(a) => flow::run(&a, recorded),
        Command::Ablate(a) => ablate::run(&a, recorded),
        Command::Replay(a) => replay::run(&a),
    })
}
