//! `trimci`: run the solver, correct and extrapolate energies, analyze
//! wavefunctions and dump lattice Hamiltonians.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use trimci::integrals::{Boundary, OrbitalBasis};

use error::{code, CliError};
use manifest::{HubbardProblem, Problem, RunManifest};

#[derive(Parser, Debug)]
#[command(name = "trimci", version, about = "Trimmed configuration interaction")]
struct Cli {
    /// Seed for random initial determinants; overrides the manifest.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "TRIMCI_THREADS")]
    threads: Option<usize>,
    /// Directory for output files; overrides the manifest.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run TrimCI from a manifest.
    Run {
        manifest: PathBuf,
    },
    /// Second-order energy correction of wavefunction files.
    Pt2(Pt2Args),
    /// Same as `pt2 --series`.
    Extrapolate(Pt2Args),
    /// Statistics of a wavefunction file.
    Analyze(AnalyzeArgs),
    /// Exact diagonalization of a small sector.
    Fci {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Largest sector enumerated.
        #[arg(long, default_value_t = 200_000)]
        cap: u128,
        /// Also write the FCI wavefunction here.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// Write the FCIDUMP of a Hubbard lattice.
    HubbardDump {
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Output path (default: `<output-dir>/hubbard.fcidump`).
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct LatticeArgs {
    /// Lattice shape `LXxLY`, e.g. `4x4`.
    #[arg(long = "hubbard", value_name = "LXxLY", value_parser = parse_shape)]
    shape: Option<(usize, usize)>,
    #[arg(long, default_value_t = 0.0)]
    u: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, value_enum, default_value_t = BoundaryArg::Periodic)]
    boundary: BoundaryArg,
    /// Defaults to half filling.
    #[arg(long)]
    n_up: Option<usize>,
    #[arg(long)]
    n_down: Option<usize>,
    #[arg(long, value_enum, default_value_t = BasisArg::Site)]
    basis: BasisArg,
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    /// Take the problem from a run manifest.
    #[arg(long, conflicts_with_all = ["fcidump", "shape"])]
    manifest: Option<PathBuf>,
    #[arg(long, conflicts_with = "shape")]
    fcidump: Option<PathBuf>,
    #[command(flatten)]
    lattice: LatticeArgs,
}

#[derive(Args, Debug)]
struct Pt2Args {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Screening threshold on `|H_aj c_j|`.
    #[arg(long, default_value_t = 1e-6)]
    epsilon2: f64,
    /// Extrapolate E_var + E_per linearly to E_per = 0.
    #[arg(long)]
    series: bool,
    /// Weight the extrapolation by `1 / E_per^2`.
    #[arg(long)]
    weighted: bool,
    /// CSV of precomputed `e_var,e_per` rows, used instead of wavefunctions.
    #[arg(long, conflicts_with = "wavefunctions")]
    points: Option<PathBuf>,
    wavefunctions: Vec<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Analysis {
    Hamming,
    Powerlaw,
    Mds,
    Complexity,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(value_enum)]
    which: Analysis,
    wavefunction: PathBuf,
    /// Power-law fit window as rank fractions.
    #[arg(long, default_value_t = trimci::analysis::DEFAULT_FIT_RANGE.0)]
    fit_lo: f64,
    #[arg(long, default_value_t = trimci::analysis::DEFAULT_FIT_RANGE.1)]
    fit_hi: f64,
    /// Determinants embedded by `mds`, largest `|c|` first.
    #[arg(long, default_value_t = trimci::analysis::DEFAULT_MDS_MAX)]
    max_dets: usize,
    /// Error target of `complexity`.
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Determinant count of `complexity` (default: the file's count).
    #[arg(long)]
    r_alg: Option<f64>,
    /// Intrinsic complexity for the entropy (default: 1/alpha of the fit).
    #[arg(long)]
    sigma0: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BoundaryArg {
    Periodic,
    Open,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BasisArg {
    Site,
    Momentum,
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected LXxLY, got `{s}`"))?;
    let dim = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("invalid lattice extent `{v}`"));
    let (lx, ly) = (dim(a)?, dim(b)?);
    if lx == 0 || ly == 0 {
        return Err(format!("lattice {lx}x{ly} has no sites"));
    }
    Ok((lx, ly))
}

impl LatticeArgs {
    fn hubbard(&self) -> Option<HubbardProblem> {
        let (lx, ly) = self.shape?;
        Some(HubbardProblem {
            lx,
            ly,
            t: self.t,
            u: self.u,
            boundary: match self.boundary {
                BoundaryArg::Periodic => Boundary::Periodic,
                BoundaryArg::Open => Boundary::Open,
            },
            n_up: self.n_up,
            n_down: self.n_down,
            basis: match self.basis {
                BasisArg::Site => OrbitalBasis::Site,
                BasisArg::Momentum => OrbitalBasis::Momentum,
            },
        })
    }
}

impl ProblemArgs {
    fn resolve(&self) -> Result<Option<Problem>, CliError> {
        if let Some(m) = &self.manifest {
            return Ok(Some(RunManifest::load(m)?.problem));
        }
        if let Some(f) = &self.fcidump {
            return Ok(Some(Problem::Fcidump(f.clone())));
        }
        Ok(self.lattice.hubbard().map(Problem::Hubbard))
    }

    fn require(&self) -> Result<Problem, CliError> {
        self.resolve()?
            .ok_or_else(|| CliError::Usage("one of --manifest, --fcidump or --hubbard is required".into()))
    }
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    init_threads(cli.threads)?;
    let out_dir = cli.output_dir.clone();
    match cli.command {
        Command::Run { manifest } => {
            let m = RunManifest::load(&manifest)?;
            commands::run(m, cli.seed, out_dir)
        }
        Command::Pt2(args) => commands::pt2(&args, args.series, out_dir),
        Command::Extrapolate(args) => commands::pt2(&args, true, out_dir),
        Command::Analyze(args) => commands::analyze(&args, out_dir),
        Command::Fci { problem, cap, write } => commands::fci(&problem.require()?, cap, write.as_deref()),
        Command::HubbardDump { lattice, out } => {
            let h = lattice
                .hubbard()
                .ok_or_else(|| CliError::Usage("--hubbard LXxLY is required".into()))?;
            let out = out.unwrap_or_else(|| out_dir.unwrap_or_default().join("hubbard.fcidump"));
            commands::hubbard_dump(&h, &out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { code::USAGE } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
