use std::fmt;
use std::process::ExitCode;

/// Exit statuses. Usage errors share clap's status 2.
pub mod code {
    pub const USAGE: u8 = 2;
    pub const CONFIG: u8 = 3;
    pub const IO: u8 = 4;
    pub const PARSE: u8 = 5;
    pub const DIMENSION: u8 = 6;
    pub const SOLVER: u8 = 7;
    pub const SECTOR_CAP: u8 = 8;
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Manifest(String),
    Lib(trimci::Error),
}

impl From<trimci::Error> for CliError {
    fn from(e: trimci::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Manifest(m) => write!(f, "invalid manifest: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn lib_code(e: &trimci::Error) -> u8 {
    use trimci::Error::*;
    match e {
        Config(_) => code::CONFIG,
        Parse { .. } | IntegralIndex(_) | DuplicateDeterminant(_) => code::PARSE,
        Dimension(_) | NotNormalized(_) | SectorTooSmall { .. } => code::DIMENSION,
        NotConverged { .. } | NearDegenerate { .. } | DegenerateFit(_) | EnsembleFailed(_) => code::SOLVER,
        SectorCap { .. } => code::SECTOR_CAP,
        Io { .. } | Stream(_) => code::IO,
        AtIteration { source, .. } => lib_code(source),
    }
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => code::USAGE,
            CliError::Manifest(_) => code::CONFIG,
            CliError::Lib(e) => lib_code(e),
        }
    }

    pub fn report(&self) -> ExitCode {
        eprintln!("error: {self}");
        if let CliError::Lib(trimci::Error::SectorCap { .. }) = self {
            eprintln!("hint: the sector is too large for exact diagonalization; use `trimci run` instead");
        }
        ExitCode::from(self.code())
    }
}
