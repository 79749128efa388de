//! Run manifests: one TOML file naming the problem, the solver schedule, the
//! output directory and the seed.
//!
//! ```toml
//! seed = 7
//!
//! [problem.hubbard]
//! lx = 4
//! ly = 4
//! u = 2.0
//! basis = "momentum"
//!
//! [outputs]
//! directory = "out"
//!
//! [config]
//! max_final_dets = 1000
//! num_runs = 16
//! core_set_ratio = [1.3]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use trimci::integrals::{hubbard_integrals, read_fcidump, Boundary, HubbardSpec, OrbitalBasis};
use trimci::{IntegralTable, TrimCiConfig};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HubbardProblem {
    pub lx: usize,
    pub ly: usize,
    #[serde(default = "unit_hopping")]
    pub t: f64,
    pub u: f64,
    #[serde(default = "periodic")]
    pub boundary: Boundary,
    /// Half filling when omitted.
    pub n_up: Option<usize>,
    pub n_down: Option<usize>,
    #[serde(default)]
    pub basis: OrbitalBasis,
}

fn unit_hopping() -> f64 {
    1.0
}

fn periodic() -> Boundary {
    Boundary::Periodic
}

impl HubbardProblem {
    pub fn spec(&self) -> HubbardSpec {
        let half = self.lx * self.ly / 2;
        HubbardSpec::new(
            self.lx,
            self.ly,
            self.t,
            self.u,
            self.boundary,
            self.n_up.unwrap_or(half),
            self.n_down.unwrap_or(half),
        )
        .with_basis(self.basis)
    }
}

/// Where the Hamiltonian comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    Fcidump(PathBuf),
    Hubbard(HubbardProblem),
}

impl Problem {
    pub fn integrals(&self) -> Result<IntegralTable, CliError> {
        match self {
            Problem::Fcidump(path) => Ok(read_fcidump(path)?),
            Problem::Hubbard(h) => Ok(hubbard_integrals(&h.spec())?),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    fcidump: Option<PathBuf>,
    hubbard: Option<HubbardProblem>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    directory: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    seed: Option<u64>,
    problem: RawProblem,
    #[serde(default)]
    outputs: RawOutputs,
    #[serde(default)]
    config: toml::Table,
}

#[derive(Clone, Debug)]
pub struct RunManifest {
    pub config: TrimCiConfig,
    pub problem: Problem,
    /// Relative to the manifest's directory; `None` leaves the choice to the caller.
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| trimci::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            CliError::Manifest(m) => CliError::Manifest(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Parses manifest text, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let raw: RawManifest = toml::from_str(text).map_err(|e| CliError::Manifest(e.to_string()))?;
        let problem = match (raw.problem.fcidump, raw.problem.hubbard) {
            (Some(p), None) => Problem::Fcidump(base.join(p)),
            (None, Some(h)) => Problem::Hubbard(h),
            _ => {
                return Err(CliError::Manifest(
                    "[problem] needs exactly one of `fcidump` or `hubbard`".into(),
                ))
            }
        };
        // an explicit core-relative rule replaces the default group fraction
        let core_relative = raw.config.contains_key("local_trim_keep_ratio") && !raw.config.contains_key("keep_ratio");
        let mut config: TrimCiConfig = toml::Value::Table(raw.config)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Manifest(format!("[config]: {e}")))?;
        if core_relative {
            config.keep_ratio = None;
        }
        Ok(RunManifest {
            config,
            problem,
            output_dir: raw.outputs.directory.map(|d| base.join(d)),
            seed: raw.seed,
        })
    }
}
