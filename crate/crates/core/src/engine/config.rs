use serde::{Deserialize, Serialize};

use crate::eigensolver::DavidsonOptions;
use crate::error::{Error, Result};

/// How the expansion step picks candidate determinants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolStrategy {
    /// Threshold screening of `|H_ij c_j|` over magnitude-sorted couplings.
    #[default]
    HeatBath,
    /// Experimental: uniform draw among all connected determinants.
    Uniform,
    /// Experimental: per-parent quotas proportional to `|c_j|^2`, drawn
    /// uniformly among each parent's connections.
    NormalizedUniform,
}

/// Survivor count of one local-trimming group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LocalKeep {
    /// `ceil(ratio * |group|)`
    GroupFraction(f64),
    /// `ceil(ratio * |core| / num_groups)` (experimental)
    CoreFraction(f64),
}

impl LocalKeep {
    pub fn survivors(&self, group_len: usize, core_len: usize, num_groups: usize) -> usize {
        let k = match *self {
            LocalKeep::GroupFraction(r) => (r * group_len as f64).ceil(),
            LocalKeep::CoreFraction(r) => (r * core_len as f64 / num_groups.max(1) as f64).ceil(),
        };
        (k.max(0.0) as usize).min(group_len)
    }
}

/// Parameter schedule of the expansion/trimming loop. Field names follow the
/// conventional TrimCI parameter names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrimCiConfig {
    pub initial_random_count: usize,
    /// Size of the core kept after the first diagonalization of the random set.
    pub first_cycle_keep_size: Option<usize>,
    /// Target pool size as a multiple of the core size.
    pub pool_core_ratio: f64,
    pub strategy: PoolStrategy,
    pub num_groups: usize,
    /// Fraction of each group's new determinants that survive local trimming.
    pub keep_ratio: Option<f64>,
    /// Alternative to `keep_ratio`: survivors relative to the core size.
    pub local_trim_keep_ratio: Option<f64>,
    /// Cyclic per-iteration core growth factors.
    pub core_set_ratio: Vec<f64>,
    pub max_final_dets: usize,
    pub num_runs: usize,
    pub seed: u64,
    /// Once the core reaches this size, local trimming is skipped.
    pub trim_disable_threshold: Option<usize>,
    /// Iterations every ensemble member runs before the best one is kept.
    pub ensemble_iterations: usize,
    /// Screening threshold the first expansion starts from.
    pub initial_threshold: f64,
    /// Hard cap on loop iterations.
    pub max_iterations: usize,
    /// Energy change counted as no improvement.
    pub plateau_tolerance: f64,
    /// Consecutive non-improving iterations that end the run; never fewer than
    /// the length of `core_set_ratio`.
    pub plateau_window: usize,
    /// Reject core updates that raise the energy after the first iteration.
    pub monotone_guard: bool,
    pub davidson: DavidsonSettings,
    /// Projected Hamiltonians estimated above this size are applied matrix-free.
    pub memory_cap_bytes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DavidsonSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub max_subspace: usize,
    pub dense_cutoff: usize,
}

impl Default for DavidsonSettings {
    fn default() -> Self {
        let d = DavidsonOptions::default();
        DavidsonSettings {
            tol: d.tol,
            max_iter: d.max_iter,
            max_subspace: d.max_subspace,
            dense_cutoff: d.dense_cutoff,
        }
    }
}

impl From<DavidsonSettings> for DavidsonOptions {
    fn from(s: DavidsonSettings) -> Self {
        DavidsonOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            max_subspace: s.max_subspace,
            dense_cutoff: s.dense_cutoff,
        }
    }
}

impl Default for TrimCiConfig {
    fn default() -> Self {
        TrimCiConfig {
            initial_random_count: 100,
            first_cycle_keep_size: Some(10),
            pool_core_ratio: 10.0,
            strategy: PoolStrategy::HeatBath,
            num_groups: 10,
            keep_ratio: Some(0.1),
            local_trim_keep_ratio: None,
            core_set_ratio: vec![1.0, 1.0, 1.0, 1.1],
            max_final_dets: 1000,
            num_runs: 1,
            seed: 0,
            trim_disable_threshold: None,
            ensemble_iterations: 4,
            initial_threshold: 1e-3,
            max_iterations: 100_000,
            plateau_tolerance: 1e-9,
            plateau_window: 3,
            monotone_guard: true,
            davidson: DavidsonSettings::default(),
            memory_cap_bytes: 8 << 30,
        }
    }
}

impl TrimCiConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.initial_random_count == 0 {
            return fail("initial_random_count must be at least 1".into());
        }
        if self.first_cycle_keep_size == Some(0) {
            return fail("first_cycle_keep_size must be at least 1".into());
        }
        if !(self.pool_core_ratio > 1.0) || !self.pool_core_ratio.is_finite() {
            return fail(format!("pool_core_ratio {} must exceed 1", self.pool_core_ratio));
        }
        if self.num_groups == 0 {
            return fail("num_groups must be at least 1".into());
        }
        self.local_keep()?;
        if self.core_set_ratio.is_empty() {
            return fail("core_set_ratio must not be empty".into());
        }
        if let Some(r) = self.core_set_ratio.iter().find(|r| !(**r >= 1.0) || !r.is_finite()) {
            return fail(format!("core_set_ratio entry {r} must be at least 1"));
        }
        if self.max_final_dets == 0 {
            return fail("max_final_dets must be at least 1".into());
        }
        if self.num_runs == 0 {
            return fail("num_runs must be at least 1".into());
        }
        if !(self.initial_threshold > 0.0) {
            return fail("initial_threshold must be positive".into());
        }
        if !(self.davidson.tol > 0.0) {
            return fail("davidson.tol must be positive".into());
        }
        Ok(())
    }

    /// The configured local-trimming survivor rule.
    pub fn local_keep(&self) -> Result<LocalKeep> {
        let check = |name: &str, r: f64| {
            if r > 0.0 && r <= 1.0 {
                Ok(r)
            } else {
                Err(Error::Config(format!("{name} {r} must lie in (0, 1]")))
            }
        };
        match (self.keep_ratio, self.local_trim_keep_ratio) {
            (Some(_), Some(_)) => Err(Error::Config(
                "keep_ratio and local_trim_keep_ratio are mutually exclusive".into(),
            )),
            (Some(r), None) => Ok(LocalKeep::GroupFraction(check("keep_ratio", r)?)),
            (None, Some(r)) => {
                if r > 0.0 && r.is_finite() {
                    Ok(LocalKeep::CoreFraction(r))
                } else {
                    Err(Error::Config(format!("local_trim_keep_ratio {r} must be positive")))
                }
            }
            (None, None) => Err(Error::Config(
                "one of keep_ratio or local_trim_keep_ratio is required".into(),
            )),
        }
    }

    /// Core size after iteration `iteration` (1-based) starting from `core_len`.
    pub fn next_core_size(&self, iteration: usize, core_len: usize) -> usize {
        let ratio = self.core_set_ratio[(iteration.max(1) - 1) % self.core_set_ratio.len()];
        let grown = (ratio * core_len as f64).round() as usize;
        if ratio > 1.0 {
            grown.max(core_len + 1)
        } else {
            grown.max(core_len)
        }
    }

    pub fn davidson_options(&self) -> DavidsonOptions {
        self.davidson.into()
    }
}
