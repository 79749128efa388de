//! The expansion/trimming loop.
//!
//! Iteration 0 diagonalizes a random determinant set. Every later iteration
//! expands the core into a pool along strong couplings, trims the pool in
//! random groups, and keeps the top `k_b` determinants of the trimmed pool as
//! the next core.

mod config;
mod expand;
mod trim;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

pub use config::{DavidsonSettings, LocalKeep, PoolStrategy, TrimCiConfig};
pub use expand::{expand, Expansion};
pub use trim::{global_trim, local_trim, trim_groups};

use crate::determinants::{random_determinants, sector_size, Determinant};
use crate::eigensolver::{BuildOptions, DavidsonOptions};
use crate::error::{Error, Result};
use crate::integrals::IntegralTable;
use trim::{diagonalize, global_trim_full, guess_from, top_by_magnitude};

/// Energy rise tolerated between consecutive iterations before the guard
/// falls back to extending the previous core.
const MONOTONE_SLACK: f64 = 1e-10;

/// Eigensolver settings shared by every diagonalization of a run.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolverOptions {
    pub davidson: DavidsonOptions,
    pub build: BuildOptions,
}

/// Explicit wavefunction on a canonically sorted determinant list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionState {
    pub dets: Vec<Determinant>,
    pub coeffs: Vec<f64>,
    pub energy: f64,
    pub iteration: usize,
}

impl WavefunctionState {
    /// Sorts `(dets, coeffs)` pairs canonically.
    pub fn from_unsorted(dets: &[Determinant], coeffs: &[f64], energy: f64) -> Self {
        let mut pairs: Vec<(Determinant, f64)> = dets.iter().copied().zip(coeffs.iter().copied()).collect();
        pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let (dets, coeffs) = pairs.into_iter().unzip();
        WavefunctionState {
            dets,
            coeffs,
            energy,
            iteration: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.dets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dets.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Index of the largest `|c|`, first in canonical order on ties.
    pub fn dominant(&self) -> Option<usize> {
        top_by_magnitude(&self.dets, &self.coeffs, 1).first().copied()
    }

    /// Indices of the `k` largest `|c|`, ties in canonical order.
    pub fn top(&self, k: usize) -> Vec<usize> {
        top_by_magnitude(&self.dets, &self.coeffs, k)
    }

    /// Checks length agreement, distinct canonical order and unit norm.
    pub fn validate(&self) -> Result<()> {
        if self.dets.len() != self.coeffs.len() {
            return Err(Error::Dimension(format!(
                "{} determinants but {} coefficients",
                self.dets.len(),
                self.coeffs.len()
            )));
        }
        if let Some(w) = self.dets.windows(2).find(|w| w[0] >= w[1]) {
            return Err(if w[0] == w[1] {
                Error::DuplicateDeterminant(w[0])
            } else {
                Error::Dimension("determinants are not in canonical order".into())
            });
        }
        let n = self.norm();
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }
}

fn infinite_if_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// One line of the convergence log. An infinite `theta` is written as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub core_size: usize,
    pub pool_size: usize,
    #[serde(deserialize_with = "infinite_if_null")]
    pub theta: f64,
    pub energy: f64,
    /// Seconds since the run started.
    pub wall_time_s: f64,
}

impl IterationRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record fields serialize")
    }

    /// Equality ignoring `wall_time_s`.
    pub fn same_progress(&self, other: &Self) -> bool {
        (self.iteration, self.core_size, self.pool_size) == (other.iteration, other.core_size, other.pool_size)
            && self.theta.to_bits() == other.theta.to_bits()
            && self.energy.to_bits() == other.energy.to_bits()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The core exceeded `max_final_dets`.
    MaxDets,
    /// No energy improvement over the plateau window.
    Plateau,
    /// The core spans the whole symmetry sector.
    SectorExhausted,
    IterationCap,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub state: WavefunctionState,
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
}

/// splitmix64 of `(seed, iteration, stream)`.
fn derive_seed(seed: u64, iteration: usize, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add((iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A resumable TrimCI run.
pub struct TrimCi<'a> {
    config: TrimCiConfig,
    keep: LocalKeep,
    solver: SolverOptions,
    ints: &'a IntegralTable,
    sector: u128,
    state: WavefunctionState,
    theta: f64,
    records: Vec<IterationRecord>,
    stalled: usize,
    stop: Option<StopReason>,
    started: Instant,
}

impl<'a> TrimCi<'a> {
    /// Validates `config` and performs iteration 0.
    pub fn new(config: TrimCiConfig, ints: &'a IntegralTable) -> Result<Self> {
        config.validate()?;
        let keep = config.local_keep()?;
        let solver = SolverOptions {
            davidson: config.davidson_options(),
            build: BuildOptions {
                memory_cap_bytes: config.memory_cap_bytes,
            },
        };
        let started = Instant::now();
        let (m, nu, nd) = (ints.norb(), ints.n_alpha(), ints.n_beta());
        let sector = sector_size(m, nu, nd);
        if sector == 0 {
            return Err(Error::SectorTooSmall {
                available: 0,
                requested: 1,
            });
        }

        let initial = (config.initial_random_count as u128).min(sector) as usize;
        let init = || -> Result<WavefunctionState> {
            let mut dets = random_determinants(m, nu, nd, initial, config.seed)?;
            dets.sort_unstable();
            let res = diagonalize(&dets, ints, None, &solver)?;
            let mut state = WavefunctionState {
                dets,
                coeffs: res.coefficients,
                energy: res.energy,
                iteration: 0,
            };
            if let Some(k) = config.first_cycle_keep_size.filter(|&k| k < state.len()) {
                let mut idx = state.top(k);
                idx.sort_unstable();
                let dets: Vec<Determinant> = idx.iter().map(|&i| state.dets[i]).collect();
                let guess: Vec<f64> = idx.iter().map(|&i| state.coeffs[i]).collect();
                let res = diagonalize(&dets, ints, Some(&guess), &solver)?;
                state = WavefunctionState {
                    dets,
                    coeffs: res.coefficients,
                    energy: res.energy,
                    iteration: 0,
                };
            }
            Ok(state)
        };
        let state = init().map_err(|e| e.at_iteration(0))?;

        let theta = config.initial_threshold;
        let record = IterationRecord {
            iteration: 0,
            core_size: state.len(),
            pool_size: initial,
            theta,
            energy: state.energy,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        let mut run = TrimCi {
            config,
            keep,
            solver,
            ints,
            sector,
            state,
            theta,
            records: vec![record],
            stalled: 0,
            stop: None,
            started,
        };
        run.update_stop();
        Ok(run)
    }

    pub fn config(&self) -> &TrimCiConfig {
        &self.config
    }

    pub fn state(&self) -> &WavefunctionState {
        &self.state
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    pub fn is_finished(&self) -> bool {
        self.stop.is_some()
    }

    fn plateau_window(&self) -> usize {
        self.config.plateau_window.max(self.config.core_set_ratio.len())
    }

    fn update_stop(&mut self) {
        let iterations = self.records.len() - 1;
        self.stop = if self.state.len() as u128 >= self.sector {
            Some(StopReason::SectorExhausted)
        } else if self.state.len() > self.config.max_final_dets {
            Some(StopReason::MaxDets)
        } else if self.stalled >= self.plateau_window() {
            Some(StopReason::Plateau)
        } else if iterations >= self.config.max_iterations {
            Some(StopReason::IterationCap)
        } else {
            None
        };
    }

    fn iterate(&self, it: usize) -> Result<(WavefunctionState, usize, f64)> {
        let cfg = &self.config;
        let core = &self.state;
        let n = core.len();
        let target = (cfg.pool_core_ratio * n as f64).ceil() as usize;
        let expansion = expand(
            core,
            self.ints,
            target,
            cfg.strategy,
            self.theta,
            derive_seed(cfg.seed, it, 1),
        )?;
        let pool_size = expansion.pool.len();
        let trimmed = if cfg.trim_disable_threshold.is_some_and(|t| n >= t) {
            expansion.pool
        } else {
            local_trim(
                &expansion.pool,
                core,
                self.ints,
                cfg.num_groups,
                self.keep,
                derive_seed(cfg.seed, it, 2),
                &self.solver,
            )?
        };
        let k_b = cfg.next_core_size(it, n);
        let trimmed_pool = global_trim_full(&trimmed, self.ints, k_b, Some(core), &self.solver)?;
        let mut next = trimmed_pool.state;

        if cfg.monotone_guard && it >= 2 && next.energy > core.energy + MONOTONE_SLACK {
            log::debug!(
                "iteration {it}: trimmed core energy {} above previous {}; extending previous core",
                next.energy,
                core.energy
            );
            let members: rustc_hash::FxHashSet<&Determinant> = core.dets.iter().collect();
            let extra = k_b.saturating_sub(n);
            let mut dets = core.dets.clone();
            dets.extend(
                top_by_magnitude(&trimmed, &trimmed_pool.pool.coefficients, trimmed.len())
                    .into_iter()
                    .map(|i| trimmed[i])
                    .filter(|d| !members.contains(d))
                    .take(extra),
            );
            dets.sort_unstable();
            let guess = guess_from(&dets, Some(core));
            let res = diagonalize(&dets, self.ints, guess.as_deref(), &self.solver)?;
            next = WavefunctionState {
                dets,
                coeffs: res.coefficients,
                energy: res.energy,
                iteration: it,
            };
        }
        next.iteration = it;
        Ok((next, pool_size, expansion.theta))
    }

    /// Performs one expansion/trimming iteration. Returns `None` once the run
    /// has stopped.
    pub fn step(&mut self) -> Result<Option<&IterationRecord>> {
        if self.stop.is_some() {
            return Ok(None);
        }
        let it = self.records.len();
        let (next, pool_size, theta) = self.iterate(it).map_err(|e| e.at_iteration(it))?;
        if theta.is_finite() && theta > 0.0 {
            self.theta = theta;
        }
        if it >= 1 && self.state.energy - next.energy < self.config.plateau_tolerance {
            self.stalled += 1;
        } else {
            self.stalled = 0;
        }
        self.state = next;
        self.records.push(IterationRecord {
            iteration: it,
            core_size: self.state.len(),
            pool_size,
            theta,
            energy: self.state.energy,
            wall_time_s: self.started.elapsed().as_secs_f64(),
        });
        self.update_stop();
        Ok(self.records.last())
    }

    /// Steps until a stop condition holds, passing each new record to
    /// `observer`.
    pub fn run_to_end(&mut self, mut observer: impl FnMut(&IterationRecord, &WavefunctionState)) -> Result<()> {
        while let Some(r) = self.step()? {
            let r = r.clone();
            observer(&r, &self.state);
        }
        Ok(())
    }

    pub fn into_outcome(self) -> RunOutcome {
        RunOutcome {
            state: self.state,
            records: self.records,
            stop: self.stop.unwrap_or(StopReason::IterationCap),
        }
    }
}

/// Runs a single TrimCI trajectory to completion.
pub fn run(config: &TrimCiConfig, ints: &IntegralTable) -> Result<RunOutcome> {
    run_with(config, ints, |_, _| {})
}

/// As [`run`], calling `observer` for every record including iteration 0.
pub fn run_with(
    config: &TrimCiConfig,
    ints: &IntegralTable,
    mut observer: impl FnMut(&IterationRecord, &WavefunctionState),
) -> Result<RunOutcome> {
    let mut t = TrimCi::new(config.clone(), ints)?;
    observer(&t.records()[0], t.state());
    t.run_to_end(observer)?;
    Ok(t.into_outcome())
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    /// Energy after the early iterations, `None` for a failed run.
    pub energy: Option<f64>,
    pub core_size: usize,
    pub records: Vec<IterationRecord>,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct EnsembleOutcome {
    pub best_run: usize,
    pub outcome: RunOutcome,
    pub summaries: Vec<RunSummary>,
}

/// Runs `num_runs` trajectories with seeds `seed + i` for
/// `ensemble_iterations` iterations, then continues the lowest-energy one
/// (lowest index on ties) to completion.
pub fn ensemble_run(config: &TrimCiConfig, ints: &IntegralTable) -> Result<EnsembleOutcome> {
    ensemble_run_with(config, ints, |_, _| {})
}

/// As [`ensemble_run`]; `observer` sees every record of the selected run.
pub fn ensemble_run_with(
    config: &TrimCiConfig,
    ints: &IntegralTable,
    mut observer: impl FnMut(&IterationRecord, &WavefunctionState),
) -> Result<EnsembleOutcome> {
    if config.num_runs < 2 {
        return Err(Error::Config(format!("ensemble needs num_runs >= 2, got {}", config.num_runs)));
    }
    config.validate()?;
    let early: Vec<Result<TrimCi>> = (0..config.num_runs)
        .into_par_iter()
        .map(|i| {
            let cfg = TrimCiConfig {
                seed: config.seed.wrapping_add(i as u64),
                ..config.clone()
            };
            let mut t = TrimCi::new(cfg, ints)?;
            for _ in 0..config.ensemble_iterations {
                if t.step()?.is_none() {
                    break;
                }
            }
            Ok(t)
        })
        .collect();

    let summaries: Vec<RunSummary> = early
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let seed = config.seed.wrapping_add(i as u64);
            match r {
                Ok(t) => RunSummary {
                    run: i,
                    seed,
                    energy: Some(t.state().energy),
                    core_size: t.state().len(),
                    records: t.records().to_vec(),
                    error: None,
                },
                Err(e) => RunSummary {
                    run: i,
                    seed,
                    energy: None,
                    core_size: 0,
                    records: Vec::new(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    for s in summaries.iter().filter(|s| s.error.is_some()) {
        log::warn!("ensemble run {} failed: {}", s.run, s.error.as_deref().unwrap_or(""));
    }

    let best_run = summaries
        .iter()
        .filter_map(|s| s.energy.map(|e| (e, s.run)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, i)| i)
        .ok_or(Error::EnsembleFailed(config.num_runs))?;

    let mut best = early
        .into_iter()
        .nth(best_run)
        .expect("selected run exists")
        .expect("selected run succeeded");
    for r in best.records() {
        observer(r, best.state());
    }
    best.run_to_end(observer)?;
    Ok(EnsembleOutcome {
        best_run,
        outcome: best.into_outcome(),
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{hubbard_integrals, Boundary, HubbardSpec};

    #[test]
    fn two_site_reaches_exact_energy() {
        let ints = hubbard_integrals(&HubbardSpec::half_filled(2, 1, 1.0, 4.0, Boundary::Open)).unwrap();
        let cfg = TrimCiConfig {
            max_final_dets: 10,
            ..Default::default()
        };
        let out = run(&cfg, &ints).unwrap();
        assert!((out.state.energy - (2.0 - 8f64.sqrt())).abs() < 1e-8);
        assert_eq!(out.stop, StopReason::SectorExhausted);
        out.state.validate().unwrap();
    }

    #[test]
    fn small_core_grows_to_sector() {
        let ints = hubbard_integrals(&HubbardSpec::half_filled(2, 2, 1.0, 4.0, Boundary::Open)).unwrap();
        let cfg = TrimCiConfig {
            initial_random_count: 3,
            first_cycle_keep_size: Some(1),
            core_set_ratio: vec![1.5],
            num_groups: 2,
            keep_ratio: Some(0.5),
            max_final_dets: 100,
            seed: 11,
            ..Default::default()
        };
        let out = run(&cfg, &ints).unwrap();
        let sizes: Vec<usize> = out.records.iter().map(|r| r.core_size).collect();
        assert!(sizes.windows(2).skip(1).all(|w| w[1] >= w[0]), "{sizes:?}");
        for w in out.records[1..].windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-10);
        }
        out.state.validate().unwrap();
    }

    #[test]
    fn records_are_deterministic() {
        let ints = hubbard_integrals(&HubbardSpec::half_filled(3, 2, 1.0, 4.0, Boundary::Periodic)).unwrap();
        let cfg = TrimCiConfig {
            initial_random_count: 20,
            first_cycle_keep_size: Some(4),
            core_set_ratio: vec![1.3],
            max_final_dets: 60,
            seed: 5,
            ..Default::default()
        };
        let a = run(&cfg, &ints).unwrap();
        let b = run(&cfg, &ints).unwrap();
        assert_eq!(a.records.len(), b.records.len());
        assert!(a.records.iter().zip(&b.records).all(|(x, y)| x.same_progress(y)));
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn record_json_fields() {
        let r = IterationRecord {
            iteration: 2,
            core_size: 10,
            pool_size: 100,
            theta: f64::INFINITY,
            energy: -1.5,
            wall_time_s: 0.25,
        };
        let line = r.to_json_line();
        assert_eq!(
            line,
            r#"{"iteration":2,"core_size":10,"pool_size":100,"theta":null,"energy":-1.5,"wall_time_s":0.25}"#
        );
        let back: IterationRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn ensemble_tie_prefers_lower_index() {
        let ints = hubbard_integrals(&HubbardSpec::half_filled(2, 1, 1.0, 4.0, Boundary::Open)).unwrap();
        let cfg = TrimCiConfig {
            num_runs: 3,
            ..Default::default()
        };
        let out = ensemble_run(&cfg, &ints).unwrap();
        assert_eq!(out.best_run, 0);
        assert_eq!(out.summaries.len(), 3);
        assert!(ensemble_run(&TrimCiConfig::default(), &ints).is_err());
    }
}
