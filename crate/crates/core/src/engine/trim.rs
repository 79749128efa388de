//! Local (grouped) and global trimming of an expanded pool.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use super::{LocalKeep, SolverOptions, WavefunctionState};
use crate::determinants::{seeded_rng, Determinant};
use crate::eigensolver::{davidson_lowest, EigenResult, ProjectedHamiltonian};
use crate::error::{Error, Result};
use crate::integrals::IntegralTable;

pub(crate) fn diagonalize(
    dets: &[Determinant],
    ints: &IntegralTable,
    guess: Option<&[f64]>,
    solver: &SolverOptions,
) -> Result<EigenResult> {
    let h = ProjectedHamiltonian::build(dets, ints, solver.build)?;
    davidson_lowest(&h, guess, &solver.davidson)
}

/// Coefficients of `warm` placed on `dets`; `None` when nothing overlaps.
pub(crate) fn guess_from(dets: &[Determinant], warm: Option<&WavefunctionState>) -> Option<Vec<f64>> {
    let warm = warm?;
    let lookup: FxHashMap<&Determinant, f64> = warm.dets.iter().zip(warm.coeffs.iter().copied()).collect();
    let g: Vec<f64> = dets.iter().map(|d| lookup.get(d).copied().unwrap_or(0.0)).collect();
    g.iter().any(|&x| x != 0.0).then_some(g)
}

/// Indices of the `k` largest `|coeffs|`, ties by canonical order of `dets`.
pub(crate) fn top_by_magnitude(dets: &[Determinant], coeffs: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dets.len()).collect();
    idx.sort_unstable_by(|&a, &b| coeffs[b].abs().total_cmp(&coeffs[a].abs()).then(dets[a].cmp(&dets[b])));
    idx.truncate(k);
    idx
}

/// Splits `n` items into `groups` contiguous ranges whose sizes differ by at
/// most one.
fn split_even(n: usize, groups: usize) -> Vec<std::ops::Range<usize>> {
    let (q, r) = (n / groups, n % groups);
    let mut start = 0;
    (0..groups)
        .map(|g| {
            let len = q + usize::from(g < r);
            let range = start..start + len;
            start += len;
            range
        })
        .filter(|r| !r.is_empty())
        .collect()
}

/// Seeded partition of the determinants of `pool` outside `core` into
/// `num_groups` near-equal groups, each in canonical order.
pub fn trim_groups(
    pool: &[Determinant],
    core: &[Determinant],
    num_groups: usize,
    seed: u64,
) -> Result<Vec<Vec<Determinant>>> {
    if num_groups == 0 {
        return Err(Error::Config("num_groups must be at least 1".into()));
    }
    let members: FxHashSet<&Determinant> = core.iter().collect();
    if pool.iter().filter(|d| members.contains(d)).count() != core.len() {
        return Err(Error::Dimension("pool does not contain the whole core".into()));
    }
    let mut new: Vec<Determinant> = pool.iter().filter(|d| !members.contains(d)).copied().collect();
    new.sort_unstable();
    new.shuffle(&mut seeded_rng(seed));
    Ok(split_even(new.len(), num_groups)
        .into_iter()
        .map(|range| {
            let mut g = new[range].to_vec();
            g.sort_unstable();
            g
        })
        .collect())
}

/// Reduces `pool` by diagonalizing random groups of its new determinants,
/// each together with the whole core, and keeping the strongest members of
/// every group. Core determinants are never removed.
///
/// Returns the core followed by the survivors in canonical order.
pub fn local_trim(
    pool: &[Determinant],
    core: &WavefunctionState,
    ints: &IntegralTable,
    num_groups: usize,
    keep: LocalKeep,
    seed: u64,
    solver: &SolverOptions,
) -> Result<Vec<Determinant>> {
    match keep {
        LocalKeep::GroupFraction(r) if !(r > 0.0 && r <= 1.0) => {
            return Err(Error::Config(format!("keep_ratio {r} must lie in (0, 1]")));
        }
        LocalKeep::CoreFraction(r) if !(r > 0.0) => {
            return Err(Error::Config(format!("local_trim_keep_ratio {r} must be positive")));
        }
        _ => {}
    }
    let groups = trim_groups(pool, &core.dets, num_groups, seed)?;
    let survivors: Vec<Vec<Determinant>> = groups
        .into_par_iter()
        .map(|group| {
            let k = keep.survivors(group.len(), core.dets.len(), num_groups);
            if k >= group.len() {
                return Ok(group);
            }
            let mut dets = core.dets.clone();
            dets.extend_from_slice(&group);
            let mut guess = core.coeffs.clone();
            guess.resize(dets.len(), 0.0);
            let res = diagonalize(&dets, ints, Some(&guess), solver)?;
            let n = core.dets.len();
            Ok(top_by_magnitude(&group, &res.coefficients[n..], k)
                .into_iter()
                .map(|i| group[i])
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut kept: Vec<Determinant> = survivors.into_iter().flatten().collect();
    kept.sort_unstable();
    let mut out = core.dets.clone();
    out.extend(kept);
    Ok(out)
}

/// Result of a global trim together with the eigenpair on the full pool.
pub(crate) struct GlobalTrim {
    pub state: WavefunctionState,
    pub pool: EigenResult,
}

pub(crate) fn global_trim_full(
    pool: &[Determinant],
    ints: &IntegralTable,
    k_b: usize,
    warm: Option<&WavefunctionState>,
    solver: &SolverOptions,
) -> Result<GlobalTrim> {
    if pool.is_empty() {
        return Err(Error::Dimension("cannot trim an empty pool".into()));
    }
    if k_b == 0 {
        return Err(Error::Config("k_b must be at least 1".into()));
    }
    let guess = guess_from(pool, warm);
    let full = diagonalize(pool, ints, guess.as_deref(), solver)?;
    let state = if k_b >= pool.len() {
        WavefunctionState::from_unsorted(pool, &full.coefficients, full.energy)
    } else {
        let mut chosen: Vec<(Determinant, f64)> = top_by_magnitude(pool, &full.coefficients, k_b)
            .into_iter()
            .map(|i| (pool[i], full.coefficients[i]))
            .collect();
        chosen.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let dets: Vec<Determinant> = chosen.iter().map(|e| e.0).collect();
        let guess: Vec<f64> = chosen.iter().map(|e| e.1).collect();
        let res = diagonalize(&dets, ints, Some(&guess), solver)?;
        WavefunctionState {
            dets,
            coeffs: res.coefficients,
            energy: res.energy,
            iteration: 0,
        }
    };
    Ok(GlobalTrim { state, pool: full })
}

/// Diagonalizes `pool`, keeps its `k_b` largest-amplitude determinants and
/// re-diagonalizes on them. `warm` seeds the first diagonalization.
pub fn global_trim(
    pool: &[Determinant],
    ints: &IntegralTable,
    k_b: usize,
    warm: Option<&WavefunctionState>,
    solver: &SolverOptions,
) -> Result<WavefunctionState> {
    global_trim_full(pool, ints, k_b, warm, solver).map(|g| g.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{hubbard_integrals, Boundary, HubbardSpec};

    fn two_site(u: f64) -> IntegralTable {
        hubbard_integrals(&HubbardSpec::half_filled(2, 1, 1.0, u, Boundary::Open)).unwrap()
    }

    fn sector() -> Vec<Determinant> {
        vec![
            Determinant::new(0b01, 0b01),
            Determinant::new(0b01, 0b10),
            Determinant::new(0b10, 0b01),
            Determinant::new(0b10, 0b10),
        ]
    }

    #[test]
    fn even_split() {
        let sizes: Vec<usize> = split_even(23, 5).into_iter().map(|r| r.len()).collect();
        assert_eq!(sizes, vec![5, 5, 5, 4, 4]);
        assert_eq!(split_even(2, 4).len(), 2);
        assert!(split_even(0, 3).is_empty());
    }

    #[test]
    fn global_trim_full_sector() {
        let ints = two_site(4.0);
        let s = global_trim(&sector(), &ints, 4, None, &SolverOptions::default()).unwrap();
        assert!((s.energy - (2.0 - 8f64.sqrt())).abs() < 1e-12);
        assert_eq!(s.dets, sector());
    }

    #[test]
    fn global_trim_keeps_open_shells() {
        let ints = two_site(4.0);
        let s = global_trim(&sector(), &ints, 2, None, &SolverOptions::default()).unwrap();
        assert_eq!(s.dets, vec![Determinant::new(0b01, 0b10), Determinant::new(0b10, 0b01)]);
        assert_eq!(s.energy, 0.0);
    }

    #[test]
    fn local_trim_identity_cases() {
        let ints = two_site(4.0);
        let core = WavefunctionState {
            dets: vec![Determinant::new(0b01, 0b01)],
            coeffs: vec![1.0],
            energy: 4.0,
            iteration: 0,
        };
        let opts = SolverOptions::default();
        let pool = sector();
        let out = local_trim(&pool, &core, &ints, 1, LocalKeep::GroupFraction(1.0), 3, &opts).unwrap();
        assert_eq!(out, pool);
        let out = local_trim(&core.dets, &core, &ints, 4, LocalKeep::GroupFraction(0.1), 3, &opts).unwrap();
        assert_eq!(out, core.dets);
        assert!(local_trim(&pool, &core, &ints, 1, LocalKeep::GroupFraction(1.2), 3, &opts).is_err());
    }
}
