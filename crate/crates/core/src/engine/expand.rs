//! Pool generation around the current core.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use super::{PoolStrategy, WavefunctionState};
use crate::connections::for_each_connection;
use crate::determinants::{seeded_rng, Determinant};
use crate::error::{Error, Result};
use crate::integrals::IntegralTable;

const PARENT_CHUNK: usize = 256;
const MAX_ADJUSTMENTS: usize = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    /// Core determinants first (in core order), then new ones in canonical order.
    pub pool: Vec<Determinant>,
    /// Screening threshold that produced the pool; `+inf` when the core has
    /// no external connections, `0` for the uniform strategies.
    pub theta: f64,
}

struct Screened {
    /// Best `|H_ij c_j|` per external determinant.
    values: FxHashMap<Determinant, f64>,
    /// Upper bound on `|H_ij c_j|` over everything screened out.
    skipped: f64,
}

fn screen(core: &WavefunctionState, members: &FxHashSet<Determinant>, ints: &IntegralTable, theta: f64) -> Screened {
    let parts: Vec<Screened> = core
        .dets
        .par_chunks(PARENT_CHUNK)
        .zip(core.coeffs.par_chunks(PARENT_CHUNK))
        .map(|(dets, coeffs)| {
            let mut values = FxHashMap::default();
            let mut skipped = 0.0f64;
            for (d, &c) in dets.iter().zip(coeffs) {
                let w = c.abs();
                if w == 0.0 {
                    continue;
                }
                let s = for_each_connection(d, ints, theta / w, |e, h| {
                    if members.contains(&e) {
                        return;
                    }
                    let v = (h * w).abs();
                    let slot = values.entry(e).or_insert(0.0);
                    if v > *slot {
                        *slot = v;
                    }
                });
                skipped = skipped.max(s * w);
            }
            Screened { values, skipped }
        })
        .collect();
    let mut parts = parts.into_iter();
    let mut out = parts.next().unwrap_or(Screened {
        values: FxHashMap::default(),
        skipped: 0.0,
    });
    for p in parts {
        out.skipped = out.skipped.max(p.skipped);
        for (d, v) in p.values {
            let slot = out.values.entry(d).or_insert(0.0);
            if v > *slot {
                *slot = v;
            }
        }
    }
    // values at or below theta can only arise from rounding in theta / w
    out.values.retain(|_, v| *v > theta);
    out
}

/// Number of leading candidates to keep: a cut between distinct values,
/// inside `[lo, hi]` and closest to `want` when possible, otherwise closest
/// to the band. An empty cut is only chosen when `want` is zero.
fn rank_cut(sorted: &[(f64, Determinant)], lo: usize, hi: usize, want: usize) -> usize {
    if want == 0 {
        return 0;
    }
    let band_distance = |k: usize| {
        if k < lo {
            lo - k
        } else {
            k.saturating_sub(hi)
        }
    };
    (1..=sorted.len())
        .filter(|&k| k == sorted.len() || sorted[k - 1].0 > sorted[k].0)
        .min_by_key(|&k| (band_distance(k), k.abs_diff(want), k))
        .unwrap_or(0)
}

fn assemble(core: &WavefunctionState, mut new: Vec<Determinant>) -> Vec<Determinant> {
    new.sort_unstable();
    let mut pool = Vec::with_capacity(core.dets.len() + new.len());
    pool.extend_from_slice(&core.dets);
    pool.extend(new);
    pool
}

/// Grows `core` to a pool of roughly `target_pool_size` determinants.
///
/// With the heat-bath strategy a determinant enters when `|H_ij c_j| > theta`
/// for some core member `j`. The search starts at `theta_start`, halves
/// `theta` until at least `0.8 * target` determinants are reachable and then
/// cuts the ranked candidates so the pool lands in `[0.8, 1.5] * target`
/// whenever ties allow.
pub fn expand(
    core: &WavefunctionState,
    ints: &IntegralTable,
    target_pool_size: usize,
    strategy: PoolStrategy,
    theta_start: f64,
    seed: u64,
) -> Result<Expansion> {
    if core.dets.is_empty() {
        return Err(Error::Dimension("cannot expand an empty core".into()));
    }
    if !(theta_start > 0.0) {
        return Err(Error::Config(format!("screening threshold {theta_start} must be positive")));
    }
    let members: FxHashSet<Determinant> = core.dets.iter().copied().collect();
    let n = core.dets.len();
    let target = target_pool_size.max(n);
    let want = target - n;
    let lo = ((0.8 * target as f64).ceil() as usize).saturating_sub(n);
    let hi = ((1.5 * target as f64).floor() as usize).saturating_sub(n);

    match strategy {
        PoolStrategy::HeatBath => {
            let mut theta = theta_start;
            let mut found = screen(core, &members, ints, theta);
            let mut adjustments = 0;
            while found.values.len() < lo && found.skipped > 0.0 && adjustments < MAX_ADJUSTMENTS {
                // halvings that cannot admit anything new are skipped
                while theta / 2.0 >= found.skipped && adjustments < MAX_ADJUSTMENTS {
                    theta /= 2.0;
                    adjustments += 1;
                }
                if adjustments < MAX_ADJUSTMENTS {
                    theta /= 2.0;
                    adjustments += 1;
                }
                found = screen(core, &members, ints, theta);
            }
            if found.values.is_empty() && found.skipped == 0.0 {
                return Ok(Expansion {
                    pool: core.dets.clone(),
                    theta: f64::INFINITY,
                });
            }
            let mut sorted: Vec<(f64, Determinant)> = found.values.into_iter().map(|(d, v)| (v, d)).collect();
            sorted.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let k = if sorted.len() <= hi { sorted.len() } else { rank_cut(&sorted, lo, hi, want) };
            if k < sorted.len() {
                theta = sorted[k].0;
            }
            let new = sorted[..k].iter().map(|e| e.1).collect();
            Ok(Expansion {
                pool: assemble(core, new),
                theta,
            })
        }
        PoolStrategy::Uniform => {
            let mut all: Vec<Determinant> = screen(core, &members, ints, 0.0).values.into_keys().collect();
            all.sort_unstable();
            all.shuffle(&mut seeded_rng(seed));
            all.truncate(want);
            Ok(Expansion {
                pool: assemble(core, all),
                theta: 0.0,
            })
        }
        PoolStrategy::NormalizedUniform => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                core.coeffs[b]
                    .abs()
                    .total_cmp(&core.coeffs[a].abs())
                    .then(core.dets[a].cmp(&core.dets[b]))
            });
            let mut rng = seeded_rng(seed);
            let mut chosen = FxHashSet::default();
            let mut new = Vec::new();
            for i in order {
                if new.len() >= want {
                    break;
                }
                let quota = (want as f64 * core.coeffs[i] * core.coeffs[i]).ceil() as usize;
                if quota == 0 {
                    continue;
                }
                let mut options = Vec::new();
                for_each_connection(&core.dets[i], ints, 0.0, |d, _| {
                    if !members.contains(&d) && !chosen.contains(&d) {
                        options.push(d);
                    }
                });
                options.sort_unstable();
                options.shuffle(&mut rng);
                for d in options.into_iter().take(quota.min(want - new.len())) {
                    chosen.insert(d);
                    new.push(d);
                }
            }
            Ok(Expansion {
                pool: assemble(core, new),
                theta: 0.0,
            })
        }
    }
}
