//! Second-order Epstein–Nesbet correction and extrapolation of
//! `E_var + E_per` to vanishing correction.

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::connections::for_each_connection;
use crate::determinants::{diagonal_element, Determinant};
use crate::engine::WavefunctionState;
use crate::error::{Error, Result};
use crate::integrals::IntegralTable;

pub const DEFAULT_EPSILON2: f64 = 1e-6;

/// Parents per accumulation shard; fixed so sums do not depend on threads.
const PARENT_CHUNK: usize = 256;
/// Shards accumulated concurrently before merging into the global map.
const SHARDS_PER_BATCH: usize = 16;

/// Denominator threshold below which an external determinant is treated as
/// degenerate with the variational state.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pt2Result {
    pub e_var: f64,
    pub e_per: f64,
    pub epsilon2: f64,
    pub n_external: usize,
    /// External determinants whose diagonal lies below `e_var`; their terms
    /// are positive.
    pub n_positive_terms: usize,
}

impl Pt2Result {
    pub fn e_total(&self) -> f64 {
        self.e_var + self.e_per
    }
}

fn accumulate(
    dets: &[Determinant],
    coeffs: &[f64],
    members: &FxHashSet<Determinant>,
    ints: &IntegralTable,
    epsilon2: f64,
) -> FxHashMap<Determinant, f64> {
    let mut acc = FxHashMap::default();
    for (d, &c) in dets.iter().zip(coeffs) {
        let w = c.abs();
        if w == 0.0 {
            continue;
        }
        for_each_connection(d, ints, epsilon2 / w, |a, h| {
            if !members.contains(&a) && (h * c).abs() > epsilon2 {
                *acc.entry(a).or_insert(0.0) += h * c;
            }
        });
    }
    acc
}

/// `E_per = sum_a (sum_j H_aj c_j)^2 / (E_var - H_aa)` over determinants `a`
/// outside the state, each `H_aj c_j` entering when `|H_aj c_j| > epsilon2`.
pub fn pt2_correction(state: &WavefunctionState, ints: &IntegralTable, epsilon2: f64) -> Result<Pt2Result> {
    if state.dets.len() != state.coeffs.len() {
        return Err(Error::Dimension(format!(
            "{} determinants but {} coefficients",
            state.dets.len(),
            state.coeffs.len()
        )));
    }
    if epsilon2.is_nan() || epsilon2 < 0.0 {
        return Err(Error::Config(format!("epsilon2 {epsilon2} must be non-negative")));
    }
    let members: FxHashSet<Determinant> = state.dets.iter().copied().collect();
    let mut total: FxHashMap<Determinant, f64> = FxHashMap::default();
    if epsilon2 < f64::INFINITY {
        let shard_len = PARENT_CHUNK * SHARDS_PER_BATCH;
        for (dets, coeffs) in state.dets.chunks(shard_len).zip(state.coeffs.chunks(shard_len)) {
            let shards: Vec<FxHashMap<Determinant, f64>> = dets
                .par_chunks(PARENT_CHUNK)
                .zip(coeffs.par_chunks(PARENT_CHUNK))
                .map(|(d, c)| accumulate(d, c, &members, ints, epsilon2))
                .collect();
            for shard in shards {
                for (a, v) in shard {
                    *total.entry(a).or_insert(0.0) += v;
                }
            }
        }
    }

    let mut external: Vec<(Determinant, f64)> = total.into_iter().collect();
    external.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let e_var = state.energy;
    let terms: Vec<Result<(f64, bool)>> = external
        .par_iter()
        .map(|&(a, v)| {
            let denominator = e_var - diagonal_element(&a, ints);
            if denominator.abs() < DEGENERACY_TOLERANCE {
                return Err(Error::NearDegenerate { det: a, denominator });
            }
            Ok((v * v / denominator, denominator > 0.0))
        })
        .collect();
    let mut e_per = 0.0;
    let mut n_positive_terms = 0;
    for t in terms {
        let (term, positive) = t?;
        e_per += term;
        n_positive_terms += usize::from(positive);
    }
    if n_positive_terms > 0 {
        log::warn!("{n_positive_terms} external determinants lie below the variational energy");
    }
    Ok(Pt2Result {
        e_var,
        e_per,
        epsilon2,
        n_external: external.len(),
        n_positive_terms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationResult {
    /// `(-e_per, e_var + e_per)` per input point.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    /// Fitted total energy at `-e_per = 0`.
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(-e_per, e_var + e_per)` for `(e_var, e_per)`
/// inputs.
pub fn extrapolate(points: &[(f64, f64)]) -> Result<ExtrapolationResult> {
    extrapolate_weighted(points, &vec![1.0; points.len()])
}

/// Weighted least squares variant of [`extrapolate`].
pub fn extrapolate_weighted(points: &[(f64, f64)], weights: &[f64]) -> Result<ExtrapolationResult> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 points, got {}", points.len())));
    }
    if weights.len() != points.len() || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
        return Err(Error::DegenerateFit("weights must be positive, one per point".into()));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(v, p)| (-p, v + p)).collect();
    let (slope, intercept, r_squared) = weighted_line(&xy, weights)?;
    Ok(ExtrapolationResult {
        points: xy,
        slope,
        intercept,
        r_squared,
    })
}

/// Weighted least-squares `(slope, intercept, r^2)`.
pub(crate) fn weighted_line(xy: &[(f64, f64)], w: &[f64]) -> Result<(f64, f64, f64)> {
    let sw: f64 = w.iter().sum();
    let mx = xy.iter().zip(w).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let my = xy.iter().zip(w).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = xy.iter().zip(w).map(|(p, w)| w * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().zip(w).map(|(p, w)| w * (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = xy.iter().zip(w).map(|(p, w)| w * (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xy
        .iter()
        .zip(w)
        .map(|(p, w)| w * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok((slope, intercept, r_squared))
}
