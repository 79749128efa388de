//! Amplitude statistics of explicit wavefunctions: Hamming-shell weights, the
//! cumulative weight law and its power-law fit, complexity indices, and a
//! two-dimensional classical MDS embedding.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::determinants::{hamming_distance, Determinant};
use crate::engine::WavefunctionState;
use crate::error::{Error, Result};
use crate::pt2::weighted_line;

/// Default rank window of the power-law fit, as fractions of the det count.
///
/// A truncated expansion forces `1 - F` to zero at the last rank, which bends
/// the tail downward well before `R`; the window stays two decades clear of it.
pub const DEFAULT_FIT_RANGE: (f64, f64) = (1e-4, 1e-2);

/// Default number of determinants embedded by [`mds_embedding`].
pub const DEFAULT_MDS_MAX: usize = 2000;

/// Tail weights at or below this are treated as numerically exhausted.
const TAIL_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HammingDistribution {
    pub reference: Determinant,
    /// Distance (spin-orbital XOR popcount) to summed `|c|^2`.
    pub weights: BTreeMap<u32, f64>,
}

impl HammingDistribution {
    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }
}

fn require_nonempty(state: &WavefunctionState) -> Result<()> {
    if state.is_empty() {
        return Err(Error::Dimension("empty wavefunction".into()));
    }
    if state.dets.len() != state.coeffs.len() {
        return Err(Error::Dimension(format!(
            "{} determinants but {} coefficients",
            state.dets.len(),
            state.coeffs.len()
        )));
    }
    Ok(())
}

/// `P(d)`: weight of all determinants at Hamming distance `d` from the
/// largest-amplitude determinant.
pub fn hamming_distribution(state: &WavefunctionState) -> Result<HammingDistribution> {
    require_nonempty(state)?;
    let reference = state.dets[state.dominant().expect("nonempty")];
    let mut weights = BTreeMap::new();
    for (d, c) in state.dets.iter().zip(&state.coeffs) {
        *weights.entry(hamming_distance(d, &reference)).or_insert(0.0) += c * c;
    }
    Ok(HammingDistribution { reference, weights })
}

/// `1 - F(r)` for ranks `r = 1..=R` of the weights sorted descending.
///
/// Computed as suffix sums relative to the total weight, so the tail stays
/// accurate far below machine epsilon relative to 1.
pub fn cumulative_tail(coeffs: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = coeffs.iter().map(|c| c * c).collect();
    w.sort_unstable_by(|a, b| b.total_cmp(a));
    let total: f64 = w.iter().sum();
    let mut tail = vec![0.0; w.len()];
    let mut acc = 0.0;
    for r in (0..w.len()).rev() {
        tail[r] = acc / total;
        acc += w[r];
    }
    tail
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub r_squared: f64,
    /// Inclusive 1-based rank interval.
    pub fit_range: (usize, usize),
    /// Ranks inside `fit_range` that entered the regression.
    pub n_points: usize,
    /// `1 / alpha`
    pub sigma: f64,
}

/// Least-squares fit of `log10(1 - F(r)) = c - alpha log10(r)` over the ranks
/// `[lo_frac R, hi_frac R]`.
pub fn cumulative_and_fit(state: &WavefunctionState, lo_frac: f64, hi_frac: f64) -> Result<PowerLawFit> {
    require_nonempty(state)?;
    if state.len() < 10 {
        return Err(Error::DegenerateFit(format!(
            "power-law fit needs at least 10 determinants, got {}",
            state.len()
        )));
    }
    fit_tail(&cumulative_tail(&state.coeffs), lo_frac, hi_frac)
}

/// Power-law fit of a precomputed `1 - F(r)` sequence.
pub fn fit_tail(tail: &[f64], lo_frac: f64, hi_frac: f64) -> Result<PowerLawFit> {
    if !(0.0 <= lo_frac && lo_frac < hi_frac && hi_frac <= 1.0) {
        return Err(Error::Config(format!("fit range [{lo_frac}, {hi_frac}] must satisfy 0 <= lo < hi <= 1")));
    }
    let n = tail.len();
    let lo = ((lo_frac * n as f64).ceil() as usize).max(1);
    let hi = ((hi_frac * n as f64).floor() as usize).min(n);
    let xy: Vec<(f64, f64)> = (lo..=hi)
        .filter(|&r| tail[r - 1] > TAIL_FLOOR)
        .map(|r| ((r as f64).log10(), tail[r - 1].log10()))
        .collect();
    if xy.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} usable ranks in [{lo}, {hi}], need at least 3",
            xy.len()
        )));
    }
    let (slope, _, r_squared) = weighted_line(&xy, &vec![1.0; xy.len()])?;
    let alpha = -slope;
    Ok(PowerLawFit {
        alpha,
        r_squared,
        fit_range: (lo, hi),
        n_points: xy.len(),
        sigma: 1.0 / alpha,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub epsilon: f64,
    pub r_alg: f64,
    /// `log10(r_alg) / log10(1 / epsilon)`
    pub sigma_a: f64,
    pub log10_r: f64,
}

impl ComplexityReport {
    /// `log10(1 / epsilon)`
    pub fn k(&self) -> f64 {
        (1.0 / self.epsilon).log10()
    }

    /// Algorithmic entropy `k (sigma_a - sigma_0)`.
    pub fn s_a_vs(&self, sigma_0: f64) -> f64 {
        self.k() * (self.sigma_a - sigma_0)
    }
}

pub fn complexity_report(epsilon: f64, r_alg: f64) -> Result<ComplexityReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("epsilon {epsilon} must lie in (0, 1)")));
    }
    if !(r_alg >= 1.0) || !r_alg.is_finite() {
        return Err(Error::Config(format!("r_alg {r_alg} must be at least 1")));
    }
    let log10_r = r_alg.log10();
    Ok(ComplexityReport {
        epsilon,
        r_alg,
        sigma_a: log10_r / (1.0 / epsilon).log10(),
        log10_r,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `log10 r` against the site count.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!("need at least 2 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.1 > 0.0 && p.1 <= 1.0) || !p.0.is_finite()) {
        return Err(Error::Config(format!("fraction {} at N = {} must lie in (0, 1]", p.1, p.0)));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(n, r)| (n, r.log10())).collect();
    let (slope, intercept, r_squared) = weighted_line(&xy, &vec![1.0; xy.len()])?;
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdsEmbedding {
    /// State indices of the embedded determinants, largest `|c|` first.
    pub selected: Vec<usize>,
    pub points: Vec<(f64, f64)>,
    /// `||D - D_hat||_F / ||D||_F` over Hamming distances.
    pub stress: f64,
    /// The two leading eigenvalues of the centered Gram matrix.
    pub eigenvalues: (f64, f64),
}

/// Double-centered Gram matrix `-J D^2 J / 2` of squared Hamming distances.
pub fn centered_gram(dets: &[Determinant]) -> DMatrix<f64> {
    let k = dets.len();
    let rows: Vec<Vec<f64>> = dets
        .par_iter()
        .map(|a| dets.iter().map(|b| f64::from(hamming_distance(a, b)).powi(2)).collect())
        .collect();
    let row_mean: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / k as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / k as f64;
    DMatrix::from_fn(k, k, |i, j| -0.5 * (rows[i][j] - row_mean[i] - row_mean[j] + grand))
}

/// Classical (Torgerson) MDS of the top `k_max` determinants by `|c|`.
pub fn mds_embedding(state: &WavefunctionState, k_max: usize) -> Result<MdsEmbedding> {
    require_nonempty(state)?;
    let selected = state.top(k_max);
    if selected.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "MDS needs at least 3 determinants, got {}",
            selected.len()
        )));
    }
    let dets: Vec<Determinant> = selected.iter().map(|&i| state.dets[i]).collect();
    let k = dets.len();
    let eig = SymmetricEigen::new(centered_gram(&dets));

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let (l1, l2) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(l1 > 1e-12 * scale.max(1.0)) {
        return Err(Error::DegenerateFit("distance matrix has no positive spread".into()));
    }
    let axis = |which: usize, lambda: f64| -> Vec<f64> {
        let s = lambda.max(0.0).sqrt();
        let mut v: Vec<f64> = eig.eigenvectors.column(order[which]).iter().map(|x| x * s).collect();
        if v[0] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    let xs = axis(0, l1);
    let ys = axis(1, l2);
    let points: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();

    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..k {
        for j in i + 1..k {
            let d = f64::from(hamming_distance(&dets[i], &dets[j]));
            let e = ((points[i].0 - points[j].0).powi(2) + (points[i].1 - points[j].1).powi(2)).sqrt();
            num += (d - e).powi(2);
            den += d * d;
        }
    }
    Ok(MdsEmbedding {
        selected,
        points,
        stress: (num / den).sqrt(),
        eigenvalues: (l1, l2),
    })
}

pub fn write_hamming_csv<W: Write>(dist: &HammingDistribution, mut out: W) -> Result<()> {
    writeln!(out, "d,weight")?;
    for (d, w) in &dist.weights {
        writeln!(out, "{d},{w:?}")?;
    }
    Ok(())
}

pub fn write_cumulative_csv<W: Write>(tail: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "rank,one_minus_F")?;
    for (r, t) in tail.iter().enumerate() {
        writeln!(out, "{},{t:e}", r + 1)?;
    }
    Ok(())
}

pub fn write_mds_csv<W: Write>(state: &WavefunctionState, mds: &MdsEmbedding, mut out: W) -> Result<()> {
    writeln!(out, "index,alpha_bits_hex,beta_bits_hex,coeff,x,y")?;
    for (&i, (x, y)) in mds.selected.iter().zip(&mds.points) {
        let d = state.dets[i];
        writeln!(out, "{i},{:x},{:x},{:e},{x:e},{y:e}", d.alpha, d.beta, state.coeffs[i])?;
    }
    Ok(())
}
