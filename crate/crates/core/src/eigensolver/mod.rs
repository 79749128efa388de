//! Lowest eigenpair of the Hamiltonian projected onto a determinant set.

mod davidson;
mod projected;

use serde::{Deserialize, Serialize};

pub use davidson::{davidson_lowest, dense_lowest, DavidsonOptions};
pub use projected::{build_projected, BuildOptions, ProjectedHamiltonian, StorageKind};

use crate::determinants::Determinant;
use crate::error::{Error, Result};
use crate::integrals::IntegralTable;

/// Real symmetric operator with an accessible diagonal.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    fn diagonal(&self) -> &[f64];

    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    pub energy: f64,
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

/// Fixed-order sum of products.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Rayleigh quotient `c^T H c` for a unit-norm `coeffs` over `dets`.
pub fn variational_energy(dets: &[Determinant], coeffs: &[f64], ints: &IntegralTable) -> Result<f64> {
    if dets.len() != coeffs.len() {
        return Err(Error::Dimension(format!(
            "{} determinants but {} coefficients",
            dets.len(),
            coeffs.len()
        )));
    }
    let n = norm(coeffs);
    if (n - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized(n));
    }
    let h = build_projected(dets, ints)?;
    Ok(h.expectation(coeffs))
}

/// Lowest eigenpair of `H` projected onto `dets`.
pub fn lowest_eigenpair(
    dets: &[Determinant],
    ints: &IntegralTable,
    guess: Option<&[f64]>,
    options: &DavidsonOptions,
) -> Result<EigenResult> {
    let h = build_projected(dets, ints)?;
    davidson_lowest(&h, guess, options)
}
