use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::SymmetricOperator;
use crate::connections::for_each_connection;
use crate::determinants::{diagonal_element, Determinant};
use crate::error::{Error, Result};
use crate::integrals::IntegralTable;

/// Rows processed per parallel task; fixed so results do not depend on the
/// thread count.
const ROW_CHUNK: usize = 256;

/// Rows sampled to estimate the explicit matrix footprint.
const SAMPLE_ROWS: usize = 256;

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    /// Above this estimated size the matrix is applied on the fly.
    pub memory_cap_bytes: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            memory_cap_bytes: 8 << 30,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageKind {
    Explicit,
    MatrixFree,
}

enum Storage {
    /// Off-diagonal couplings, every row stored in full with ascending columns.
    Explicit {
        row_ptr: Vec<usize>,
        cols: Vec<u32>,
        vals: Vec<f64>,
    },
    MatrixFree,
}

/// `H` restricted to an explicit determinant list.
pub struct ProjectedHamiltonian<'a> {
    dets: Vec<Determinant>,
    index: FxHashMap<Determinant, u32>,
    diagonal: Vec<f64>,
    ints: &'a IntegralTable,
    storage: Storage,
}

/// Builds the projected Hamiltonian with default options.
pub fn build_projected<'a>(dets: &[Determinant], ints: &'a IntegralTable) -> Result<ProjectedHamiltonian<'a>> {
    ProjectedHamiltonian::build(dets, ints, BuildOptions::default())
}

fn row_of(
    det: &Determinant,
    ints: &IntegralTable,
    index: &FxHashMap<Determinant, u32>,
) -> Vec<(u32, f64)> {
    let mut row = Vec::new();
    for_each_connection(det, ints, 0.0, |d, h| {
        if let Some(&j) = index.get(&d) {
            row.push((j, h));
        }
    });
    row.sort_unstable_by_key(|e| e.0);
    row
}

impl<'a> ProjectedHamiltonian<'a> {
    pub fn build(dets: &[Determinant], ints: &'a IntegralTable, options: BuildOptions) -> Result<Self> {
        let mut index = FxHashMap::with_capacity_and_hasher(dets.len(), Default::default());
        for (i, d) in dets.iter().enumerate() {
            if index.insert(*d, i as u32).is_some() {
                return Err(Error::DuplicateDeterminant(*d));
            }
        }
        if let Some(bad) = dets.iter().find(|d| !d.fits(ints.norb())) {
            return Err(Error::Dimension(format!(
                "determinant {bad} has orbitals beyond {}",
                ints.norb()
            )));
        }
        let diagonal: Vec<f64> = dets.par_iter().map(|d| diagonal_element(d, ints)).collect();

        let sample = dets.len().min(SAMPLE_ROWS);
        let sampled: usize = dets[..sample].iter().map(|d| row_of(d, ints, &index).len()).sum();
        let per_row = if sample == 0 { 0.0 } else { sampled as f64 / sample as f64 };
        let estimate = dets.len() as f64 * (per_row * 12.0 + 8.0);

        let storage = if estimate > options.memory_cap_bytes as f64 {
            log::info!(
                "projected Hamiltonian over {} determinants estimated at {:.1} GiB; applying matrix-free",
                dets.len(),
                estimate / f64::from(1u32 << 30)
            );
            Storage::MatrixFree
        } else {
            let rows: Vec<Vec<(u32, f64)>> = dets
                .par_chunks(ROW_CHUNK)
                .flat_map_iter(|chunk| chunk.iter().map(|d| row_of(d, ints, &index)).collect::<Vec<_>>())
                .collect();
            let nnz = rows.iter().map(Vec::len).sum();
            let mut row_ptr = Vec::with_capacity(dets.len() + 1);
            let mut cols = Vec::with_capacity(nnz);
            let mut vals = Vec::with_capacity(nnz);
            row_ptr.push(0);
            for row in rows {
                for (j, h) in row {
                    cols.push(j);
                    vals.push(h);
                }
                row_ptr.push(cols.len());
            }
            Storage::Explicit { row_ptr, cols, vals }
        };

        Ok(ProjectedHamiltonian {
            dets: dets.to_vec(),
            index,
            diagonal,
            ints,
            storage,
        })
    }

    pub fn dets(&self) -> &[Determinant] {
        &self.dets
    }

    pub fn len(&self) -> usize {
        self.dets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dets.is_empty()
    }

    pub fn storage_kind(&self) -> StorageKind {
        match self.storage {
            Storage::Explicit { .. } => StorageKind::Explicit,
            Storage::MatrixFree => StorageKind::MatrixFree,
        }
    }

    /// Number of stored off-diagonal couplings (both triangles).
    pub fn off_diagonal_nnz(&self) -> Option<usize> {
        match &self.storage {
            Storage::Explicit { cols, .. } => Some(cols.len()),
            Storage::MatrixFree => None,
        }
    }

    /// Off-diagonal row `i` as `(column, value)` pairs with ascending columns.
    pub fn row(&self, i: usize) -> Vec<(usize, f64)> {
        match &self.storage {
            Storage::Explicit { row_ptr, cols, vals } => (row_ptr[i]..row_ptr[i + 1])
                .map(|k| (cols[k] as usize, vals[k]))
                .collect(),
            Storage::MatrixFree => row_of(&self.dets[i], self.ints, &self.index)
                .into_iter()
                .map(|(j, h)| (j as usize, h))
                .collect(),
        }
    }

    /// Nonzero upper-triangle entries `(i, j, H_ij)` with `i < j`.
    pub fn upper_triangle(&self) -> Vec<(usize, usize, f64)> {
        (0..self.len())
            .flat_map(|i| {
                self.row(i)
                    .into_iter()
                    .filter(move |&(j, _)| j > i)
                    .map(move |(j, h)| (i, j, h))
            })
            .collect()
    }

    pub fn position(&self, det: &Determinant) -> Option<usize> {
        self.index.get(det).map(|&i| i as usize)
    }

    /// `x^T H x`
    pub fn expectation(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        super::dot(x, &y)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.len();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diagonal[i];
            for (j, h) in self.row(i) {
                m[(i, j)] = h;
            }
        }
        m
    }
}

impl SymmetricOperator for ProjectedHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.dets.len()
    }

    fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.storage {
            Storage::Explicit { row_ptr, cols, vals } => {
                y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(c, out)| {
                    let base = c * ROW_CHUNK;
                    for (k, yi) in out.iter_mut().enumerate() {
                        let i = base + k;
                        let mut acc = self.diagonal[i] * x[i];
                        for e in row_ptr[i]..row_ptr[i + 1] {
                            acc += vals[e] * x[cols[e] as usize];
                        }
                        *yi = acc;
                    }
                });
            }
            Storage::MatrixFree => {
                y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(c, out)| {
                    let base = c * ROW_CHUNK;
                    for (k, yi) in out.iter_mut().enumerate() {
                        let i = base + k;
                        let mut acc = self.diagonal[i] * x[i];
                        for (j, h) in row_of(&self.dets[i], self.ints, &self.index) {
                            acc += h * x[j as usize];
                        }
                        *yi = acc;
                    }
                });
            }
        }
    }
}
