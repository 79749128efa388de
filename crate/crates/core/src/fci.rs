//! Exact diagonalization over a whole `(m, N_up, N_down)` sector.

use rustc_hash::FxHashMap;

use crate::determinants::{sector_size, Determinant};
use crate::eigensolver::{davidson_lowest, BuildOptions, DavidsonOptions, EigenResult, ProjectedHamiltonian};
use crate::engine::WavefunctionState;
use crate::error::{Error, Result};
use crate::integrals::IntegralTable;

pub const DEFAULT_SECTOR_CAP: u128 = 2_000_000;

/// Every determinant of a sector, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorEnumeration {
    pub norb: usize,
    pub n_up: usize,
    pub n_down: usize,
    pub dets: Vec<Determinant>,
}

/// All `k`-subsets of `m` orbitals as ascending bitmasks.
pub fn combinations(m: usize, k: usize) -> Vec<u128> {
    if k > m {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let mut x: u128 = if k == 128 { u128::MAX } else { (1u128 << k) - 1 };
    loop {
        out.push(x);
        // next mask with the same popcount (Gosper)
        let c = x & x.wrapping_neg();
        let Some(r) = x.checked_add(c) else { break };
        let next = (((r ^ x) >> 2) / c) | r;
        if m < 128 && next >> m != 0 {
            break;
        }
        x = next;
    }
    out
}

pub fn enumerate_sector(m: usize, n_up: usize, n_down: usize) -> Result<SectorEnumeration> {
    enumerate_sector_capped(m, n_up, n_down, DEFAULT_SECTOR_CAP)
}

pub fn enumerate_sector_capped(m: usize, n_up: usize, n_down: usize, cap: u128) -> Result<SectorEnumeration> {
    if m > crate::determinants::MAX_ORBITALS || n_up > m || n_down > m {
        return Err(Error::Config(format!("no sector with {n_up}/{n_down} electrons in {m} orbitals")));
    }
    let count = sector_size(m, n_up, n_down);
    if count > cap {
        return Err(Error::SectorCap { count, cap });
    }
    let alphas = combinations(m, n_up);
    let betas = combinations(m, n_down);
    let mut dets = Vec::with_capacity(count as usize);
    for &a in &alphas {
        for &b in &betas {
            dets.push(Determinant::new(a, b));
        }
    }
    Ok(SectorEnumeration {
        norb: m,
        n_up,
        n_down,
        dets,
    })
}

impl SectorEnumeration {
    /// The sector of the electron counts stored in `ints`.
    pub fn for_integrals(ints: &IntegralTable, cap: u128) -> Result<Self> {
        enumerate_sector_capped(ints.norb(), ints.n_alpha(), ints.n_beta(), cap)
    }

    pub fn len(&self) -> usize {
        self.dets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dets.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FciOptions {
    pub davidson: DavidsonOptions,
    pub build: BuildOptions,
}

/// Lowest eigenpair over the whole sector.
pub fn fci_ground_state(ints: &IntegralTable, sector: &SectorEnumeration, options: &FciOptions) -> Result<EigenResult> {
    if sector.norb != ints.norb() {
        return Err(Error::Dimension(format!(
            "sector over {} orbitals, integrals over {}",
            sector.norb,
            ints.norb()
        )));
    }
    let h = ProjectedHamiltonian::build(&sector.dets, ints, options.build)?;
    davidson_lowest(&h, None, &options.davidson)
}

/// FCI ground state packaged as a wavefunction.
pub fn fci_state(ints: &IntegralTable, options: &FciOptions, cap: u128) -> Result<WavefunctionState> {
    let sector = SectorEnumeration::for_integrals(ints, cap)?;
    let res = fci_ground_state(ints, &sector, options)?;
    Ok(WavefunctionState {
        dets: sector.dets,
        coeffs: res.coefficients,
        energy: res.energy,
        iteration: 0,
    })
}

/// `<state|reference>` over the union of supports.
pub fn overlap(state: &WavefunctionState, reference: &WavefunctionState) -> f64 {
    let (small, large) = if state.len() <= reference.len() {
        (state, reference)
    } else {
        (reference, state)
    };
    let lookup: FxHashMap<&Determinant, f64> = large.dets.iter().zip(large.coeffs.iter().copied()).collect();
    let mut terms: Vec<(Determinant, f64)> = small
        .dets
        .iter()
        .zip(&small.coeffs)
        .filter_map(|(d, c)| lookup.get(d).map(|r| (*d, c * r)))
        .collect();
    terms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    terms.iter().map(|t| t.1).sum()
}

/// `|<state|reference>|^2`.
pub fn fidelity(state: &WavefunctionState, reference: &WavefunctionState) -> f64 {
    overlap(state, reference).powi(2)
}
