use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{IntegralBuilder, IntegralTable};
use crate::determinants::MAX_ORBITALS;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

/// Single-particle basis of a lattice Hamiltonian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrbitalBasis {
    /// One orbital per site; site `(x, y)` is orbital `y * lx + x`.
    #[default]
    Site,
    /// Real standing waves diagonalizing the hopping term: cosine/sine
    /// Fourier modes per periodic direction, sine modes per open direction.
    /// Orbitals are ordered by single-particle energy, ties by mode index.
    Momentum,
}

/// Rectangular Hubbard lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HubbardSpec {
    pub lx: usize,
    pub ly: usize,
    pub t: f64,
    pub u: f64,
    pub boundary: Boundary,
    pub n_up: usize,
    pub n_down: usize,
    #[serde(default)]
    pub basis: OrbitalBasis,
}

impl HubbardSpec {
    pub fn new(lx: usize, ly: usize, t: f64, u: f64, boundary: Boundary, n_up: usize, n_down: usize) -> Self {
        HubbardSpec {
            lx,
            ly,
            t,
            u,
            boundary,
            n_up,
            n_down,
            basis: OrbitalBasis::Site,
        }
    }

    pub fn with_basis(self, basis: OrbitalBasis) -> Self {
        HubbardSpec { basis, ..self }
    }

    /// Half filling: one electron per site, `N_up = N_down = sites / 2`.
    pub fn half_filled(lx: usize, ly: usize, t: f64, u: f64, boundary: Boundary) -> Self {
        let half = lx * ly / 2;
        HubbardSpec::new(lx, ly, t, u, boundary, half, half)
    }

    pub fn sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn validate(&self) -> Result<()> {
        if self.lx == 0 || self.ly == 0 {
            return Err(Error::Config(format!(
                "lattice {}x{} has no sites",
                self.lx, self.ly
            )));
        }
        if self.sites() > MAX_ORBITALS {
            return Err(Error::Config(format!(
                "{} sites exceed the {MAX_ORBITALS}-orbital bitmask capacity",
                self.sites()
            )));
        }
        if self.n_up > self.sites() || self.n_down > self.sites() {
            return Err(Error::Config(format!(
                "filling {}/{} does not fit {} sites",
                self.n_up,
                self.n_down,
                self.sites()
            )));
        }
        if !self.t.is_finite() || !self.u.is_finite() {
            return Err(Error::Config("t and U must be finite".into()));
        }
        Ok(())
    }

    /// Distinct nearest-neighbor pairs `(a, b)` with `a < b`.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let periodic = self.boundary == Boundary::Periodic;
        let site = |x: usize, y: usize| y * self.lx + x;
        let mut set = BTreeSet::new();
        for y in 0..self.ly {
            for x in 0..self.lx {
                let here = site(x, y);
                let right = if x + 1 < self.lx {
                    Some(site(x + 1, y))
                } else if periodic {
                    Some(site(0, y))
                } else {
                    None
                };
                let up = if y + 1 < self.ly {
                    Some(site(x, y + 1))
                } else if periodic {
                    Some(site(x, 0))
                } else {
                    None
                };
                for other in [right, up].into_iter().flatten() {
                    if other != here {
                        set.insert((here.min(other), here.max(other)));
                    }
                }
            }
        }
        set.into_iter().collect()
    }
}

/// Orthonormal real modes of a chain of `len` sites, as `modes[n][x]`.
fn chain_modes(len: usize, boundary: Boundary) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    let l = len as f64;
    match boundary {
        Boundary::Open => (1..=len)
            .map(|n| {
                (0..len)
                    .map(|x| (2.0 / (l + 1.0)).sqrt() * (PI * n as f64 * (x + 1) as f64 / (l + 1.0)).sin())
                    .collect()
            })
            .collect(),
        Boundary::Periodic => {
            let mut modes = vec![vec![1.0 / l.sqrt(); len]];
            for n in 1..len.div_ceil(2) {
                let k = 2.0 * PI * n as f64 / l;
                modes.push((0..len).map(|x| (2.0 / l).sqrt() * (k * x as f64).cos()).collect());
                modes.push((0..len).map(|x| (2.0 / l).sqrt() * (k * x as f64).sin()).collect());
            }
            if len % 2 == 0 && len > 1 {
                modes.push((0..len).map(|x| if x % 2 == 0 { 1.0 } else { -1.0 } / l.sqrt()).collect());
            }
            modes
        }
    }
}

/// Orbital coefficients `phi[i][site]` of the requested basis.
fn orbitals(spec: &HubbardSpec) -> Vec<Vec<f64>> {
    let m = spec.sites();
    match spec.basis {
        OrbitalBasis::Site => (0..m).map(|i| (0..m).map(|s| f64::from(u8::from(i == s))).collect()).collect(),
        OrbitalBasis::Momentum => {
            let xs = chain_modes(spec.lx, spec.boundary);
            let ys = chain_modes(spec.ly, spec.boundary);
            let mut phi = Vec::with_capacity(m);
            for (b, fy) in ys.iter().enumerate() {
                for (a, fx) in xs.iter().enumerate() {
                    let v: Vec<f64> = (0..m).map(|s| fx[s % spec.lx] * fy[s / spec.lx]).collect();
                    phi.push((a, b, v));
                }
            }
            let bonds = spec.bonds();
            let energy = |v: &[f64]| bonds.iter().map(|&(p, q)| -2.0 * spec.t * v[p] * v[q]).sum::<f64>();
            // energies agreeing to 1e-9 count as degenerate so ties sort by mode index
            let mut keyed: Vec<(i64, usize, usize, Vec<f64>)> = phi
                .into_iter()
                .map(|(a, b, v)| ((energy(&v) * 1e9).round() as i64, b, a, v))
                .collect();
            keyed.sort_by(|x, y| (x.0, x.1, x.2).cmp(&(y.0, y.1, y.2)));
            keyed.into_iter().map(|e| e.3).collect()
        }
    }
}

/// Lattice integrals in the basis selected by `spec.basis`. In the site
/// basis `t_pq = -t` on bonds and `(pp|pp) = U`; other bases are exact
/// orthogonal transforms of these, with rounding residue below
/// `1e-12 * max(|t|, |U|)` set to zero.
pub fn hubbard_integrals(spec: &HubbardSpec) -> Result<IntegralTable> {
    spec.validate()?;
    let m = spec.sites();
    let n = spec.n_up + spec.n_down;
    let ms2 = spec.n_up as i32 - spec.n_down as i32;
    let mut b = IntegralBuilder::new(m, n, ms2)?;
    if spec.basis == OrbitalBasis::Site {
        for (p, q) in spec.bonds() {
            b.set_one_body(p, q, -spec.t)?;
        }
        for p in 0..m {
            b.set_two_body(p, p, p, p, spec.u)?;
        }
        return Ok(b.finish());
    }

    let phi = orbitals(spec);
    let cutoff = 1e-12 * spec.t.abs().max(spec.u.abs());
    let bonds = spec.bonds();
    for i in 0..m {
        for j in 0..=i {
            let h: f64 = bonds
                .iter()
                .map(|&(p, q)| -spec.t * (phi[i][p] * phi[j][q] + phi[i][q] * phi[j][p]))
                .sum();
            if h.abs() > cutoff {
                b.set_one_body(i, j, h)?;
            }
        }
    }
    let pair: Vec<Vec<Vec<f64>>> = (0..m)
        .map(|i| (0..=i).map(|j| (0..m).map(|s| phi[i][s] * phi[j][s]).collect()).collect())
        .collect();
    for i in 0..m {
        for j in 0..=i {
            for k in 0..=i {
                let lmax = if k == i { j } else { k };
                for l in 0..=lmax {
                    let v: f64 = pair[i][j].iter().zip(&pair[k][l]).map(|(x, y)| x * y).sum::<f64>() * spec.u;
                    if v.abs() > cutoff {
                        b.set_two_body(i, j, k, l, v)?;
                    }
                }
            }
        }
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_open() {
        let t = hubbard_integrals(&HubbardSpec::new(2, 1, 1.0, 4.0, Boundary::Open, 1, 1)).unwrap();
        assert_eq!(t.one_body(0, 1), -1.0);
        assert_eq!(t.eri(0, 0, 0, 0), 4.0);
        assert_eq!(t.eri(1, 1, 1, 1), 4.0);
        assert_eq!(t.eri(0, 0, 1, 1), 0.0);
    }

    #[test]
    fn torus_has_four_neighbors_per_site() {
        let spec = HubbardSpec::half_filled(4, 4, 1.0, 2.0, Boundary::Periodic);
        let bonds = spec.bonds();
        assert_eq!(bonds.len(), 32);
        for s in 0..16 {
            assert_eq!(bonds.iter().filter(|(a, b)| *a == s || *b == s).count(), 4);
        }
    }

    #[test]
    fn width_two_periodic_is_not_double_counted() {
        let spec = HubbardSpec::half_filled(2, 2, 1.0, 2.0, Boundary::Periodic);
        assert_eq!(spec.bonds().len(), 4);
        let t = hubbard_integrals(&spec).unwrap();
        assert_eq!(t.one_body(0, 1), -1.0);
        assert_eq!(t.one_body(0, 3), 0.0);
    }

    #[test]
    fn single_site() {
        let spec = HubbardSpec::new(1, 1, 1.0, 3.0, Boundary::Periodic, 1, 1);
        assert!(spec.bonds().is_empty());
        let t = hubbard_integrals(&spec).unwrap();
        assert_eq!(t.eri(0, 0, 0, 0), 3.0);
    }

    #[test]
    fn momentum_modes_are_orthonormal_and_diagonalize_hopping() {
        for (lx, ly, bc) in [(4, 4, Boundary::Periodic), (3, 2, Boundary::Open), (2, 2, Boundary::Periodic), (5, 1, Boundary::Periodic)] {
            let spec = HubbardSpec::half_filled(lx, ly, 1.0, 3.0, bc).with_basis(OrbitalBasis::Momentum);
            let phi = orbitals(&spec);
            for i in 0..phi.len() {
                for j in 0..phi.len() {
                    let d: f64 = phi[i].iter().zip(&phi[j]).map(|(a, b)| a * b).sum();
                    assert!((d - f64::from(u8::from(i == j))).abs() < 1e-12);
                }
            }
            let t = hubbard_integrals(&spec).unwrap();
            for i in 0..phi.len() {
                for j in 0..i {
                    assert_eq!(t.one_body(i, j), 0.0);
                }
                if i > 0 {
                    assert!(t.one_body(i, i) >= t.one_body(i - 1, i - 1) - 1e-9);
                }
            }
            // sum of orbital energies equals the trace of the site hopping matrix
            let trace: f64 = (0..phi.len()).map(|i| t.one_body(i, i)).sum();
            assert!(trace.abs() < 1e-12);
        }
    }

    #[test]
    fn momentum_basis_4x4_levels() {
        let spec = HubbardSpec::half_filled(4, 4, 1.0, 2.0, Boundary::Periodic).with_basis(OrbitalBasis::Momentum);
        let t = hubbard_integrals(&spec).unwrap();
        let levels: Vec<f64> = (0..16).map(|i| t.one_body(i, i)).collect();
        let expect = [-4.0, -2.0, -2.0, -2.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 2.0, 2.0, 2.0, 4.0];
        for (a, b) in levels.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{levels:?}");
        }
        // (00|00) of the uniform mode is U / N
        assert!((t.eri(0, 0, 0, 0) - 2.0 / 16.0).abs() < 1e-14);
    }

    #[test]
    fn invalid_specs() {
        assert!(hubbard_integrals(&HubbardSpec::new(0, 3, 1.0, 1.0, Boundary::Open, 0, 0)).is_err());
        assert!(hubbard_integrals(&HubbardSpec::new(12, 12, 1.0, 1.0, Boundary::Open, 1, 1)).is_err());
    }
}
