//! One- and two-electron integrals with 8-fold permutational symmetry.
//!
//! Two-body integrals use chemist notation `(pq|rs)` over real spatial
//! orbitals. Every stored value is keyed by the canonical representative of
//! its symmetry class: `(ij|kl)` with `i >= j`, `k >= l` and `(i,j) >= (k,l)`.

mod fcidump;
mod heat_bath;
mod hubbard;

use rustc_hash::FxHashMap;

use crate::determinants::MAX_ORBITALS;
use crate::error::{Error, Result};

pub use fcidump::{parse_fcidump, read_fcidump, write_fcidump, write_fcidump_file};
pub use heat_bath::{DoubleCandidate, HeatBathIndex, SingleCandidate};
pub use hubbard::{hubbard_integrals, Boundary, HubbardSpec, OrbitalBasis};

/// Dense two-body storage is used up to this many orbitals.
pub const DENSE_ERI_MAX_ORBITALS: usize = 40;

/// Canonical 4-index key of a symmetry class.
pub type EriKey = [u8; 4];

pub fn canonical_key(p: usize, q: usize, r: usize, s: usize) -> EriKey {
    let (i, j) = if p >= q { (p, q) } else { (q, p) };
    let (k, l) = if r >= s { (r, s) } else { (s, r) };
    if (i, j) >= (k, l) {
        [i as u8, j as u8, k as u8, l as u8]
    } else {
        [k as u8, l as u8, i as u8, j as u8]
    }
}

/// The distinct index permutations sharing the value of `(pq|rs)`.
pub fn symmetry_images(key: EriKey) -> Vec<[usize; 4]> {
    let [p, q, r, s] = key.map(usize::from);
    let mut out = vec![
        [p, q, r, s],
        [q, p, r, s],
        [p, q, s, r],
        [q, p, s, r],
        [r, s, p, q],
        [s, r, p, q],
        [r, s, q, p],
        [s, r, q, p],
    ];
    out.sort_unstable();
    out.dedup();
    out
}

/// Accumulates integrals before the lookup caches are built.
#[derive(Clone, Debug)]
pub struct IntegralBuilder {
    norb: usize,
    n_electrons: usize,
    ms2: i32,
    core_energy: f64,
    one_body: Vec<f64>,
    two_body: FxHashMap<EriKey, f64>,
    duplicates: usize,
    one_body_seen: Vec<bool>,
}

impl IntegralBuilder {
    pub fn new(norb: usize, n_electrons: usize, ms2: i32) -> Result<Self> {
        if norb == 0 || norb > MAX_ORBITALS {
            return Err(Error::Config(format!(
                "orbital count {norb} outside 1..={MAX_ORBITALS}"
            )));
        }
        let spin = ms2.unsigned_abs() as usize;
        if spin > n_electrons || (n_electrons - spin) % 2 != 0 {
            return Err(Error::Config(format!(
                "NELEC={n_electrons} and MS2={ms2} are inconsistent"
            )));
        }
        let (up, down) = split_electrons(n_electrons, ms2);
        if up > norb || down > norb {
            return Err(Error::Config(format!(
                "{up} alpha / {down} beta electrons do not fit in {norb} orbitals"
            )));
        }
        Ok(IntegralBuilder {
            norb,
            n_electrons,
            ms2,
            core_energy: 0.0,
            one_body: vec![0.0; norb * norb],
            two_body: FxHashMap::default(),
            duplicates: 0,
            one_body_seen: vec![false; norb * norb],
        })
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    fn check(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&p| p >= self.norb) {
            Some(p) => Err(Error::IntegralIndex(format!(
                "orbital {p} with only {} orbitals",
                self.norb
            ))),
            None => Ok(()),
        }
    }

    pub fn set_core_energy(&mut self, value: f64) {
        self.core_energy = value;
    }

    /// Sets `t_pq` and `t_qp`. Returns true when an earlier value was replaced.
    pub fn set_one_body(&mut self, p: usize, q: usize, value: f64) -> Result<bool> {
        self.check(&[p, q])?;
        let (i, j) = if p >= q { (p, q) } else { (q, p) };
        let seen = std::mem::replace(&mut self.one_body_seen[i * self.norb + j], true);
        if seen {
            self.duplicates += 1;
        }
        self.one_body[p * self.norb + q] = value;
        self.one_body[q * self.norb + p] = value;
        Ok(seen)
    }

    /// Sets `(pq|rs)` and its symmetry images. Returns true on overwrite.
    pub fn set_two_body(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) -> Result<bool> {
        self.check(&[p, q, r, s])?;
        let key = canonical_key(p, q, r, s);
        let replaced = if value == 0.0 {
            self.two_body.remove(&key).is_some()
        } else {
            self.two_body.insert(key, value).is_some()
        };
        if replaced {
            self.duplicates += 1;
        }
        Ok(replaced)
    }

    pub fn finish(self) -> IntegralTable {
        IntegralTable::assemble(self)
    }
}

fn split_electrons(n_electrons: usize, ms2: i32) -> (usize, usize) {
    let n = n_electrons as i64;
    let up = (n + i64::from(ms2)) / 2;
    let down = (n - i64::from(ms2)) / 2;
    (up as usize, down as usize)
}

/// Immutable integral table with lookup caches and heat-bath lists.
#[derive(Clone, Debug)]
pub struct IntegralTable {
    norb: usize,
    n_electrons: usize,
    ms2: i32,
    core_energy: f64,
    one_body: Vec<f64>,
    two_body: FxHashMap<EriKey, f64>,
    dense: Option<Vec<f64>>,
    coulomb: Vec<f64>,
    exchange: Vec<f64>,
    duplicates: usize,
    heat_bath: HeatBathIndex,
}

impl PartialEq for IntegralTable {
    fn eq(&self, other: &Self) -> bool {
        self.norb == other.norb
            && self.n_electrons == other.n_electrons
            && self.ms2 == other.ms2
            && self.core_energy.to_bits() == other.core_energy.to_bits()
            && self.one_body == other.one_body
            && self.two_body == other.two_body
    }
}

impl IntegralTable {
    fn assemble(b: IntegralBuilder) -> Self {
        let m = b.norb;
        let dense = (m <= DENSE_ERI_MAX_ORBITALS).then(|| {
            let mut d = vec![0.0; m * m * m * m];
            for (&key, &v) in &b.two_body {
                for [p, q, r, s] in symmetry_images(key) {
                    d[((p * m + q) * m + r) * m + s] = v;
                }
            }
            d
        });
        let mut table = IntegralTable {
            norb: m,
            n_electrons: b.n_electrons,
            ms2: b.ms2,
            core_energy: b.core_energy,
            one_body: b.one_body,
            two_body: b.two_body,
            dense,
            coulomb: vec![0.0; m * m],
            exchange: vec![0.0; m * m],
            duplicates: b.duplicates,
            heat_bath: HeatBathIndex::default(),
        };
        for p in 0..m {
            for q in 0..m {
                table.coulomb[p * m + q] = table.eri(p, p, q, q);
                table.exchange[p * m + q] = table.eri(p, q, q, p);
            }
        }
        table.heat_bath = HeatBathIndex::build(&table);
        table
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn ms2(&self) -> i32 {
        self.ms2
    }

    pub fn n_alpha(&self) -> usize {
        split_electrons(self.n_electrons, self.ms2).0
    }

    pub fn n_beta(&self) -> usize {
        split_electrons(self.n_electrons, self.ms2).1
    }

    pub fn core_energy(&self) -> f64 {
        self.core_energy
    }

    /// Count of symmetry-equivalent entries overwritten while loading.
    pub fn duplicate_entries(&self) -> usize {
        self.duplicates
    }

    #[inline]
    pub fn one_body(&self, p: usize, q: usize) -> f64 {
        self.one_body[p * self.norb + q]
    }

    /// Two-body integral `(pq|rs)`.
    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let m = self.norb;
        match &self.dense {
            Some(d) => d[((p * m + q) * m + r) * m + s],
            None => self
                .two_body
                .get(&canonical_key(p, q, r, s))
                .copied()
                .unwrap_or(0.0),
        }
    }

    /// Checked variant of [`IntegralTable::eri`].
    pub fn try_eri(&self, p: usize, q: usize, r: usize, s: usize) -> Result<f64> {
        if [p, q, r, s].iter().any(|&i| i >= self.norb) {
            return Err(Error::IntegralIndex(format!(
                "({p}{q}|{r}{s}) with only {} orbitals",
                self.norb
            )));
        }
        Ok(self.eri(p, q, r, s))
    }

    /// `(pp|qq)`
    #[inline]
    pub fn coulomb(&self, p: usize, q: usize) -> f64 {
        self.coulomb[p * self.norb + q]
    }

    /// `(pq|qp)`
    #[inline]
    pub fn exchange(&self, p: usize, q: usize) -> f64 {
        self.exchange[p * self.norb + q]
    }

    /// Canonical two-body entries in ascending key order.
    pub fn two_body_entries(&self) -> Vec<(EriKey, f64)> {
        let mut v: Vec<_> = self.two_body.iter().map(|(k, v)| (*k, *v)).collect();
        v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        v
    }

    pub fn two_body_len(&self) -> usize {
        self.two_body.len()
    }

    pub fn heat_bath(&self) -> &HeatBathIndex {
        &self.heat_bath
    }

    /// Converts back into a builder, e.g. to edit and rebuild caches.
    pub fn to_builder(&self) -> IntegralBuilder {
        let m = self.norb;
        let mut seen = vec![false; m * m];
        for i in 0..m {
            for j in 0..=i {
                seen[i * m + j] = self.one_body[i * m + j] != 0.0;
            }
        }
        IntegralBuilder {
            norb: m,
            n_electrons: self.n_electrons,
            ms2: self.ms2,
            core_energy: self.core_energy,
            one_body: self.one_body.clone(),
            two_body: self.two_body.clone(),
            duplicates: 0,
            one_body_seen: seen,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_key_is_shared_by_all_images() {
        let key = canonical_key(0, 1, 2, 3);
        for [p, q, r, s] in symmetry_images(key) {
            assert_eq!(canonical_key(p, q, r, s), key);
        }
        assert_eq!(symmetry_images(key).len(), 8);
        assert_eq!(symmetry_images(canonical_key(1, 1, 1, 1)).len(), 1);
    }

    #[test]
    fn eight_fold_query() {
        for norb in [4, 41] {
            let mut b = IntegralBuilder::new(norb, 2, 0).unwrap();
            b.set_two_body(0, 1, 2, 3, 0.5).unwrap();
            let t = b.finish();
            assert_eq!(t.eri(1, 0, 3, 2), 0.5);
            assert_eq!(t.eri(3, 2, 0, 1), 0.5);
            assert_eq!(t.eri(0, 2, 1, 3), 0.0);
        }
    }

    #[test]
    fn overwrite_is_counted() {
        let mut b = IntegralBuilder::new(3, 2, 0).unwrap();
        assert!(!b.set_two_body(0, 1, 2, 2, 1.0).unwrap());
        assert!(b.set_two_body(1, 0, 2, 2, 2.0).unwrap());
        assert!(!b.set_one_body(0, 1, -1.0).unwrap());
        assert!(b.set_one_body(1, 0, -2.0).unwrap());
        let t = b.finish();
        assert_eq!(t.duplicate_entries(), 2);
        assert_eq!(t.eri(2, 2, 0, 1), 2.0);
        assert_eq!(t.one_body(0, 1), -2.0);
    }

    #[test]
    fn index_out_of_range() {
        let mut b = IntegralBuilder::new(2, 2, 0).unwrap();
        assert!(matches!(b.set_two_body(0, 0, 0, 2, 1.0), Err(Error::IntegralIndex(_))));
        let t = b.finish();
        assert!(t.try_eri(0, 0, 0, 5).is_err());
    }

    #[test]
    fn inconsistent_header_is_rejected() {
        assert!(IntegralBuilder::new(2, 3, 0).is_err());
        assert!(IntegralBuilder::new(2, 6, 0).is_err());
        assert!(IntegralBuilder::new(0, 0, 0).is_err());
        assert!(IntegralBuilder::new(129, 2, 0).is_err());
    }
}
