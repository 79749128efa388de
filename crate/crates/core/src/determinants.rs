//! Slater determinants as pairs of occupation bitmasks.
//!
//! Spin-orbitals are ordered with every alpha orbital (ascending) ahead of
//! every beta orbital (ascending). Fermionic signs follow from that ordering:
//! moving an electron from orbital `p` to orbital `r` within one spin channel
//! picks up `(-1)^n`, where `n` counts the occupied orbitals of that channel
//! strictly between `p` and `r`.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrals::IntegralTable;

/// Largest supported number of spatial orbitals per spin channel.
pub const MAX_ORBITALS: usize = 128;

/// A Slater determinant: one occupation bitmask per spin channel.
///
/// The derived ordering is lexicographic on `(alpha, beta)` and serves as the
/// canonical order for sorting and tie-breaking.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Determinant {
    pub alpha: u128,
    pub beta: u128,
}

impl Determinant {
    pub const fn new(alpha: u128, beta: u128) -> Self {
        Determinant { alpha, beta }
    }

    /// Builds a determinant from occupied orbital lists.
    pub fn from_orbitals(alpha: &[usize], beta: &[usize]) -> Self {
        let mask = |orbs: &[usize]| orbs.iter().fold(0u128, |m, &p| m | (1u128 << p));
        Determinant::new(mask(alpha), mask(beta))
    }

    pub fn n_alpha(&self) -> u32 {
        self.alpha.count_ones()
    }

    pub fn n_beta(&self) -> u32 {
        self.beta.count_ones()
    }

    pub fn spin(&self, spin: Spin) -> u128 {
        match spin {
            Spin::Alpha => self.alpha,
            Spin::Beta => self.beta,
        }
    }

    pub fn with_spin(&self, spin: Spin, bits: u128) -> Self {
        match spin {
            Spin::Alpha => Determinant::new(bits, self.beta),
            Spin::Beta => Determinant::new(self.alpha, bits),
        }
    }

    /// Exchanges the alpha and beta occupations.
    pub fn spin_flipped(&self) -> Self {
        Determinant::new(self.beta, self.alpha)
    }

    /// True when no bit at or above `norb` is set.
    pub fn fits(&self, norb: usize) -> bool {
        if norb >= MAX_ORBITALS {
            return true;
        }
        let high = !0u128 << norb;
        self.alpha & high == 0 && self.beta & high == 0
    }
}

impl fmt::Display for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:x},{:x})", self.alpha, self.beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Alpha,
    Beta,
}

impl Spin {
    pub fn other(self) -> Spin {
        match self {
            Spin::Alpha => Spin::Beta,
            Spin::Beta => Spin::Alpha,
        }
    }
}

/// Iterator over the set bit positions of a mask, ascending.
#[derive(Clone, Copy)]
pub struct Bits(u128);

impl Iterator for Bits {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let p = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(p)
    }
}

#[inline]
pub fn bits(mask: u128) -> Bits {
    Bits(mask)
}

/// Mask with every bit above `p` set.
#[inline]
pub(crate) fn above(p: usize) -> u128 {
    if p + 1 >= MAX_ORBITALS {
        0
    } else {
        !0u128 << (p + 1)
    }
}

/// Mask with bits strictly between `a` and `b` set.
#[inline]
fn between_mask(a: usize, b: usize) -> u128 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if hi - lo <= 1 {
        return 0;
    }
    let upto_hi = (1u128 << hi) - 1;
    let upto_lo = (1u128 << (lo + 1)) - 1;
    upto_hi & !upto_lo
}

/// Sign for moving an electron `hole -> particle` within one spin channel.
#[inline]
pub fn single_phase(occ: u128, hole: usize, particle: usize) -> f64 {
    if (occ & between_mask(hole, particle)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Applies `hole -> particle` to `occ`, returning the new mask and the sign.
#[inline]
pub fn apply_single(occ: u128, hole: usize, particle: usize) -> (u128, f64) {
    let phase = single_phase(occ, hole, particle);
    (occ & !(1u128 << hole) | (1u128 << particle), phase)
}

/// Sign of the same-spin double `h1 -> p1, h2 -> p2` applied sequentially.
#[inline]
pub fn double_phase(occ: u128, h1: usize, p1: usize, h2: usize, p2: usize) -> f64 {
    let (mid, s1) = apply_single(occ, h1, p1);
    s1 * single_phase(mid, h2, p2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExcitationKind {
    Diagonal,
    Single,
    Double,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpinChannel {
    AlphaAlpha,
    BetaBeta,
    AlphaBeta,
}

/// Difference between two determinants of the same sector.
///
/// For [`SpinChannel::AlphaBeta`] doubles the first hole and particle are
/// alpha orbitals and the second are beta orbitals. Otherwise holes and
/// particles are ascending and paired by position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Excitation {
    pub kind: ExcitationKind,
    pub channel: Option<SpinChannel>,
    holes: [usize; 2],
    particles: [usize; 2],
    pub phase: i8,
}

impl Excitation {
    fn rank(&self) -> usize {
        match self.kind {
            ExcitationKind::Diagonal => 0,
            ExcitationKind::Single => 1,
            ExcitationKind::Double => 2,
        }
    }

    pub fn holes(&self) -> &[usize] {
        &self.holes[..self.rank()]
    }

    pub fn particles(&self) -> &[usize] {
        &self.particles[..self.rank()]
    }

    pub fn degree(&self) -> usize {
        self.rank()
    }
}

fn diagonal_excitation() -> Excitation {
    Excitation {
        kind: ExcitationKind::Diagonal,
        channel: None,
        holes: [0; 2],
        particles: [0; 2],
        phase: 1,
    }
}

fn as_i8(phase: f64) -> i8 {
    if phase < 0.0 {
        -1
    } else {
        1
    }
}

/// Classifies `d1 -> d2`; `None` when they differ by more than a double.
pub fn excitation_between(d1: &Determinant, d2: &Determinant) -> Option<Excitation> {
    let xa = d1.alpha ^ d2.alpha;
    let xb = d1.beta ^ d2.beta;
    let na = xa.count_ones();
    let nb = xb.count_ones();
    if na + nb > 4 {
        return None;
    }
    match (na, nb) {
        (0, 0) => Some(diagonal_excitation()),
        (2, 0) | (0, 2) => {
            let (spin, x, channel) = if na == 2 {
                (Spin::Alpha, xa, SpinChannel::AlphaAlpha)
            } else {
                (Spin::Beta, xb, SpinChannel::BetaBeta)
            };
            let occ = d1.spin(spin);
            let hole = (x & occ).trailing_zeros() as usize;
            let particle = (x & !occ).trailing_zeros() as usize;
            Some(Excitation {
                kind: ExcitationKind::Single,
                channel: Some(channel),
                holes: [hole, 0],
                particles: [particle, 0],
                phase: as_i8(single_phase(occ, hole, particle)),
            })
        }
        (4, 0) | (0, 4) => {
            let (spin, x, channel) = if na == 4 {
                (Spin::Alpha, xa, SpinChannel::AlphaAlpha)
            } else {
                (Spin::Beta, xb, SpinChannel::BetaBeta)
            };
            let occ = d1.spin(spin);
            let mut h = bits(x & occ);
            let mut p = bits(x & !occ);
            let (h1, h2) = (h.next()?, h.next()?);
            let (p1, p2) = (p.next()?, p.next()?);
            Some(Excitation {
                kind: ExcitationKind::Double,
                channel: Some(channel),
                holes: [h1, h2],
                particles: [p1, p2],
                phase: as_i8(double_phase(occ, h1, p1, h2, p2)),
            })
        }
        (2, 2) => {
            let ha = (xa & d1.alpha).trailing_zeros() as usize;
            let pa = (xa & !d1.alpha).trailing_zeros() as usize;
            let hb = (xb & d1.beta).trailing_zeros() as usize;
            let pb = (xb & !d1.beta).trailing_zeros() as usize;
            let phase = single_phase(d1.alpha, ha, pa) * single_phase(d1.beta, hb, pb);
            Some(Excitation {
                kind: ExcitationKind::Double,
                channel: Some(SpinChannel::AlphaBeta),
                holes: [ha, hb],
                particles: [pa, pb],
                phase: as_i8(phase),
            })
        }
        // Odd counts only arise across different particle-number sectors.
        _ => None,
    }
}

/// Number of spin-orbital occupations that differ (a single excitation is 2).
pub fn hamming_distance(d1: &Determinant, d2: &Determinant) -> u32 {
    (d1.alpha ^ d2.alpha).count_ones() + (d1.beta ^ d2.beta).count_ones()
}

/// Diagonal element `<D|H|D>`, including the core energy.
pub fn diagonal_element(det: &Determinant, ints: &IntegralTable) -> f64 {
    let mut e = ints.core_energy();
    for p in bits(det.alpha) {
        e += ints.one_body(p, p);
        for q in bits(det.alpha & above(p)) {
            e += ints.coulomb(p, q) - ints.exchange(p, q);
        }
        for q in bits(det.beta) {
            e += ints.coulomb(p, q);
        }
    }
    for p in bits(det.beta) {
        e += ints.one_body(p, p);
        for q in bits(det.beta & above(p)) {
            e += ints.coulomb(p, q) - ints.exchange(p, q);
        }
    }
    e
}

/// Unsigned single-excitation element for `hole -> particle` in `spin`.
#[inline]
pub fn single_element_unsigned(
    det: &Determinant,
    spin: Spin,
    hole: usize,
    particle: usize,
    ints: &IntegralTable,
) -> f64 {
    let mut h = ints.one_body(hole, particle);
    for k in bits(det.spin(spin)) {
        h += ints.eri(hole, particle, k, k) - ints.eri(hole, k, k, particle);
    }
    for k in bits(det.spin(spin.other())) {
        h += ints.eri(hole, particle, k, k);
    }
    h
}

/// Slater–Condon matrix element `<d1|H|d2>`.
pub fn matrix_element(d1: &Determinant, d2: &Determinant, ints: &IntegralTable) -> f64 {
    let Some(exc) = excitation_between(d1, d2) else {
        return 0.0;
    };
    let phase = f64::from(exc.phase);
    match (exc.kind, exc.channel) {
        (ExcitationKind::Diagonal, _) => diagonal_element(d1, ints),
        (ExcitationKind::Single, Some(channel)) => {
            let spin = if channel == SpinChannel::AlphaAlpha {
                Spin::Alpha
            } else {
                Spin::Beta
            };
            phase * single_element_unsigned(d1, spin, exc.holes[0], exc.particles[0], ints)
        }
        (ExcitationKind::Double, Some(SpinChannel::AlphaBeta)) => {
            let [p, q] = exc.holes;
            let [r, s] = exc.particles;
            phase * ints.eri(r, p, s, q)
        }
        (ExcitationKind::Double, _) => {
            let [p, q] = exc.holes;
            let [r, s] = exc.particles;
            phase * (ints.eri(r, p, s, q) - ints.eri(r, q, s, p))
        }
        _ => 0.0,
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1); cancel the common factor first.
        let d = i as u128 + 1;
        let g = gcd(acc, d);
        let factor = (n - i) as u128 / (d / g);
        acc = match (acc / g).checked_mul(factor) {
            Some(v) => v,
            None => return u128::MAX,
        };
    }
    acc
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Number of determinants with `n_up` alpha and `n_down` beta electrons.
pub fn sector_size(norb: usize, n_up: usize, n_down: usize) -> u128 {
    binomial(norb, n_up).saturating_mul(binomial(norb, n_down))
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Partial Fisher–Yates draw of `n` distinct orbitals out of `norb`.
fn random_mask<R: Rng>(rng: &mut R, scratch: &mut [usize], n: usize) -> u128 {
    let norb = scratch.len();
    for (i, slot) in scratch.iter_mut().enumerate() {
        *slot = i;
    }
    let mut mask = 0u128;
    for i in 0..n {
        let j = rng.random_range(i..norb);
        scratch.swap(i, j);
        mask |= 1u128 << scratch[i];
    }
    mask
}

/// Draws `count` distinct determinants uniformly from the sector.
pub fn random_determinants(
    norb: usize,
    n_up: usize,
    n_down: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Determinant>> {
    if norb > MAX_ORBITALS {
        return Err(Error::Config(format!(
            "{norb} orbitals exceeds the supported maximum of {MAX_ORBITALS}"
        )));
    }
    if n_up > norb || n_down > norb {
        return Err(Error::Config(format!(
            "cannot place {n_up}/{n_down} electrons in {norb} orbitals"
        )));
    }
    if count == 0 {
        return Err(Error::Config("random determinant count must be at least 1".into()));
    }
    let available = sector_size(norb, n_up, n_down);
    if available < count as u128 {
        return Err(Error::SectorTooSmall {
            available,
            requested: count,
        });
    }
    let mut rng = seeded_rng(seed);
    let mut scratch = vec![0usize; norb];
    let mut seen = FxHashSet::default();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let alpha = random_mask(&mut rng, &mut scratch, n_up);
        let beta = random_mask(&mut rng, &mut scratch, n_down);
        let det = Determinant::new(alpha, beta);
        if seen.insert(det) {
            out.push(det);
        }
    }
    Ok(out)
}
