//! Enumeration of determinants coupled to a given determinant through the
//! Hamiltonian, screened by coupling magnitude using the heat-bath lists.

use crate::determinants::{
    above, bits, double_phase, single_element_unsigned, single_phase, Determinant, Spin,
};
use crate::integrals::IntegralTable;

/// Calls `emit(d', <d'|H|det>)` for every `d' != det` with
/// `|<d'|H|det>| > threshold`. Each connected determinant is visited once.
///
/// Returns an upper bound on `|<d'|H|det>|` over the screened-out
/// determinants; zero when nothing nonzero was skipped.
///
/// Doubles are read from magnitude-sorted lists and the scan stops at the
/// first entry at or below `threshold`; singles are pre-screened with
/// determinant-independent bounds and then evaluated exactly.
pub fn for_each_connection<F>(det: &Determinant, ints: &IntegralTable, threshold: f64, mut emit: F) -> f64
where
    F: FnMut(Determinant, f64),
{
    let hb = ints.heat_bath();
    if !(threshold < f64::INFINITY) {
        return hb.max_magnitude();
    }
    let mut skipped = 0.0f64;

    for spin in [Spin::Alpha, Spin::Beta] {
        let occ = det.spin(spin);
        for p in bits(occ) {
            for cand in hb.singles(p) {
                if cand.bound <= threshold {
                    skipped = skipped.max(cand.bound);
                    break;
                }
                let r = usize::from(cand.particle);
                if occ & (1u128 << r) != 0 {
                    continue;
                }
                let h = single_phase(occ, p, r) * single_element_unsigned(det, spin, p, r, ints);
                if h.abs() > threshold {
                    let new = occ & !(1u128 << p) | (1u128 << r);
                    emit(det.with_spin(spin, new), h);
                } else {
                    skipped = skipped.max(h.abs());
                }
            }
        }
    }

    for spin in [Spin::Alpha, Spin::Beta] {
        let occ = det.spin(spin);
        for p in bits(occ) {
            for q in bits(occ & above(p)) {
                for cand in hb.same_spin(p, q) {
                    if cand.magnitude <= threshold {
                        skipped = skipped.max(cand.magnitude);
                        break;
                    }
                    let (r, s) = (usize::from(cand.r), usize::from(cand.s));
                    if occ & ((1u128 << r) | (1u128 << s)) != 0 {
                        continue;
                    }
                    let phase = double_phase(occ, p, r, q, s);
                    let h = phase * (ints.eri(r, p, s, q) - ints.eri(r, q, s, p));
                    let new = occ & !((1u128 << p) | (1u128 << q)) | (1u128 << r) | (1u128 << s);
                    emit(det.with_spin(spin, new), h);
                }
            }
        }
    }

    for p in bits(det.alpha) {
        for q in bits(det.beta) {
            for cand in hb.opposite_spin(p, q) {
                if cand.magnitude <= threshold {
                    skipped = skipped.max(cand.magnitude);
                    break;
                }
                let (r, s) = (usize::from(cand.r), usize::from(cand.s));
                if det.alpha & (1u128 << r) != 0 || det.beta & (1u128 << s) != 0 {
                    continue;
                }
                let phase = single_phase(det.alpha, p, r) * single_phase(det.beta, q, s);
                let h = phase * ints.eri(r, p, s, q);
                let alpha = det.alpha & !(1u128 << p) | (1u128 << r);
                let beta = det.beta & !(1u128 << q) | (1u128 << s);
                emit(Determinant::new(alpha, beta), h);
            }
        }
    }
    skipped
}

/// Every determinant with a nonzero coupling to `det`.
pub fn connected(det: &Determinant, ints: &IntegralTable) -> Vec<(Determinant, f64)> {
    let mut out = Vec::new();
    for_each_connection(det, ints, 0.0, |d, h| out.push((d, h)));
    out
}
