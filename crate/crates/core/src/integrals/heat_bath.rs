//! Coupling lists sorted by magnitude, scanned with early exit during
//! candidate generation.

use rustc_hash::FxHashSet;

use super::{symmetry_images, IntegralTable};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleCandidate {
    pub particle: u8,
    /// Upper bound on `|<D'|H|D>|` for this hole/particle pair over all
    /// determinants.
    pub bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleCandidate {
    pub r: u8,
    pub s: u8,
    /// Exact `|H|` of the double `p -> r, q -> s`.
    pub magnitude: f64,
}

/// Per-hole single bounds and per-hole-pair double lists, each sorted by
/// non-increasing magnitude.
///
/// * same-spin lists are keyed by `p < q` and hold `r < s` with magnitude
///   `|(rp|sq) - (rq|sp)|`;
/// * opposite-spin lists are keyed by `(p, q)` with `p` alpha and `q` beta and
///   hold `(r, s)` with magnitude `|(rp|sq)|`.
#[derive(Clone, Debug, Default)]
pub struct HeatBathIndex {
    norb: usize,
    singles: Vec<Vec<SingleCandidate>>,
    same_spin: Vec<Vec<DoubleCandidate>>,
    opposite_spin: Vec<Vec<DoubleCandidate>>,
    max_magnitude: f64,
}

fn sort_doubles(list: &mut [DoubleCandidate]) {
    list.sort_unstable_by(|a, b| {
        b.magnitude
            .total_cmp(&a.magnitude)
            .then((a.r, a.s).cmp(&(b.r, b.s)))
    });
}

impl HeatBathIndex {
    pub(super) fn build(ints: &IntegralTable) -> Self {
        let m = ints.norb();

        let mut singles = vec![Vec::new(); m];
        for (p, list) in singles.iter_mut().enumerate() {
            for r in 0..m {
                if r == p {
                    continue;
                }
                let mut bound = ints.one_body(p, r).abs();
                for k in 0..m {
                    let direct = ints.eri(p, r, k, k);
                    bound += (direct - ints.eri(p, k, k, r)).abs() + direct.abs();
                }
                if bound > 0.0 {
                    list.push(SingleCandidate {
                        particle: r as u8,
                        bound,
                    });
                }
            }
            list.sort_unstable_by(|a, b| b.bound.total_cmp(&a.bound).then(a.particle.cmp(&b.particle)));
        }

        // (p r | q s) images of every stored entry: hole p -> particle r in one
        // electron, hole q -> particle s in the other.
        let mut opposite_spin = vec![Vec::new(); m * m];
        let mut same_keys: FxHashSet<[usize; 4]> = FxHashSet::default();
        for (key, _) in ints.two_body_entries() {
            for [p, r, q, s] in symmetry_images(key) {
                if p == r || q == s {
                    continue;
                }
                opposite_spin[p * m + q].push(DoubleCandidate {
                    r: r as u8,
                    s: s as u8,
                    magnitude: ints.eri(r, p, s, q).abs(),
                });
                if p != q && r != s && r != q && s != p {
                    let (hp, hq) = if p < q { (p, q) } else { (q, p) };
                    let (pr, ps) = if r < s { (r, s) } else { (s, r) };
                    same_keys.insert([hp, hq, pr, ps]);
                }
            }
        }
        for list in &mut opposite_spin {
            list.sort_unstable_by(|a, b| (a.r, a.s).cmp(&(b.r, b.s)));
            list.dedup_by(|a, b| (a.r, a.s) == (b.r, b.s));
            sort_doubles(list);
        }

        let mut same_spin = vec![Vec::new(); m * m];
        let mut keys: Vec<_> = same_keys.into_iter().collect();
        keys.sort_unstable();
        for [p, q, r, s] in keys {
            let magnitude = (ints.eri(r, p, s, q) - ints.eri(r, q, s, p)).abs();
            if magnitude > 0.0 {
                same_spin[p * m + q].push(DoubleCandidate {
                    r: r as u8,
                    s: s as u8,
                    magnitude,
                });
            }
        }
        for list in &mut same_spin {
            sort_doubles(list);
        }

        let max_magnitude = singles
            .iter()
            .filter_map(|l| l.first().map(|c| c.bound))
            .chain(same_spin.iter().chain(&opposite_spin).filter_map(|l| l.first().map(|c| c.magnitude)))
            .fold(0.0, f64::max);
        HeatBathIndex {
            norb: m,
            singles,
            same_spin,
            opposite_spin,
            max_magnitude,
        }
    }

    /// Largest bound or magnitude in the index.
    pub fn max_magnitude(&self) -> f64 {
        self.max_magnitude
    }

    pub fn singles(&self, hole: usize) -> &[SingleCandidate] {
        &self.singles[hole]
    }

    /// Same-spin list for holes `p < q`.
    pub fn same_spin(&self, p: usize, q: usize) -> &[DoubleCandidate] {
        debug_assert!(p < q);
        &self.same_spin[p * self.norb + q]
    }

    /// Opposite-spin list for alpha hole `p` and beta hole `q`.
    pub fn opposite_spin(&self, p: usize, q: usize) -> &[DoubleCandidate] {
        &self.opposite_spin[p * self.norb + q]
    }

    /// Iterates every list in the index (for ordering checks).
    pub fn all_lists(&self) -> impl Iterator<Item = &[DoubleCandidate]> {
        self.same_spin
            .iter()
            .chain(self.opposite_spin.iter())
            .map(Vec::as_slice)
    }
}
