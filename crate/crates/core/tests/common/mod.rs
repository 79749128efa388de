//! Oracles shared by the integration tests. Nothing here calls the
//! Slater–Condon code under test.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trimci::integrals::{Boundary, HubbardSpec, IntegralBuilder};
use trimci::{Determinant, IntegralTable};

/// Spin-orbital occupation: alpha orbitals in bits `0..m`, beta in `m..2m`.
fn occupation(d: &Determinant, m: usize) -> u128 {
    d.alpha | (d.beta << m)
}

fn determinant(occ: u128, m: usize) -> Determinant {
    let mask = (1u128 << m) - 1;
    Determinant::new(occ & mask, (occ >> m) & mask)
}

fn annihilate(occ: u128, i: usize) -> Option<(u128, f64)> {
    if occ >> i & 1 == 0 {
        return None;
    }
    let below = (occ & ((1u128 << i) - 1)).count_ones();
    Some((occ ^ (1 << i), if below % 2 == 0 { 1.0 } else { -1.0 }))
}

fn create(occ: u128, i: usize) -> Option<(u128, f64)> {
    if occ >> i & 1 == 1 {
        return None;
    }
    let below = (occ & ((1u128 << i) - 1)).count_ones();
    Some((occ | (1 << i), if below % 2 == 0 { 1.0 } else { -1.0 }))
}

/// `H|D>` by explicit second-quantized operator application:
/// `E0 + sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q` over spins.
pub fn apply_hamiltonian(det: &Determinant, ints: &IntegralTable) -> BTreeMap<Determinant, f64> {
    let m = ints.norb();
    assert!(2 * m <= 127);
    let occ = occupation(det, m);
    let mut out: BTreeMap<Determinant, f64> = BTreeMap::new();
    let mut add = |o: u128, v: f64| *out.entry(determinant(o, m)).or_insert(0.0) += v;
    add(occ, ints.core_energy());
    for s in 0..2 {
        for p in 0..m {
            for q in 0..m {
                let h = ints.one_body(p, q);
                if h == 0.0 {
                    continue;
                }
                let Some((o1, s1)) = annihilate(occ, s * m + q) else { continue };
                let Some((o2, s2)) = create(o1, s * m + p) else { continue };
                add(o2, h * s1 * s2);
            }
        }
    }
    for s in 0..2 {
        for t in 0..2 {
            for p in 0..m {
                for q in 0..m {
                    for r in 0..m {
                        for u in 0..m {
                            let v = ints.eri(p, q, r, u);
                            if v == 0.0 {
                                continue;
                            }
                            let Some((o1, s1)) = annihilate(occ, s * m + q) else { continue };
                            let Some((o2, s2)) = annihilate(o1, t * m + u) else { continue };
                            let Some((o3, s3)) = create(o2, t * m + r) else { continue };
                            let Some((o4, s4)) = create(o3, s * m + p) else { continue };
                            add(o4, 0.5 * v * s1 * s2 * s3 * s4);
                        }
                    }
                }
            }
        }
    }
    out
}

/// All determinants with `n_up` alpha and `n_down` beta electrons in `m`
/// orbitals, by brute-force filtering of bitmasks.
pub fn brute_sector(m: usize, n_up: usize, n_down: usize) -> Vec<Determinant> {
    let masks = |n: usize| (0u128..1 << m).filter(move |x| x.count_ones() as usize == n);
    let mut out: Vec<Determinant> = masks(n_up)
        .flat_map(|a| masks(n_down).map(move |b| Determinant::new(a, b)))
        .collect();
    out.sort();
    out
}

/// Dense `H` over `dets` assembled from [`apply_hamiltonian`].
pub fn oracle_matrix(dets: &[Determinant], ints: &IntegralTable) -> nalgebra::DMatrix<f64> {
    let n = dets.len();
    let mut h = nalgebra::DMatrix::zeros(n, n);
    for (j, dj) in dets.iter().enumerate() {
        let col = apply_hamiltonian(dj, ints);
        for (i, di) in dets.iter().enumerate() {
            h[(i, j)] = col.get(di).copied().unwrap_or(0.0);
        }
    }
    h
}

/// Lowest eigenvalue of the oracle matrix over the full sector.
pub fn oracle_ground_energy(ints: &IntegralTable) -> f64 {
    let dets = brute_sector(ints.norb(), ints.n_alpha(), ints.n_beta());
    let h = oracle_matrix(&dets, ints);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Random real integrals with full 8-fold symmetry and positive diagonal
/// Coulomb terms.
pub fn random_integrals(m: usize, n_up: usize, n_down: usize, seed: u64) -> IntegralTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = IntegralBuilder::new(m, n_up + n_down, n_up as i32 - n_down as i32).unwrap();
    b.set_core_energy(rng.random_range(-1.0..1.0));
    for p in 0..m {
        for q in 0..=p {
            let v = if p == q {
                rng.random_range(-2.0..0.0)
            } else {
                rng.random_range(-0.5..0.5)
            };
            b.set_one_body(p, q, v).unwrap();
        }
    }
    for p in 0..m {
        for q in 0..=p {
            for r in 0..m {
                for s in 0..=r {
                    if p * (p + 1) / 2 + q < r * (r + 1) / 2 + s {
                        continue;
                    }
                    let v = if p == q && r == s {
                        rng.random_range(0.3..1.0)
                    } else {
                        rng.random_range(-0.1..0.1)
                    };
                    b.set_two_body(p, q, r, s, v).unwrap();
                }
            }
        }
    }
    b.finish()
}

pub fn two_site(u: f64) -> IntegralTable {
    trimci::integrals::hubbard_integrals(&HubbardSpec::half_filled(2, 1, 1.0, u, Boundary::Open)).unwrap()
}

/// `(U - sqrt(U^2 + 16 t^2)) / 2`
pub fn two_site_energy(u: f64, t: f64) -> f64 {
    (u - (u * u + 16.0 * t * t).sqrt()) / 2.0
}

/// Sum of the lowest `n_up` plus lowest `n_down` one-body eigenvalues.
pub fn tight_binding_energy(ints: &IntegralTable, n_up: usize, n_down: usize) -> f64 {
    let m = ints.norb();
    let h = nalgebra::DMatrix::from_fn(m, m, |p, q| ints.one_body(p, q));
    let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    ints.core_energy() + e[..n_up].iter().sum::<f64>() + e[..n_down].iter().sum::<f64>()
}
