//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria can be selected by number, e.g.
//! `cargo test -p trimci --test acceptance -- 2 9 10`.

mod common;

use std::cell::Cell;
use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trimci::analysis::{cumulative_and_fit, scaling_fit, DEFAULT_FIT_RANGE};
use trimci::determinants::matrix_element;
use trimci::eigensolver::{davidson_lowest, DavidsonOptions, SymmetricOperator};
use trimci::engine::{ensemble_run_with, run, TrimCiConfig};
use trimci::integrals::{
    canonical_key, hubbard_integrals, parse_fcidump, symmetry_images, write_fcidump, Boundary, HubbardSpec,
    IntegralBuilder, OrbitalBasis,
};
use trimci::pt2::{extrapolate, pt2_correction, DEFAULT_EPSILON2};
use trimci::{Determinant, IntegralTable, WavefunctionState};

/// Exact 4x4 U=2 periodic half-filled ground-state energy.
const E_FCI_U2: f64 = -18.0175717;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn lattice_4x4(u: f64) -> IntegralTable {
    let spec = HubbardSpec::half_filled(4, 4, 1.0, u, Boundary::Periodic).with_basis(OrbitalBasis::Momentum);
    hubbard_integrals(&spec).unwrap()
}

/// Ensemble schedule for the 4x4 lattice: fast geometric growth, wide pools,
/// local trimming switched off once the core is large.
///
/// Members grow to about 2e3 dets before the ensemble picks one; earlier
/// energies do not separate the momentum blocks.
fn lattice_config(max_final_dets: usize, seed: u64) -> TrimCiConfig {
    TrimCiConfig {
        num_runs: 32,
        ensemble_iterations: 20,
        core_set_ratio: vec![1.3],
        pool_core_ratio: 4.0,
        trim_disable_threshold: Some(20_000),
        max_final_dets,
        seed,
        memory_cap_bytes: 3 << 30,
        ..Default::default()
    }
}

/// Default schedule with an ensemble wide enough to escape symmetry sectors.
fn refining_config(max_final_dets: usize, seed: u64) -> TrimCiConfig {
    TrimCiConfig {
        num_runs: 32,
        max_final_dets,
        seed,
        ..Default::default()
    }
}

// ---------------------------------------------------------------- 1

fn small_instance() -> impl Strategy<Value = IntegralTable> {
    let lattice = prop_oneof![Just((1usize, 1usize)), Just((2, 1)), Just((3, 1)), Just((4, 1)), Just((2, 2))];
    let hubbard = (lattice, 0.5f64..1.5, 0.0f64..8.0, any::<bool>(), any::<bool>(), 0usize..=4, 0usize..=4).prop_map(
        |((lx, ly), t, u, periodic, momentum, up, down)| {
            let m = lx * ly;
            let b = if periodic { Boundary::Periodic } else { Boundary::Open };
            let spec = HubbardSpec::new(lx, ly, t, u, b, up.min(m), down.min(m));
            let spec = if momentum { spec.with_basis(OrbitalBasis::Momentum) } else { spec };
            hubbard_integrals(&spec).unwrap()
        },
    );
    let random = (1usize..=4, 0usize..=4, 0usize..=4, any::<u64>())
        .prop_map(|(m, up, down, seed)| random_integrals(m, up.min(m), down.min(m), seed));
    prop_oneof![hubbard, random]
}

fn criterion_1() -> Verdict {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 200,
        failure_persistence: None,
        ..Default::default()
    });
    let worst_energy = Cell::new(0.0f64);
    let pairs = Cell::new(0usize);
    let result = runner.run(&small_instance(), |ints| {
        let dets = brute_sector(ints.norb(), ints.n_alpha(), ints.n_beta());
        let oracle = oracle_matrix(&dets, &ints);
        for (i, a) in dets.iter().enumerate() {
            for (j, b) in dets.iter().enumerate() {
                let h = matrix_element(a, b, &ints);
                prop_assert!((h - oracle[(i, j)]).abs() < 1e-12, "<{a}|H|{b}> = {h}, oracle {}", oracle[(i, j)]);
            }
        }
        pairs.set(pairs.get() + dets.len() * dets.len());
        let exact = oracle.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        let config = TrimCiConfig {
            max_final_dets: dets.len(),
            ..Default::default()
        };
        let out = run(&config, &ints).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let err = (out.state.energy - exact).abs();
        worst_energy.set(worst_energy.get().max(err));
        prop_assert!(err < 1e-8, "TrimCI {} vs oracle {exact}", out.state.energy);
        Ok(())
    });
    let (worst_energy, pairs) = (worst_energy.get(), pairs.get());
    match result {
        Ok(()) => verdict(
            worst_energy < 1e-8,
            format!("200 instances, worst |E - E_FCI| = {worst_energy:.1e}, {pairs} matrix elements match the operator oracle"),
        ),
        Err(e) => verdict(false, format!("counterexample: {e}")),
    }
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Verdict {
    let mut worst = 0.0f64;
    for u in [0.0, 2.0, 4.0, 8.0] {
        let out = run(&TrimCiConfig::default(), &two_site(u)).unwrap();
        worst = worst.max((out.state.energy - two_site_energy(u, 1.0)).abs());
    }
    verdict(worst <= 1e-10, format!("U in {{0, 2, 4, 8}}: worst deviation {worst:.1e} (tolerance 1e-10)"))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Verdict {
    let ints = lattice_4x4(2.0);
    let started = Instant::now();
    let mut best: Option<(f64, usize)> = None;
    let result = ensemble_run_with(&refining_config(1000, 0), &ints, |_, s| {
        if s.len() <= 1000 && best.is_none_or(|(e, _)| s.energy < e) {
            best = Some((s.energy, s.len()));
        }
    });
    let secs = started.elapsed().as_secs_f64();
    match (result, best) {
        (Ok(_), Some((e, n))) => verdict(
            e <= -17.837 && secs <= 600.0,
            format!("E_var = {e:.6} with {n} dets in {secs:.1} s (target <= -17.837, <= 1000 dets, <= 600 s)"),
        ),
        (Err(e), _) => verdict(false, format!("run failed: {e}")),
        (Ok(_), None) => verdict(false, "no state within 1000 dets"),
    }
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Verdict {
    let ints = lattice_4x4(8.0);
    let started = Instant::now();
    let mut best: Option<(f64, usize)> = None;
    let result = ensemble_run_with(&lattice_config(200_000, 0), &ints, |_, s| {
        if s.len() <= 500_000 && best.is_none_or(|(e, _)| s.energy < e) {
            best = Some((s.energy, s.len()));
        }
    });
    let secs = started.elapsed().as_secs_f64();
    match (result, best) {
        (Ok(_), Some((e, n))) => verdict(
            e <= -8.215 && secs <= 1800.0,
            format!("E_var = {e:.6} with {n} dets in {secs:.0} s (target <= -8.215, <= 5e5 dets, <= 1800 s)"),
        ),
        (Err(e), _) => verdict(false, format!("run failed: {e}")),
        (Ok(_), None) => verdict(false, "no state within 5e5 dets"),
    }
}

// ---------------------------------------------------------------- 5, 6

/// One U=2 trajectory past 1e5 determinants, with snapshots for the PT2 series.
struct LargeU2 {
    snapshots: Vec<WavefunctionState>,
    last: Result<WavefunctionState, String>,
}

fn large_u2() -> LargeU2 {
    let ints = lattice_4x4(2.0);
    let marks = [10_000usize, 20_000, 40_000, 80_000];
    let mut snapshots: Vec<WavefunctionState> = Vec::new();
    let result = ensemble_run_with(&lattice_config(120_000, 0), &ints, |_, s| {
        if let Some(&m) = marks.get(snapshots.len()) {
            if s.len() >= m {
                snapshots.push(s.clone());
            }
        }
    });
    LargeU2 {
        snapshots,
        last: result.map(|o| o.outcome.state).map_err(|e| e.to_string()),
    }
}

fn criterion_5(run: &LargeU2) -> Verdict {
    let ints = lattice_4x4(2.0);
    let mut points = Vec::new();
    let mut sizes = Vec::new();
    for s in &run.snapshots {
        match pt2_correction(s, &ints, DEFAULT_EPSILON2) {
            Ok(r) => points.push((r.e_var, r.e_per)),
            Err(e) => return verdict(false, format!("PT2 failed on {} dets: {e}", s.len())),
        }
        sizes.push(s.len());
    }
    if points.len() < 4 {
        return verdict(false, format!("only {} series points", points.len()));
    }
    match extrapolate(&points) {
        Ok(fit) => {
            let rel = ((fit.intercept - E_FCI_U2) / E_FCI_U2).abs();
            verdict(
                rel <= 1e-4,
                format!(
                    "{} points at {sizes:?} dets extrapolate to {:.7} (relative error {rel:.1e}, tolerance 1e-4)",
                    points.len(),
                    fit.intercept
                ),
            )
        }
        Err(e) => verdict(false, format!("extrapolation failed: {e}")),
    }
}

fn criterion_6(run: &LargeU2) -> Verdict {
    let state = match &run.last {
        Ok(s) => s,
        Err(e) => return verdict(false, format!("run failed: {e}")),
    };
    if state.len() < 100_000 {
        return verdict(false, format!("wavefunction has only {} dets", state.len()));
    }
    let (lo, hi) = DEFAULT_FIT_RANGE;
    match cumulative_and_fit(state, lo, hi) {
        Ok(f) => verdict(
            (0.43..=0.63).contains(&f.alpha) && f.r_squared >= 0.95,
            format!(
                "{} dets: alpha = {:.4}, r^2 = {:.4} over ranks {}..={} (target alpha in [0.43, 0.63], r^2 >= 0.95)",
                state.len(),
                f.alpha,
                f.r_squared,
                f.fit_range.0,
                f.fit_range.1
            ),
        ),
        Err(e) => verdict(false, format!("fit failed: {e}")),
    }
}

// ---------------------------------------------------------------- 7

/// The `k` largest `|c|`, extended by any determinants tied with the k-th
/// within `rel` (symmetry partners carry equal weights).
fn top_with_ties(s: &WavefunctionState, k: usize, rel: f64) -> (BTreeSet<Determinant>, BTreeSet<Determinant>) {
    let order = s.top(s.len());
    let cut = s.coeffs[order[k - 1]].abs();
    let strict: BTreeSet<Determinant> = order[..k].iter().map(|&i| s.dets[i]).collect();
    let loose: BTreeSet<Determinant> = order
        .iter()
        .take_while(|&&i| s.coeffs[i].abs() >= cut * (1.0 - rel))
        .map(|&i| s.dets[i])
        .collect();
    (strict, loose)
}

fn criterion_7() -> Verdict {
    let ints = lattice_4x4(2.0);
    let mut states = Vec::new();
    for seed in [0u64, 1000] {
        // every member runs to completion: early energies do not tell which
        // members are trapped in an excited symmetry sector
        let config = TrimCiConfig {
            ensemble_iterations: usize::MAX,
            core_set_ratio: vec![1.3],
            ..refining_config(1000, seed)
        };
        match ensemble_run_with(&config, &ints, |_, _| {}) {
            Ok(o) => states.push(o.outcome.state),
            Err(e) => return verdict(false, format!("seed {seed}: {e}")),
        }
    }
    let (a, a_loose) = top_with_ties(&states[0], 20, 1e-3);
    let (b, b_loose) = top_with_ties(&states[1], 20, 1e-3);
    let flip = |set: &BTreeSet<Determinant>| -> BTreeSet<Determinant> { set.iter().map(|d| d.spin_flipped()).collect() };
    let direct = a.is_subset(&b_loose) && b.is_subset(&a_loose);
    let exchanged = a.is_subset(&flip(&b_loose)) && flip(&b).is_subset(&a_loose);
    let exact = a == b || a == flip(&b);
    verdict(
        direct || exchanged,
        format!(
            "seeds 0 and 1000 ({} / {} dets, E = {:.6} / {:.6}): top-20 sets {}",
            states[0].len(),
            states[1].len(),
            states[0].energy,
            states[1].energy,
            if exact {
                "identical up to spin exchange"
            } else if direct || exchanged {
                "agree up to spin exchange and ties at the 20th weight"
            } else {
                "differ"
            }
        ),
    )
}

// ---------------------------------------------------------------- 8

struct Csr {
    diag: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SymmetricOperator for Csr {
    fn dim(&self) -> usize {
        self.diag.len()
    }
    fn diagonal(&self) -> &[f64] {
        &self.diag
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            y[i] = self.diag[i] * x[i] + row.iter().map(|&(j, v)| v * x[j]).sum::<f64>();
        }
    }
}

/// Sparse symmetric matrix with about `per_row` off-diagonal entries per row.
fn random_sparse(n: usize, per_row: usize, rng: &mut ChaCha8Rng) -> (Csr, DMatrix<f64>) {
    let mut dense = DMatrix::zeros(n, n);
    let spread = rng.random_range(1.0..20.0);
    for i in 0..n {
        dense[(i, i)] = rng.random_range(-spread..spread);
    }
    for _ in 0..n * per_row / 2 {
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        if i != j {
            let v = rng.random_range(-1.0..1.0);
            dense[(i, j)] = v;
            dense[(j, i)] = v;
        }
    }
    let rows = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && dense[(i, j)] != 0.0).map(|j| (j, dense[(i, j)])).collect())
        .collect();
    let diag = (0..n).map(|i| dense[(i, i)]).collect();
    (Csr { diag, rows }, dense)
}

fn criterion_8() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // geometric spread of sizes, the largest at the 2000 bound
    let sizes: Vec<usize> = (0..50).map(|k| (10.0 * 200f64.powf(k as f64 / 49.0)).round() as usize).collect();
    let options = DavidsonOptions {
        dense_cutoff: 0,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for &n in &sizes {
        let (op, dense) = random_sparse(n, 8, &mut rng);
        let exact = dense.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        match davidson_lowest(&op, None, &options) {
            Ok(r) => worst = worst.max((r.energy - exact).abs()),
            Err(e) => return verdict(false, format!("n = {n}: {e}")),
        }
    }
    let secs = started.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-8 && secs < 60.0,
        format!(
            "50 matrices, n = {}..={}: worst |E_dav - E_dense| = {worst:.1e} in {secs:.1} s (tolerance 1e-8, < 60 s)",
            sizes[0],
            sizes[49]
        ),
    )
}

// ---------------------------------------------------------------- 9

/// Sparse random table; values span many magnitudes.
fn random_table(m: usize, seed: u64) -> IntegralTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_up = rng.random_range(0..=m);
    let n_down = rng.random_range(0..=m);
    let mut b = IntegralBuilder::new(m, n_up + n_down, n_up as i32 - n_down as i32).unwrap();
    let value = |rng: &mut ChaCha8Rng| rng.random_range(-1.0..1.0) * 10f64.powi(rng.random_range(-12..4));
    b.set_core_energy(value(&mut rng));
    for p in 0..m {
        for q in 0..=p {
            if rng.random_bool(0.6) {
                b.set_one_body(p, q, value(&mut rng)).unwrap();
            }
        }
    }
    for _ in 0..rng.random_range(0..3 * m * m) {
        let i: [usize; 4] = std::array::from_fn(|_| rng.random_range(0..m));
        b.set_two_body(i[0], i[1], i[2], i[3], value(&mut rng)).unwrap();
    }
    b.finish()
}

/// FCIDUMP text listing every integral under a random symmetry image, in
/// random order.
fn permuted_dump(t: &IntegralTable, rng: &mut ChaCha8Rng) -> String {
    let m = t.norb();
    let mut lines = Vec::new();
    for (key, v) in t.two_body_entries() {
        let images = symmetry_images(key);
        let [i, j, k, l] = images[rng.random_range(0..images.len())];
        lines.push(format!("{v:.16e} {} {} {} {}", i + 1, j + 1, k + 1, l + 1));
    }
    for p in 0..m {
        for q in 0..=p {
            let v = t.one_body(p, q);
            if v != 0.0 {
                let (a, b) = if rng.random_bool(0.5) { (p, q) } else { (q, p) };
                lines.push(format!("{v:.16e} {} {} 0 0", a + 1, b + 1));
            }
        }
    }
    lines.push(format!("{:.16e} 0 0 0 0", t.core_energy()));
    for i in (1..lines.len()).rev() {
        lines.swap(i, rng.random_range(0..=i));
    }
    format!(
        "&FCI NORB={},NELEC={},MS2={},\n ORBSYM={}\n ISYM=1,\n&END\n{}\n",
        m,
        t.n_electrons(),
        t.ms2(),
        "1,".repeat(m),
        lines.join("\n")
    )
}

fn fcidump_properties() -> Result<(), String> {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 1000,
        failure_persistence: None,
        ..Default::default()
    });
    runner
        .run(&(1usize..=8, any::<u64>()), |(m, seed)| {
            let t = random_table(m, seed);
            let mut buf = Vec::new();
            write_fcidump(&t, &mut buf).unwrap();
            let back = parse_fcidump(&buf[..]).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!(back == t, "written table does not parse back identically");
            for p in 0..m {
                for q in 0..m {
                    prop_assert_eq!(back.one_body(p, q).to_bits(), back.one_body(q, p).to_bits());
                    for r in 0..m {
                        for s in 0..m {
                            let v = back.eri(p, q, r, s);
                            for [a, b, c, d] in symmetry_images(canonical_key(p, q, r, s)) {
                                prop_assert_eq!(v.to_bits(), back.eri(a, b, c, d).to_bits());
                            }
                        }
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let text = permuted_dump(&t, &mut rng);
            let permuted = parse_fcidump(text.as_bytes()).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!(permuted == t, "symmetry-permuted dump differs");
            Ok(())
        })
        .map_err(|e| e.to_string())
}

const VALID_DUMP: &str = "&FCI NORB=2,NELEC=2,MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n&END\n\
 0.5 1 1 1 1\n 0.25 2 2 1 1\n 0.5 2 2 2 2\n 0.1 2 1 2 1\n -1.0 1 1 0 0\n -0.5 2 1 0 0\n -0.5 2 2 0 0\n 0.7 0 0 0 0\n";

/// Inputs every parser must reject.
fn malformed_corpus() -> Vec<Vec<u8>> {
    let v = VALID_DUMP;
    let mut corpus: Vec<String> = vec![
        String::new(),
        "\n\n".into(),
        "garbage".into(),
        "&FCI NORB=2,NELEC=2\n 0.5 1 1 1 1\n".into(),
        "&FCI NELEC=2,MS2=0,\n&END\n".into(),
        "&FCI NORB=2,MS2=0,\n&END\n".into(),
        "&FCI NORB=0,NELEC=0,\n&END\n".into(),
        "&FCI NORB=-3,NELEC=2,\n&END\n".into(),
        "&FCI NORB=two,NELEC=2,\n&END\n".into(),
        "&FCI NORB=2,NELEC=9,\n&END\n".into(),
        "&FCI NORB=2,NELEC=2,MS2=4,\n&END\n".into(),
        "&FCI NORB=2,NELEC=2,MS2=99999999999,\n&END\n".into(),
        "&FCI NORB=200,NELEC=2,\n&END\n".into(),
        "&FCI NORB=2,NELEC=2,UHF=1,\n&END\n".into(),
        "&FCI =2,NELEC=2,\n&END\n".into(),
        "&FCI 2,NELEC=2,\n&END\n".into(),
        "NORB=2,NELEC=2,\n&END\n".into(),
    ];
    let body_errors = [
        "0.5 1 1 1",
        "0.5 1 1 1 1 1",
        "x 1 1 1 1",
        "0.5 a 1 1 1",
        "0.5 3 1 1 1",
        "0.5 1 1 3 1",
        "0.5 -1 1 1 1",
        "0.5 0 1 0 0",
        "0.5 1 0 1 1",
        "0.5 0 0 1 1",
        "0.5 1 1 0 1",
        "0.5 1 1 1 99999999999999999999999",
        "1.0.0 1 1 0 0",
        "0.5D+ 1 1 1 1",
    ];
    for line in body_errors {
        corpus.push(format!("{v}{line}\n"));
    }
    let mut out: Vec<Vec<u8>> = corpus.into_iter().map(String::into_bytes).collect();
    out.push(vec![0xff, 0xfe, 0x00, 0x26]);
    let mut bad_utf8 = v.as_bytes().to_vec();
    bad_utf8.extend_from_slice(&[0xc3, 0x28, b'\n']);
    out.push(bad_utf8);
    out
}

/// Deterministic mutants of a valid dump: byte flips, truncations, splices.
fn mutant_corpus(count: usize) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let base = VALID_DUMP.as_bytes();
    let alphabet = b" \n\t,=&/-+.eEdD0123456789xNORBLECMS";
    (0..count)
        .map(|_| {
            let mut m = base.to_vec();
            for _ in 0..rng.random_range(1..6) {
                match rng.random_range(0..4) {
                    0 if !m.is_empty() => {
                        let i = rng.random_range(0..m.len());
                        m[i] = alphabet[rng.random_range(0..alphabet.len())];
                    }
                    1 if !m.is_empty() => {
                        let i = rng.random_range(0..m.len());
                        m.truncate(i);
                    }
                    2 => {
                        let i = rng.random_range(0..=m.len());
                        m.insert(i, rng.random());
                    }
                    _ if !m.is_empty() => {
                        let (a, b) = (rng.random_range(0..m.len()), rng.random_range(0..m.len()));
                        let piece = m[a.min(b)..a.max(b)].to_vec();
                        let at = rng.random_range(0..=m.len());
                        m.splice(at..at, piece);
                    }
                    _ => {}
                }
            }
            m
        })
        .collect()
}

fn criterion_9() -> Verdict {
    if let Err(e) = fcidump_properties() {
        return verdict(false, format!("property failed: {e}"));
    }
    let malformed = malformed_corpus();
    let mut accepted = Vec::new();
    let mut panics = 0;
    for (i, input) in malformed.iter().enumerate() {
        match catch_unwind(AssertUnwindSafe(|| parse_fcidump(&input[..]))) {
            Ok(Ok(_)) => accepted.push(i),
            Ok(Err(_)) => {}
            Err(_) => panics += 1,
        }
    }
    let mutants = mutant_corpus(5000);
    let mut mutant_errors = 0;
    for input in &mutants {
        match catch_unwind(AssertUnwindSafe(|| parse_fcidump(&input[..]))) {
            Ok(Ok(_)) => {}
            Ok(Err(_)) => mutant_errors += 1,
            Err(_) => panics += 1,
        }
    }
    verdict(
        accepted.is_empty() && panics == 0,
        format!(
            "1000 round-trip/8-fold tables pass; {} malformed inputs rejected ({} accepted: {accepted:?}); \
             {} mutants, {mutant_errors} rejected; {panics} panics",
            malformed.len() - accepted.len(),
            accepted.len(),
            mutants.len()
        ),
    )
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Verdict {
    match scaling_fit(&[(16.0, 2.5e-6), (36.0, 3.6e-16), (64.0, 1.5e-28)]) {
        Ok(f) => verdict(
            (f.slope + 0.462).abs() <= 0.005 && f.r_squared >= 0.998,
            format!(
                "slope = {:.4}, intercept = {:.3}, r^2 = {:.5} (target -0.462 +- 0.005, r^2 >= 0.998)",
                f.slope, f.intercept, f.r_squared
            ),
        ),
        Err(e) => verdict(false, format!("fit failed: {e}")),
    }
}

fn main() {
    let selected: BTreeSet<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: u32| selected.is_empty() || selected.contains(&n);
    let mut results: Vec<(u32, Verdict, f64)> = Vec::new();
    let mut check = |n: u32, f: &mut dyn FnMut() -> Verdict| {
        if !wanted(n) {
            return;
        }
        let started = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        println!("{} criterion {n:>2}: {} [{secs:.1} s]", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, v, secs));
    };

    check(1, &mut criterion_1);
    check(2, &mut criterion_2);
    check(3, &mut criterion_3);
    check(4, &mut criterion_4);
    if wanted(5) || wanted(6) {
        let large = large_u2();
        check(5, &mut || criterion_5(&large));
        check(6, &mut || criterion_6(&large));
    }
    check(7, &mut criterion_7);
    check(8, &mut criterion_8);
    check(9, &mut criterion_9);
    check(10, &mut criterion_10);

    let failed: Vec<u32> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed",
        results.len() - failed.len(),
        failed.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
