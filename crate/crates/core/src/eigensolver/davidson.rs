//! Davidson iteration for the lowest eigenpair, with a dense solver for
//! small problems.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{dot, norm, EigenResult, SymmetricOperator};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DavidsonOptions {
    /// Residual norm `||Hc - Ec||` accepted as converged.
    pub tol: f64,
    pub max_iter: usize,
    pub max_subspace: usize,
    /// Problems of at most this dimension are solved densely.
    pub dense_cutoff: usize,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        DavidsonOptions {
            tol: 1e-8,
            max_iter: 200,
            max_subspace: 24,
            dense_cutoff: 512,
        }
    }
}

const DENOMINATOR_FLOOR: f64 = 1e-4;

/// Ritz vectors retained at a restart, besides the previous iterate.
const RESTART_KEEP: usize = 4;

/// Flips the sign so the largest-magnitude component (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn residual(op: &impl SymmetricOperator, x: &[f64]) -> (f64, f64) {
    let mut ax = vec![0.0; x.len()];
    op.apply(x, &mut ax);
    let e = dot(x, &ax);
    let r: f64 = ax.iter().zip(x).map(|(a, b)| (a - e * b).powi(2)).sum();
    (e, r.sqrt())
}

/// The `count` lowest eigenpairs, ascending.
fn lowest_pairs(m: DMatrix<f64>, count: usize) -> Vec<(f64, Vec<f64>)> {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(count)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect()))
        .collect()
}

fn lowest_of(m: DMatrix<f64>) -> (f64, Vec<f64>) {
    lowest_pairs(m, 1).pop().expect("nonempty matrix")
}

/// Dense diagonalization, used below the Davidson cutoff.
pub fn dense_lowest(op: &impl SymmetricOperator) -> Result<EigenResult> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::Dimension("empty operator".into()));
    }
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    // symmetrize against rounding in the operator
    let m = (&m + m.transpose()) * 0.5;
    let (_, mut v) = lowest_of(m);
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    fix_sign(&mut v);
    let (energy, residual_norm) = residual(op, &v);
    Ok(EigenResult {
        energy,
        coefficients: v,
        iterations: 1,
        residual_norm,
    })
}

/// Orthogonalizes `t` against `basis` (two passes) and normalizes it.
/// Returns false when nothing independent is left.
fn orthonormalize(t: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let before = norm(t);
    if before == 0.0 || !before.is_finite() {
        return false;
    }
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, t);
            t.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
        }
    }
    let after = norm(t);
    if after <= 1e-10 * before || after == 0.0 {
        return false;
    }
    t.iter_mut().for_each(|x| *x /= after);
    true
}

struct Subspace {
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
}

impl Subspace {
    fn new() -> Self {
        Subspace {
            v: Vec::new(),
            av: Vec::new(),
            g: Vec::new(),
        }
    }

    fn push(&mut self, v: Vec<f64>, av: Vec<f64>) {
        let k = self.v.len();
        let mut row = Vec::with_capacity(k + 1);
        for i in 0..k {
            let gij = 0.5 * (dot(&self.v[i], &av) + dot(&v, &self.av[i]));
            self.g[i].push(gij);
            row.push(gij);
        }
        row.push(dot(&v, &av));
        self.g.push(row);
        self.v.push(v);
        self.av.push(av);
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    /// The `count` lowest Ritz triples: value, vector, and `A` times the vector.
    fn ritz(&self, count: usize) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
        let k = self.len();
        let g = DMatrix::from_fn(k, k, |i, j| self.g[i][j]);
        let n = self.v[0].len();
        lowest_pairs(g, count)
            .into_iter()
            .map(|(theta, y)| {
                let mut x = vec![0.0; n];
                let mut ax = vec![0.0; n];
                for (c, (v, av)) in y.iter().zip(self.v.iter().zip(&self.av)) {
                    x.iter_mut().zip(v).for_each(|(a, b)| *a += c * b);
                    ax.iter_mut().zip(av).for_each(|(a, b)| *a += c * b);
                }
                (theta, x, ax)
            })
            .collect()
    }
}

fn initial_guess(op: &impl SymmetricOperator, guess: Option<&[f64]>) -> Vec<f64> {
    let n = op.dim();
    if let Some(g) = guess {
        if g.len() == n && norm(g) > 0.0 && g.iter().all(|x| x.is_finite()) {
            let s = norm(g);
            return g.iter().map(|x| x / s).collect();
        }
        log::debug!("ignoring unusable Davidson guess");
    }
    let diag = op.diagonal();
    let mut best = 0;
    for (i, &d) in diag.iter().enumerate() {
        if d < diag[best] {
            best = i;
        }
    }
    let mut x = vec![0.0; n];
    x[best] = 1.0;
    x
}

/// Lowest eigenpair by Davidson iteration with a diagonal preconditioner.
///
/// When the subspace reaches `max_subspace` it restarts from the lowest few
/// Ritz vectors together with the previous iterate.
pub fn davidson_lowest(
    op: &impl SymmetricOperator,
    guess: Option<&[f64]>,
    options: &DavidsonOptions,
) -> Result<EigenResult> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::Dimension("empty operator".into()));
    }
    if !(options.tol > 0.0) {
        return Err(Error::Config(format!("Davidson tolerance {} must be positive", options.tol)));
    }
    if n <= options.dense_cutoff.max(1) {
        return dense_lowest(op);
    }
    let max_subspace = options.max_subspace.max(RESTART_KEEP + 3);
    let diag = op.diagonal();

    let mut space = Subspace::new();
    let x0 = initial_guess(op, guess);
    let mut ax0 = vec![0.0; n];
    op.apply(&x0, &mut ax0);
    space.push(x0, ax0);

    let mut previous: Option<Vec<f64>> = None;
    let mut best = EigenResult {
        energy: f64::INFINITY,
        coefficients: Vec::new(),
        iterations: 0,
        residual_norm: f64::INFINITY,
    };

    for iter in 1..=options.max_iter {
        let restarting = space.len() >= max_subspace;
        let mut pairs = space.ritz(if restarting { RESTART_KEEP } else { 1 });
        let (theta, x, ax) = pairs[0].clone();
        let r: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - theta * b).collect();
        let rnorm = norm(&r);
        if rnorm < best.residual_norm || best.coefficients.is_empty() {
            best = EigenResult {
                energy: theta,
                coefficients: x.clone(),
                iterations: iter,
                residual_norm: rnorm,
            };
        }

        if rnorm <= options.tol {
            let mut c = x;
            let s = norm(&c);
            c.iter_mut().for_each(|v| *v /= s);
            fix_sign(&mut c);
            let (energy, residual_norm) = residual(op, &c);
            if residual_norm <= options.tol {
                return Ok(EigenResult {
                    energy,
                    coefficients: c,
                    iterations: iter,
                    residual_norm,
                });
            }
            // accumulated drift: rebuild the subspace from the fresh vector
            let mut ac = vec![0.0; n];
            op.apply(&c, &mut ac);
            space = Subspace::new();
            space.push(c, ac);
            previous = None;
            continue;
        }

        // Olsen correction: t = M^-1 r - eps M^-1 x with t orthogonal to x
        // in the M-metric, so t does not collapse onto x near convergence.
        let inv: Vec<f64> = diag
            .iter()
            .map(|di| {
                let d = theta - di;
                1.0 / if d.abs() < DENOMINATOR_FLOOR {
                    DENOMINATOR_FLOOR.copysign(d)
                } else {
                    d
                }
            })
            .collect();
        let mr: f64 = x.iter().zip(&r).zip(&inv).map(|((xi, ri), m)| xi * ri * m).sum();
        let mx: f64 = x.iter().zip(&inv).map(|(xi, m)| xi * xi * m).sum();
        let eps = if mx != 0.0 { mr / mx } else { 0.0 };
        let mut t: Vec<f64> = r
            .iter()
            .zip(&x)
            .zip(&inv)
            .map(|((ri, xi), m)| m * (ri - eps * xi))
            .collect();

        if restarting {
            // thick restart: the lowest Ritz vectors plus the previous iterate
            let mut restarted = Subspace::new();
            for (_, mut v, mut av) in pairs.drain(..) {
                let sv = norm(&v);
                if sv > 0.0 {
                    v.iter_mut().for_each(|e| *e /= sv);
                    av.iter_mut().for_each(|e| *e /= sv);
                    restarted.push(v, av);
                }
            }
            // the previous iterate is nearly parallel to the lowest Ritz
            // vector, so its remainder is orthogonalized twice and A applied afresh
            if let Some(mut p) = previous.take() {
                if orthonormalize(&mut p, &restarted.v) {
                    let mut ap = vec![0.0; n];
                    op.apply(&p, &mut ap);
                    restarted.push(p, ap);
                }
            }
            space = restarted;
        }
        previous = Some(x);

        if !orthonormalize(&mut t, &space.v) {
            t = r;
            if !orthonormalize(&mut t, &space.v) {
                break;
            }
        }
        let mut at = vec![0.0; n];
        op.apply(&t, &mut at);
        space.push(t, at);
    }

    let mut c = best.coefficients;
    let s = norm(&c);
    c.iter_mut().for_each(|v| *v /= s);
    fix_sign(&mut c);
    let (energy, residual_norm) = residual(op, &c);
    let best = EigenResult {
        energy,
        coefficients: c,
        iterations: options.max_iter,
        residual_norm,
    };
    if residual_norm <= options.tol {
        return Ok(best);
    }
    Err(Error::NotConverged {
        iterations: options.max_iter,
        residual: residual_norm,
        best: Box::new(best),
    })
}
