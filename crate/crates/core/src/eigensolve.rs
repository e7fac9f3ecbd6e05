//! Lowest eigenpairs of the generalized problem `H x = E M x`.
//!
//! Solvers are strategies behind [`Eigensolver`], looked up by name in a
//! [`SolverRegistry`]. The default is a shift-invert Lanczos iteration with
//! full reorthogonalization and an inertia check that certifies that no
//! eigenvalue below the returned ones was skipped.

use std::collections::BTreeMap;
use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, norm2, SkylineLdl, SymmetricSparseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub energy: f64,
    /// M-normalized coefficient vector.
    pub coefficients: Vec<f64>,
    /// `||H x - E M x||_2`.
    pub residual_norm: f64,
}

pub trait Eigensolver: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// The `k` lowest eigenpairs in ascending order, M-orthonormal, each with
    /// `||H x - E M x|| <= tol ||H|| ||x||`.
    fn solve_lowest(
        &self,
        h: &SymmetricSparseMatrix,
        m: &SymmetricSparseMatrix,
        k: usize,
        tol: f64,
    ) -> Result<Vec<EigenPair>>;
}

fn check_inputs(h: &SymmetricSparseMatrix, m: &SymmetricSparseMatrix, k: usize) -> Result<()> {
    if h.dim() != m.dim() {
        return Err(Error::Dimension {
            expected: h.dim(),
            found: m.dim(),
        });
    }
    if k >= h.dim() {
        return Err(Error::Config(format!(
            "requested {k} eigenpairs from a problem of dimension {}",
            h.dim()
        )));
    }
    Ok(())
}

fn residual(h: &SymmetricSparseMatrix, m: &SymmetricSparseMatrix, x: &[f64], e: f64) -> f64 {
    let mut r = h.mul_vec(x);
    axpy(-e, &m.mul_vec(x), &mut r);
    norm2(&r)
}

/// Shift-invert Lanczos in the M inner product.
///
/// The Krylov basis is grown one vector at a time, each new direction being
/// orthogonalized against the whole basis; the projected operator is kept in
/// full rather than as a tridiagonal, which makes it legal to inject fresh
/// random directions at any point. Injection happens at start-up (a small
/// block, so exactly degenerate pairs are found), on breakdown, and when the
/// inertia check reports a missed eigenvalue.
#[derive(Debug, Clone)]
pub struct LanczosSolver {
    pub seed: u64,
    /// Number of random start vectors.
    pub block: usize,
    /// Basis size limit; 0 means `max(8 k, 400)`.
    pub max_basis: usize,
    /// Relative convergence threshold for Ritz values of the inverted operator.
    pub ritz_tol: f64,
}

impl Default for LanczosSolver {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            block: 2,
            max_basis: 0,
            ritz_tol: 1e-11,
        }
    }
}

struct ShiftInvert<'a> {
    m: &'a SymmetricSparseMatrix,
    factor: SkylineLdl,
    sigma: f64,
}

impl ShiftInvert<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.m.mul_vec(x);
        self.factor.solve_in_place(&mut y);
        y
    }
}

fn shifted(h: &SymmetricSparseMatrix, m: &SymmetricSparseMatrix, sigma: f64) -> SymmetricSparseMatrix {
    SymmetricSparseMatrix::linear_combination(&[(1.0, h), (-sigma, m)]).expect("equal dimensions")
}

/// Number of eigenvalues below `e`, from the inertia of `H - e M`. A zero
/// pivot nudges `e` by `nudge` (alternating sign, growing) before retrying.
pub fn count_below(h: &SymmetricSparseMatrix, m: &SymmetricSparseMatrix, e: f64, nudge: f64) -> Result<usize> {
    let mut last = None;
    for attempt in 0..8 {
        let s = if attempt == 0 {
            e
        } else {
            let k = attempt as f64;
            e + nudge * k * if attempt % 2 == 0 { 1.0 } else { -1.0 }
        };
        match SkylineLdl::factor(&shifted(h, m, s), s) {
            Ok(f) => return Ok(f.negative_count()),
            Err(err) => last = Some(err),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Finds a shift with no eigenvalue below it and factors `H - sigma M`.
fn lower_shift<'a>(h: &SymmetricSparseMatrix, m: &'a SymmetricSparseMatrix) -> Result<ShiftInvert<'a>> {
    let hd = h.diagonal();
    let md = m.diagonal();
    let scale = hd
        .iter()
        .zip(&md)
        .map(|(a, b)| (a / b).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut step = 1e-3 * scale;
    let mut sigma = 0.0;
    for _ in 0..200 {
        if let Ok(factor) = SkylineLdl::factor(&shifted(h, m, sigma), sigma) {
            if factor.negative_count() == 0 {
                return Ok(ShiftInvert { m, factor, sigma });
            }
        }
        sigma = -step;
        step *= 2.0;
    }
    Err(Error::Convergence {
        requested: 0,
        converged: 0,
        reason: "could not place a shift below the spectrum".into(),
        partial: Vec::new(),
    })
}

struct Krylov<'a> {
    op: &'a ShiftInvert<'a>,
    m: &'a SymmetricSparseMatrix,
    basis: Vec<Vec<f64>>,
    /// Column `j`: coefficients of `op(q_j)` on `q_0 .. q_len` at the time
    /// `q_j` was expanded.
    columns: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl Krylov<'_> {
    fn dim(&self) -> usize {
        self.m.dim()
    }

    /// M-orthogonalizes `w` against the basis (twice if needed), returning
    /// the coefficients removed.
    fn orthogonalize(&self, w: &mut [f64]) -> Vec<f64> {
        let mut coef = vec![0.0; self.basis.len()];
        let mut mw = self.m.mul_vec(w);
        let mut before = dot(w, &mw).max(0.0).sqrt();
        for _ in 0..3 {
            let c: Vec<f64> = self.basis.iter().map(|q| dot(q, &mw)).collect();
            for (q, ci) in self.basis.iter().zip(&c) {
                axpy(-ci, q, w);
            }
            for (a, ci) in coef.iter_mut().zip(&c) {
                *a += ci;
            }
            self.m.mul_vec_into(w, &mut mw);
            let after = dot(w, &mw).max(0.0).sqrt();
            // one pass suffices unless heavy cancellation happened
            if after > 0.7 * before {
                break;
            }
            before = after;
        }
        coef
    }

    fn m_norm(&self, w: &[f64]) -> f64 {
        self.m.quad_form(w).max(0.0).sqrt()
    }

    /// Appends a random direction orthogonal to the basis. Returns false when
    /// the basis already spans the space.
    fn inject(&mut self) -> bool {
        for _ in 0..4 {
            if self.basis.len() >= self.dim() {
                return false;
            }
            let mut w: Vec<f64> = (0..self.dim()).map(|_| self.rng.random_range(-1.0..1.0)).collect();
            let n0 = self.m_norm(&w);
            self.orthogonalize(&mut w);
            let n1 = self.m_norm(&w);
            if n1 > 1e-8 * n0 {
                w.iter_mut().for_each(|v| *v /= n1);
                self.basis.push(w);
                return true;
            }
        }
        false
    }

    /// Expands the next unexpanded basis vector.
    fn step(&mut self) -> bool {
        let j = self.columns.len();
        if j == self.basis.len() && !self.inject() {
            return false;
        }
        let mut w = self.op.apply(&self.basis[j]);
        let scale = self.m_norm(&w);
        let mut coef = self.orthogonalize(&mut w);
        let beta = self.m_norm(&w);
        if beta > 1e-12 * scale && self.basis.len() < self.dim() {
            w.iter_mut().for_each(|v| *v /= beta);
            self.basis.push(w);
            coef.push(beta);
        }
        self.columns.push(coef);
        true
    }

    /// Ritz pairs of the expanded part: `(theta, y, residual bound)` sorted
    /// by descending theta.
    fn ritz(&self) -> Vec<(f64, DVector<f64>, f64)> {
        let p = self.columns.len();
        let g = DMatrix::from_fn(p, p, |i, j| {
            let a = self.columns[j].get(i).copied().unwrap_or(0.0);
            let b = self.columns[i].get(j).copied().unwrap_or(0.0);
            0.5 * (a + b)
        });
        let eig = g.symmetric_eigen();
        let tail = self.basis.len();
        let mut out: Vec<_> = (0..p)
            .map(|i| {
                let y = eig.eigenvectors.column(i).into_owned();
                let mut r2 = 0.0;
                for l in p..tail {
                    let s: f64 = (0..p)
                        .map(|j| y[j] * self.columns[j].get(l).copied().unwrap_or(0.0))
                        .sum();
                    r2 += s * s;
                }
                (eig.eigenvalues[i], y, r2.sqrt())
            })
            .collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }

    fn vector(&self, y: &DVector<f64>) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (q, &c) in self.basis.iter().zip(y.iter()) {
            axpy(c, q, &mut x);
        }
        x
    }
}

impl Eigensolver for LanczosSolver {
    fn name(&self) -> &'static str {
        "lanczos"
    }

    fn solve_lowest(
        &self,
        h: &SymmetricSparseMatrix,
        m: &SymmetricSparseMatrix,
        k: usize,
        tol: f64,
    ) -> Result<Vec<EigenPair>> {
        check_inputs(h, m, k)?;
        if k == 0 {
            return Ok(Vec::new());
        }
        let n = h.dim();
        let op = lower_shift(h, m)?;
        let h_norm = h.norm_inf();
        let max_basis = if self.max_basis == 0 { (8 * k).max(400) } else { self.max_basis }.min(n);
        let mut kry = Krylov {
            op: &op,
            m,
            basis: Vec::new(),
            columns: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        };
        for _ in 0..self.block.max(1) {
            kry.inject();
        }
        // values past k act as guards: the inertia check needs a clean gap
        // at or above the k-th eigenvalue
        let mut want = (k + 1).min(n);
        let mut target = (2 * want + 20).min(max_basis);
        let mut best: Vec<EigenPair> = Vec::new();
        loop {
            while kry.columns.len() < target {
                if !kry.step() {
                    break;
                }
            }
            let p = kry.columns.len();
            let ritz = kry.ritz();
            let exhausted = p == kry.basis.len() && p == n;
            let converged = ritz
                .iter()
                .take_while(|(theta, _, r)| exhausted || *r <= self.ritz_tol * theta.abs())
                .count();
            let mut pairs = Vec::new();
            for (theta, y, _) in ritz.iter().take(converged.min(want)) {
                let mut x = kry.vector(y);
                let nx = m.quad_form(&x).sqrt();
                x.iter_mut().for_each(|v| *v /= nx);
                fix_sign(&mut x);
                let energy = op.sigma + 1.0 / theta;
                let res = residual(h, m, &x, energy);
                pairs.push(EigenPair {
                    energy,
                    coefficients: x,
                    residual_norm: res,
                });
            }
            let accurate = pairs
                .iter()
                .take_while(|p| p.residual_norm <= tol * h_norm * norm2(&p.coefficients))
                .count();
            if exhausted && accurate >= k {
                pairs.truncate(k);
                return Ok(pairs);
            }
            if accurate > k {
                let cut = (k..accurate).find(|&j| {
                    let (a, b) = (pairs[j - 1].energy, pairs[j].energy);
                    b - a > 1e-9 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
                });
                match cut {
                    Some(j) => {
                        let (a, b) = (pairs[j - 1].energy, pairs[j].energy);
                        let below = count_below(h, m, 0.5 * (a + b), 1e-3 * (b - a))?;
                        if below == j {
                            pairs.truncate(k);
                            return Ok(pairs);
                        }
                        if below < j {
                            return Err(Error::Invariant(format!(
                                "inertia reports {below} eigenvalues below {}, Lanczos found {j}",
                                0.5 * (a + b)
                            )));
                        }
                        // eigenvalues were skipped: search fresh directions
                        for _ in 0..(below - j) {
                            kry.inject();
                        }
                    }
                    None => want = (accurate + 4).min(n),
                }
            }
            if pairs.len() > best.len() {
                best = pairs;
            }
            if target >= max_basis || exhausted || kry.columns.len() < target {
                let converged = best.len().min(k);
                best.truncate(k);
                return Err(Error::Convergence {
                    requested: k,
                    converged,
                    reason: format!("Krylov basis limit {max_basis} reached"),
                    partial: best,
                });
            }
            target = (target + (target / 4).max(20)).min(max_basis);
        }
    }
}

/// Makes the largest-magnitude entry positive so results are reproducible.
fn fix_sign(x: &mut [f64]) {
    let mut big = 0.0f64;
    for &v in x.iter() {
        if v.abs() > big.abs() {
            big = v;
        }
    }
    if big < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Dense reference solver: Cholesky reduction to a standard problem and a
/// full symmetric eigendecomposition. Meant for small problems and tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct DenseSolver;

impl Eigensolver for DenseSolver {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn solve_lowest(
        &self,
        h: &SymmetricSparseMatrix,
        m: &SymmetricSparseMatrix,
        k: usize,
        _tol: f64,
    ) -> Result<Vec<EigenPair>> {
        check_inputs(h, m, k)?;
        let chol = m
            .to_dense()
            .cholesky()
            .ok_or_else(|| Error::Invariant("mass matrix is not positive definite".into()))?;
        let l = chol.l();
        let linv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Invariant("singular Cholesky factor".into()))?;
        let c = &linv * h.to_dense() * linv.transpose();
        let c = 0.5 * (&c + c.transpose());
        let eig = c.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let lt_inv = linv.transpose();
        Ok(order
            .into_iter()
            .take(k)
            .map(|i| {
                let x = &lt_inv * eig.eigenvectors.column(i);
                let mut x: Vec<f64> = x.iter().copied().collect();
                fix_sign(&mut x);
                let energy = eig.eigenvalues[i];
                EigenPair {
                    energy,
                    residual_norm: residual(h, m, &x, energy),
                    coefficients: x,
                }
            })
            .collect())
    }
}

pub type SolverFactory = fn() -> Box<dyn Eigensolver>;

/// Name-keyed table of eigensolver constructors.
#[derive(Debug, Clone, Default)]
pub struct SolverRegistry {
    factories: BTreeMap<&'static str, SolverFactory>,
}

impl SolverRegistry {
    pub fn builtin() -> Self {
        let mut reg = Self::default();
        reg.register("lanczos", || Box::new(LanczosSolver::default()));
        reg.register("dense", || Box::new(DenseSolver));
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: SolverFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn create(&self, name: &str) -> Result<Box<dyn Eigensolver>> {
        self.factories
            .get(name)
            .map(|f| f())
            .ok_or_else(|| Error::UnknownStrategy {
                family: "eigensolver",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }
}

/// Lowest `k` eigenpairs with the default shift-invert Lanczos solver.
pub fn solve_lowest(
    h: &SymmetricSparseMatrix,
    m: &SymmetricSparseMatrix,
    k: usize,
    tol: f64,
) -> Result<Vec<EigenPair>> {
    LanczosSolver::default().solve_lowest(h, m, k, tol)
}

/// Indices `i` whose gap `E_{i+1} - E_i` is smaller than the energy
/// uncertainty implied by the residuals, i.e. splittings that the solve does
/// not certify.
pub fn uncertified_splittings(pairs: &[EigenPair], m_min_eig: f64) -> Vec<usize> {
    pairs
        .windows(2)
        .enumerate()
        .filter(|(_, w)| {
            let bound = (w[0].residual_norm + w[1].residual_norm) / m_min_eig.max(f64::MIN_POSITIVE).sqrt();
            w[1].energy - w[0].energy < bound
        })
        .map(|(i, _)| i)
        .collect()
}
