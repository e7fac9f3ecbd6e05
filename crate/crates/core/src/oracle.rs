//! Independent finite-difference reference spectra on uniform grids.
//!
//! Shares nothing with the finite-element path except the pointwise
//! potential and interaction shapes. The two-particle problem is solved in
//! the orthonormal symmetric sector, split by mirror parity, with a dense
//! eigenvalue solve per block.

use nalgebra::DMatrix;

use crate::domain::{InteractionKind, InteractionSpec, PotentialSpec};
use crate::error::{Error, Result};
use crate::interaction;

/// Default cap on the dense working set.
pub const DEFAULT_MEMORY_LIMIT: usize = 2 << 30;

/// Uniform grid of `n` interior points on `[0, length]`, with the one-body
/// potential averaged over each cell so the barrier edges enter at second
/// order.
#[derive(Debug, Clone)]
struct Grid {
    h: f64,
    x: Vec<f64>,
    v: Vec<f64>,
}

impl Grid {
    fn new(spec: &PotentialSpec, isolated: bool, n: usize) -> Result<Self> {
        spec.validate()?;
        if n == 0 {
            return Err(Error::Config("oracle grid needs at least one interior point".into()));
        }
        let length = if isolated { spec.well_length } else { spec.total_length() };
        let h = length / (n + 1) as f64;
        let (b0, b1) = (spec.well_length, spec.well_length + spec.barrier_width);
        let x: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
        let v = x
            .iter()
            .map(|&xi| {
                if isolated {
                    return 0.0;
                }
                let lo = (xi - 0.5 * h).max(b0);
                let hi = (xi + 0.5 * h).min(b1);
                spec.barrier_height * (hi - lo).max(0.0) / h
            })
            .collect();
        Ok(Self { h, x, v })
    }

    fn len(&self) -> usize {
        self.x.len()
    }
}

/// Lowest `k` eigenvalues of `-d^2/dx^2 + V` with Dirichlet ends, by Sturm
/// bisection on the tridiagonal matrix. `isolated` restricts to the left well.
pub fn fd_oracle_1d(spec: &PotentialSpec, isolated: bool, n_grid: usize, k: usize) -> Result<Vec<f64>> {
    let g = Grid::new(spec, isolated, n_grid)?;
    let n = g.len();
    if k > n {
        return Err(Error::Dimension { expected: n, found: k });
    }
    let off = -1.0 / (g.h * g.h);
    let diag: Vec<f64> = g.v.iter().map(|v| 2.0 / (g.h * g.h) + v).collect();
    let count = |e: f64| -> usize {
        let mut neg = 0;
        let mut q = 1.0;
        for i in 0..n {
            let prev = if i == 0 { 0.0 } else { off * off / q };
            q = diag[i] - e - prev;
            if q == 0.0 {
                q = f64::EPSILON * (diag[i].abs() + off.abs());
            }
            if q < 0.0 {
                neg += 1;
            }
        }
        neg
    };
    let hi = diag.iter().fold(0.0f64, |m, d| m.max(d + 2.0 * off.abs()));
    let lo = diag.iter().fold(f64::INFINITY, |m, d| m.min(d - 2.0 * off.abs()));
    Ok((0..k)
        .map(|j| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m == a || m == b {
                    break;
                }
                if count(m) > j {
                    b = m;
                } else {
                    a = m;
                }
            }
            0.5 * (a + b)
        })
        .collect())
}

/// Bytes needed by [`fd_oracle`] on `n_grid` points per axis.
pub fn fd_memory_estimate(n_grid: usize, hard_core: bool) -> usize {
    let dim = if hard_core { n_grid * (n_grid - 1) / 2 } else { n_grid * (n_grid + 1) / 2 };
    let half = dim.div_ceil(2);
    // one block plus the solver's copy
    2 * half * half * std::mem::size_of::<f64>()
}

/// Lowest `k` two-particle energies at strength `u` on the full double well.
pub fn fd_oracle(
    spec: &PotentialSpec,
    int_spec: &InteractionSpec,
    u: f64,
    n_grid: usize,
    k: usize,
) -> Result<Vec<f64>> {
    fd_oracle_with_limit(spec, int_spec, u, n_grid, k, false, DEFAULT_MEMORY_LIMIT)
}

pub fn fd_oracle_with_limit(
    spec: &PotentialSpec,
    int_spec: &InteractionSpec,
    u: f64,
    n_grid: usize,
    k: usize,
    isolated: bool,
    memory_limit: usize,
) -> Result<Vec<f64>> {
    int_spec.validate()?;
    let hard = int_spec.kind == InteractionKind::HardCoulomb;
    let bytes = fd_memory_estimate(n_grid.max(2), hard);
    if bytes > memory_limit {
        return Err(Error::Size {
            dimension: n_grid,
            bytes,
            limit: memory_limit,
        });
    }
    let g = Grid::new(spec, isolated, n_grid)?;
    let n = g.len();
    let shape = match int_spec.kind {
        InteractionKind::Contact => None,
        _ => Some(interaction::build(int_spec)?),
    };
    let w = |i: usize, j: usize| -> Result<f64> {
        match &shape {
            None => Ok(if i == j { 1.0 / g.h } else { 0.0 }),
            Some(s) => s.pointwise((g.x[i] - g.x[j]).abs()),
        }
    };

    // orthonormal bosonic states (i >= j), hard core drops i == j
    let mut index = vec![usize::MAX; n * n];
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..=i {
            if hard && i == j {
                continue;
            }
            index[i * n + j] = pairs.len();
            pairs.push((i, j));
        }
    }
    let kin = 1.0 / (g.h * g.h);
    // rows of the symmetric-sector matrix as (column, value) lists
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let mut diag = 4.0 * kin + g.v[i] + g.v[j];
        if !(hard && i == j) {
            diag += u * w(i, j)?;
        }
        let mut row = vec![(index[i * n + j], diag)];
        let norm_p = if i == j { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
        // H|ij> has -kin at the four neighbours; fold them into the sector
        let mut acc: Vec<(usize, usize)> = Vec::with_capacity(8);
        for (a, b) in [(i as isize - 1, j as isize), (i as isize + 1, j as isize), (i as isize, j as isize - 1), (i as isize, j as isize + 1)] {
            if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                continue;
            }
            acc.push((a as usize, b as usize));
        }
        if i != j {
            for (a, b) in acc.clone() {
                acc.push((b, a));
            }
        }
        // components of H e_p at ordered positions (k, l), k >= l
        let mut comp: Vec<((usize, usize), f64)> = Vec::new();
        for (a, b) in acc {
            let key = if a >= b { (a, b) } else { continue };
            comp.push((key, -kin * norm_p));
        }
        comp.sort_by_key(|c| c.0);
        let mut merged: Vec<((usize, usize), f64)> = Vec::new();
        for (key, v) in comp {
            match merged.last_mut() {
                Some(last) if last.0 == key => last.1 += v,
                _ => merged.push((key, v)),
            }
        }
        for ((a, b), v) in merged {
            if hard && a == b {
                continue;
            }
            let scale = if a == b { 1.0 } else { std::f64::consts::SQRT_2 };
            row.push((index[a * n + b], scale * v));
        }
        rows.push(row);
    }

    // mirror x_i -> x_{n-1-i} maps (i, j) to (n-1-j, n-1-i)
    let mirror: Vec<usize> = pairs.iter().map(|&(i, j)| index[(n - 1 - j) * n + (n - 1 - i)]).collect();
    let mut energies = Vec::new();
    for sign in [1.0, -1.0] {
        let mut reps = Vec::new();
        for p in 0..pairs.len() {
            let q = mirror[p];
            if q > p || (q == p && sign > 0.0) {
                reps.push(p);
            }
        }
        let mut slot = vec![usize::MAX; pairs.len()];
        for (r, &p) in reps.iter().enumerate() {
            slot[p] = r;
            slot[mirror[p]] = r;
        }
        let m = reps.len();
        if m == 0 {
            continue;
        }
        let mut block = DMatrix::<f64>::zeros(m, m);
        for (r, &p) in reps.iter().enumerate() {
            let q = mirror[p];
            let ap = if q == p { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
            // f_r = ap (e_p + sign e_q), or e_p on the mirror line
            let srcs = if q == p { vec![(p, 1.0)] } else { vec![(p, ap), (q, sign * ap)] };
            for (src, c) in srcs {
                for &(col, v) in &rows[src] {
                    let s = slot[col];
                    if s == usize::MAX {
                        continue;
                    }
                    let t = reps[s];
                    let bs = if mirror[t] == t { 1.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
                    let sgn = if col == t { 1.0 } else { sign };
                    block[(s, r)] += c * v * bs * sgn;
                }
            }
        }
        energies.extend(block.symmetric_eigenvalues().iter().copied());
    }
    energies.sort_by(f64::total_cmp);
    energies.truncate(k);
    if energies.len() < k {
        return Err(Error::Dimension {
            expected: energies.len(),
            found: k,
        });
    }
    Ok(energies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::InteractionKind;

    fn tiny() -> PotentialSpec {
        PotentialSpec::new(6.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn isolated_infinite_well() {
        let e = fd_oracle_1d(&PotentialSpec::default(), true, 2000, 3).unwrap();
        let e1 = std::f64::consts::PI.powi(2) / 2500.0;
        assert!((e[0] - e1).abs() < 1e-6);
        assert!((e[1] / e[0] - 4.0).abs() < 1e-4);
    }

    #[test]
    fn bisection_matches_dense_tridiagonal() {
        let a = fd_oracle_1d(&tiny(), false, 40, 6).unwrap();
        let g = Grid::new(&tiny(), false, 40).unwrap();
        let kin = 1.0 / (g.h * g.h);
        let t = DMatrix::from_fn(40, 40, |i, j| match i.abs_diff(j) {
            0 => 2.0 * kin + g.v[i],
            1 => -kin,
            _ => 0.0,
        });
        let mut b: Vec<f64> = t.symmetric_eigenvalues().iter().copied().collect();
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 * y.abs().max(1.0), "{x} {y}");
        }
    }

    #[test]
    fn noninteracting_pair_is_sum_of_one_body_levels() {
        let one = fd_oracle_1d(&tiny(), false, 30, 6).unwrap();
        let mut sums = Vec::new();
        for i in 0..6 {
            for j in 0..=i {
                sums.push(one[i] + one[j]);
            }
        }
        sums.sort_by(f64::total_cmp);
        let two = fd_oracle(&tiny(), &InteractionSpec::new(InteractionKind::Contact, 0.0), 0.0, 30, 6).unwrap();
        for (a, b) in two.iter().zip(&sums) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn hard_core_zero_strength_is_fermionized() {
        let one = fd_oracle_1d(&tiny(), false, 30, 4).unwrap();
        let two = fd_oracle(&tiny(), &InteractionSpec::new(InteractionKind::HardCoulomb, 0.0), 0.0, 30, 2).unwrap();
        assert!((two[0] - one[0] - one[1]).abs() < 1e-10);
        assert!((two[1] - one[0] - one[2]).abs() < 1e-10);
    }

    #[test]
    fn parity_blocks_match_full_sector() {
        // brute force: dense symmetric-sector matrix without the parity split
        let spec = tiny();
        let int = InteractionSpec::new(InteractionKind::SoftCoulomb, 0.7);
        let split = fd_oracle(&spec, &int, 0.7, 14, 20).unwrap();
        let g = Grid::new(&spec, false, 14).unwrap();
        let n = g.len();
        let kin = 1.0 / (g.h * g.h);
        let full = DMatrix::from_fn(n * n, n * n, |p, q| {
            let (i, j, k, l) = (p / n, p % n, q / n, q % n);
            let mut v = 0.0;
            if p == q {
                v += 4.0 * kin + g.v[i] + g.v[j] + 0.7 / ((g.x[i] - g.x[j]).powi(2) + 1.0).sqrt();
            }
            if (i == k && j.abs_diff(l) == 1) || (j == l && i.abs_diff(k) == 1) {
                v -= kin;
            }
            v
        });
        // symmetric sector via projector onto exchange-even vectors
        let mut basis = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                let mut e = nalgebra::DVector::zeros(n * n);
                if i == j {
                    e[i * n + i] = 1.0;
                } else {
                    e[i * n + j] = std::f64::consts::FRAC_1_SQRT_2;
                    e[j * n + i] = std::f64::consts::FRAC_1_SQRT_2;
                }
                basis.push(e);
            }
        }
        let e = DMatrix::from_columns(&basis);
        let mut ev: Vec<f64> = (e.transpose() * full * &e).symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in split.iter().zip(&ev) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn size_error() {
        let err = fd_oracle_with_limit(
            &PotentialSpec::default(),
            &InteractionSpec::new(InteractionKind::SoftCoulomb, 1.0),
            1.0,
            400,
            1,
            false,
            DEFAULT_MEMORY_LIMIT,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Size { .. }));
    }
}
