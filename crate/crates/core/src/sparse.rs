//! Symmetric sparse storage and a profile (skyline) LDL^T factorization.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Symmetric matrix storing only the upper triangle (diagonal included) in
/// compressed rows, so symmetry is exact by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymmetricSparseMatrix {
    /// Builds the matrix from `(i, j, value)` entries; lower-triangle entries
    /// are mirrored into the upper triangle and duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .iter()
            .map(|&(i, j, v)| if i <= j { (i, j, v) } else { (j, i, v) })
            .collect();
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (i, j, v) in entries {
            assert!(j < n, "entry ({i}, {j}) outside dimension {n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let t: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), &t)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored (upper-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries `(i, j, value)` with `i <= j`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.fill(0.0);
        for i in 0..self.n {
            let xi = x[i];
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                let v = self.vals[k];
                if j == i {
                    acc += v * xi;
                } else {
                    acc += v * x[j];
                    y[j] += v * xi;
                }
            }
            y[i] += acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.mul_vec(y))
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// `sum_k a_k A_k` over matrices of equal dimension; the pattern is the
    /// union of the input patterns.
    pub fn linear_combination(terms: &[(f64, &SymmetricSparseMatrix)]) -> Result<Self> {
        let n = terms.first().map_or(0, |t| t.1.n);
        let mut triplets = Vec::new();
        for (a, m) in terms {
            if m.n != n {
                return Err(Error::Dimension { expected: n, found: m.n });
            }
            triplets.extend(m.upper_entries().map(|(i, j, v)| (i, j, a * v)));
        }
        Ok(Self::from_triplets(n, &triplets))
    }

    /// Maximum absolute row sum, the infinity norm of the full matrix.
    pub fn norm_inf(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for (i, j, v) in self.upper_entries() {
            sums[i] += v.abs();
            if i != j {
                sums[j] += v.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.upper_entries() {
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
        d
    }

    /// Coordinate text dump: a `n nnz` header line, then one `row col value`
    /// line per stored upper-triangle entry, 1-based.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.n, self.nnz())?;
        for (i, j, v) in self.upper_entries() {
            writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a x`.
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `A = L D L^T` in envelope storage, without pivoting. Works for indefinite
/// matrices as long as no pivot vanishes; the signs of `D` give the inertia.
#[derive(Debug, Clone)]
pub struct SkylineLdl {
    /// Column of the first stored entry in each row of `L`.
    first: Vec<usize>,
    /// Offset of each row's strictly-lower part in `lower`.
    start: Vec<usize>,
    lower: Vec<f64>,
    d: Vec<f64>,
}

impl SkylineLdl {
    /// Factors `a`. A pivot smaller than `1e-13` times the row scale is
    /// reported as a breakdown; `shift` is only carried into the error.
    pub fn factor(a: &SymmetricSparseMatrix, shift: f64) -> Result<Self> {
        let n = a.dim();
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in a.upper_entries() {
            first[j] = first[j].min(i);
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut lower = vec![0.0; start[n]];
        let mut d = vec![0.0; n];
        let mut scale = vec![0.0f64; n];
        for (i, j, v) in a.upper_entries() {
            if i == j {
                d[i] = v;
            } else {
                lower[start[j] + (i - first[j])] = v;
            }
            scale[i] = scale[i].max(v.abs());
            scale[j] = scale[j].max(v.abs());
        }
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = lower.split_at_mut(start[i]);
            let row = &mut rest[..i - fi];
            // row holds a_ik; overwrite with g_ik = l_ik d_k, then l_ik
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let rj = &done[start[j]..start[j] + (j - fj)];
                let mut s = row[j - fi];
                for k in lo..j {
                    s -= row[k - fi] * rj[k - fj];
                }
                row[j - fi] = s;
            }
            let mut di = d[i];
            for j in fi..i {
                let g = row[j - fi];
                let l = g / d[j];
                di -= g * l;
                row[j - fi] = l;
            }
            if !(di.abs() > 1e-13 * scale[i]) {
                return Err(Error::Factorization { row: i, shift });
            }
            d[i] = di;
        }
        Ok(Self { first, start, lower, d })
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Number of negative pivots, which equals the number of negative
    /// eigenvalues of the factored matrix.
    pub fn negative_count(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            let s: f64 = row.iter().zip(&x[fi..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let xi = x[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            for (v, l) in x[fi..i].iter_mut().zip(row) {
                *v -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
