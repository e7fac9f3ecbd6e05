//! Matrix assembly for P1 elements: the 1D single-particle problem, the
//! two-particle operators in the bosonic sector, and region overlaps.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{potential_eval, InteractionKind, InteractionSpec, PotentialSpec, Region};
use crate::error::{Error, Result};
use crate::interaction;
use crate::mesh::{Mesh1D, Mesh2D, NodeClass};
use crate::quadrature::TRIANGLE_3;
use crate::sparse::SymmetricSparseMatrix;

/// How mass and one-body potential terms are integrated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassScheme {
    /// Exact Galerkin integrals.
    #[default]
    Consistent,
    /// Nodal (product trapezoid) quadrature. Mass and potential become
    /// diagonal and the two-particle operator is an exact tensor sum of the
    /// 1D one.
    Lumped,
}

impl MassScheme {
    pub fn name(self) -> &'static str {
        match self {
            MassScheme::Consistent => "consistent",
            MassScheme::Lumped => "lumped",
        }
    }
}

impl fmt::Display for MassScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MassScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(MassScheme::Consistent),
            "lumped" => Ok(MassScheme::Lumped),
            _ => Err(Error::UnknownStrategy {
                family: "mass scheme",
                name: s.into(),
                available: "consistent, lumped".into(),
            }),
        }
    }
}

/// Maps mesh nodes to unknowns; `None` marks an eliminated node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMap {
    target: Vec<Option<usize>>,
    dim: usize,
}

impl NodeMap {
    pub fn identity(n: usize) -> Self {
        Self {
            target: (0..n).map(Some).collect(),
            dim: n,
        }
    }

    pub fn get(&self, node: usize) -> Option<usize> {
        self.target[node]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.target.len()
    }
}

/// Exchange-symmetric P1 basis. Unknown `k` belongs to the node pair
/// `(i, j)` with `i >= j` and its basis function is `phi_ij + phi_ji`
/// (just `phi_ii` on the diagonal), so coefficients are nodal values.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonicBasis {
    n_axis: usize,
    pairs: Vec<(usize, usize)>,
    map: NodeMap,
    excludes_diagonal: bool,
}

impl BosonicBasis {
    /// Outer-boundary nodes are always eliminated; diagonal nodes only when
    /// `exclude_diagonal` is set.
    pub fn new(mesh: &Mesh2D, exclude_diagonal: bool) -> Self {
        let n = mesh.n_axis();
        let class = mesh.node_class();
        let mut target = vec![None; n * n];
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                let p = mesh.node_index(i, j);
                let keep = match class[p] {
                    NodeClass::OuterBoundary => false,
                    NodeClass::Diagonal => !exclude_diagonal,
                    NodeClass::Interior => true,
                };
                if keep {
                    target[p] = Some(pairs.len());
                    target[mesh.node_index(j, i)] = Some(pairs.len());
                    pairs.push((i, j));
                }
            }
        }
        let dim = pairs.len();
        Self {
            n_axis: n,
            pairs,
            map: NodeMap { target, dim },
            excludes_diagonal: exclude_diagonal,
        }
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn n_axis(&self) -> usize {
        self.n_axis
    }

    pub fn excludes_diagonal(&self) -> bool {
        self.excludes_diagonal
    }

    pub fn node_map(&self) -> &NodeMap {
        &self.map
    }

    /// Axis indices `(i, j)`, `i >= j`, of unknown `k`.
    pub fn pair(&self, k: usize) -> (usize, usize) {
        self.pairs[k]
    }

    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.n_axis || j >= self.n_axis {
            return None;
        }
        self.map.get(i * self.n_axis + j)
    }

    /// Nodal values on the full tensor grid, zero at eliminated nodes.
    pub fn expand(&self, coeffs: &[f64]) -> Vec<f64> {
        (0..self.map.n_nodes())
            .map(|p| self.map.get(p).map_or(0.0, |k| coeffs[k]))
            .collect()
    }

    /// Carries coefficients from `from` into this basis node for node. Both
    /// meshes must share their leading axis nodes (the isolated-well mesh is a
    /// prefix of the full one); unknowns missing in `from` become zero.
    pub fn embed(&self, from: &BosonicBasis, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != from.dim() {
            return Err(Error::Dimension {
                expected: from.dim(),
                found: coeffs.len(),
            });
        }
        let mut out = vec![0.0; self.dim()];
        for (k, &(i, j)) in from.pairs.iter().enumerate() {
            match self.index_of(i, j) {
                Some(t) => out[t] = coeffs[k],
                None if coeffs[k] == 0.0 => {}
                None => {
                    return Err(Error::Invariant(format!(
                        "node ({i}, {j}) carries a nonzero value but is eliminated in the target basis"
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Coefficients of the reflected function `f(L - x1, L - x2)`.
    pub fn mirror(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.n_axis;
        let mut out = vec![0.0; self.dim()];
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let t = self
                .index_of(n - 1 - i, n - 1 - j)
                .expect("mirror image of an unknown is an unknown");
            out[t] = coeffs[k];
        }
        out
    }

    /// Restricts a matrix over all tensor-grid nodes to the bosonic sector.
    pub fn reduce(&self, full: &SymmetricSparseMatrix) -> Result<SymmetricSparseMatrix> {
        if full.dim() != self.map.n_nodes() {
            return Err(Error::Dimension {
                expected: self.map.n_nodes(),
                found: full.dim(),
            });
        }
        let mut asm = Assembler::new(&self.map);
        for (p, q, v) in full.upper_entries() {
            asm.add(p, q, v);
            if p != q {
                asm.add(q, p, v);
            }
        }
        Ok(asm.finish())
    }
}

/// Accumulates element contributions through a [`NodeMap`].
///
/// Contributions arrive as ordered node pairs `(p, q)` (a full element matrix
/// gives both orders). Keeping only pairs whose unknowns satisfy `k <= l`
/// yields, for symmetric input, the sum over all node pairs of the two
/// orbits, which is the Galerkin matrix of the symmetrized basis.
#[derive(Debug)]
pub(crate) struct Assembler<'a> {
    map: &'a NodeMap,
    triplets: Vec<(usize, usize, f64)>,
}

impl<'a> Assembler<'a> {
    pub(crate) fn new(map: &'a NodeMap) -> Self {
        Self {
            map,
            triplets: Vec::new(),
        }
    }

    pub(crate) fn add(&mut self, p: usize, q: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        if let (Some(k), Some(l)) = (self.map.get(p), self.map.get(q)) {
            if k <= l {
                self.triplets.push((k, l, v));
            }
        }
    }

    pub(crate) fn add_local<const N: usize>(&mut self, nodes: &[usize; N], m: &[[f64; N]; N]) {
        for a in 0..N {
            for b in 0..N {
                self.add(nodes[a], nodes[b], m[a][b]);
            }
        }
    }

    pub(crate) fn finish(self) -> SymmetricSparseMatrix {
        SymmetricSparseMatrix::from_triplets(self.map.dim(), &self.triplets)
    }
}

/// Loops over triangles in parallel chunks; `local` returns the element
/// matrix or `None` to skip the triangle.
pub(crate) fn assemble_triangles<F>(mesh: &Mesh2D, map: &NodeMap, local: F) -> Result<SymmetricSparseMatrix>
where
    F: Fn(&[usize; 3], &P1Triangle) -> Result<Option<[[f64; 3]; 3]>> + Sync,
{
    let chunks: Vec<Vec<(usize, usize, f64)>> = mesh
        .triangles()
        .par_chunks(2048)
        .map(|chunk| {
            let mut asm = Assembler::new(map);
            for t in chunk {
                let tri = P1Triangle::new(t.map(|p| mesh.coords(p)));
                if let Some(m) = local(t, &tri)? {
                    asm.add_local(t, &m);
                }
            }
            Ok(asm.triplets)
        })
        .collect::<Result<_>>()?;
    let triplets: Vec<_> = chunks.into_iter().flatten().collect();
    Ok(SymmetricSparseMatrix::from_triplets(map.dim(), &triplets))
}

/// Linear triangle with its barycentric gradients.
#[derive(Debug, Clone, Copy)]
pub(crate) struct P1Triangle {
    pub verts: [[f64; 2]; 3],
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl P1Triangle {
    pub(crate) fn new(verts: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = verts;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let grads = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        Self {
            verts,
            area: 0.5 * det,
            grads,
        }
    }

    pub(crate) fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        let v = &self.verts;
        [
            bary[0] * v[0][0] + bary[1] * v[1][0] + bary[2] * v[2][0],
            bary[0] * v[0][1] + bary[1] * v[1][1] + bary[2] * v[2][1],
        ]
    }

    pub(crate) fn barycentric(&self, x: [f64; 2]) -> [f64; 3] {
        let v0 = self.verts[0];
        let mut l = [0.0; 3];
        for (a, g) in self.grads.iter().enumerate().skip(1) {
            l[a] = g[0] * (x[0] - v0[0]) + g[1] * (x[1] - v0[1]);
        }
        l[0] = 1.0 - l[1] - l[2];
        l
    }

    pub(crate) fn stiffness(&self) -> [[f64; 3]; 3] {
        let mut k = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let g = &self.grads;
                k[a][b] = self.area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
        k
    }

    pub(crate) fn mass(&self) -> [[f64; 3]; 3] {
        let mut m = [[self.area / 12.0; 3]; 3];
        for (a, row) in m.iter_mut().enumerate() {
            row[a] = self.area / 6.0;
        }
        m
    }
}

fn consistent_1d(h: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    (
        [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]],
        [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]],
    )
}

/// Single-particle `(H1, M1)` on the interior nodes of `mesh`, ordered as
/// the mesh nodes.
pub fn assemble_1d(
    mesh: &Mesh1D,
    spec: &PotentialSpec,
    scheme: MassScheme,
) -> Result<(SymmetricSparseMatrix, SymmetricSparseMatrix)> {
    let n = mesh.len();
    if n < 3 {
        return Err(Error::Config("a 1D mesh needs an interior node".into()));
    }
    let x = mesh.nodes();
    let idx = |i: usize| (i > 0 && i < n - 1).then(|| i - 1);
    let mut h_t = Vec::new();
    let mut m_t = Vec::new();
    for (a, b) in mesh.elements() {
        let h = x[b] - x[a];
        let v = potential_eval(0.5 * (x[a] + x[b]), spec)?;
        let (k, m) = consistent_1d(h);
        let m = match scheme {
            MassScheme::Consistent => m,
            MassScheme::Lumped => [[0.5 * h, 0.0], [0.0, 0.5 * h]],
        };
        let nodes = [a, b];
        for r in 0..2 {
            for c in 0..2 {
                if let (Some(i), Some(j)) = (idx(nodes[r]), idx(nodes[c])) {
                    if i <= j {
                        h_t.push((i, j, k[r][c] + v * m[r][c]));
                        m_t.push((i, j, m[r][c]));
                    }
                }
            }
        }
    }
    Ok((
        SymmetricSparseMatrix::from_triplets(n - 2, &h_t),
        SymmetricSparseMatrix::from_triplets(n - 2, &m_t),
    ))
}

/// Nodal weights of the 1D trapezoid rule: `(mass, potential)` per node.
fn nodal_weights(mesh: &Mesh1D, spec: &PotentialSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = mesh.nodes();
    let mut w = vec![0.0; x.len()];
    let mut wv = vec![0.0; x.len()];
    for (a, b) in mesh.elements() {
        let h = x[b] - x[a];
        let v = potential_eval(0.5 * (x[a] + x[b]), spec)?;
        for i in [a, b] {
            w[i] += 0.5 * h;
            wv[i] += 0.5 * h * v;
        }
    }
    Ok((w, wv))
}

/// Split of each node's trapezoid weight into the parts left and right of
/// `x_mid`.
fn nodal_split_weights(mesh: &Mesh1D, x_mid: f64) -> (Vec<f64>, Vec<f64>) {
    let x = mesh.nodes();
    let mut left = vec![0.0; x.len()];
    let mut right = vec![0.0; x.len()];
    for (a, b) in mesh.elements() {
        let c = 0.5 * (x[a] + x[b]);
        for (i, lo, hi) in [(a, x[a], c), (b, c, x[b])] {
            let l = (x_mid.min(hi) - lo).max(0.0);
            left[i] += l;
            right[i] += (hi - lo) - l;
        }
    }
    (left, right)
}

/// The U-independent operators of `H(U) = H0 + U V_int` in the bosonic
/// sector, with the mass and region-overlap matrices.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    pub basis: BosonicBasis,
    pub kind: InteractionKind,
    pub scheme: MassScheme,
    pub h0: SymmetricSparseMatrix,
    pub v_int: SymmetricSparseMatrix,
    pub mass: SymmetricSparseMatrix,
    pub s_i: SymmetricSparseMatrix,
    pub s_ii: SymmetricSparseMatrix,
    pub s_iii: SymmetricSparseMatrix,
}

impl OperatorBundle {
    pub fn hamiltonian(&self, u: f64) -> SymmetricSparseMatrix {
        SymmetricSparseMatrix::linear_combination(&[(1.0, &self.h0), (u, &self.v_int)])
            .expect("bundle matrices share one dimension")
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn region(&self, r: Region) -> &SymmetricSparseMatrix {
        match r {
            Region::I => &self.s_i,
            Region::II => &self.s_ii,
            Region::III => &self.s_iii,
        }
    }

    /// Dumps every matrix in coordinate text format into `dir`.
    pub fn write_coordinate(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, m) in [
            ("h0", &self.h0),
            ("v_int", &self.v_int),
            ("mass", &self.mass),
            ("s_i", &self.s_i),
            ("s_ii", &self.s_ii),
            ("s_iii", &self.s_iii),
        ] {
            let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{name}.mtx")))?);
            m.write_coordinate(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }
}

/// Assembles the two-particle operators. The strength in `int_spec` is not
/// used; `U` enters only through [`OperatorBundle::hamiltonian`].
pub fn assemble_2d(
    mesh: &Mesh2D,
    spec: &PotentialSpec,
    int_spec: &InteractionSpec,
    scheme: MassScheme,
) -> Result<OperatorBundle> {
    int_spec.validate()?;
    let model = interaction::build(int_spec)?;
    let basis = BosonicBasis::new(mesh, model.excludes_diagonal());
    let map = basis.node_map();
    let (h0, mass) = match scheme {
        MassScheme::Consistent => {
            let h0 = assemble_triangles(mesh, map, |_, tri| {
                let mut k = tri.stiffness();
                for q in &TRIANGLE_3 {
                    let x = tri.point(q.bary);
                    let v = potential_eval(x[0], spec)? + potential_eval(x[1], spec)?;
                    let w = q.weight * tri.area * v;
                    for a in 0..3 {
                        for b in 0..3 {
                            k[a][b] += w * q.bary[a] * q.bary[b];
                        }
                    }
                }
                Ok(Some(k))
            })?;
            let mass = assemble_triangles(mesh, map, |_, tri| Ok(Some(tri.mass())))?;
            (h0, mass)
        }
        MassScheme::Lumped => {
            let stiff = assemble_triangles(mesh, map, |_, tri| Ok(Some(tri.stiffness())))?;
            let (w, wv) = nodal_weights(mesh.axis(), spec)?;
            let mut pot = Assembler::new(map);
            let mut mass = Assembler::new(map);
            for p in 0..mesh.n_nodes() {
                let (i, j) = mesh.node_ij(p);
                pot.add(p, p, wv[i] * w[j] + w[i] * wv[j]);
                mass.add(p, p, w[i] * w[j]);
            }
            let h0 = SymmetricSparseMatrix::linear_combination(&[(1.0, &stiff), (1.0, &pot.finish())])?;
            (h0, mass.finish())
        }
    };
    let v_int = model.assemble(mesh, map)?;
    let [s_i, s_ii, s_iii] = assemble_region_overlaps(mesh, spec, &basis, scheme)?;
    Ok(OperatorBundle {
        basis,
        kind: int_spec.kind,
        scheme,
        h0,
        v_int,
        mass,
        s_i,
        s_ii,
        s_iii,
    })
}

/// Overlap matrices `S_R[i][j] = int_R phi_i phi_j` of the three regions.
///
/// The split lines `x1 = x_mid` and `x2 = x_mid` need not be mesh lines: in
/// the consistent scheme triangles are clipped against them and the pieces
/// integrated exactly, so the three matrices sum to the mass matrix.
pub fn assemble_region_overlaps(
    mesh: &Mesh2D,
    spec: &PotentialSpec,
    basis: &BosonicBasis,
    scheme: MassScheme,
) -> Result<[SymmetricSparseMatrix; 3]> {
    let x_mid = spec.x_mid();
    let map = basis.node_map();
    match scheme {
        MassScheme::Consistent => {
            let mut out = Vec::with_capacity(3);
            for region in Region::ALL {
                out.push(assemble_triangles(mesh, map, |_, tri| {
                    Ok(clipped_mass(tri, x_mid, region))
                })?);
            }
            Ok(out.try_into().expect("three regions"))
        }
        MassScheme::Lumped => {
            let (left, right) = nodal_split_weights(mesh.axis(), x_mid);
            let mut asm = [Assembler::new(map), Assembler::new(map), Assembler::new(map)];
            for p in 0..mesh.n_nodes() {
                let (i, j) = mesh.node_ij(p);
                asm[0].add(p, p, left[i] * left[j]);
                asm[1].add(p, p, left[i] * right[j] + right[i] * left[j]);
                asm[2].add(p, p, right[i] * right[j]);
            }
            Ok(asm.map(Assembler::finish))
        }
    }
}

/// `int phi_a phi_b` over the part of `tri` inside `region`.
fn clipped_mass(tri: &P1Triangle, x_mid: f64, region: Region) -> Option<[[f64; 3]; 3]> {
    let side = |c: usize| {
        let lo = tri.verts.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min);
        let hi = tri.verts.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max);
        if hi <= x_mid {
            Some(true)
        } else if lo >= x_mid {
            Some(false)
        } else {
            None
        }
    };
    let quadrants: &[(bool, bool)] = match region {
        Region::I => &[(true, true)],
        Region::II => &[(true, false), (false, true)],
        Region::III => &[(false, false)],
    };
    if let (Some(s0), Some(s1)) = (side(0), side(1)) {
        return quadrants.contains(&(s0, s1)).then(|| tri.mass());
    }
    let mut m = [[0.0; 3]; 3];
    let mut any = false;
    for &(left0, left1) in quadrants {
        let poly = clip(&tri.verts, 0, x_mid, left0);
        let poly = clip(&poly, 1, x_mid, left1);
        for k in 1..poly.len().saturating_sub(1) {
            let (a, b, c) = (poly[0], poly[k], poly[k + 1]);
            let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs();
            if area == 0.0 {
                continue;
            }
            any = true;
            // edge midpoints integrate quadratics exactly
            for (p, q) in [(a, b), (b, c), (c, a)] {
                let l = tri.barycentric([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                for r in 0..3 {
                    for s in 0..3 {
                        m[r][s] += area / 3.0 * l[r] * l[s];
                    }
                }
            }
        }
    }
    any.then_some(m)
}

/// Sutherland-Hodgman clip of a convex polygon against `x[axis] <= c`
/// (`keep_below`) or `x[axis] >= c`.
fn clip(poly: &[[f64; 2]], axis: usize, c: f64, keep_below: bool) -> Vec<[f64; 2]> {
    let inside = |p: &[f64; 2]| if keep_below { p[axis] <= c } else { p[axis] >= c };
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let cur = poly[k];
        let next = poly[(k + 1) % poly.len()];
        let (ci, ni) = (inside(&cur), inside(&next));
        if ci {
            out.push(cur);
        }
        if ci != ni {
            let t = (c - cur[axis]) / (next[axis] - cur[axis]);
            let mut p = [cur[0] + t * (next[0] - cur[0]), cur[1] + t * (next[1] - cur[1])];
            p[axis] = c;
            out.push(p);
        }
    }
    out
}
