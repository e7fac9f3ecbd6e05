//! Interval meshes aligned with the potential breakpoints and the
//! diagonal-aligned triangulation of configuration space built from them.

use std::io::Write;
use std::path::Path;

use crate::domain::PotentialSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    isolated: bool,
}

/// Builds a 1D mesh whose nodes include every breakpoint. Each flat segment is
/// split uniformly into the fewest pieces of size at most `h`. With
/// `isolated_left` the domain is the left well `[0, l]` only.
pub fn build_1d_mesh(spec: &PotentialSpec, h: f64, isolated_left: bool) -> Result<Mesh1D> {
    spec.validate()?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Config(format!("mesh size must be positive, got {h}")));
    }
    if h > spec.well_length {
        return Err(Error::Resolution {
            h,
            well_length: spec.well_length,
        });
    }
    let breaks: Vec<f64> = if isolated_left {
        vec![0.0, spec.well_length]
    } else {
        spec.breakpoints().to_vec()
    };
    let mut nodes = vec![0.0];
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        // the small slack keeps h = len / k from rounding up to k + 1 pieces
        let pieces = ((len / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        for k in 1..pieces {
            nodes.push(a + len * k as f64 / pieces as f64);
        }
        nodes.push(b);
    }
    Ok(Mesh1D { nodes, isolated: isolated_left })
}

impl Mesh1D {
    /// Mesh with explicit node coordinates, mostly for tests. Nodes must be
    /// strictly increasing.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Config("a mesh needs at least two nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("mesh nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes, isolated: false })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_isolated(&self) -> bool {
        self.isolated
    }

    pub fn length(&self) -> f64 {
        self.nodes[self.nodes.len() - 1] - self.nodes[0]
    }

    pub fn elements(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.nodes.len() - 1).map(|i| (i, i + 1))
    }

    pub fn boundary_nodes(&self) -> [usize; 2] {
        [0, self.nodes.len() - 1]
    }

    pub fn max_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index of the node at `x`, if any node lies within `1e-9` of it.
    pub fn find_node(&self, x: f64) -> Option<usize> {
        let tol = 1e-9 * self.length().max(1.0);
        let i = self.nodes.partition_point(|&v| v < x - tol);
        (i < self.nodes.len() && (self.nodes[i] - x).abs() <= tol).then_some(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    Interior,
    OuterBoundary,
    Diagonal,
}

/// Tensor grid over the square with every cell cut along its lower-left to
/// upper-right diagonal, so the line `x1 = x2` is a union of element edges.
///
/// Node `(i, j)` sits at `(x_i, x_j)` and has index `i * n + j`.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    axis: Mesh1D,
    triangles: Vec<[usize; 3]>,
    node_class: Vec<NodeClass>,
    diagonal_edges: Vec<[usize; 2]>,
}

pub fn build_2d_mesh(axis: &Mesh1D) -> Mesh2D {
    let n = axis.len();
    let id = |i: usize, j: usize| i * n + j;
    let mut triangles = Vec::with_capacity(2 * (n - 1) * (n - 1));
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut node_class = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let boundary = i == 0 || j == 0 || i == n - 1 || j == n - 1;
            node_class.push(if boundary {
                NodeClass::OuterBoundary
            } else if i == j {
                NodeClass::Diagonal
            } else {
                NodeClass::Interior
            });
        }
    }
    let diagonal_edges = (0..n - 1).map(|i| [id(i, i), id(i + 1, i + 1)]).collect();
    Mesh2D {
        axis: axis.clone(),
        triangles,
        node_class,
        diagonal_edges,
    }
}

impl Mesh2D {
    pub fn axis(&self) -> &Mesh1D {
        &self.axis
    }

    /// Number of nodes per axis.
    pub fn n_axis(&self) -> usize {
        self.axis.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_axis() * self.n_axis()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn node_class(&self) -> &[NodeClass] {
        &self.node_class
    }

    /// Edges on `x1 = x2`, ordered by increasing coordinate.
    pub fn diagonal_edges(&self) -> &[[usize; 2]] {
        &self.diagonal_edges
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        i * self.n_axis() + j
    }

    pub fn node_ij(&self, p: usize) -> (usize, usize) {
        (p / self.n_axis(), p % self.n_axis())
    }

    pub fn coords(&self, p: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(p);
        let x = self.axis.nodes();
        [x[i], x[j]]
    }

    /// Whether node `p` lies on the line `x1 = x2` (corners included).
    pub fn on_diagonal(&self, p: usize) -> bool {
        let (i, j) = self.node_ij(p);
        i == j
    }

    /// Particle exchange `(x1, x2) -> (x2, x1)`.
    pub fn exchange(&self, p: usize) -> usize {
        let (i, j) = self.node_ij(p);
        self.node_index(j, i)
    }

    /// Left-right reflection of both coordinates. Only a symmetry of the mesh
    /// when the 1D nodes are symmetric about the domain center.
    pub fn mirror(&self, p: usize) -> usize {
        let n = self.n_axis();
        let (i, j) = self.node_ij(p);
        self.node_index(n - 1 - i, n - 1 - j)
    }

    pub fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let [a, b, c] = t.map(|p| self.coords(p));
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Writes `nodes.csv` and `triangles.csv` into `dir` for inspection.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("nodes.csv"))?);
        writeln!(w, "id,x1,x2,class")?;
        for p in 0..self.n_nodes() {
            let [x1, x2] = self.coords(p);
            let class = match self.node_class[p] {
                NodeClass::Interior => "interior",
                NodeClass::OuterBoundary => "outer_boundary",
                NodeClass::Diagonal => "diagonal",
            };
            writeln!(w, "{p},{x1},{x2},{class}")?;
        }
        w.flush()?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("triangles.csv"))?);
        writeln!(w, "id,a,b,c")?;
        for (k, [a, b, c]) in self.triangles.iter().enumerate() {
            writeln!(w, "{k},{a},{b},{c}")?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn breakpoint_aligned_nodes() {
        let spec = PotentialSpec::default();
        let m = build_1d_mesh(&spec, 25.0, false).unwrap();
        assert_eq!(m.nodes(), &[0.0, 25.0, 50.0, 53.0, 78.0, 103.0]);
        let iso = build_1d_mesh(&spec, 50.0, true).unwrap();
        assert_eq!(iso.nodes(), &[0.0, 50.0]);
        let fine = build_1d_mesh(&spec, 1.0, false).unwrap();
        assert_eq!(fine.len(), 104);
        assert!(fine.max_spacing() <= 1.0);
        for b in spec.breakpoints() {
            assert!(fine.find_node(b).is_some());
        }
    }

    #[test]
    fn coarse_mesh_rejected() {
        let spec = PotentialSpec::default();
        assert!(matches!(
            build_1d_mesh(&spec, 60.0, false),
            Err(Error::Resolution { .. })
        ));
        assert!(build_1d_mesh(&spec, 0.0, false).is_err());
    }

    #[test]
    fn zero_width_barrier_has_no_duplicate_nodes() {
        let spec = PotentialSpec::new(10.0, 0.0, 0.0).unwrap();
        let m = build_1d_mesh(&spec, 1.0, false).unwrap();
        assert_eq!(m.len(), 21);
    }

    #[test]
    fn smallest_mesh() {
        let axis = Mesh1D::from_nodes(vec![0.0, 1.0]).unwrap();
        let m = build_2d_mesh(&axis);
        assert_eq!(m.triangles().len(), 2);
        assert_eq!(m.diagonal_edges().len(), 1);
    }

    #[test]
    fn triangle_count_and_diagonal_nodes() {
        let axis = Mesh1D::from_nodes(vec![0.0, 1.0, 2.0]).unwrap();
        let m = build_2d_mesh(&axis);
        assert_eq!(m.triangles().len(), 8);
        let diag: Vec<usize> = (0..m.n_nodes()).filter(|&p| m.on_diagonal(p)).collect();
        assert_eq!(diag, vec![m.node_index(0, 0), m.node_index(1, 1), m.node_index(2, 2)]);
        assert_eq!(m.node_class()[m.node_index(1, 1)], NodeClass::Diagonal);
    }

    #[test]
    fn areas_positive_and_cover_square() {
        let spec = PotentialSpec::default();
        for (isolated, side) in [(false, 103.0), (true, 50.0)] {
            let m = build_2d_mesh(&build_1d_mesh(&spec, 1.0, isolated).unwrap());
            let mut total = 0.0;
            for t in m.triangles() {
                let a = m.triangle_area(t);
                assert!(a > 0.0);
                total += a;
            }
            assert!(((total - side * side) / (side * side)).abs() < 1e-12);
        }
    }

    #[test]
    fn exchange_is_involution_mapping_triangles() {
        let spec = PotentialSpec::new(4.0, 1.0, 0.3).unwrap();
        let m = build_2d_mesh(&build_1d_mesh(&spec, 0.7, false).unwrap());
        let set: HashSet<[usize; 3]> = m
            .triangles()
            .iter()
            .map(|t| {
                let mut s = *t;
                s.sort_unstable();
                s
            })
            .collect();
        for p in 0..m.n_nodes() {
            assert_eq!(m.exchange(m.exchange(p)), p);
        }
        for t in m.triangles() {
            let mut img = t.map(|p| m.exchange(p));
            img.sort_unstable();
            assert!(set.contains(&img));
            let mut mir = t.map(|p| m.mirror(p));
            mir.sort_unstable();
            assert!(set.contains(&mir));
        }
    }

    #[test]
    fn diagonal_nodes_lie_on_diagonal_edges() {
        let axis = Mesh1D::from_nodes(vec![0.0, 0.5, 1.5, 2.0]).unwrap();
        let m = build_2d_mesh(&axis);
        let on_edge: HashSet<usize> = m.diagonal_edges().iter().flatten().copied().collect();
        for p in (0..m.n_nodes()).filter(|&p| m.on_diagonal(p)) {
            assert!(on_edge.contains(&p));
        }
        for [a, b] in m.diagonal_edges() {
            let (pa, pb) = (m.coords(*a), m.coords(*b));
            assert_eq!(pa[0], pa[1]);
            assert_eq!(pb[0], pb[1]);
        }
    }

    #[test]
    fn csv_dump() {
        let axis = Mesh1D::from_nodes(vec![0.0, 1.0, 2.0]).unwrap();
        let m = build_2d_mesh(&axis);
        let dir = tempfile::tempdir().unwrap();
        m.write_csv(dir.path()).unwrap();
        let nodes = std::fs::read_to_string(dir.path().join("nodes.csv")).unwrap();
        assert_eq!(nodes.lines().count(), 10);
        let tris = std::fs::read_to_string(dir.path().join("triangles.csv")).unwrap();
        assert_eq!(tris.lines().count(), 9);
    }
}
