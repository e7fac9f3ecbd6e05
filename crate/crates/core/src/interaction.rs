//! Interaction shapes as interchangeable strategies, registered by name.
//!
//! Each strategy knows how to evaluate itself pointwise (where that makes
//! sense) and how to assemble its Galerkin matrix on a diagonal-aligned mesh.

use std::collections::BTreeMap;
use std::fmt::Debug;

use crate::assembly::{assemble_triangles, Assembler, NodeMap};
use crate::domain::{InteractionKind, InteractionSpec};
use crate::error::{Error, Result};
use crate::mesh::Mesh2D;
use crate::quadrature::{GAUSS_3, TRIANGLE_7};
use crate::sparse::SymmetricSparseMatrix;

pub trait Interaction: Debug + Send + Sync {
    fn kind(&self) -> InteractionKind;

    fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Whether the two-particle basis must vanish on `x1 = x2`.
    fn excludes_diagonal(&self) -> bool {
        false
    }

    fn pointwise(&self, r: f64) -> Result<f64>;

    /// Matrix of `int V_int(x1 - x2) phi_p phi_q` over the unknowns of `map`.
    fn assemble(&self, mesh: &Mesh2D, map: &NodeMap) -> Result<SymmetricSparseMatrix>;
}

/// `delta(x1 - x2)`, a line measure on the diagonal. Integrating the delta
/// over the plane leaves `int f(s, s) ds` with `ds` the coordinate length.
#[derive(Debug, Clone, Copy, Default)]
pub struct Contact;

impl Interaction for Contact {
    fn kind(&self) -> InteractionKind {
        InteractionKind::Contact
    }

    fn pointwise(&self, _r: f64) -> Result<f64> {
        Err(Error::NotPointwise(self.name()))
    }

    fn assemble(&self, mesh: &Mesh2D, map: &NodeMap) -> Result<SymmetricSparseMatrix> {
        let mut asm = Assembler::new(map);
        for edge in mesh.diagonal_edges() {
            let [a, b] = edge.map(|p| mesh.coords(p)[0]);
            let len = b - a;
            let mut m = [[0.0; 2]; 2];
            for (s, w) in GAUSS_3 {
                let phi = [1.0 - s, s];
                for r in 0..2 {
                    for c in 0..2 {
                        m[r][c] += w * len * phi[r] * phi[c];
                    }
                }
            }
            asm.add_local(edge, &m);
        }
        Ok(asm.finish())
    }
}

/// `1 / sqrt(r^2 + softening^2)`.
#[derive(Debug, Clone, Copy)]
pub struct SoftCoulomb {
    pub softening: f64,
}

impl Interaction for SoftCoulomb {
    fn kind(&self) -> InteractionKind {
        InteractionKind::SoftCoulomb
    }

    fn pointwise(&self, r: f64) -> Result<f64> {
        Ok(1.0 / (r * r + self.softening * self.softening).sqrt())
    }

    fn assemble(&self, mesh: &Mesh2D, map: &NodeMap) -> Result<SymmetricSparseMatrix> {
        assemble_triangles(mesh, map, |_, tri| {
            let mut m = [[0.0; 3]; 3];
            for q in &TRIANGLE_7 {
                let x = tri.point(q.bary);
                let w = q.weight * tri.area * self.pointwise(x[0] - x[1])?;
                for a in 0..3 {
                    for b in 0..3 {
                        m[a][b] += w * q.bary[a] * q.bary[b];
                    }
                }
            }
            Ok(Some(m))
        })
    }
}

/// `1 / |r|`. The basis vanishes on the diagonal, so only products of
/// off-diagonal hat functions are integrated and the integrand stays bounded.
#[derive(Debug, Clone, Copy, Default)]
pub struct HardCoulomb;

impl Interaction for HardCoulomb {
    fn kind(&self) -> InteractionKind {
        InteractionKind::HardCoulomb
    }

    fn excludes_diagonal(&self) -> bool {
        true
    }

    fn pointwise(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            Err(Error::Singular)
        } else {
            Ok(1.0 / r.abs())
        }
    }

    fn assemble(&self, mesh: &Mesh2D, map: &NodeMap) -> Result<SymmetricSparseMatrix> {
        let scale = mesh.axis().length();
        assemble_triangles(mesh, map, |t, tri| {
            let off: Vec<usize> = (0..3).filter(|&a| !mesh.on_diagonal(t[a])).collect();
            if off.is_empty() {
                return Ok(None);
            }
            let mut m = [[0.0; 3]; 3];
            for q in &TRIANGLE_7 {
                let x = tri.point(q.bary);
                let r = (x[0] - x[1]).abs();
                if r <= 1e-14 * scale {
                    return Err(Error::Invariant(format!(
                        "hard-core quadrature point on the diagonal at ({}, {})",
                        x[0], x[1]
                    )));
                }
                let w = q.weight * tri.area / r;
                for &a in &off {
                    for &b in &off {
                        m[a][b] += w * q.bary[a] * q.bary[b];
                    }
                }
            }
            Ok(Some(m))
        })
    }
}

pub type InteractionFactory = fn(&InteractionSpec) -> Result<Box<dyn Interaction>>;

/// Name-keyed table of interaction constructors.
#[derive(Debug, Clone, Default)]
pub struct InteractionRegistry {
    factories: BTreeMap<&'static str, InteractionFactory>,
}

impl InteractionRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding the contact, soft Coulomb and hard Coulomb shapes.
    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(InteractionKind::Contact.name(), |_| Ok(Box::new(Contact)));
        reg.register(InteractionKind::SoftCoulomb.name(), |spec| {
            spec.validate()?;
            Ok(Box::new(SoftCoulomb {
                softening: spec.softening,
            }))
        });
        reg.register(InteractionKind::HardCoulomb.name(), |_| Ok(Box::new(HardCoulomb)));
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: InteractionFactory) {
        self.factories.insert(name, factory);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn create(&self, name: &str, spec: &InteractionSpec) -> Result<Box<dyn Interaction>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownStrategy {
            family: "interaction",
            name: name.to_string(),
            available: self.names().join(", "),
        })?;
        factory(spec)
    }
}

/// Builds the strategy for `spec.kind` from the builtin registry.
pub fn build(spec: &InteractionSpec) -> Result<Box<dyn Interaction>> {
    InteractionRegistry::builtin().create(spec.kind.name(), spec)
}
