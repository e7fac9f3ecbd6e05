//! Quench protocol: prepare the interacting ground state of the isolated
//! left well, expand it in double-well eigenstates and evolve exactly.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::assembly::{assemble_2d, MassScheme, OperatorBundle};
use crate::domain::{InteractionSpec, PotentialSpec, Region};
use crate::eigensolve::{EigenPair, Eigensolver, LanczosSolver};
use crate::error::{Error, Result};
use crate::mesh::{build_1d_mesh, build_2d_mesh, Mesh2D};
use crate::sparse::SymmetricSparseMatrix;

/// Operators of the full double well and of the isolated left well on the
/// same node spacing, for one interaction shape.
#[derive(Debug, Clone)]
pub struct QuenchSetup {
    pub potential: PotentialSpec,
    pub interaction: InteractionSpec,
    pub h: f64,
    pub mesh: Mesh2D,
    pub full: OperatorBundle,
    pub isolated: OperatorBundle,
}

impl QuenchSetup {
    pub fn new(potential: &PotentialSpec, interaction: &InteractionSpec, h: f64, scheme: MassScheme) -> Result<Self> {
        let mesh = build_2d_mesh(&build_1d_mesh(potential, h, false)?);
        let iso_mesh = build_2d_mesh(&build_1d_mesh(potential, h, true)?);
        let full = assemble_2d(&mesh, potential, interaction, scheme)?;
        let isolated = assemble_2d(&iso_mesh, potential, interaction, scheme)?;
        Ok(Self {
            potential: *potential,
            interaction: *interaction,
            h,
            mesh,
            full,
            isolated,
        })
    }

    /// Ground state of the isolated well at strength `u`, embedded into the
    /// full-domain basis.
    pub fn initial_state(&self, u: f64, solver: &dyn Eigensolver, tol: f64) -> Result<InitialState> {
        let h = self.isolated.hamiltonian(u);
        let ground = solver
            .solve_lowest(&h, &self.isolated.mass, 1, tol)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Invariant("isolated-well solve returned nothing".into()))?;
        let coefficients = self.full.basis.embed(&self.isolated.basis, &ground.coefficients)?;
        Ok(InitialState {
            coefficients,
            energy: ground.energy,
        })
    }

    pub fn eigenpairs(&self, u: f64, k: usize, solver: &dyn Eigensolver, tol: f64) -> Result<Vec<EigenPair>> {
        solver.solve_lowest(&self.full.hamiltonian(u), &self.full.mass, k, tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    /// Coefficients over the full-domain bosonic basis.
    pub coefficients: Vec<f64>,
    /// Ground energy of the isolated well.
    pub energy: f64,
}

/// Isolated-well ground state for one interaction strength, built from
/// scratch with the default solver.
pub fn initial_state(
    spec: &PotentialSpec,
    int_spec: &InteractionSpec,
    h: f64,
    scheme: MassScheme,
) -> Result<(QuenchSetup, InitialState)> {
    let setup = QuenchSetup::new(spec, int_spec, h, scheme)?;
    let state = setup.initial_state(int_spec.strength, &LanczosSolver::default(), 1e-8)?;
    Ok((setup, state))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    /// `c_n = phi_n^T M s`.
    pub coefficients: Vec<f64>,
    pub energies: Vec<f64>,
    pub captured_norm: f64,
    /// Set when the captured norm is below the requested floor.
    pub warning: Option<String>,
}

impl SpectralDecomposition {
    pub fn weights(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    /// `1 - captured_norm`, clamped at zero.
    pub fn deficit(&self) -> f64 {
        (1.0 - self.captured_norm).max(0.0)
    }
}

pub fn decompose(
    state: &InitialState,
    pairs: &[EigenPair],
    mass: &SymmetricSparseMatrix,
    norm_floor: f64,
) -> Result<SpectralDecomposition> {
    if state.coefficients.len() != mass.dim() {
        return Err(Error::Dimension {
            expected: mass.dim(),
            found: state.coefficients.len(),
        });
    }
    let ms = mass.mul_vec(&state.coefficients);
    let mut coefficients = Vec::with_capacity(pairs.len());
    for p in pairs {
        if p.coefficients.len() != mass.dim() {
            return Err(Error::Dimension {
                expected: mass.dim(),
                found: p.coefficients.len(),
            });
        }
        coefficients.push(crate::sparse::dot(&p.coefficients, &ms));
    }
    let captured_norm: f64 = coefficients.iter().map(|c| c * c).sum();
    let warning = (captured_norm < norm_floor).then(|| {
        format!(
            "captured norm {captured_norm:.6} is below the floor {norm_floor}; increase the number of eigenpairs"
        )
    });
    Ok(SpectralDecomposition {
        coefficients,
        energies: pairs.iter().map(|p| p.energy).collect(),
        captured_norm,
        warning,
    })
}

/// `Q[m][n] = phi_m^T S phi_n` over the given eigenpairs.
pub fn projected(s: &SymmetricSparseMatrix, pairs: &[EigenPair]) -> DMatrix<f64> {
    let images: Vec<Vec<f64>> = pairs.par_iter().map(|p| s.mul_vec(&p.coefficients)).collect();
    let k = pairs.len();
    let mut q = DMatrix::zeros(k, k);
    for m in 0..k {
        for n in m..k {
            let v = crate::sparse::dot(&pairs[m].coefficients, &images[n]);
            q[(m, n)] = v;
            q[(n, m)] = v;
        }
    }
    q
}

/// Region matrices of a bundle in the eigenbasis, indexed like [`Region::ALL`].
pub fn region_projections(bundle: &OperatorBundle, pairs: &[EigenPair]) -> [DMatrix<f64>; 3] {
    Region::ALL.map(|r| projected(bundle.region(r), pairs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    /// Probability of no particle in the left half (region III).
    pub p0: Vec<f64>,
    /// Probability of one particle in the left half (region II).
    pub p1: Vec<f64>,
    /// Probability of both particles in the left half (region I).
    pub p2: Vec<f64>,
    pub n_left: Vec<f64>,
    pub captured_norm: f64,
}

/// `P_R(t) = sum_mn c_m c_n cos((E_m - E_n) t) Q_R[m][n]`, evaluated as
/// `u^T Q u + v^T Q v` with `u = c cos(E t)` and `v = c sin(E t)`.
pub fn evolve_probabilities(
    d: &SpectralDecomposition,
    regions: &[DMatrix<f64>; 3],
    times: &[f64],
) -> Result<TimeSeries> {
    let k = d.coefficients.len();
    for q in regions {
        if q.nrows() != k {
            return Err(Error::Dimension {
                expected: k,
                found: q.nrows(),
            });
        }
    }
    if times.is_empty() {
        return Err(Error::Config("time grid is empty".into()));
    }
    let values: Vec<[f64; 3]> = times
        .par_iter()
        .map(|&t| {
            let u = nalgebra::DVector::from_fn(k, |n, _| d.coefficients[n] * (d.energies[n] * t).cos());
            let v = nalgebra::DVector::from_fn(k, |n, _| d.coefficients[n] * (d.energies[n] * t).sin());
            regions.each_ref().map(|q| (q * &u).dot(&u) + (q * &v).dot(&v))
        })
        .collect();
    let p2: Vec<f64> = values.iter().map(|v| v[0]).collect();
    let p1: Vec<f64> = values.iter().map(|v| v[1]).collect();
    let p0: Vec<f64> = values.iter().map(|v| v[2]).collect();
    let n_left = p2.iter().zip(&p1).map(|(a, b)| a + 0.5 * b).collect();
    Ok(TimeSeries {
        times: times.to_vec(),
        p0,
        p1,
        p2,
        n_left,
        captured_norm: d.captured_norm,
    })
}

/// `n` uniform samples over `[0, horizon]`.
pub fn time_grid(horizon: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect(),
    }
}
