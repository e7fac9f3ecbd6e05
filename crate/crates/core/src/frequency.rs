//! Beat-frequency expansion `N_L(t) = offset + sum_k A_k cos(w_k t)` of the
//! left-well population.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quench::SpectralDecomposition;

/// Frequencies closer than this are one physical component.
pub const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FrequencyComponent {
    pub omega: f64,
    pub amplitude: f64,
    /// Eigenpair indices of the (largest) contributing pair, `m < n`.
    pub m: usize,
    pub n: usize,
}

impl FrequencyComponent {
    pub fn is_negative(&self) -> bool {
        self.amplitude < 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlExpansion {
    /// Time-independent part `sum_n c_n^2 N_nn`, half the captured norm for
    /// states of definite mirror parity.
    pub offset: f64,
    /// Sorted by descending `|A|`.
    pub components: Vec<FrequencyComponent>,
}

/// `N = Q_I + Q_II / 2` in the eigenbasis.
pub fn nl_matrix(q_i: &DMatrix<f64>, q_ii: &DMatrix<f64>) -> DMatrix<f64> {
    q_i + q_ii * 0.5
}

/// Expansion over pairs `m < n` with `c_m^2, c_n^2 >= min_weight` (use 0 for
/// the exact expansion). `A = 2 c_m c_n N_mn` and `w = |E_m - E_n|`; pairs
/// with equal frequencies are merged and zero frequencies fold into the
/// offset.
pub fn frequency_components(d: &SpectralDecomposition, n_matrix: &DMatrix<f64>, min_weight: f64) -> Result<NlExpansion> {
    let k = d.coefficients.len();
    if n_matrix.nrows() != k || n_matrix.ncols() != k {
        return Err(Error::Dimension {
            expected: k,
            found: n_matrix.nrows(),
        });
    }
    let c = &d.coefficients;
    let active: Vec<usize> = (0..k).filter(|&i| c[i] != 0.0 && c[i] * c[i] >= min_weight).collect();
    let mut offset: f64 = active.iter().map(|&i| c[i] * c[i] * n_matrix[(i, i)]).sum();
    let mut raw = Vec::new();
    for (a, &m) in active.iter().enumerate() {
        for &n in &active[a + 1..] {
            let amplitude = 2.0 * c[m] * c[n] * n_matrix[(m, n)];
            let omega = (d.energies[m] - d.energies[n]).abs();
            raw.push(FrequencyComponent { omega, amplitude, m, n });
        }
    }
    raw.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let mut merged: Vec<(FrequencyComponent, f64)> = Vec::new();
    for comp in raw {
        match merged.last_mut() {
            Some((group, largest)) if comp.omega - group.omega <= MERGE_TOLERANCE => {
                group.amplitude += comp.amplitude;
                if comp.amplitude.abs() > *largest {
                    *largest = comp.amplitude.abs();
                    group.m = comp.m;
                    group.n = comp.n;
                }
            }
            _ => merged.push((comp, comp.amplitude.abs())),
        }
    }
    let mut components = Vec::with_capacity(merged.len());
    for (comp, _) in merged {
        if comp.omega <= MERGE_TOLERANCE {
            offset += comp.amplitude;
        } else {
            components.push(comp);
        }
    }
    components.sort_by(|a, b| b.amplitude.abs().total_cmp(&a.amplitude.abs()));
    Ok(NlExpansion { offset, components })
}

/// Components with `A >= threshold`, plus negative ones with
/// `|A| >= threshold` (check [`FrequencyComponent::is_negative`]). An empty
/// result means `N_L` is essentially constant.
pub fn dominant(components: &[FrequencyComponent], threshold: f64) -> Vec<FrequencyComponent> {
    components
        .iter()
        .filter(|c| c.amplitude >= threshold || (c.amplitude < 0.0 && -c.amplitude >= threshold))
        .copied()
        .collect()
}

pub fn reconstruct_nl(offset: f64, components: &[FrequencyComponent], times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| offset + components.iter().map(|c| c.amplitude * (c.omega * t).cos()).sum::<f64>())
        .collect()
}

/// `2 pi / min w` over the dominant components.
pub fn tunneling_period(dominant: &[FrequencyComponent]) -> Result<f64> {
    dominant
        .iter()
        .map(|c| c.omega)
        .filter(|w| *w > 0.0)
        .min_by(f64::total_cmp)
        .map(|w| 2.0 * PI / w)
        .ok_or(Error::NoDominantComponent)
}
