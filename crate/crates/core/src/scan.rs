//! Sweeps the interaction strength: per-U spectra, decomposition weights,
//! Hellmann-Feynman slopes, state classes, diabatic branch tracking and
//! avoided-crossing detection.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::Region;
use crate::eigensolve::{EigenPair, Eigensolver};
use crate::error::Result;
use crate::frequency::{dominant, frequency_components, nl_matrix, FrequencyComponent};
use crate::quench::{decompose, projected, QuenchSetup};
use crate::sparse::{dot, SymmetricSparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StateClass {
    /// One particle per well: density mostly in region II.
    T11,
    /// Both particles in the same well: density mostly in regions I and III.
    T20,
    Mixed,
}

impl StateClass {
    pub fn name(self) -> &'static str {
        match self {
            StateClass::T11 => "T11",
            StateClass::T20 => "T20",
            StateClass::Mixed => "mixed",
        }
    }
}

impl fmt::Display for StateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `dE/dU = phi^T V_int phi` for an M-normalized eigenpair.
pub fn hellmann_feynman_slope(pair: &EigenPair, v_int: &SymmetricSparseMatrix) -> f64 {
    v_int.quad_form(&pair.coefficients)
}

/// Region weights `w_R = phi^T S_R phi` and the resulting class.
pub fn classify_state(
    pair: &EigenPair,
    regions: [&SymmetricSparseMatrix; 3],
    threshold: f64,
) -> (StateClass, [f64; 3]) {
    let w = regions.map(|s| s.quad_form(&pair.coefficients));
    (classify_weights(w, threshold), w)
}

pub fn classify_weights(w: [f64; 3], threshold: f64) -> StateClass {
    if w[1] >= threshold {
        StateClass::T11
    } else if w[0] + w[2] >= threshold {
        StateClass::T20
    } else {
        StateClass::Mixed
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanSettings {
    pub k: usize,
    pub tol: f64,
    pub norm_floor: f64,
    pub class_threshold: f64,
    /// Minimum `|c_n|^2` for a state to take part in a crossing.
    pub participant_weight: f64,
    pub dominant_threshold: f64,
    pub refine: bool,
    /// Target width of the refined crossing bracket.
    pub refine_du: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            k: 150,
            tol: 1e-8,
            norm_floor: 0.999,
            class_threshold: 0.6,
            participant_weight: 0.05,
            dominant_threshold: 0.01,
            refine: true,
            refine_du: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub n: usize,
    pub energy: f64,
    pub slope: f64,
    /// `[w_I, w_II, w_III]`.
    pub region_weights: [f64; 3],
    pub class: StateClass,
    /// `|<phi_n|g_L>|^2`.
    pub weight: f64,
    pub residual: f64,
    pub branch: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub u: f64,
    pub initial_energy: f64,
    pub captured_norm: f64,
    pub nl_offset: f64,
    /// Sum of all beat amplitudes, `N_L(0) - nl_offset`.
    pub amplitude_sum: f64,
    pub levels: Vec<LevelRecord>,
    /// Dominant beat components of `N_L`.
    pub dominant: Vec<FrequencyComponent>,
    /// Added by crossing refinement rather than part of the grid.
    pub refinement: bool,
    /// Smallest matched overlap with the previous grid point.
    pub min_overlap: Option<f64>,
}

impl ScanPoint {
    /// `1 - (w_1 + w_2)` with `w_1 >= w_2` the two largest weights: zero for
    /// a state spread over a single doublet, large at resonances.
    pub fn spread(&self) -> f64 {
        let mut w: Vec<f64> = self.levels.iter().map(|l| l.weight).collect();
        w.sort_by(|a, b| b.total_cmp(a));
        1.0 - w.iter().take(2).sum::<f64>()
    }

    /// Levels with weight at least `min_weight`, in energy order.
    pub fn participants(&self, min_weight: f64) -> Vec<&LevelRecord> {
        self.levels.iter().filter(|l| l.weight >= min_weight).collect()
    }

    /// Largest class mixing `min(w_II, w_I + w_III)` among levels carrying at
    /// least `min_weight`; reaches 1/2 at the center of a T11/T20 resonance.
    pub fn mixing(&self, min_weight: f64) -> f64 {
        self.participants(min_weight)
            .iter()
            .map(|l| l.region_weights[1].min(l.region_weights[0] + l.region_weights[2]))
            .fold(0.0, f64::max)
    }

    pub fn branch_of(&self, n: usize) -> usize {
        self.levels[n].branch
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AvoidedCrossing {
    pub u_center: f64,
    /// Smallest spacing between participating levels at the center.
    pub gap: f64,
    pub participants: Vec<usize>,
    pub types: Vec<StateClass>,
    /// False for candidates that could not be bracketed (grid edges).
    pub resolved: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchAmbiguity {
    pub u: f64,
    pub level: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    pub refinement: Vec<ScanPoint>,
    pub crossings: Vec<AvoidedCrossing>,
    pub ambiguities: Vec<BranchAmbiguity>,
    /// Number of branch ids handed out so far.
    pub n_branches: usize,
}

impl ScanResult {
    /// Grid index of the most off-resonant point (smallest weight spread).
    pub fn off_resonance(&self) -> Option<usize> {
        (0..self.points.len()).min_by(|&a, &b| self.points[a].spread().total_cmp(&self.points[b].spread()))
    }

    pub fn resolved_crossings(&self) -> impl Iterator<Item = &AvoidedCrossing> {
        self.crossings.iter().filter(|c| c.resolved)
    }
}

/// `n` uniform points over `[lo, hi]`.
pub fn u_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Solves and analyzes one interaction strength. Branch ids are left at the
/// level index.
pub fn analyze_point(
    setup: &QuenchSetup,
    u: f64,
    settings: &ScanSettings,
    solver: &dyn Eigensolver,
) -> Result<(ScanPoint, Vec<EigenPair>)> {
    let bundle = &setup.full;
    let g = setup.initial_state(u, solver, settings.tol)?;
    let pairs = setup.eigenpairs(u, settings.k, solver, settings.tol)?;
    let d = decompose(&g, &pairs, &bundle.mass, settings.norm_floor)?;
    let regions = Region::ALL.map(|r| bundle.region(r));
    let levels = pairs
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let (class, region_weights) = classify_state(p, regions, settings.class_threshold);
            LevelRecord {
                n,
                energy: p.energy,
                slope: hellmann_feynman_slope(p, &bundle.v_int),
                region_weights,
                class,
                weight: d.coefficients[n] * d.coefficients[n],
                residual: p.residual_norm,
                branch: n,
            }
        })
        .collect();
    // only levels with weight contribute beats; skip the rest of the K^2 work
    let active: Vec<usize> = (0..pairs.len()).filter(|&n| d.coefficients[n].powi(2) >= 1e-12).collect();
    let sub: Vec<EigenPair> = active.iter().map(|&n| pairs[n].clone()).collect();
    let q_i = projected(&bundle.s_i, &sub);
    let q_ii = projected(&bundle.s_ii, &sub);
    let sub_d = crate::quench::SpectralDecomposition {
        coefficients: active.iter().map(|&n| d.coefficients[n]).collect(),
        energies: active.iter().map(|&n| d.energies[n]).collect(),
        captured_norm: d.captured_norm,
        warning: None,
    };
    let expansion = frequency_components(&sub_d, &nl_matrix(&q_i, &q_ii), 0.0)?;
    let dominant = dominant(&expansion.components, settings.dominant_threshold)
        .into_iter()
        .map(|mut c| {
            c.m = active[c.m];
            c.n = active[c.n];
            c
        })
        .collect();
    Ok((
        ScanPoint {
            u,
            initial_energy: g.energy,
            captured_norm: d.captured_norm,
            nl_offset: expansion.offset,
            amplitude_sum: expansion.components.iter().map(|c| c.amplitude).sum(),
            levels,
            dominant,
            refinement: false,
            min_overlap: None,
        },
        pairs,
    ))
}

/// `O[a][b] = |phi_a^T M psi_b|`.
pub fn overlap_matrix(prev: &[EigenPair], next: &[EigenPair], mass: &SymmetricSparseMatrix) -> DMatrix<f64> {
    let images: Vec<Vec<f64>> = next.par_iter().map(|p| mass.mul_vec(&p.coefficients)).collect();
    DMatrix::from_fn(prev.len(), next.len(), |a, b| dot(&prev[a].coefficients, &images[b]).abs())
}

/// Result of matching the levels of two neighbouring U values.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMatch {
    /// `target[a]` is the level of the next point continuing level `a`.
    pub target: Vec<Option<usize>>,
    pub overlaps: Vec<f64>,
    /// Levels of the previous point whose best match was not unique.
    pub ambiguous: Vec<usize>,
}

/// Greedy maximal-overlap assignment. When two candidates are within
/// `1e-3` of each other the one closer in energy wins and the level is
/// reported as ambiguous.
pub fn match_levels(overlaps: &DMatrix<f64>, prev_e: &[f64], next_e: &[f64]) -> LevelMatch {
    let (na, nb) = overlaps.shape();
    let mut cand: Vec<(usize, usize, f64)> = (0..na)
        .flat_map(|a| (0..nb).map(move |b| (a, b)))
        .map(|(a, b)| (a, b, overlaps[(a, b)]))
        .filter(|c| c.2 > 1e-3)
        .collect();
    cand.sort_by(|x, y| y.2.total_cmp(&x.2));
    let mut target = vec![None; na];
    let mut taken = vec![false; nb];
    let mut ov = vec![0.0; na];
    let mut ambiguous = Vec::new();
    for &(a, b, o) in &cand {
        if target[a].is_some() || taken[b] {
            continue;
        }
        let rivals: Vec<usize> = (0..nb)
            .filter(|&c| !taken[c] && overlaps[(a, c)] >= o - 1e-3)
            .collect();
        let chosen = if rivals.len() > 1 {
            ambiguous.push(a);
            rivals
                .into_iter()
                .min_by(|&x, &y| (next_e[x] - prev_e[a]).abs().total_cmp(&(next_e[y] - prev_e[a]).abs()))
                .unwrap_or(b)
        } else {
            b
        };
        target[a] = Some(chosen);
        taken[chosen] = true;
        ov[a] = overlaps[(a, chosen)];
    }
    LevelMatch {
        target,
        overlaps: ov,
        ambiguous,
    }
}

/// Carries branch ids from `prev` over to `point` by overlap matching; levels
/// without a partner open new branches.
fn assign_branches(
    prev: &ScanPoint,
    prev_pairs: &[EigenPair],
    point: &mut ScanPoint,
    pairs: &[EigenPair],
    mass: &SymmetricSparseMatrix,
    next_branch: &mut usize,
) -> Vec<usize> {
    let prev_e: Vec<f64> = prev.levels.iter().map(|l| l.energy).collect();
    let next_e: Vec<f64> = point.levels.iter().map(|l| l.energy).collect();
    let m = match_levels(&overlap_matrix(prev_pairs, pairs, mass), &prev_e, &next_e);
    let mut assigned = vec![None; point.levels.len()];
    let mut min_ov = f64::INFINITY;
    for (a, t) in m.target.iter().enumerate() {
        if let Some(b) = *t {
            assigned[b] = Some(prev.levels[a].branch);
            min_ov = min_ov.min(m.overlaps[a]);
        }
    }
    for (b, level) in point.levels.iter_mut().enumerate() {
        level.branch = assigned[b].unwrap_or_else(|| {
            *next_branch += 1;
            *next_branch - 1
        });
    }
    point.min_overlap = min_ov.is_finite().then_some(min_ov);
    m.ambiguous
}

/// Sweeps `u_values` (sorted). Points are solved in parallel batches and then
/// tracked in order; `on_point` sees every grid point once, in U order, after
/// its branch ids are assigned.
pub fn scan_levels(
    setup: &QuenchSetup,
    u_values: &[f64],
    settings: &ScanSettings,
    solver: &dyn Eigensolver,
    mut on_point: impl FnMut(&ScanPoint) -> Result<()>,
) -> Result<ScanResult> {
    let batch = rayon::current_num_threads().max(1);
    let mass = &setup.full.mass;
    let mut points: Vec<ScanPoint> = Vec::with_capacity(u_values.len());
    let mut ambiguities = Vec::new();
    let mut prev: Option<Vec<EigenPair>> = None;
    let mut next_branch = 0usize;
    for chunk in u_values.chunks(batch) {
        let solved: Vec<(ScanPoint, Vec<EigenPair>)> = chunk
            .par_iter()
            .map(|&u| analyze_point(setup, u, settings, solver))
            .collect::<Result<_>>()?;
        for (mut point, pairs) in solved {
            match &prev {
                None => {
                    next_branch = point.levels.len();
                }
                Some(prev_pairs) => {
                    let last = points.last().expect("previous point exists");
                    let ambiguous = assign_branches(last, prev_pairs, &mut point, &pairs, mass, &mut next_branch);
                    ambiguities.extend(ambiguous.into_iter().map(|level| BranchAmbiguity { u: point.u, level }));
                }
            }
            on_point(&point)?;
            points.push(point);
            prev = Some(pairs);
        }
    }
    let mut result = ScanResult {
        points,
        refinement: Vec::new(),
        crossings: Vec::new(),
        ambiguities,
        n_branches: next_branch,
    };
    detect_avoided_crossings(&mut result, setup, settings, solver)?;
    Ok(result)
}

fn is_candidate(p: &ScanPoint, settings: &ScanSettings) -> bool {
    let part = p.participants(settings.participant_weight);
    part.len() >= 3 && part.iter().any(|l| l.class != StateClass::T20)
}

fn crossing_at(p: &ScanPoint, settings: &ScanSettings, resolved: bool) -> AvoidedCrossing {
    let part = p.participants(settings.participant_weight);
    let gap = part
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::INFINITY, f64::min);
    AvoidedCrossing {
        u_center: p.u,
        gap,
        participants: part.iter().map(|l| l.n).collect(),
        types: part.iter().map(|l| l.class).collect(),
        resolved,
    }
}

/// Finds resonances of the initial state with the level structure.
///
/// A crossing shows up as an interior local maximum of the weight spread
/// (see [`ScanPoint::spread`]) where at least three levels carry weight and
/// at least one of them is not a plain T20 state. With `settings.refine` the
/// center is then located between the neighbouring grid points as the point
/// of strongest class mixing (see [`ScanPoint::mixing`]), by golden-section
/// search down to `refine_du`. The spread itself is a poor locator: it also
/// drifts with the U dependence of the initial state. The extra solves are stored in `scan.refinement`. Candidates on the grid edge
/// are kept but marked unresolved.
pub fn detect_avoided_crossings(
    scan: &mut ScanResult,
    setup: &QuenchSetup,
    settings: &ScanSettings,
    solver: &dyn Eigensolver,
) -> Result<()> {
    let pts = scan.points.clone();
    let mut next_branch = scan.n_branches;
    let f: Vec<f64> = pts.iter().map(ScanPoint::spread).collect();
    let mut crossings = Vec::new();
    let mut refinement = Vec::new();
    let n = pts.len();
    for i in 0..n {
        if !is_candidate(&pts[i], settings) {
            continue;
        }
        let left_ok = i == 0 || f[i] >= f[i - 1];
        let right_ok = i + 1 == n || f[i] > f[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        if i == 0 || i + 1 == n {
            crossings.push(crossing_at(&pts[i], settings, false));
            continue;
        }
        if !settings.refine {
            crossings.push(crossing_at(&pts[i], settings, true));
            continue;
        }
        let (best, extra) = golden_max(setup, settings, solver, &pts[i - 1], &pts[i], &pts[i + 1], &mut next_branch)?;
        crossings.push(crossing_at(&best, settings, true));
        refinement.extend(extra);
    }
    refinement.sort_by(|a, b| a.u.total_cmp(&b.u));
    scan.crossings = crossings;
    scan.refinement = refinement;
    scan.n_branches = next_branch;
    Ok(())
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn golden_max(
    setup: &QuenchSetup,
    settings: &ScanSettings,
    solver: &dyn Eigensolver,
    left: &ScanPoint,
    mid: &ScanPoint,
    right: &ScanPoint,
    next_branch: &mut usize,
) -> Result<(ScanPoint, Vec<ScanPoint>)> {
    // branch ids come from overlaps with the bracketed grid point
    let (_, mid_pairs) = analyze_point(setup, mid.u, settings, solver)?;
    let mut eval = |u: f64| -> Result<ScanPoint> {
        let (mut p, pairs) = analyze_point(setup, u, settings, solver)?;
        p.refinement = true;
        assign_branches(mid, &mid_pairs, &mut p, &pairs, &setup.full.mass, next_branch);
        Ok(p)
    };
    let obj = |p: &ScanPoint| p.mixing(settings.participant_weight);
    let mut extra = Vec::new();
    let (mut a, mut b) = (left.u, right.u);
    let mut best = mid.clone();
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > settings.refine_du {
        if obj(&fc) >= obj(&fd) {
            b = d;
            d = c;
            extra.push(std::mem::replace(&mut fd, fc.clone()));
            c = b - GOLDEN * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            extra.push(std::mem::replace(&mut fc, fd.clone()));
            d = a + GOLDEN * (b - a);
            fd = eval(d)?;
        }
    }
    for p in [fc, fd] {
        extra.push(p);
    }
    for p in &extra {
        if obj(p) > obj(&best) {
            best = p.clone();
        }
    }
    extra.sort_by(|x, y| x.u.total_cmp(&y.u));
    extra.dedup_by(|x, y| x.u == y.u);
    Ok((best, extra))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_thresholds() {
        assert_eq!(classify_weights([0.1, 0.8, 0.1], 0.6), StateClass::T11);
        assert_eq!(classify_weights([0.45, 0.05, 0.5], 0.6), StateClass::T20);
        assert_eq!(classify_weights([0.25, 0.5, 0.25], 0.6), StateClass::Mixed);
    }

    #[test]
    fn greedy_matching_prefers_large_overlaps() {
        let o = DMatrix::from_row_slice(3, 3, &[0.9, 0.4, 0.0, 0.4, 0.8, 0.1, 0.0, 0.2, 0.95]);
        let m = match_levels(&o, &[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]);
        assert_eq!(m.target, vec![Some(0), Some(1), Some(2)]);
        assert!(m.ambiguous.is_empty());
        // swapped levels
        let o = DMatrix::from_row_slice(2, 2, &[0.1, 0.99, 0.99, 0.1]);
        let m = match_levels(&o, &[0.0, 1.0], &[0.0, 1.0]);
        assert_eq!(m.target, vec![Some(1), Some(0)]);
    }

    #[test]
    fn ambiguous_match_resolved_by_energy() {
        let o = DMatrix::from_row_slice(2, 2, &[0.7, 0.7005, 0.7, 0.7]);
        let m = match_levels(&o, &[1.0, 2.0], &[1.01, 1.5]);
        assert_eq!(m.target[0], Some(0));
        assert_eq!(m.ambiguous, vec![0]);
        assert_eq!(m.target[1], Some(1));
    }

    #[test]
    fn grid_points() {
        let g = u_grid(-0.5, 1.0, 61);
        assert_eq!(g.len(), 61);
        assert!((g[20]).abs() < 1e-15);
        assert_eq!(g[60], 1.0);
    }
}
