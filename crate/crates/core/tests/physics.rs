//! Physical invariants on small domains, partly property-based.

use proptest::prelude::*;
use twobody_tunnel::assembly::MassScheme;
use twobody_tunnel::domain::{InteractionKind, InteractionSpec, PotentialSpec, Region};
use twobody_tunnel::eigensolve::LanczosSolver;
use twobody_tunnel::quench::{decompose, evolve_probabilities, region_projections, time_grid, InitialState, QuenchSetup};
use twobody_tunnel::scan::{classify_state, hellmann_feynman_slope, StateClass};

fn small() -> PotentialSpec {
    PotentialSpec::new(6.0, 1.0, 0.5).unwrap()
}

fn setup(kind: InteractionKind) -> QuenchSetup {
    QuenchSetup::new(&small(), &InteractionSpec::new(kind, 0.0), 0.5, MassScheme::Consistent).unwrap()
}

#[test]
fn contact_t11_states_do_not_feel_the_interaction() {
    // at U = 0 the two outer levels of the lowest manifold are balanced
    // superpositions of T20 and T11; their sum or difference recovers the
    // one-per-well state, whose contact energy must be negligible
    let s = QuenchSetup::new(
        &PotentialSpec::default(),
        &InteractionSpec::new(InteractionKind::Contact, 0.0),
        1.0,
        MassScheme::Consistent,
    )
    .unwrap();
    let pairs = s.eigenpairs(0.0, 3, &LanczosSolver::default(), 1e-10).unwrap();
    let regions = Region::ALL.map(|r| s.full.region(r));
    assert_eq!(classify_state(&pairs[1], regions, 0.6).0, StateClass::T20);
    let t20_slope = hellmann_feynman_slope(&pairs[1], &s.full.v_int);
    let (a, b) = (&pairs[0].coefficients, &pairs[2].coefficients);
    let diabatic = [1.0, -1.0].map(|sign| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| (x + sign * y) / 2f64.sqrt()).collect()
    });
    let t11 = diabatic
        .iter()
        .max_by(|x, y| s.full.s_ii.quad_form(x).total_cmp(&s.full.s_ii.quad_form(y)))
        .unwrap();
    assert!(s.full.s_ii.quad_form(t11) > 0.95);
    let t11_slope = s.full.v_int.quad_form(t11);
    assert!(t11_slope.abs() < 1e-3 * t20_slope, "T11 {t11_slope} vs T20 {t20_slope}");
}

#[test]
fn hard_core_t20_slopes_exceed_t11() {
    let s = QuenchSetup::new(
        &PotentialSpec::default(),
        &InteractionSpec::new(InteractionKind::HardCoulomb, 0.0),
        1.0,
        MassScheme::Consistent,
    )
    .unwrap();
    let pairs = s.eigenpairs(0.5, 8, &LanczosSolver::default(), 1e-8).unwrap();
    let regions = Region::ALL.map(|r| s.full.region(r));
    let (mut t11, mut t20) = (Vec::new(), Vec::new());
    for p in &pairs {
        let slope = hellmann_feynman_slope(p, &s.full.v_int);
        match classify_state(p, regions, 0.6).0 {
            StateClass::T11 => t11.push(slope),
            StateClass::T20 => t20.push(slope),
            StateClass::Mixed => {}
        }
    }
    let t11_max = t11.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let t20_min = t20.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(t20_min > t11_max, "T20 {t20:?} vs T11 {t11:?}");
}

#[test]
fn mirror_duality_swaps_outer_regions() {
    for kind in InteractionKind::ALL {
        let s = setup(kind);
        let u = 0.4;
        let solver = LanczosSolver::default();
        let g = s.initial_state(u, &solver, 1e-10).unwrap();
        let pairs = s.eigenpairs(u, 60, &solver, 1e-10).unwrap();
        let q = region_projections(&s.full, &pairs);
        let times = time_grid(500.0, 201);
        let left = evolve_probabilities(&decompose(&g, &pairs, &s.full.mass, 0.0).unwrap(), &q, &times).unwrap();
        let right_state = InitialState {
            coefficients: s.full.basis.mirror(&g.coefficients),
            energy: g.energy,
        };
        let right =
            evolve_probabilities(&decompose(&right_state, &pairs, &s.full.mass, 0.0).unwrap(), &q, &times).unwrap();
        for i in 0..times.len() {
            assert!((left.p0[i] - right.p2[i]).abs() < 1e-9, "{kind}");
            assert!((left.p2[i] - right.p0[i]).abs() < 1e-9, "{kind}");
            assert!((left.p1[i] - right.p1[i]).abs() < 1e-9, "{kind}");
        }
    }
}

#[test]
fn repulsive_slopes_are_nonnegative() {
    for kind in InteractionKind::ALL {
        let s = setup(kind);
        for p in s.eigenpairs(0.3, 20, &LanczosSolver::default(), 1e-8).unwrap() {
            assert!(hellmann_feynman_slope(&p, &s.full.v_int) >= -1e-12, "{kind}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn probabilities_conserved_and_bounded(u in -0.5f64..1.0, kind in 0usize..3) {
        let kind = InteractionKind::ALL[kind];
        let s = setup(kind);
        let solver = LanczosSolver::default();
        let g = s.initial_state(u, &solver, 1e-8).unwrap();
        let pairs = s.eigenpairs(u, 40, &solver, 1e-8).unwrap();
        let d = decompose(&g, &pairs, &s.full.mass, 0.0).unwrap();
        prop_assert!(d.captured_norm <= 1.0 + 1e-9);
        let q = region_projections(&s.full, &pairs);
        let series = evolve_probabilities(&d, &q, &time_grid(300.0, 61)).unwrap();
        for i in 0..series.times.len() {
            let total = series.p0[i] + series.p1[i] + series.p2[i];
            prop_assert!((total - d.captured_norm).abs() < 1e-9);
            for p in [series.p0[i], series.p1[i], series.p2[i]] {
                prop_assert!((-1e-9..=1.0 + 1e-9).contains(&p));
            }
        }
        // state starts in the left well
        prop_assert!(series.p2[0] > 0.9 * d.captured_norm);
    }

    #[test]
    fn region_weights_tile(u in -0.5f64..1.0) {
        let s = setup(InteractionKind::SoftCoulomb);
        let regions = Region::ALL.map(|r| s.full.region(r));
        for p in s.eigenpairs(u, 10, &LanczosSolver::default(), 1e-8).unwrap() {
            let (_, w) = classify_state(&p, regions, 0.6);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
