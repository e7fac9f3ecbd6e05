//! Fixed quadrature rules on the reference interval and triangle.

/// Point of a triangle rule in barycentric coordinates, with a weight
/// normalized so the weights sum to one (multiply by the area).
#[derive(Debug, Clone, Copy)]
pub struct TrianglePoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

/// Degree-2 rule with interior points.
pub const TRIANGLE_3: [TrianglePoint; 3] = [
    TrianglePoint { bary: [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], weight: 1.0 / 3.0 },
    TrianglePoint { bary: [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], weight: 1.0 / 3.0 },
    TrianglePoint { bary: [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], weight: 1.0 / 3.0 },
];

const D7_A1: f64 = 0.059_715_871_789_770;
const D7_B1: f64 = 0.470_142_064_105_115;
const D7_W1: f64 = 0.132_394_152_788_506;
const D7_A2: f64 = 0.797_426_985_353_087;
const D7_B2: f64 = 0.101_286_507_323_456;
const D7_W2: f64 = 0.125_939_180_544_827;

/// Dunavant degree-5 rule; all points are interior.
pub const TRIANGLE_7: [TrianglePoint; 7] = [
    TrianglePoint { bary: [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], weight: 0.225 },
    TrianglePoint { bary: [D7_A1, D7_B1, D7_B1], weight: D7_W1 },
    TrianglePoint { bary: [D7_B1, D7_A1, D7_B1], weight: D7_W1 },
    TrianglePoint { bary: [D7_B1, D7_B1, D7_A1], weight: D7_W1 },
    TrianglePoint { bary: [D7_A2, D7_B2, D7_B2], weight: D7_W2 },
    TrianglePoint { bary: [D7_B2, D7_A2, D7_B2], weight: D7_W2 },
    TrianglePoint { bary: [D7_B2, D7_B2, D7_A2], weight: D7_W2 },
];

/// Three-point Gauss-Legendre rule on `[0, 1]`, exact to degree 5.
pub const GAUSS_3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of `l1^a l2^b l3^c` over a unit-area triangle.
    fn monomial(a: u32, b: u32, c: u32) -> f64 {
        let f = |k: u32| (1..=k).map(f64::from).product::<f64>();
        2.0 * f(a) * f(b) * f(c) / f(a + b + c + 2)
    }

    fn apply(rule: &[TrianglePoint], a: u32, b: u32, c: u32) -> f64 {
        rule.iter()
            .map(|p| p.weight * p.bary[0].powi(a as i32) * p.bary[1].powi(b as i32) * p.bary[2].powi(c as i32))
            .sum()
    }

    #[test]
    fn triangle_rules_exact_to_their_degree() {
        for (rule, degree) in [(&TRIANGLE_3[..], 2), (&TRIANGLE_7[..], 5)] {
            for a in 0..=degree {
                for b in 0..=degree - a {
                    for c in 0..=degree - a - b {
                        let err = apply(rule, a, b, c) - monomial(a, b, c);
                        assert!(err.abs() < 1e-14, "degree {degree}: ({a},{b},{c}) err {err}");
                    }
                }
            }
        }
    }

    #[test]
    fn gauss_exact_to_degree_five() {
        for k in 0..=5 {
            let q: f64 = GAUSS_3.iter().map(|(x, w)| w * x.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15);
        }
    }
}
