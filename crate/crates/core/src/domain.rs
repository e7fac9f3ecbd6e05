//! Physical configuration: double-well geometry, interaction shapes and the
//! configuration-space region partition.
//!
//! Units follow the natural convention hbar = 1, m = 1/2. Lengths are in units
//! of the reference length, energies in its inverse square, times in its square
//! and the interaction strength `U` in its inverse.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square double well: flat wells of width `well_length` separated by a
/// barrier of width `barrier_width` and height `barrier_height`, with hard
/// walls at both outer ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub well_length: f64,
    pub barrier_width: f64,
    pub barrier_height: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self {
            well_length: 50.0,
            barrier_width: 3.0,
            barrier_height: 0.3,
        }
    }
}

impl PotentialSpec {
    pub fn new(well_length: f64, barrier_width: f64, barrier_height: f64) -> Result<Self> {
        let spec = Self {
            well_length,
            barrier_width,
            barrier_height,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.well_length.is_finite() && self.well_length > 0.0) {
            return Err(Error::Config(format!(
                "well_length must be positive, got {}",
                self.well_length
            )));
        }
        if !(self.barrier_width.is_finite() && self.barrier_width >= 0.0) {
            return Err(Error::Config(format!(
                "barrier_width must be non-negative, got {}",
                self.barrier_width
            )));
        }
        if !(self.barrier_height.is_finite() && self.barrier_height >= 0.0) {
            return Err(Error::Config(format!(
                "barrier_height must be non-negative, got {}",
                self.barrier_height
            )));
        }
        Ok(())
    }

    /// Total domain length `2 l + b`.
    pub fn total_length(&self) -> f64 {
        2.0 * self.well_length + self.barrier_width
    }

    /// Barrier midpoint, where the left and right halves meet.
    pub fn x_mid(&self) -> f64 {
        self.well_length + 0.5 * self.barrier_width
    }

    /// Points where the potential is discontinuous, including the outer walls.
    pub fn breakpoints(&self) -> [f64; 4] {
        let l = self.well_length;
        [0.0, l, l + self.barrier_width, self.total_length()]
    }
}

/// Evaluates the one-body potential at `x`. The barrier interval is closed.
pub fn potential_eval(x: f64, spec: &PotentialSpec) -> Result<f64> {
    let length = spec.total_length();
    if !(0.0..=length).contains(&x) {
        return Err(Error::Domain { value: x, length });
    }
    let l = spec.well_length;
    if x >= l && x <= l + spec.barrier_width {
        Ok(spec.barrier_height)
    } else {
        Ok(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    Contact,
    SoftCoulomb,
    HardCoulomb,
}

impl InteractionKind {
    pub const ALL: [InteractionKind; 3] = [
        InteractionKind::Contact,
        InteractionKind::SoftCoulomb,
        InteractionKind::HardCoulomb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InteractionKind::Contact => "contact",
            InteractionKind::SoftCoulomb => "soft_coulomb",
            InteractionKind::HardCoulomb => "hard_coulomb",
        }
    }
}

impl fmt::Display for InteractionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InteractionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownStrategy {
                family: "interaction",
                name: s.to_string(),
                available: Self::ALL.map(|k| k.name()).join(", "),
            })
    }
}

/// Interaction kind, softening length and strength `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionSpec {
    pub kind: InteractionKind,
    /// Softening length, only used by the soft Coulomb shape.
    pub softening: f64,
    pub strength: f64,
}

impl InteractionSpec {
    pub fn new(kind: InteractionKind, strength: f64) -> Self {
        Self {
            kind,
            softening: 1.0,
            strength,
        }
    }

    pub fn with_softening(mut self, softening: f64) -> Self {
        self.softening = softening;
        self
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = strength;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == InteractionKind::SoftCoulomb
            && !(self.softening.is_finite() && self.softening > 0.0)
        {
            return Err(Error::Config(format!(
                "soft Coulomb softening must be positive, got {}",
                self.softening
            )));
        }
        if !self.strength.is_finite() {
            return Err(Error::Config("interaction strength must be finite".into()));
        }
        Ok(())
    }
}

/// Interaction shape `V_int(r)` before multiplication by `U`.
pub fn interaction_eval(r: f64, spec: &InteractionSpec) -> Result<f64> {
    crate::interaction::build(spec)?.pointwise(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// Both particles left of the barrier midpoint.
    I,
    /// One particle on each side.
    II,
    /// Both particles right of the barrier midpoint.
    III,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::I, Region::II, Region::III];
}

/// Region of the configuration point `(x1, x2)`. Points exactly on the split
/// line count as left.
pub fn region_of(x1: f64, x2: f64, spec: &PotentialSpec) -> Result<Region> {
    let length = spec.total_length();
    for x in [x1, x2] {
        if !(0.0..=length).contains(&x) {
            return Err(Error::Domain { value: x, length });
        }
    }
    let mid = spec.x_mid();
    Ok(match (x1 <= mid, x2 <= mid) {
        (true, true) => Region::I,
        (false, false) => Region::III,
        _ => Region::II,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_examples() {
        let spec = PotentialSpec::default();
        assert_eq!(potential_eval(25.0, &spec).unwrap(), 0.0);
        assert_eq!(potential_eval(51.5, &spec).unwrap(), 0.3);
        assert_eq!(potential_eval(100.0, &spec).unwrap(), 0.0);
        assert!(matches!(
            potential_eval(-0.1, &spec),
            Err(Error::Domain { .. })
        ));
        assert!(potential_eval(103.5, &spec).is_err());
    }

    #[test]
    fn potential_mirror_symmetric() {
        let spec = PotentialSpec::default();
        let length = spec.total_length();
        for k in 0..=2060 {
            let x = k as f64 * 0.05;
            let a = potential_eval(x, &spec).unwrap();
            let b = potential_eval(length - x, &spec).unwrap();
            assert_eq!(a, b, "x = {x}");
        }
    }

    #[test]
    fn interaction_examples() {
        let soft = InteractionSpec::new(InteractionKind::SoftCoulomb, 1.0);
        assert_eq!(interaction_eval(0.0, &soft).unwrap(), 1.0);
        let hard = InteractionSpec::new(InteractionKind::HardCoulomb, 1.0);
        assert_eq!(interaction_eval(2.0, &hard).unwrap(), 0.5);
        assert!(matches!(interaction_eval(0.0, &hard), Err(Error::Singular)));
        let contact = InteractionSpec::new(InteractionKind::Contact, 1.0);
        assert!(matches!(
            interaction_eval(0.0, &contact),
            Err(Error::NotPointwise(_))
        ));
    }

    #[test]
    fn soft_approaches_hard_as_softening_vanishes() {
        let expected = [1.0 / 2f64.sqrt(), 1.0 / 1.01f64.sqrt(), 1.0 / 1.0001f64.sqrt()];
        let mut last_err = f64::INFINITY;
        for (delta, want) in [1.0, 0.1, 0.01].into_iter().zip(expected) {
            let soft = InteractionSpec::new(InteractionKind::SoftCoulomb, 1.0).with_softening(delta);
            let v = interaction_eval(1.0, &soft).unwrap();
            assert!((v - want).abs() < 1e-15);
            let err = (v - 1.0).abs();
            assert!(err < last_err);
            last_err = err;
        }
    }

    #[test]
    fn region_examples() {
        let spec = PotentialSpec::default();
        assert_eq!(region_of(10.0, 40.0, &spec).unwrap(), Region::I);
        assert_eq!(region_of(10.0, 90.0, &spec).unwrap(), Region::II);
        assert_eq!(region_of(60.0, 95.0, &spec).unwrap(), Region::III);
        assert!(region_of(10.0, 200.0, &spec).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in InteractionKind::ALL {
            assert_eq!(kind.name().parse::<InteractionKind>().unwrap(), kind);
        }
        assert!("yukawa".parse::<InteractionKind>().is_err());
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(PotentialSpec::new(0.0, 3.0, 0.3).is_err());
        assert!(PotentialSpec::new(50.0, -1.0, 0.3).is_err());
        let soft = InteractionSpec::new(InteractionKind::SoftCoulomb, 0.5).with_softening(0.0);
        assert!(soft.validate().is_err());
    }
}
