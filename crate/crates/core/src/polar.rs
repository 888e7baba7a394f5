//! Linear polarization states, projective measurement, and the closed-form
//! error and information formulas for intercept-resend attacks.
//!
//! Angles are kept in degrees everywhere and only converted to radians
//! inside trigonometric calls, so the protocol constants (0, 22.5, 45, 90,
//! 135) stay exact.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolarError {
    #[error("basis angle {0}° is outside [0, 90)")]
    BasisOutOfRange(f64),
    #[error("angle {0} is not finite")]
    NonFinite(f64),
}

/// A pure linear polarization, stored as its angle from horizontal in
/// degrees, normalized to `[0, 180)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PolarizationState(f64);

impl PolarizationState {
    pub const H: Self = Self(0.0);
    pub const V: Self = Self(90.0);
    pub const D: Self = Self(45.0);
    pub const A: Self = Self(135.0);

    /// Builds a state from any finite angle; the angle is folded into
    /// `[0, 180)` because a linear polarization is π-periodic.
    pub fn new(degrees: f64) -> Result<Self, PolarError> {
        if !degrees.is_finite() {
            return Err(PolarError::NonFinite(degrees));
        }
        let folded = degrees.rem_euclid(180.0);
        // rem_euclid can round up to exactly 180.0 for tiny negative inputs
        Ok(Self(if folded >= 180.0 { 0.0 } else { folded }))
    }

    pub fn angle(self) -> f64 {
        self.0
    }

    /// The state at 90° to this one.
    pub fn orthogonal(self) -> Self {
        Self::new(self.0 + 90.0).expect("finite angle")
    }

    pub fn is_orthogonal_to(self, other: Self) -> bool {
        let diff = (self.0 - other.0).rem_euclid(180.0);
        (diff - 90.0).abs() < 1e-9
    }
}

impl TryFrom<f64> for PolarizationState {
    type Error = PolarError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<PolarizationState> for f64 {
    fn from(s: PolarizationState) -> f64 {
        s.0
    }
}

/// An orthogonal pair of linear axes at `theta` and `theta + 90`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MeasurementBasis(f64);

impl MeasurementBasis {
    pub const HV: Self = Self(0.0);
    pub const DA: Self = Self(45.0);
    /// The 22.5° basis that minimizes an intercept-resend jammer's own
    /// identification error.
    pub const BREIDBART: Self = Self(22.5);

    pub fn new(theta: f64) -> Result<Self, PolarError> {
        if !theta.is_finite() {
            return Err(PolarError::NonFinite(theta));
        }
        if !(0.0..90.0).contains(&theta) {
            return Err(PolarError::BasisOutOfRange(theta));
        }
        Ok(Self(theta))
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    pub fn aligned_state(self) -> PolarizationState {
        PolarizationState(self.0)
    }

    pub fn orthogonal_state(self) -> PolarizationState {
        PolarizationState(self.0 + 90.0)
    }

    pub fn state_for(self, axis: Axis) -> PolarizationState {
        match axis {
            Axis::Aligned => self.aligned_state(),
            Axis::Orthogonal => self.orthogonal_state(),
        }
    }
}

impl TryFrom<f64> for MeasurementBasis {
    type Error = PolarError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<MeasurementBasis> for f64 {
    fn from(b: MeasurementBasis) -> f64 {
        b.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    Aligned,
    Orthogonal,
}

/// Result of a projective measurement: which axis clicked, and the state
/// the photon collapsed into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub axis: Axis,
    pub as_state: PolarizationState,
}

/// The four BB84 states used by the imaging source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolState {
    H,
    V,
    D,
    A,
}

impl ProtocolState {
    pub const ALL: [ProtocolState; 4] = [Self::H, Self::V, Self::D, Self::A];

    pub fn state(self) -> PolarizationState {
        match self {
            Self::H => PolarizationState::H,
            Self::V => PolarizationState::V,
            Self::D => PolarizationState::D,
            Self::A => PolarizationState::A,
        }
    }

    pub fn basis(self) -> MeasurementBasis {
        match self {
            Self::H | Self::V => MeasurementBasis::HV,
            Self::D | Self::A => MeasurementBasis::DA,
        }
    }

    /// Bit value carried by the state: 0 for the basis' aligned axis (H, D),
    /// 1 for its orthogonal axis (V, A).
    pub fn bit(self) -> u8 {
        match self {
            Self::H | Self::D => 0,
            Self::V | Self::A => 1,
        }
    }

    pub fn axis(self) -> Axis {
        if self.bit() == 0 {
            Axis::Aligned
        } else {
            Axis::Orthogonal
        }
    }

    /// Recovers the protocol state for an exact H/V/D/A angle.
    pub fn from_state(state: PolarizationState) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.state() == state)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::H => "H",
            Self::V => "V",
            Self::D => "D",
            Self::A => "A",
        }
    }
}

impl fmt::Display for ProtocolState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn cos2_deg(deg: f64) -> f64 {
    let c = deg.to_radians().cos();
    c * c
}

/// Probability that `state` exits the aligned port of `basis`:
/// cos²(state − theta).
pub fn detection_probability(state: PolarizationState, basis: MeasurementBasis) -> f64 {
    match (state.0 - basis.0).rem_euclid(180.0) {
        0.0 => 1.0,
        90.0 => 0.0,
        45.0 | 135.0 => 0.5,
        d => cos2_deg(d),
    }
}

/// Samples a projective measurement with the caller's uniform draw `u`.
/// The returned state is the collapsed axis, which is what makes
/// intercept-resend destructive.
pub fn measure(state: PolarizationState, basis: MeasurementBasis, u: f64) -> Outcome {
    let axis = if u < detection_probability(state, basis) {
        Axis::Aligned
    } else {
        Axis::Orthogonal
    };
    Outcome {
        axis,
        as_state: basis.state_for(axis),
    }
}

/// Intercept-resend jammer's own identification error when eavesdropping
/// in a basis `theta` degrees from the preparation basis:
/// ¼[(1 − cos 2θ) + (1 − sin 2θ)].
pub fn jammer_error_rate(theta: f64) -> f64 {
    let two = (2.0 * theta).to_radians();
    0.25 * ((1.0 - two.cos()) + (1.0 - two.sin()))
}

/// Receiver error rate when the jammer resends in its eavesdropping basis:
/// ¼[(1 − cos² 2θ) + (1 − sin² 2θ)], which is ¼ for every θ.
pub fn bob_error_rate(theta: f64) -> f64 {
    let two = (2.0 * theta).to_radians();
    let (s, c) = two.sin_cos();
    0.25 * ((1.0 - c * c) + (1.0 - s * s))
}

/// Minimum of [`jammer_error_rate`], reached in the Breidbart basis.
pub fn breidbart_minimum() -> f64 {
    (2.0 - std::f64::consts::SQRT_2) / 4.0
}

/// Shannon entropy of a Bernoulli(p) variable, in bits, with 0·log₂0 = 0.
pub fn binary_entropy(p: f64) -> f64 {
    fn term(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            x * x.log2()
        }
    }
    -(term(p) + term(1.0 - p))
}

/// Sender/receiver mutual information per detected photon for error rate
/// `e_b`: 1 + (1 − e)log₂(1 − e) + e·log₂(e).
pub fn mutual_information(e_b: f64) -> f64 {
    1.0 - binary_entropy(e_b)
}
