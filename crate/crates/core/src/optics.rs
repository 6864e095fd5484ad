//! Plane-polarization algebra for the transmitter and receiver chains.
//!
//! Angles are in degrees measured clockwise from vertical and are kept in
//! `[-90, 90)`. Half-wave plates are ideal; every intrinsic optical error is
//! carried by the polarizer extinction ratio plus a residual misalignment
//! angle applied to the state before Bob's beam splitter.

use std::fmt;

use crate::error::{Error, Result};

/// Extinction ratio of the Glan polarizer in the reference setup.
pub const REFERENCE_EXTINCTION_RATIO: f64 = 1000.0;

/// Wraps an angle into `[-90, 90)` degrees.
pub fn normalize_angle(deg: f64) -> f64 {
    let wrapped = (deg + 90.0).rem_euclid(180.0) - 90.0;
    // rem_euclid can round up to exactly 180 for tiny negative inputs
    if wrapped >= 90.0 {
        wrapped - 180.0
    } else {
        wrapped
    }
}

fn check_extinction_ratio(ratio: f64) -> Result<f64> {
    if ratio > 1.0 && !ratio.is_nan() {
        Ok(ratio)
    } else {
        Err(Error::domain("extinction_ratio", ratio, "> 1"))
    }
}

/// A plane-polarized state with finite polarizer extinction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    angle_deg: f64,
    extinction_ratio: f64,
}

impl PolarizationState {
    /// `extinction_ratio` may be `f64::INFINITY` for an ideal polarizer.
    pub fn new(angle_deg: f64, extinction_ratio: f64) -> Result<Self> {
        if !angle_deg.is_finite() {
            return Err(Error::domain("angle_deg", angle_deg, "a finite angle"));
        }
        Ok(Self {
            angle_deg: normalize_angle(angle_deg),
            extinction_ratio: check_extinction_ratio(extinction_ratio)?,
        })
    }

    /// Vertically polarized laser light after the polarizer.
    pub fn vertical(extinction_ratio: f64) -> Result<Self> {
        Self::new(0.0, extinction_ratio)
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle_deg
    }

    pub fn extinction_ratio(&self) -> f64 {
        self.extinction_ratio
    }

    /// Fraction of power leaked into the orthogonal polarization, `1 / (1 + ratio)`.
    pub fn leakage(&self) -> f64 {
        1.0 / (1.0 + self.extinction_ratio)
    }

    /// Rotates the polarization plane by `delta_deg` (clockwise positive).
    pub fn rotated(&self, delta_deg: f64) -> Self {
        Self {
            angle_deg: normalize_angle(self.angle_deg + delta_deg),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    /// Vertical / horizontal, axes at 0° and 90°.
    VH,
    /// Left / right diagonal, axes at -45° and +45°.
    LR,
}

impl Basis {
    pub const ALL: [Basis; 2] = [Basis::VH, Basis::LR];

    /// Measurement axis that reads out bit 0.
    pub fn zero_axis_deg(self) -> f64 {
        match self {
            Basis::VH => 0.0,
            Basis::LR => -45.0,
        }
    }

    pub fn axis_deg(self, bit: Bit) -> f64 {
        match bit {
            Bit::Zero => self.zero_axis_deg(),
            Bit::One => self.zero_axis_deg() + 90.0,
        }
    }

    pub fn conjugate(self) -> Basis {
        match self {
            Basis::VH => Basis::LR,
            Basis::LR => Basis::VH,
        }
    }

    /// Plate angle of Bob's half-wave plate in front of the PBS.
    pub fn receiver_plate(self) -> HwpSetting {
        match self {
            Basis::VH => HwpSetting::new(0.0),
            Basis::LR => HwpSetting::new(22.5),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Basis::VH => "VH",
            Basis::LR => "LR",
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Key bit. 0 is vertical or left-diagonal, 1 is horizontal or right-diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub fn index(self) -> usize {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }
}

impl From<bool> for Bit {
    fn from(one: bool) -> Self {
        if one {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

/// Fast-axis angle of a half-wave plate, degrees from vertical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HwpSetting {
    pub plate_angle_deg: f64,
}

impl HwpSetting {
    pub const fn new(plate_angle_deg: f64) -> Self {
        Self { plate_angle_deg }
    }

    /// Alice's plate position for a given bit and basis.
    pub fn for_encoding(bit: Bit, basis: Basis) -> Self {
        match (basis, bit) {
            (Basis::VH, Bit::Zero) => Self::new(0.0),
            (Basis::VH, Bit::One) => Self::new(45.0),
            (Basis::LR, Bit::Zero) => Self::new(-22.5),
            (Basis::LR, Bit::One) => Self::new(22.5),
        }
    }
}

/// The four states Alice can prepare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AliceState {
    Vertical,
    Horizontal,
    LeftDiagonal,
    RightDiagonal,
}

impl AliceState {
    pub const ALL: [AliceState; 4] = [
        AliceState::Vertical,
        AliceState::Horizontal,
        AliceState::LeftDiagonal,
        AliceState::RightDiagonal,
    ];

    pub fn from_bit_basis(bit: Bit, basis: Basis) -> Self {
        match (basis, bit) {
            (Basis::VH, Bit::Zero) => AliceState::Vertical,
            (Basis::VH, Bit::One) => AliceState::Horizontal,
            (Basis::LR, Bit::Zero) => AliceState::LeftDiagonal,
            (Basis::LR, Bit::One) => AliceState::RightDiagonal,
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            AliceState::Vertical | AliceState::Horizontal => Basis::VH,
            AliceState::LeftDiagonal | AliceState::RightDiagonal => Basis::LR,
        }
    }

    pub fn bit(self) -> Bit {
        match self {
            AliceState::Vertical | AliceState::LeftDiagonal => Bit::Zero,
            AliceState::Horizontal | AliceState::RightDiagonal => Bit::One,
        }
    }

    pub fn plate(self) -> HwpSetting {
        HwpSetting::for_encoding(self.bit(), self.basis())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AliceState::Vertical => "V",
            AliceState::Horizontal => "H",
            AliceState::LeftDiagonal => "L",
            AliceState::RightDiagonal => "R",
        }
    }
}

impl fmt::Display for AliceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Reflects the polarization plane about the plate's fast axis.
pub fn hwp_transform(state: PolarizationState, plate: HwpSetting) -> PolarizationState {
    PolarizationState {
        angle_deg: normalize_angle(2.0 * plate.plate_angle_deg - state.angle_deg),
        extinction_ratio: state.extinction_ratio,
    }
}

/// Prepares Alice's state by rotating the vertical laser polarization.
pub fn encode(bit: Bit, basis: Basis, extinction_ratio: f64) -> Result<PolarizationState> {
    let laser = PolarizationState::vertical(extinction_ratio)?;
    Ok(hwp_transform(laser, HwpSetting::for_encoding(bit, basis)))
}

/// Probabilities that a photon exits the PBS towards the bit-0 and bit-1 detectors.
///
/// The ideal Malus components are mixed with the polarizer leakage
/// `l = 1 / (1 + extinction_ratio)`: `p_i = (1 - l) m_i + l (1 - m_i)`.
pub fn pbs_probabilities(state: PolarizationState, basis: Basis) -> (f64, f64) {
    let delta = (state.angle_deg - basis.zero_axis_deg()).to_radians();
    let m0 = delta.cos().powi(2);
    let leak = state.leakage();
    let p0 = (1.0 - leak) * m0 + leak * (1.0 - m0);
    (p0, 1.0 - p0)
}

/// Optical chain parameters shared by every window of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticsParams {
    pub extinction_ratio: f64,
    /// Residual rotation of the state relative to Bob's analyser, degrees.
    pub misalignment_deg: f64,
    /// Bob-side transmission (lenses, PBS insertion loss) in `(0, 1]`.
    pub bob_transmission: f64,
}

impl Default for OpticsParams {
    fn default() -> Self {
        Self {
            extinction_ratio: REFERENCE_EXTINCTION_RATIO,
            misalignment_deg: 0.0,
            bob_transmission: 1.0,
        }
    }
}

impl OpticsParams {
    pub fn ideal() -> Self {
        Self {
            extinction_ratio: f64::INFINITY,
            misalignment_deg: 0.0,
            bob_transmission: 1.0,
        }
    }

    /// Picks the misalignment that makes the chain's intrinsic error
    /// probability equal `error_probability`.
    pub fn with_error_probability(extinction_ratio: f64, error_probability: f64) -> Result<Self> {
        check_extinction_ratio(extinction_ratio)?;
        let leak = 1.0 / (1.0 + extinction_ratio);
        if !(leak..=0.5).contains(&error_probability) {
            return Err(Error::domain(
                "error_probability",
                error_probability,
                "between the polarizer leakage and 0.5",
            ));
        }
        let sin2 = (error_probability - leak) / (1.0 - 2.0 * leak);
        Ok(Self {
            extinction_ratio,
            misalignment_deg: sin2.sqrt().asin().to_degrees(),
            bob_transmission: 1.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_extinction_ratio(self.extinction_ratio)?;
        if !self.misalignment_deg.is_finite() {
            return Err(Error::domain(
                "misalignment_deg",
                self.misalignment_deg,
                "a finite angle",
            ));
        }
        if !(self.bob_transmission > 0.0 && self.bob_transmission <= 1.0) {
            return Err(Error::domain(
                "bob_transmission",
                self.bob_transmission,
                "in (0, 1]",
            ));
        }
        Ok(())
    }

    /// Prepared state as seen by Bob's analyser, misalignment included.
    pub fn received_state(&self, alice: AliceState) -> Result<PolarizationState> {
        Ok(encode(alice.bit(), alice.basis(), self.extinction_ratio)?
            .rotated(self.misalignment_deg))
    }

    /// Probability that a photon sent in basis B and measured in B lands in
    /// the wrong detector. Identical for all four states.
    pub fn error_probability(&self) -> f64 {
        let leak = 1.0 / (1.0 + self.extinction_ratio);
        let sin2 = self.misalignment_deg.to_radians().sin().powi(2);
        leak + (1.0 - 2.0 * leak) * sin2
    }
}
