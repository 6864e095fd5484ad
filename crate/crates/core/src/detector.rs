//! Window-based click model for the two SPADs behind Bob's PBS.
//!
//! Time is cut into discrimination windows equal to the detector dead time.
//! In each window a detector clicks with the Poisson threshold probability
//! `1 - exp(-(eta mu + r_dark w))`; the two arms are independent.

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;

use crate::error::{Error, Result};

/// Laser wavelength, nm.
pub const HENE_WAVELENGTH_NM: f64 = 632.8;

/// Mean photon number per window quoted for the vacuum configuration.
pub const REFERENCE_MEAN_PHOTONS: f64 = 7.8e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    pub quantum_efficiency: f64,
    pub dead_time_ns: f64,
    /// Dark-count rate of each detector, Hz.
    pub dark_rate_hz: f64,
}

impl Default for DetectorParams {
    /// PDM 5CTC figures at 633 nm with no dark counts.
    fn default() -> Self {
        Self {
            quantum_efficiency: 0.38,
            dead_time_ns: 78.0,
            dark_rate_hz: 0.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.quantum_efficiency > 0.0 && self.quantum_efficiency <= 1.0) {
            return Err(Error::domain(
                "quantum_efficiency",
                self.quantum_efficiency,
                "in (0, 1]",
            ));
        }
        if !(self.dead_time_ns > 0.0 && self.dead_time_ns.is_finite()) {
            return Err(Error::domain("dead_time_ns", self.dead_time_ns, "> 0"));
        }
        if !(self.dark_rate_hz >= 0.0 && self.dark_rate_hz.is_finite()) {
            return Err(Error::domain("dark_rate_hz", self.dark_rate_hz, ">= 0"));
        }
        Ok(())
    }

    /// Discrimination window in seconds.
    pub fn window_s(&self) -> f64 {
        self.dead_time_ns * 1e-9
    }

    /// Expected dark counts per detector per window.
    pub fn dark_counts_per_window(&self) -> f64 {
        self.dark_rate_hz * self.window_s()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    pub wavelength_nm: f64,
    /// Mean photon number per window at the channel input.
    pub mean_photons_per_window: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            wavelength_nm: HENE_WAVELENGTH_NM,
            mean_photons_per_window: REFERENCE_MEAN_PHOTONS,
        }
    }
}

impl SourceParams {
    /// Source strength giving a detected signal rate of `count_rate_hz`
    /// through a lossless channel (first order in the mean, no dark counts).
    pub fn from_count_rate(count_rate_hz: f64, detector: &DetectorParams) -> Result<Self> {
        if !(count_rate_hz >= 0.0 && count_rate_hz.is_finite()) {
            return Err(Error::domain("count_rate_hz", count_rate_hz, ">= 0"));
        }
        detector.validate()?;
        Ok(Self {
            wavelength_nm: HENE_WAVELENGTH_NM,
            mean_photons_per_window: count_rate_hz * detector.window_s()
                / detector.quantum_efficiency,
        })
    }

    /// Detected signal rate implied by the mean photon number, `eta mu / w`.
    pub fn count_rate_hz(&self, detector: &DetectorParams) -> f64 {
        detector.quantum_efficiency * self.mean_photons_per_window / detector.window_s()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_photons_per_window >= 0.0 && self.mean_photons_per_window.is_finite()) {
            return Err(Error::domain(
                "mean_photons_per_window",
                self.mean_photons_per_window,
                ">= 0",
            ));
        }
        if !(self.wavelength_nm > 0.0 && self.wavelength_nm.is_finite()) {
            return Err(Error::domain("wavelength_nm", self.wavelength_nm, "> 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowOutcome {
    None,
    Det0,
    Det1,
    Both,
}

impl WindowOutcome {
    pub fn from_clicks(det0: bool, det1: bool) -> Self {
        match (det0, det1) {
            (false, false) => WindowOutcome::None,
            (true, false) => WindowOutcome::Det0,
            (false, true) => WindowOutcome::Det1,
            (true, true) => WindowOutcome::Both,
        }
    }
}

/// Probability that a detector clicks in one window given the mean photon
/// number reaching it.
pub fn click_probability(mean_photons_at_arm: f64, params: &DetectorParams) -> Result<f64> {
    if !(mean_photons_at_arm >= 0.0) {
        return Err(Error::domain(
            "mean_photons_at_arm",
            mean_photons_at_arm,
            ">= 0",
        ));
    }
    let expected = params.quantum_efficiency * mean_photons_at_arm + params.dark_counts_per_window();
    Ok(-(-expected).exp_m1())
}

/// Precomputed per-arm click samplers for a fixed pair of arm means.
#[derive(Debug, Clone, Copy)]
pub struct ArmPair {
    p: [f64; 2],
    arms: [Bernoulli; 2],
}

impl ArmPair {
    pub fn new(mean0: f64, mean1: f64, params: &DetectorParams) -> Result<Self> {
        let p = [
            click_probability(mean0, params)?,
            click_probability(mean1, params)?,
        ];
        Ok(Self::from_probabilities(p))
    }

    pub fn from_probabilities(p: [f64; 2]) -> Self {
        let arm = |p: f64| Bernoulli::new(p.clamp(0.0, 1.0)).expect("clamped probability");
        Self {
            p,
            arms: [arm(p[0]), arm(p[1])],
        }
    }

    pub fn probabilities(&self) -> [f64; 2] {
        self.p
    }

    /// Probabilities of `(none, det0 only, det1 only, both)`.
    pub fn outcome_probabilities(&self) -> [f64; 4] {
        let [a, b] = self.p;
        [(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b]
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WindowOutcome {
        let d0 = self.arms[0].sample(rng);
        let d1 = self.arms[1].sample(rng);
        WindowOutcome::from_clicks(d0, d1)
    }
}

/// Draws one discrimination window with independent clicks on each arm.
pub fn simulate_window<R: Rng + ?Sized>(
    mean0: f64,
    mean1: f64,
    params: &DetectorParams,
    rng: &mut R,
) -> Result<WindowOutcome> {
    Ok(ArmPair::new(mean0, mean1, params)?.sample(rng))
}
