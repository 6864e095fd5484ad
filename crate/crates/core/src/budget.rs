//! Closed-form link budget.
//!
//! The analytic QBER mixes an intrinsic optical error probability with
//! uncorrelated dark clicks: `q = (e R_sig + R_dark / 2) / (R_sig + R_dark)`.
//! The two free parameters of the lab setup (optical error and dark rate)
//! are fixed by calibrating against the vacuum and bromine operating points.

use crate::channel::{
    self, equivalent_path, loss_db, AtmosphereProfile, BromineCell, Transmittance,
};
use crate::detector::{DetectorParams, SourceParams};
use crate::error::{Error, Result};
use crate::optics::{OpticsParams, REFERENCE_EXTINCTION_RATIO};

/// BB84 QBER above which no secret key can be distilled.
pub const QBER_SECURITY_LIMIT: f64 = 0.11;
/// Largest channel loss considered compatible with secure BB84.
pub const MAX_SECURE_LOSS_DB: f64 = 40.0;

/// QBER measured with the cell evacuated.
pub const VACUUM_QBER: f64 = 0.0086;
/// QBER measured with bromine in the cell.
pub const BROMINE_QBER: f64 = 0.0768;
/// Detected count rate for a vertical state in the VH basis, cell evacuated.
pub const VACUUM_COUNT_RATE_HZ: f64 = 1e5;

/// Expected QBER for a signal click rate and total dark-click rate.
/// `None` when both rates are zero.
pub fn analytic_qber(e_opt: f64, signal_rate_hz: f64, dark_rate_total_hz: f64) -> Option<f64> {
    let total = signal_rate_hz + dark_rate_total_hz;
    if total <= 0.0 {
        return None;
    }
    Some((e_opt * signal_rate_hz + 0.5 * dark_rate_total_hz) / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CalibrationMode {
    /// Optical error is the vacuum QBER; dark counts only explain the rise
    /// under absorption.
    #[default]
    VacuumDarkNegligible,
    /// Solve both operating points together, dark counts included at vacuum.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationResult {
    pub e_opt: f64,
    /// Sum over both detectors, Hz.
    pub dark_rate_hz: f64,
    pub mode: CalibrationMode,
}

impl CalibrationResult {
    pub fn dark_rate_per_detector_hz(&self) -> f64 {
        self.dark_rate_hz / 2.0
    }
}

pub fn calibrate(
    vacuum_qber: f64,
    absorbed_qber: f64,
    vacuum_rate_hz: f64,
    transmitted_fraction: f64,
) -> Result<CalibrationResult> {
    calibrate_with(
        vacuum_qber,
        absorbed_qber,
        vacuum_rate_hz,
        transmitted_fraction,
        CalibrationMode::default(),
    )
}

pub fn calibrate_with(
    vacuum_qber: f64,
    absorbed_qber: f64,
    vacuum_rate_hz: f64,
    transmitted_fraction: f64,
    mode: CalibrationMode,
) -> Result<CalibrationResult> {
    if !(transmitted_fraction > 0.0 && transmitted_fraction <= 1.0) {
        return Err(Error::domain(
            "transmitted_fraction",
            transmitted_fraction,
            "in (0, 1]",
        ));
    }
    if !(vacuum_rate_hz > 0.0 && vacuum_rate_hz.is_finite()) {
        return Err(Error::domain("vacuum_rate_hz", vacuum_rate_hz, "> 0"));
    }
    if !(vacuum_qber >= 0.0) {
        return Err(Error::domain("vacuum_qber", vacuum_qber, ">= 0"));
    }
    if absorbed_qber >= 0.5 {
        return Err(Error::NoSolution(format!(
            "absorbed QBER {absorbed_qber} >= 0.5 cannot be reached with a finite dark rate"
        )));
    }
    if absorbed_qber < vacuum_qber {
        return Err(Error::NoSolution(format!(
            "absorbed QBER {absorbed_qber} is below the vacuum QBER {vacuum_qber}"
        )));
    }

    let signal = vacuum_rate_hz * transmitted_fraction;
    let (e_opt, dark) = match mode {
        CalibrationMode::VacuumDarkNegligible => {
            let dark = signal * (absorbed_qber - vacuum_qber) / (0.5 - absorbed_qber);
            (vacuum_qber, dark)
        }
        CalibrationMode::Joint => {
            // q_v (R + d) = e R + d/2  and  q_a (f R + d) = e f R + d/2
            let f = transmitted_fraction;
            let denom = (0.5 - absorbed_qber) - f * (0.5 - vacuum_qber);
            if denom <= 0.0 {
                return Err(Error::NoSolution(
                    "operating points are not separated enough to identify a dark rate".into(),
                ));
            }
            let dark = signal * (absorbed_qber - vacuum_qber) / denom;
            let e_opt = vacuum_qber - dark * (0.5 - vacuum_qber) / vacuum_rate_hz;
            if e_opt < 0.0 {
                return Err(Error::NoSolution(format!(
                    "joint fit needs a negative optical error ({e_opt})"
                )));
            }
            (e_opt, dark)
        }
    };
    Ok(CalibrationResult {
        e_opt,
        dark_rate_hz: dark,
        mode,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitingFactor {
    QberLimit,
    LossLimit,
    None,
}

impl LimitingFactor {
    pub fn as_str(self) -> &'static str {
        match self {
            LimitingFactor::QberLimit => "qber_limit",
            LimitingFactor::LossLimit => "loss_limit",
            LimitingFactor::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub max_qber: f64,
    pub max_loss_db: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            max_qber: QBER_SECURITY_LIMIT,
            max_loss_db: MAX_SECURE_LOSS_DB,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub secure: bool,
    pub limiting_factor: LimitingFactor,
}

pub fn assess(expected_qber: f64, loss_db: f64) -> Verdict {
    assess_with(expected_qber, loss_db, &Thresholds::default())
}

/// The loss limit is checked before the QBER limit: a link beyond the loss
/// limit reports `LossLimit` whatever its QBER.
pub fn assess_with(expected_qber: f64, loss_db: f64, limits: &Thresholds) -> Verdict {
    let limiting_factor = if !(loss_db < limits.max_loss_db) {
        LimitingFactor::LossLimit
    } else if !(expected_qber < limits.max_qber) {
        LimitingFactor::QberLimit
    } else {
        LimitingFactor::None
    };
    Verdict {
        secure: limiting_factor == LimitingFactor::None,
        limiting_factor,
    }
}

/// Where a scenario's channel transmittance comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransmittanceSource {
    Explicit(Transmittance),
    Profile {
        profile: AtmosphereProfile,
        length_km: f64,
    },
    Bromine(BromineCell),
}

impl TransmittanceSource {
    pub fn resolve(&self) -> Result<Transmittance> {
        match self {
            TransmittanceSource::Explicit(t) => Ok(*t),
            TransmittanceSource::Profile { profile, length_km } => {
                channel::transmittance(profile.k_per_km, *length_km)
            }
            TransmittanceSource::Bromine(cell) => {
                cell.validate()?;
                Ok(channel::bromine_transmittance(cell))
            }
        }
    }
}

/// Values published for an external experiment, carried for comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceValues {
    pub qber: Option<f64>,
    pub loss_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkScenario {
    pub name: String,
    pub description: String,
    pub channel: TransmittanceSource,
    pub source: SourceParams,
    pub optics: OpticsParams,
    pub detector: DetectorParams,
    pub reference: Option<ReferenceValues>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudgetReport {
    pub transmittance: f64,
    pub loss_db: f64,
    /// `None` if no clicks at all are expected.
    pub expected_qber: Option<f64>,
    pub signal_rate_hz: f64,
    pub dark_rate_total_hz: f64,
    /// Half of all detected clicks survive basis reconciliation.
    pub sifted_rate_hz: f64,
    pub secure: bool,
    pub limiting_factor: LimitingFactor,
}

impl LinkScenario {
    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.optics.validate()?;
        self.detector.validate()?;
        self.channel.resolve().map(|_| ())
    }

    pub fn transmittance(&self) -> Result<Transmittance> {
        self.channel.resolve()
    }

    /// Detected signal rate in a matched basis, Hz.
    pub fn signal_rate_hz(&self) -> Result<f64> {
        let t = self.transmittance()?;
        Ok(self.source.count_rate_hz(&self.detector) * t.value() * self.optics.bob_transmission)
    }

    pub fn dark_rate_total_hz(&self) -> f64 {
        2.0 * self.detector.dark_rate_hz
    }

    pub fn report(&self) -> Result<LinkBudgetReport> {
        self.report_with(&Thresholds::default())
    }

    pub fn report_with(&self, limits: &Thresholds) -> Result<LinkBudgetReport> {
        self.validate()?;
        let t = self.transmittance()?;
        let loss = loss_db(t);
        let signal = self.signal_rate_hz()?;
        let dark = self.dark_rate_total_hz();
        let expected = analytic_qber(self.optics.error_probability(), signal, dark);
        // no expected clicks means no key: report it as a QBER failure
        let verdict = assess_with(expected.unwrap_or(f64::INFINITY), loss, limits);
        Ok(LinkBudgetReport {
            transmittance: t.value(),
            loss_db: loss,
            expected_qber: expected,
            signal_rate_hz: signal,
            dark_rate_total_hz: dark,
            sifted_rate_hz: 0.5 * (signal + dark),
            secure: verdict.secure,
            limiting_factor: verdict.limiting_factor,
        })
    }
}

/// Source, optics and detectors of the lab setup, calibrated so the analytic
/// QBER reproduces both measured operating points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabSetup {
    pub calibration: CalibrationResult,
    pub source: SourceParams,
    pub optics: OpticsParams,
    pub detector: DetectorParams,
}

pub fn lab_setup(mode: CalibrationMode) -> Result<LabSetup> {
    let calibration = calibrate_with(
        VACUUM_QBER,
        BROMINE_QBER,
        VACUUM_COUNT_RATE_HZ,
        channel::MEASURED_BROMINE_TRANSMITTANCE,
        mode,
    )?;
    let detector = DetectorParams {
        dark_rate_hz: calibration.dark_rate_per_detector_hz(),
        ..DetectorParams::default()
    };
    let source = SourceParams::from_count_rate(VACUUM_COUNT_RATE_HZ, &detector)?;
    let optics = OpticsParams::with_error_probability(REFERENCE_EXTINCTION_RATIO, calibration.e_opt)?;
    Ok(LabSetup {
        calibration,
        source,
        optics,
        detector,
    })
}

/// Formula and published path lengths for an atmosphere preset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCrossCheck {
    pub formula_km: f64,
    pub reported_km: f64,
}

impl LinkScenario {
    /// For built-in atmosphere presets, the path that reproduces the measured
    /// bromine transmittance next to the published one.
    pub fn path_cross_check(&self) -> Option<PathCrossCheck> {
        match self.channel {
            TransmittanceSource::Profile { profile, .. } => {
                let reported_km = channel::reported_path_km(&profile)?;
                let t = Transmittance::new(channel::MEASURED_BROMINE_TRANSMITTANCE).ok()?;
                Some(PathCrossCheck {
                    formula_km: equivalent_path(profile.k_per_km, t).ok()?,
                    reported_km,
                })
            }
            _ => None,
        }
    }
}

/// Built-in scenarios: the two cell configurations, the eight atmosphere
/// profiles at their published equivalent paths, and two reference links.
pub fn presets() -> Vec<LinkScenario> {
    let lab = lab_setup(CalibrationMode::Joint).expect("built-in calibration is solvable");
    let scenario = |name: &str, description: String, channel| LinkScenario {
        name: name.to_string(),
        description,
        channel,
        source: lab.source,
        optics: lab.optics,
        detector: lab.detector,
        reference: None,
    };
    let explicit = |t: f64| TransmittanceSource::Explicit(Transmittance::new(t).expect("valid preset"));

    let mut out = vec![
        scenario(
            "vacuum",
            "Evacuated 22.4 m multipath cell".into(),
            explicit(1.0),
        ),
        scenario(
            "bromine",
            "Cell filled with 26 hPa bromine, measured P/P0 = 0.01".into(),
            explicit(channel::MEASURED_BROMINE_TRANSMITTANCE),
        ),
    ];
    for profile in channel::profile_table() {
        let length_km = channel::reported_path_km(profile).expect("built-in row");
        out.push(scenario(
            &profile.slug(),
            format!(
                "Horizontal ground-level path, {} atmosphere, {} aerosols, {} km visibility, {length_km} km",
                profile.season.as_str(),
                profile.aerosol.as_str(),
                profile.visibility_km
            ),
            TransmittanceSource::Profile {
                profile: *profile,
                length_km,
            },
        ));
    }

    let mut horizontal = scenario(
        "horizontal-144km",
        "144 km free-space link with 10 dB atmospheric loss (reference QBER 6.77%)".into(),
        TransmittanceSource::Explicit(Transmittance::from_loss_db(10.0).expect("valid preset")),
    );
    horizontal.reference = Some(ReferenceValues {
        qber: Some(0.0677),
        loss_db: 10.0,
    });
    out.push(horizontal);

    let mut satellite = scenario(
        "satellite-downlink",
        "Satellite-to-ground single-photon downlink, 157 dB total attenuation".into(),
        TransmittanceSource::Explicit(Transmittance::from_loss_db(157.0).expect("valid preset")),
    );
    satellite.reference = Some(ReferenceValues {
        qber: None,
        loss_db: 157.0,
    });
    out.push(satellite);
    out
}

pub fn preset(name: &str) -> Option<LinkScenario> {
    presets().into_iter().find(|p| p.name == name)
}
