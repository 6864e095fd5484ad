//! Scenario files.
//!
//! A scenario is a TOML document with five sections:
//!
//! ```toml
//! name = "bromine-cell"
//!
//! [source]
//! wavelength_nm = 632.8
//! mean_photons_per_window = 0.0205   # or: count_rate_hz = 1e5
//!
//! [optics]
//! extinction_ratio = 1000.0
//! misalignment_deg = 4.73
//!
//! [channel]
//! transmittance = 0.01               # or a [channel.profile] / [channel.bromine] table
//!
//! [detector]
//! quantum_efficiency = 0.38
//! dead_time_ns = 78.0
//! dark_rate_hz = 81.5
//!
//! [protocol]
//! mode = "setting_scan"
//! n_windows = 10000000
//! seed = 1
//! worker_streams = 8
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::budget::{LinkScenario, TransmittanceSource};
use crate::channel::{self, AbsorbanceConvention, AtmosphereProfile, BromineCell, Transmittance};
use crate::detector::{DetectorParams, SourceParams, HENE_WAVELENGTH_NM};
use crate::optics::OpticsParams;
use crate::protocol::{Mode, ProtocolConfig, Sampler};

/// Environment variable naming a user atmosphere-profile table.
pub const PROFILE_TABLE_ENV: &str = "BB84_ATMO_PROFILES";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: invalid scenario: {message}")]
    Invalid { path: String, message: String },

    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    description: Option<String>,
    source: SourceSection,
    optics: OpticsSection,
    channel: ChannelSection,
    detector: DetectorSection,
    protocol: ProtocolSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SourceSection {
    #[serde(default = "default_wavelength")]
    wavelength_nm: f64,
    mean_photons_per_window: Option<f64>,
    count_rate_hz: Option<f64>,
}

fn default_wavelength() -> f64 {
    HENE_WAVELENGTH_NM
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpticsSection {
    extinction_ratio: f64,
    #[serde(default)]
    misalignment_deg: f64,
    #[serde(default = "one")]
    bob_transmission: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSection {
    transmittance: Option<f64>,
    profile: Option<ProfileSection>,
    bromine: Option<BromineSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileSection {
    season: String,
    aerosol: String,
    visibility_km: f64,
    length_km: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BromineSection {
    pressure_hpa: f64,
    #[serde(default = "default_temperature")]
    temperature_k: f64,
    path_m: f64,
    epsilon: f64,
    #[serde(default)]
    convention: ConventionName,
}

fn default_temperature() -> f64 {
    293.0
}

#[derive(Debug, Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum ConventionName {
    #[default]
    Decadic,
    Natural,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorSection {
    quantum_efficiency: f64,
    dead_time_ns: f64,
    dark_rate_hz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtocolSection {
    mode: ModeName,
    n_windows: u64,
    seed: u64,
    #[serde(default = "one_stream")]
    worker_streams: usize,
    #[serde(default)]
    sampler: SamplerName,
}

fn one_stream() -> usize {
    1
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum ModeName {
    RandomBb84,
    SettingScan,
}

#[derive(Debug, Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum SamplerName {
    #[default]
    PerWindow,
    Aggregated,
}

/// A validated scenario ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub link: LinkScenario,
    pub protocol: ProtocolConfig,
}

impl Scenario {
    /// Checks every invariant a run depends on.
    pub fn validate(&self) -> crate::Result<()> {
        self.link.validate()?;
        self.protocol.validate()
    }
}

/// Profiles named in the user table, read from [`PROFILE_TABLE_ENV`] if set.
pub fn user_profiles() -> Result<Vec<AtmosphereProfile>, ScenarioError> {
    match std::env::var_os(PROFILE_TABLE_ENV) {
        Some(path) => {
            let path = PathBuf::from(path);
            channel::load_profiles(&path).map_err(|e| ScenarioError::Invalid {
                path: PROFILE_TABLE_ENV.to_string(),
                message: e.to_string(),
            })
        }
        None => Ok(Vec::new()),
    }
}

pub fn load(path: &Path, extra_profiles: &[AtmosphereProfile]) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse(&text, &path.display().to_string(), extra_profiles)
}

/// Parses and validates scenario text. `origin` labels diagnostics.
pub fn parse(
    text: &str,
    origin: &str,
    extra_profiles: &[AtmosphereProfile],
) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        path: origin.to_string(),
        message: e.to_string().trim_end().to_string(),
    })?;
    let invalid = |message: String| ScenarioError::Invalid {
        path: origin.to_string(),
        message,
    };

    let detector = DetectorParams {
        quantum_efficiency: file.detector.quantum_efficiency,
        dead_time_ns: file.detector.dead_time_ns,
        dark_rate_hz: file.detector.dark_rate_hz,
    };
    detector
        .validate()
        .map_err(|e| invalid(format!("[detector] {e}")))?;

    let mut source = match (file.source.mean_photons_per_window, file.source.count_rate_hz) {
        (Some(mu), None) => SourceParams {
            wavelength_nm: file.source.wavelength_nm,
            mean_photons_per_window: mu,
        },
        (None, Some(rate)) => SourceParams::from_count_rate(rate, &detector)
            .map_err(|e| invalid(format!("[source] {e}")))?,
        _ => {
            return Err(invalid(
                "[source] needs exactly one of mean_photons_per_window or count_rate_hz".into(),
            ))
        }
    };
    source.wavelength_nm = file.source.wavelength_nm;
    source
        .validate()
        .map_err(|e| invalid(format!("[source] {e}")))?;

    let optics = OpticsParams {
        extinction_ratio: file.optics.extinction_ratio,
        misalignment_deg: file.optics.misalignment_deg,
        bob_transmission: file.optics.bob_transmission,
    };
    optics
        .validate()
        .map_err(|e| invalid(format!("[optics] {e}")))?;

    let ch = file.channel;
    let present = [ch.transmittance.is_some(), ch.profile.is_some(), ch.bromine.is_some()]
        .iter()
        .filter(|p| **p)
        .count();
    if present != 1 {
        return Err(invalid(format!(
            "[channel] needs exactly one of transmittance, profile or bromine (found {present})"
        )));
    }
    let channel = if let Some(t) = ch.transmittance {
        TransmittanceSource::Explicit(
            Transmittance::new(t).map_err(|e| invalid(format!("[channel] {e}")))?,
        )
    } else if let Some(p) = ch.profile {
        let season = p
            .season
            .parse()
            .map_err(|e| invalid(format!("[channel.profile] {e}")))?;
        let aerosol = p
            .aerosol
            .parse()
            .map_err(|e| invalid(format!("[channel.profile] {e}")))?;
        let profile = extra_profiles
            .iter()
            .copied()
            .find(|row| row.matches(season, aerosol, p.visibility_km))
            .or_else(|| channel::lookup(season, aerosol, p.visibility_km))
            .ok_or_else(|| {
                invalid(format!(
                    "[channel.profile] no profile for {} {} {} km in the built-in or user table",
                    p.season, p.aerosol, p.visibility_km
                ))
            })?;
        if !(p.length_km >= 0.0 && p.length_km.is_finite()) {
            return Err(invalid(format!(
                "[channel.profile] length_km = {} must be >= 0",
                p.length_km
            )));
        }
        TransmittanceSource::Profile {
            profile,
            length_km: p.length_km,
        }
    } else {
        let b = ch.bromine.expect("counted above");
        let cell = BromineCell {
            molar_absorptivity: b.epsilon,
            pressure_hpa: b.pressure_hpa,
            temperature_k: b.temperature_k,
            path_length_m: b.path_m,
            convention: match b.convention {
                ConventionName::Decadic => AbsorbanceConvention::Decadic,
                ConventionName::Natural => AbsorbanceConvention::Natural,
            },
        };
        cell.validate()
            .map_err(|e| invalid(format!("[channel.bromine] {e}")))?;
        TransmittanceSource::Bromine(cell)
    };

    let protocol = ProtocolConfig {
        mode: match file.protocol.mode {
            ModeName::RandomBb84 => Mode::RandomBb84,
            ModeName::SettingScan => Mode::SettingScan,
        },
        n_windows: file.protocol.n_windows,
        seed: file.protocol.seed,
        worker_streams: file.protocol.worker_streams,
        sampler: match file.protocol.sampler {
            SamplerName::PerWindow => Sampler::PerWindow,
            SamplerName::Aggregated => Sampler::Aggregated,
        },
    };
    protocol
        .validate()
        .map_err(|e| invalid(format!("[protocol] {e}")))?;

    let name = file.name.unwrap_or_else(|| {
        Path::new(origin)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into())
    });
    let scenario = Scenario {
        link: LinkScenario {
            name,
            description: file.description.unwrap_or_default(),
            channel,
            source,
            optics,
            detector,
            reference: None,
        },
        protocol,
    };
    scenario
        .validate()
        .map_err(|e| invalid(e.to_string()))?;
    Ok(scenario)
}
