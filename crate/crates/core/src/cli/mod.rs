//! Command implementations behind the `bb84-atmo` binary.
//!
//! Each command is a plain function returning data or text, so the binary
//! only parses flags and maps errors to exit codes.

pub mod report;
pub mod scenario;

use std::fmt::Write as _;
use std::time::Instant;

use thiserror::Error;

use crate::budget::{self, LinkScenario, TransmittanceSource};
use crate::channel::{self, BromineCell, Transmittance};
use crate::protocol::{self, Mode, ProtocolConfig, Sampler};

pub use report::ReportDocument;
pub use scenario::{Scenario, ScenarioError};

/// Windows per setting when running a preset without `--windows`.
pub const PRESET_WINDOWS: u64 = 10_000_000;
/// Stream count when running a preset without `--workers`.
pub const PRESET_STREAMS: usize = 8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("runtime error: {0}")]
    Runtime(#[from] crate::Error),
}

impl CliError {
    /// 1 for bad input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario(_) | CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

/// Command-line overrides applied on top of a scenario's protocol section.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub windows: Option<u64>,
    pub workers: Option<usize>,
    pub sampler: Option<Sampler>,
}

impl RunOverrides {
    pub fn apply(&self, config: &mut ProtocolConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(n) = self.windows {
            config.n_windows = n;
        }
        if let Some(w) = self.workers {
            config.worker_streams = w;
        }
        if let Some(s) = self.sampler {
            config.sampler = s;
        }
    }
}

/// Wraps a built-in preset with the default protocol settings.
pub fn preset_scenario(name: &str) -> Result<Scenario, CliError> {
    let link = budget::preset(name).ok_or_else(|| {
        let names: Vec<String> = budget::presets().into_iter().map(|p| p.name).collect();
        CliError::Validation(format!(
            "unknown preset `{name}` (available: {})",
            names.join(", ")
        ))
    })?;
    Ok(Scenario {
        link,
        protocol: ProtocolConfig {
            mode: Mode::SettingScan,
            n_windows: PRESET_WINDOWS,
            seed: 0,
            worker_streams: PRESET_STREAMS,
            sampler: Sampler::PerWindow,
        },
    })
}

fn checked(mut scenario: Scenario, overrides: &RunOverrides) -> Result<Scenario, CliError> {
    overrides.apply(&mut scenario.protocol);
    scenario
        .validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(scenario)
}

/// Runs a scenario and assembles its report.
pub fn cmd_run(scenario: Scenario, overrides: &RunOverrides) -> Result<ReportDocument, CliError> {
    let scenario = checked(scenario, overrides)?;
    let link = &scenario.link;
    let config = scenario.protocol;
    let budget = link.report()?;
    let t = link.transmittance()?;

    let started = Instant::now();
    let counts = protocol::run(&config, &link.optics, t, &link.source, &link.detector)?;
    let wall_time_s = started.elapsed().as_secs_f64();

    let sifted = protocol::sift(&counts);
    let cell = match link.channel {
        TransmittanceSource::Bromine(cell) => cell,
        _ => BromineCell::default(),
    };
    Ok(ReportDocument {
        scenario: link.name.clone(),
        mode: config.mode.as_str(),
        sampler: config.sampler.as_str(),
        seed: config.seed,
        n_windows: config.n_windows,
        total_windows: config.total_windows(),
        worker_streams: config.worker_streams,
        wall_time_s,
        mean_photons_per_window: link.source.mean_photons_per_window,
        count_rate_hz: link.source.count_rate_hz(&link.detector),
        counts,
        sifted,
        estimate: protocol::qber(sifted.0, sifted.1),
        budget,
        reference: link.reference,
        path_check: link.path_cross_check(),
        bromine: bromine_check(cell),
        table: channel::path_deviations(measured_bromine()),
    })
}

fn measured_bromine() -> Transmittance {
    Transmittance::new(channel::MEASURED_BROMINE_TRANSMITTANCE).expect("constant in range")
}

pub fn bromine_check(cell: BromineCell) -> report::BromineCheck {
    let decadic = channel::bromine_transmittance(&BromineCell {
        convention: channel::AbsorbanceConvention::Decadic,
        ..cell
    });
    let natural = channel::bromine_transmittance(&BromineCell {
        convention: channel::AbsorbanceConvention::Natural,
        ..cell
    });
    report::BromineCheck {
        cell,
        decadic: decadic.value(),
        natural: natural.value(),
        measured: channel::MEASURED_BROMINE_TRANSMITTANCE,
    }
}

/// The atmosphere table with formula and published equivalent paths.
pub fn cmd_table() -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:<7} {:>6} {:>10} {:>12} {:>10} {:>10}",
        "season", "aerosol", "vis_km", "k_per_km", "L_formula_km", "L_paper_km", "deviation"
    );
    for row in channel::path_deviations(measured_bromine()) {
        let dev = row.relative_deviation();
        let _ = writeln!(
            out,
            "{:<8} {:<7} {:>6} {:>10} {:>12.2} {:>10} {:>9.2}%{}",
            row.profile.season.as_str(),
            row.profile.aerosol.as_str(),
            row.profile.visibility_km,
            row.profile.k_per_km,
            row.formula_km,
            row.reported_km,
            dev * 100.0,
            if dev.abs() > report::TABLE_DEVIATION_LIMIT { "  FLAGGED" } else { "" }
        );
    }
    out
}

/// One line per built-in preset with its analytic budget.
pub fn cmd_presets() -> Result<String, CliError> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:>22} {:>9} {:>14} {:>7}  description",
        "name", "transmittance", "loss_db", "analytic_qber", "secure"
    );
    for p in budget::presets() {
        let r = p.report()?;
        let _ = writeln!(
            out,
            "{:<20} {:>22} {:>9.2} {:>14} {:>7}  {}",
            p.name,
            report::format_number(r.transmittance),
            r.loss_db,
            r.expected_qber.map_or("undefined".into(), |q| format!("{q:.5}")),
            r.secure,
            p.description
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Transmittance,
    LengthKm,
    DarkRateHz,
    MeanPhotonsPerWindow,
}

impl std::str::FromStr for SweepParam {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "transmittance" => Ok(SweepParam::Transmittance),
            "length_km" => Ok(SweepParam::LengthKm),
            "dark_rate_hz" => Ok(SweepParam::DarkRateHz),
            "mean_photons_per_window" => Ok(SweepParam::MeanPhotonsPerWindow),
            other => Err(CliError::Validation(format!(
                "unknown sweep parameter `{other}` (expected transmittance, length_km, dark_rate_hz or mean_photons_per_window)"
            ))),
        }
    }
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Transmittance => "transmittance",
            SweepParam::LengthKm => "length_km",
            SweepParam::DarkRateHz => "dark_rate_hz",
            SweepParam::MeanPhotonsPerWindow => "mean_photons_per_window",
        }
    }

    fn apply(self, link: &mut LinkScenario, value: f64) -> Result<(), CliError> {
        match self {
            SweepParam::Transmittance => {
                let t = Transmittance::new(value)?;
                link.channel = TransmittanceSource::Explicit(t);
            }
            SweepParam::LengthKm => match &mut link.channel {
                TransmittanceSource::Profile { length_km, .. } => *length_km = value,
                _ => {
                    return Err(CliError::Validation(
                        "length_km can only be swept for a scenario with a profile channel".into(),
                    ))
                }
            },
            SweepParam::DarkRateHz => link.detector.dark_rate_hz = value,
            SweepParam::MeanPhotonsPerWindow => link.source.mean_photons_per_window = value,
        }
        link.validate()
            .map_err(|e| CliError::Validation(format!("{} = {value}: {e}", self.as_str())))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    /// Geometric instead of linear spacing.
    pub log: bool,
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.steps == 0 {
            return Err(CliError::Validation("steps must be >= 1".into()));
        }
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(CliError::Validation("sweep range must be finite".into()));
        }
        if self.log && !(self.from > 0.0 && self.to > 0.0) {
            return Err(CliError::Validation("a log sweep needs a positive range".into()));
        }
        if self.steps == 1 {
            return Ok(vec![self.from]);
        }
        let last = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| {
                let f = i as f64 / last;
                if i == self.steps - 1 {
                    self.to
                } else if self.log {
                    let (a, b) = (self.from.log10(), self.to.log10());
                    10f64.powf(a + (b - a) * i as f64 / last)
                } else {
                    self.from + (self.to - self.from) * f
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub analytic_qber: Option<f64>,
    pub simulated: Option<protocol::QberEstimate>,
    pub loss_db: f64,
    pub secure: bool,
}

/// Evaluates the analytic budget and a simulation at each sweep point.
pub fn cmd_sweep(
    scenario: Scenario,
    spec: &SweepSpec,
    overrides: &RunOverrides,
) -> Result<Vec<SweepRow>, CliError> {
    let scenario = checked(scenario, overrides)?;
    let values = spec.values()?;
    let mut rows = Vec::with_capacity(values.len());
    for value in values {
        let mut link = scenario.link.clone();
        spec.param.apply(&mut link, value)?;
        let budget = link.report()?;
        let counts = protocol::run(
            &scenario.protocol,
            &link.optics,
            link.transmittance()?,
            &link.source,
            &link.detector,
        )?;
        let (c, w) = protocol::sift(&counts);
        rows.push(SweepRow {
            value,
            analytic_qber: budget.expected_qber,
            simulated: protocol::qber(c, w),
            loss_db: budget.loss_db,
            secure: budget.secure,
        });
    }
    Ok(rows)
}

/// Comma-separated plot data with a header row.
pub fn render_sweep(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{},analytic_qber,simulated_qber,simulated_stderr,loss_db,secure",
        param.as_str()
    );
    for r in rows {
        let num = report::format_number;
        let opt = |v: Option<f64>| v.map_or("undefined".to_string(), num);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            num(r.value),
            opt(r.analytic_qber),
            opt(r.simulated.map(|s| s.qber)),
            opt(r.simulated.map(|s| s.stderr)),
            num(r.loss_db),
            r.secure
        );
    }
    out
}
