//! Loading a TOML scenario and running it end to end.
//!
//! cargo run --release --example scenario_file [path/to/scenario.toml]

use std::path::PathBuf;

use bb84_atmo::cli::{self, scenario, RunOverrides};

const INLINE: &str = r#"
[source]
mean_photons_per_window = 0.02

[optics]
extinction_ratio = 1000
misalignment_deg = 3.0

[channel.profile]
season = "summer"
aerosol = "rural"
visibility_km = 5
length_km = 40

[detector]
quantum_efficiency = 0.38
dead_time_ns = 78
dark_rate_hz = 50

[protocol]
mode = "random_bb84"
n_windows = 50000000
seed = 3
worker_streams = 4
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let extra = scenario::user_profiles()?;
    let scenario = match std::env::args().nth(1) {
        Some(path) => scenario::load(&PathBuf::from(path), &extra)?,
        None => scenario::parse(INLINE, "inline", &extra)?,
    };
    let report = cli::cmd_run(scenario, &RunOverrides::default())?;
    print!("{}", report.render_human());
    Ok(())
}
