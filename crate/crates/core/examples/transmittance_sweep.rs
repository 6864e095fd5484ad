//! QBER against channel transmittance, analytic and simulated, as CSV.
//!
//! cargo run --release --example transmittance_sweep > sweep.csv

use bb84_atmo::cli::{self, RunOverrides, SweepParam, SweepSpec};
use bb84_atmo::protocol::Sampler;

fn main() -> Result<(), cli::CliError> {
    let spec = SweepSpec {
        param: SweepParam::Transmittance,
        from: 1.0,
        to: 1e-4,
        steps: 17,
        log: true,
    };
    let overrides = RunOverrides {
        windows: Some(20_000_000),
        sampler: Some(Sampler::Aggregated),
        ..RunOverrides::default()
    };
    let rows = cli::cmd_sweep(cli::preset_scenario("bromine")?, &spec, &overrides)?;
    print!("{}", cli::render_sweep(spec.param, &rows));
    Ok(())
}
