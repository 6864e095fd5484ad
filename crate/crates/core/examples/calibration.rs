//! Recovering the optical error and dark rate from two measured QBERs.
//!
//! cargo run --example calibration

use bb84_atmo::budget::{self, analytic_qber, calibrate_with, CalibrationMode};

fn main() -> bb84_atmo::Result<()> {
    let rate = budget::VACUUM_COUNT_RATE_HZ;
    let f = 0.01;
    for mode in [CalibrationMode::VacuumDarkNegligible, CalibrationMode::Joint] {
        let cal = calibrate_with(budget::VACUUM_QBER, budget::BROMINE_QBER, rate, f, mode)?;
        let lossy = analytic_qber(cal.e_opt, rate * f, cal.dark_rate_hz).unwrap_or(f64::NAN);
        let vacuum = analytic_qber(cal.e_opt, rate, cal.dark_rate_hz).unwrap_or(f64::NAN);
        println!("{mode:?}");
        println!("  optical error {:.6e}", cal.e_opt);
        println!("  dark rate     {:.4} Hz total, {:.4} Hz per detector", cal.dark_rate_hz, cal.dark_rate_per_detector_hz());
        println!("  predicted QBER {vacuum:.6} at T=1, {lossy:.6} at T={f}");
    }

    let lab = budget::lab_setup(CalibrationMode::Joint)?;
    println!(
        "lab setup: mu = {:.6} photons/window, misalignment {:.4} deg",
        lab.source.mean_photons_per_window, lab.optics.misalignment_deg
    );
    Ok(())
}
