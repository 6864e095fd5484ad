//! Horizontal path lengths whose extinction matches a given transmittance.
//!
//! cargo run --example atmosphere_paths [transmittance]

use bb84_atmo::channel::{self, equivalent_path, loss_db, transmittance, Transmittance};

fn main() -> bb84_atmo::Result<()> {
    let t: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("transmittance must be a number"))
        .unwrap_or(channel::MEASURED_BROMINE_TRANSMITTANCE);
    let t = Transmittance::new(t)?;
    println!("target transmittance {} ({} dB)", t.value(), loss_db(t));
    println!("{:<22} {:>9} {:>12} {:>12}", "profile", "k [1/km]", "path [km]", "check T");
    for profile in channel::profile_table() {
        let path = equivalent_path(profile.k_per_km, t)?;
        let back = transmittance(profile.k_per_km, path)?;
        println!("{:<22} {:>9} {path:>12.3} {:>12.6}", profile.slug(), profile.k_per_km, back.value());
    }

    println!();
    println!("published table at T = 0.01:");
    for row in channel::path_deviations(Transmittance::new(0.01)?) {
        println!(
            "{:<22} formula {:>8.2} km, published {:>7.2} km, {:+.2}%",
            row.profile.slug(),
            row.formula_km,
            row.reported_km,
            100.0 * row.relative_deviation()
        );
    }
    Ok(())
}
