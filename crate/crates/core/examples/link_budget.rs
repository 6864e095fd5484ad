//! Analytic link budget and security verdict for every built-in preset.
//!
//! cargo run --example link_budget

use bb84_atmo::budget::presets;

fn main() -> bb84_atmo::Result<()> {
    println!(
        "{:<20} {:>10} {:>10} {:>12} {:>7} {:<12}",
        "preset", "loss dB", "qber", "sifted Hz", "secure", "limit"
    );
    for link in presets() {
        let r = link.report()?;
        let qber = r.expected_qber.map_or("undefined".to_string(), |q| format!("{q:.5}"));
        println!(
            "{:<20} {:>10.2} {qber:>10} {:>12.2} {:>7} {:<12}",
            link.name,
            r.loss_db,
            r.sifted_rate_hz,
            r.secure,
            r.limiting_factor.as_str()
        );
        if let Some(check) = link.path_cross_check() {
            println!("{:<20} path {:.2} km by formula, {} km published", "", check.formula_km, check.reported_km);
        }
    }
    Ok(())
}
