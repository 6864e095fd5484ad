//! Beer-Lambert estimate for the bromine-filled multipass cell, under both
//! absorbance conventions.
//!
//! cargo run --example bromine_cell

use bb84_atmo::channel::{self, bromine_transmittance, loss_db, AbsorbanceConvention, BromineCell};

fn main() -> bb84_atmo::Result<()> {
    for pressure_hpa in [5.0, 13.0, 26.0] {
        for convention in [AbsorbanceConvention::Decadic, AbsorbanceConvention::Natural] {
            let cell = BromineCell {
                pressure_hpa,
                convention,
                ..BromineCell::default()
            };
            cell.validate()?;
            let t = bromine_transmittance(&cell);
            println!(
                "{pressure_hpa:>5} hPa {convention:<8?} c = {:.4e} mol/L, A = {:.4}, T = {:.4e} ({:.1} dB)",
                cell.concentration_mol_per_l(),
                cell.absorbance(),
                t.value(),
                loss_db(t)
            );
        }
    }
    println!("measured at 26 hPa: {}", channel::MEASURED_BROMINE_TRANSMITTANCE);
    Ok(())
}
