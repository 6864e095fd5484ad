//! Photon-level BB84 run over all sixteen Alice/Bob settings, then sifting.
//!
//! cargo run --release --example bb84_scan

use bb84_atmo::budget;
use bb84_atmo::protocol::{self, Mode, ProtocolConfig, Sampler};

fn main() -> bb84_atmo::Result<()> {
    let link = budget::preset("bromine").expect("built-in preset");
    let t = link.transmittance()?;
    for mode in [Mode::SettingScan, Mode::RandomBb84] {
        let config = ProtocolConfig {
            mode,
            n_windows: 20_000_000,
            seed: 42,
            worker_streams: 8,
            sampler: Sampler::PerWindow,
        };
        let counts = protocol::run(&config, &link.optics, t, &link.source, &link.detector)?;
        println!("{} ({} windows)", mode.as_str(), counts.total_windows());
        for (setting, cell) in counts.cells() {
            println!(
                "  {}->{} sifted={:<5} correct={:<6} wrong={:<6} double={:<3} empty={}",
                setting.alice.as_str(),
                setting.bob.as_str(),
                setting.is_sifted(),
                cell.correct,
                cell.wrong,
                cell.double,
                cell.empty
            );
        }
        let (correct, wrong) = protocol::sift(&counts);
        if let Some(est) = protocol::qber(correct, wrong) {
            println!("  qber {:.5} +- {:.5} from {} sifted bits", est.qber, est.stderr, est.n_sifted);
        }
    }
    println!("analytic {:.5}", link.report()?.expected_qber.unwrap_or(f64::NAN));
    Ok(())
}
