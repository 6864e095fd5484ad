//! Alice's four states through Bob's half-wave plate and beam splitter.
//!
//! cargo run --example polarization_encoding

use bb84_atmo::optics::{encode, pbs_probabilities, AliceState, Basis, OpticsParams};

fn main() -> bb84_atmo::Result<()> {
    let optics = OpticsParams::default();
    println!("extinction ratio {}:1, leakage {:.6}", optics.extinction_ratio, 1.0 / (1.0 + optics.extinction_ratio));
    println!("{:<6} {:>6} {:>10} {:>10}", "state", "basis", "p(det0)", "p(det1)");
    for alice in AliceState::ALL {
        for basis in Basis::ALL {
            let state = encode(alice.bit(), alice.basis(), optics.extinction_ratio)?;
            let (p0, p1) = pbs_probabilities(state, basis);
            println!("{:<6} {:>6} {p0:>10.6} {p1:>10.6}", alice.as_str(), basis.as_str());
        }
    }

    // A small plate misalignment adds to the error floor of the polarizers.
    for e in [0.001, 0.0078, 0.0086] {
        let o = OpticsParams::with_error_probability(optics.extinction_ratio, e)?;
        println!("error probability {e:<7} needs misalignment {:.4} deg", o.misalignment_deg);
    }
    Ok(())
}
