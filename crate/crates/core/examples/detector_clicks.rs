//! Click statistics of a pair of dead-time-gated photon counters.
//!
//! cargo run --example detector_clicks

use bb84_atmo::detector::{click_probability, ArmPair, DetectorParams, WindowOutcome};
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

fn main() -> bb84_atmo::Result<()> {
    let detector = DetectorParams {
        dark_rate_hz: 80.0,
        ..DetectorParams::default()
    };
    detector.validate()?;
    println!(
        "window {} ns, dark counts per window {:.3e}",
        detector.dead_time_ns,
        detector.dark_counts_per_window()
    );
    for mu in [0.0, 1e-4, 7.8e-4, 0.02, 0.5] {
        println!("mean photons {mu:<8} click probability {:.6e}", click_probability(mu, &detector)?);
    }

    let arms = ArmPair::new(0.02, 0.0002, &detector)?;
    let expected = arms.outcome_probabilities();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    let n = 2_000_000;
    let mut tally = [0u64; 4];
    for _ in 0..n {
        let i = match arms.sample(&mut rng) {
            WindowOutcome::None => 0,
            WindowOutcome::Det0 => 1,
            WindowOutcome::Det1 => 2,
            WindowOutcome::Both => 3,
        };
        tally[i] += 1;
    }
    for (label, (count, p)) in ["none", "det0", "det1", "both"].iter().zip(tally.iter().zip(expected)) {
        println!("{label:<5} observed {:.6e} expected {p:.6e}", *count as f64 / n as f64);
    }
    Ok(())
}
