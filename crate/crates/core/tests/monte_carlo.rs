//! Statistical agreement between the simulator, its two samplers and the
//! closed-form budget.

use bb84_atmo::budget::{self, analytic_qber, preset};
use bb84_atmo::channel::Transmittance;
use bb84_atmo::cli::{self, RunOverrides, SweepParam, SweepSpec};
use bb84_atmo::protocol::{self, Mode, ProtocolConfig, Sampler};

fn config(mode: Mode, sampler: Sampler, n: u64, seed: u64) -> ProtocolConfig {
    ProtocolConfig {
        mode,
        n_windows: n,
        seed,
        worker_streams: 4,
        sampler,
    }
}

#[test]
fn samplers_agree_per_cell() {
    let link = preset("bromine").unwrap();
    let t = link.transmittance().unwrap();
    let n = 20_000_000;
    let a = protocol::run(&config(Mode::SettingScan, Sampler::PerWindow, n, 1), &link.optics, t, &link.source, &link.detector).unwrap();
    let b = protocol::run(&config(Mode::SettingScan, Sampler::Aggregated, n, 2), &link.optics, t, &link.source, &link.detector).unwrap();
    for ((s, x), (_, y)) in a.cells().zip(b.cells()) {
        for (u, v) in [(x.correct, y.correct), (x.wrong, y.wrong)] {
            // difference of two independent Poisson-like counts
            let sigma = ((u + v) as f64).sqrt().max(1.0);
            assert!((u as f64 - v as f64).abs() <= 4.0 * sigma, "{s:?}: {u} vs {v}");
        }
    }
}

#[test]
fn random_mode_matches_analytic() {
    let link = preset("horizontal-144km").unwrap();
    let t = link.transmittance().unwrap();
    let counts = protocol::run(&config(Mode::RandomBb84, Sampler::PerWindow, 80_000_000, 5), &link.optics, t, &link.source, &link.detector).unwrap();
    let (c, w) = protocol::sift(&counts);
    let est = protocol::qber(c, w).unwrap();
    let expected = link.report().unwrap().expected_qber.unwrap();
    assert!((est.qber - expected).abs() <= 4.0 * est.stderr, "{est:?} vs {expected}");
    // random basis choice: about half of all single clicks survive sifting
    let single: u64 = counts.cells().map(|(_, c)| c.correct + c.wrong).sum();
    let frac = (c + w) as f64 / single as f64;
    assert!((frac - 0.5).abs() < 4.0 * (0.25 / single as f64).sqrt());
}

#[test]
fn dark_only_channel_is_coin_flip() {
    let mut link = preset("satellite-downlink").unwrap();
    link.detector.dark_rate_hz = 5e4;
    let t = link.transmittance().unwrap();
    let counts = protocol::run(&config(Mode::SettingScan, Sampler::Aggregated, 50_000_000, 9), &link.optics, t, &link.source, &link.detector).unwrap();
    let (c, w) = protocol::sift(&counts);
    let est = protocol::qber(c, w).unwrap();
    assert!((est.qber - 0.5).abs() <= 4.0 * est.stderr);
}

#[test]
fn zero_noise_means_zero_qber() {
    let mut link = preset("bromine").unwrap();
    link.optics = bb84_atmo::optics::OpticsParams::ideal();
    link.detector.dark_rate_hz = 0.0;
    for sampler in [Sampler::PerWindow, Sampler::Aggregated] {
        let counts = protocol::run(&config(Mode::RandomBb84, sampler, 5_000_000, 4), &link.optics, Transmittance::UNITY, &link.source, &link.detector).unwrap();
        let (c, w) = protocol::sift(&counts);
        assert!(c > 0);
        assert_eq!(w, 0);
    }
}

fn bromine_sweep(from: f64, to: f64, steps: usize) -> Vec<cli::SweepRow> {
    let spec = SweepSpec {
        param: SweepParam::Transmittance,
        from,
        to,
        steps,
        log: true,
    };
    let overrides = RunOverrides {
        windows: Some(2_000_000),
        sampler: Some(Sampler::Aggregated),
        ..RunOverrides::default()
    };
    cli::cmd_sweep(cli::preset_scenario("bromine").unwrap(), &spec, &overrides).unwrap()
}

#[test]
fn transmittance_sweep_is_monotone() {
    let rows = bromine_sweep(1.0, 1e-3, 13);
    let q: Vec<f64> = rows.iter().map(|r| r.analytic_qber.unwrap()).collect();
    assert!(q.windows(2).all(|w| w[1] > w[0]));
    assert!(*q.last().unwrap() < 0.5);
    let pass = rows.iter().find(|r| (r.value - 0.01).abs() < 1e-12).unwrap();
    assert!((pass.analytic_qber.unwrap() - 0.0768).abs() < 1e-12);
    assert_eq!(pass.loss_db, 20.0);
}

#[test]
fn secure_flag_flips_once_across_the_limit() {
    let rows = bromine_sweep(1.0, 1e-4, 41);
    let flags: Vec<bool> = rows.iter().map(|r| r.secure).collect();
    let flips = flags.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(flips, 1, "{flags:?}");
    assert!(flags[0] && !flags[flags.len() - 1]);
    let first_insecure = rows.iter().find(|r| !r.secure).unwrap();
    assert!(first_insecure.analytic_qber.unwrap() >= budget::QBER_SECURITY_LIMIT);
}

#[test]
fn dark_rate_sweep_raises_qber() {
    let spec = SweepSpec {
        param: SweepParam::DarkRateHz,
        from: 0.0,
        to: 1000.0,
        steps: 5,
        log: false,
    };
    let overrides = RunOverrides {
        windows: Some(1_000_000),
        sampler: Some(Sampler::Aggregated),
        ..RunOverrides::default()
    };
    let rows = cli::cmd_sweep(cli::preset_scenario("bromine").unwrap(), &spec, &overrides).unwrap();
    let e = preset("bromine").unwrap().optics.error_probability();
    assert_eq!(rows[0].analytic_qber, analytic_qber(e, 1000.0, 0.0));
    assert!(rows.windows(2).all(|w| w[1].analytic_qber > w[0].analytic_qber));
}
