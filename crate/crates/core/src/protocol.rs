//! BB84 transmission engine.
//!
//! Every window runs the same pipeline: Alice prepares one of four states,
//! the state picks up the chain's residual misalignment, Bob's PBS splits it
//! in his chosen basis, each arm receives `mu t T_bob p_i` photons on average,
//! and the two detectors click independently. Tallies are kept per
//! `(Alice state, Bob basis)` cell.
//!
//! Windows are split into `worker_streams` contiguous blocks. Block `b` draws
//! from the xoshiro256++ sequence of the run seed advanced by `b` jumps of
//! 2^128 steps, so blocks never overlap and a run is reproducible from
//! `(seed, worker_streams)` alone, whatever the thread pool size.

use std::ops::{Add, AddAssign, Index, IndexMut};

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Binomial, Distribution};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::channel::Transmittance;
use crate::detector::{ArmPair, DetectorParams, SourceParams, WindowOutcome};
use crate::error::{Error, Result};
use crate::optics::{pbs_probabilities, AliceState, Basis, Bit, OpticsParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Alice's bit and basis and Bob's basis drawn uniformly per window.
    RandomBb84,
    /// Each of the eight plate combinations held fixed for `n_windows`.
    #[default]
    SettingScan,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::RandomBb84 => "random_bb84",
            Mode::SettingScan => "setting_scan",
        }
    }
}

/// How window outcomes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampler {
    /// One Bernoulli draw per detector per window.
    #[default]
    PerWindow,
    /// Per block and cell, outcome counts drawn directly from their
    /// multinomial distribution. Same law as `PerWindow`, cost independent of
    /// the window count.
    Aggregated,
}

impl Sampler {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampler::PerWindow => "per_window",
            Sampler::Aggregated => "aggregated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolConfig {
    pub mode: Mode,
    /// Total windows in random mode; windows per setting in scan mode.
    pub n_windows: u64,
    pub seed: u64,
    pub worker_streams: usize,
    pub sampler: Sampler,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            mode: Mode::SettingScan,
            n_windows: 1_000_000,
            seed: 0,
            worker_streams: 1,
            sampler: Sampler::PerWindow,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_windows == 0 {
            return Err(Error::domain("n_windows", 0.0, ">= 1"));
        }
        if self.worker_streams == 0 {
            return Err(Error::domain("worker_streams", 0.0, ">= 1"));
        }
        if self.mode == Mode::SettingScan && self.n_windows.checked_mul(8).is_none() {
            return Err(Error::domain(
                "n_windows",
                self.n_windows as f64,
                "small enough that 8 * n_windows fits in 64 bits",
            ));
        }
        Ok(())
    }

    pub fn total_windows(&self) -> u64 {
        match self.mode {
            Mode::RandomBb84 => self.n_windows,
            Mode::SettingScan => self.n_windows * 8,
        }
    }
}

/// Tallies for one `(Alice state, Bob basis)` setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CellCounts {
    /// Only the detector matching Alice's bit clicked.
    pub correct: u64,
    /// Only the other detector clicked.
    pub wrong: u64,
    pub double: u64,
    pub empty: u64,
}

impl CellCounts {
    pub fn windows(&self) -> u64 {
        self.correct + self.wrong + self.double + self.empty
    }

    fn record(&mut self, outcome: WindowOutcome, bit: Bit) {
        match (outcome, bit) {
            (WindowOutcome::None, _) => self.empty += 1,
            (WindowOutcome::Both, _) => self.double += 1,
            (WindowOutcome::Det0, Bit::Zero) | (WindowOutcome::Det1, Bit::One) => self.correct += 1,
            (WindowOutcome::Det0, Bit::One) | (WindowOutcome::Det1, Bit::Zero) => self.wrong += 1,
        }
    }
}

impl Add for CellCounts {
    type Output = CellCounts;

    fn add(self, rhs: CellCounts) -> CellCounts {
        CellCounts {
            correct: self.correct + rhs.correct,
            wrong: self.wrong + rhs.wrong,
            double: self.double + rhs.double,
            empty: self.empty + rhs.empty,
        }
    }
}

/// A protocol setting: Alice's prepared state and Bob's measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Setting {
    pub alice: AliceState,
    pub bob: Basis,
}

impl Setting {
    /// The eight settings in cell order: Alice-state major, Bob basis minor.
    pub fn all() -> impl Iterator<Item = Setting> {
        AliceState::ALL
            .into_iter()
            .flat_map(|alice| Basis::ALL.into_iter().map(move |bob| Setting { alice, bob }))
    }

    fn index(self) -> usize {
        let a = AliceState::ALL.iter().position(|s| *s == self.alice).unwrap();
        let b = if self.bob == Basis::VH { 0 } else { 1 };
        a * 2 + b
    }

    fn from_index(i: usize) -> Setting {
        Setting {
            alice: AliceState::ALL[i / 2],
            bob: Basis::ALL[i % 2],
        }
    }

    pub fn is_sifted(self) -> bool {
        self.alice.basis() == self.bob
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunCounts {
    cells: [CellCounts; 8],
}

impl RunCounts {
    pub fn cells(&self) -> impl Iterator<Item = (Setting, &CellCounts)> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, c)| (Setting::from_index(i), c))
    }

    pub fn total_windows(&self) -> u64 {
        self.cells.iter().map(CellCounts::windows).sum()
    }

    pub fn totals(&self) -> CellCounts {
        self.cells.iter().fold(CellCounts::default(), |acc, c| acc + *c)
    }
}

impl Index<Setting> for RunCounts {
    type Output = CellCounts;

    fn index(&self, s: Setting) -> &CellCounts {
        &self.cells[s.index()]
    }
}

impl IndexMut<Setting> for RunCounts {
    fn index_mut(&mut self, s: Setting) -> &mut CellCounts {
        &mut self.cells[s.index()]
    }
}

impl AddAssign for RunCounts {
    fn add_assign(&mut self, rhs: RunCounts) {
        for (a, b) in self.cells.iter_mut().zip(rhs.cells) {
            *a = *a + b;
        }
    }
}

impl Add for RunCounts {
    type Output = RunCounts;

    fn add(mut self, rhs: RunCounts) -> RunCounts {
        self += rhs;
        self
    }
}

/// Per-arm mean photon numbers reaching Bob's detectors for each setting.
pub fn arm_means(
    optics: &OpticsParams,
    t: Transmittance,
    source: &SourceParams,
) -> Result<[[f64; 2]; 8]> {
    let mut out = [[0.0; 2]; 8];
    let mu = source.mean_photons_per_window * t.value() * optics.bob_transmission;
    for (slot, setting) in out.iter_mut().zip(Setting::all()) {
        let state = optics.received_state(setting.alice)?;
        let (p0, p1) = pbs_probabilities(state, setting.bob);
        *slot = [mu * p0, mu * p1];
    }
    Ok(out)
}

/// Runs the protocol and returns per-setting tallies.
pub fn run(
    config: &ProtocolConfig,
    optics: &OpticsParams,
    t: Transmittance,
    source: &SourceParams,
    detector: &DetectorParams,
) -> Result<RunCounts> {
    config.validate()?;
    optics.validate()?;
    source.validate()?;
    detector.validate()?;

    let means = arm_means(optics, t, source)?;
    let mut arms = [ArmPair::from_probabilities([0.0, 0.0]); 8];
    for (arm, [m0, m1]) in arms.iter_mut().zip(means) {
        *arm = ArmPair::new(m0, m1, detector)?;
    }

    let total = config.total_windows();
    let streams = config.worker_streams as u64;
    let counts = block_streams(config.seed, config.worker_streams)
        .into_par_iter()
        .enumerate()
        .map(|(block, mut rng)| {
            let block = block as u64;
            let start = block_boundary(total, streams, block);
            let end = block_boundary(total, streams, block + 1);
            match config.sampler {
                Sampler::PerWindow => per_window_block(config, &arms, start, end, &mut rng),
                Sampler::Aggregated => aggregated_block(config, &arms, start, end, &mut rng),
            }
        })
        .reduce(RunCounts::default, |a, b| a + b);
    Ok(counts)
}

/// Independent generators for each block: consecutive 2^128-step jumps from the seed.
pub fn block_streams(seed: u64, count: usize) -> Vec<Xoshiro256PlusPlus> {
    let mut cursor = Xoshiro256PlusPlus::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let rng = cursor.clone();
            cursor.jump();
            rng
        })
        .collect()
}

fn block_boundary(total: u64, streams: u64, block: u64) -> u64 {
    (total as u128 * block as u128 / streams as u128) as u64
}

/// Splits the window range `[start, end)` of a scan run by setting.
fn scan_spans(n_per_cell: u64, start: u64, end: u64) -> impl Iterator<Item = (usize, u64)> {
    (0..8usize).filter_map(move |cell| {
        let lo = (cell as u64 * n_per_cell).max(start);
        let hi = ((cell as u64 + 1) * n_per_cell).min(end);
        (hi > lo).then(|| (cell, hi - lo))
    })
}

fn per_window_block(
    config: &ProtocolConfig,
    arms: &[ArmPair; 8],
    start: u64,
    end: u64,
    rng: &mut Xoshiro256PlusPlus,
) -> RunCounts {
    let mut counts = RunCounts::default();
    match config.mode {
        Mode::SettingScan => {
            for (cell, n) in scan_spans(config.n_windows, start, end) {
                let bit = Setting::from_index(cell).alice.bit();
                let arm = &arms[cell];
                let tally = &mut counts.cells[cell];
                for _ in 0..n {
                    tally.record(arm.sample(rng), bit);
                }
            }
        }
        Mode::RandomBb84 => {
            for _ in start..end {
                // three fair bits: Alice bit, Alice basis, Bob basis
                let cell = (rng.next_u32() & 7) as usize;
                let bit = Setting::from_index(cell).alice.bit();
                counts.cells[cell].record(arms[cell].sample(rng), bit);
            }
        }
    }
    counts
}

fn binomial<R: Rng>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

/// Splits `n` trials over categories with probabilities `probs` (summing to 1)
/// by a chain of conditional binomials.
fn multinomial<R: Rng, const K: usize>(n: u64, probs: [f64; K], rng: &mut R) -> [u64; K] {
    let mut out = [0u64; K];
    let mut left = n;
    let mut mass = 1.0;
    for k in 0..K - 1 {
        let p = if mass > 0.0 { (probs[k] / mass).min(1.0) } else { 0.0 };
        out[k] = binomial(left, p, rng);
        left -= out[k];
        mass -= probs[k];
    }
    out[K - 1] = left;
    out
}

fn aggregated_cell<R: Rng>(arm: &ArmPair, bit: Bit, n: u64, rng: &mut R) -> CellCounts {
    // [none, det0, det1, both]; put the dominant `none` category last
    let [none, d0, d1, both] = arm.outcome_probabilities();
    let [c0, c1, cb, ce] = multinomial(n, [d0, d1, both, none], rng);
    let (correct, wrong) = match bit {
        Bit::Zero => (c0, c1),
        Bit::One => (c1, c0),
    };
    CellCounts {
        correct,
        wrong,
        double: cb,
        empty: ce,
    }
}

fn aggregated_block(
    config: &ProtocolConfig,
    arms: &[ArmPair; 8],
    start: u64,
    end: u64,
    rng: &mut Xoshiro256PlusPlus,
) -> RunCounts {
    let mut counts = RunCounts::default();
    let spans: Vec<(usize, u64)> = match config.mode {
        Mode::SettingScan => scan_spans(config.n_windows, start, end).collect(),
        Mode::RandomBb84 => multinomial(end - start, [0.125; 8], rng)
            .into_iter()
            .enumerate()
            .collect(),
    };
    for (cell, n) in spans {
        let bit = Setting::from_index(cell).alice.bit();
        counts.cells[cell] = counts.cells[cell] + aggregated_cell(&arms[cell], bit, n, rng);
    }
    counts
}

/// Correct and wrong single clicks over settings where Bob's basis matches Alice's.
pub fn sift(counts: &RunCounts) -> (u64, u64) {
    counts
        .cells()
        .filter(|(s, _)| s.is_sifted())
        .fold((0, 0), |(c, w), (_, cell)| (c + cell.correct, w + cell.wrong))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QberEstimate {
    pub qber: f64,
    /// Binomial standard error, `sqrt(q (1 - q) / n)`.
    pub stderr: f64,
    pub n_sifted: u64,
}

/// Error fraction among sifted clicks. `None` when nothing was sifted.
pub fn qber(correct: u64, wrong: u64) -> Option<QberEstimate> {
    let n_sifted = correct + wrong;
    if n_sifted == 0 {
        return None;
    }
    let q = wrong as f64 / n_sifted as f64;
    Some(QberEstimate {
        qber: q,
        stderr: (q * (1.0 - q) / n_sifted as f64).sqrt(),
        n_sifted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scan(n: u64, seed: u64, workers: usize) -> ProtocolConfig {
        ProtocolConfig {
            mode: Mode::SettingScan,
            n_windows: n,
            seed,
            worker_streams: workers,
            sampler: Sampler::PerWindow,
        }
    }

    fn strong_source() -> SourceParams {
        SourceParams {
            mean_photons_per_window: 0.05,
            ..SourceParams::default()
        }
    }

    #[test]
    fn ideal_chain_has_no_errors() {
        let det = DetectorParams::default();
        let counts = run(&scan(200_000, 3, 4), &OpticsParams::ideal(), Transmittance::UNITY, &strong_source(), &det).unwrap();
        for (setting, cell) in counts.cells() {
            if setting.is_sifted() {
                assert_eq!(cell.wrong, 0);
                assert_eq!(cell.double, 0);
                assert!(cell.correct > 0);
            }
        }
        let (c, w) = sift(&counts);
        let est = qber(c, w).unwrap();
        assert_eq!(est.qber, 0.0);
    }

    #[test]
    fn scan_accounting() {
        let det = DetectorParams::default();
        for sampler in [Sampler::PerWindow, Sampler::Aggregated] {
            let config = ProtocolConfig { sampler, ..scan(12_345, 1, 7) };
            let counts = run(&config, &OpticsParams::default(), Transmittance::UNITY, &strong_source(), &det).unwrap();
            assert_eq!(counts.total_windows(), 8 * 12_345);
            for (_, cell) in counts.cells() {
                assert_eq!(cell.windows(), 12_345);
            }
        }
    }

    #[test]
    fn random_mode_accounting() {
        let det = DetectorParams::default();
        for sampler in [Sampler::PerWindow, Sampler::Aggregated] {
            let config = ProtocolConfig {
                mode: Mode::RandomBb84,
                sampler,
                ..scan(80_000, 5, 3)
            };
            let counts = run(&config, &OpticsParams::default(), Transmittance::UNITY, &strong_source(), &det).unwrap();
            assert_eq!(counts.total_windows(), 80_000);
            // each setting gets 1/8 of the windows
            let sigma = (80_000.0f64 * 0.125 * 0.875).sqrt();
            for (_, cell) in counts.cells() {
                assert!((cell.windows() as f64 - 10_000.0).abs() < 4.0 * sigma);
            }
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let det = DetectorParams::default();
        let optics = OpticsParams::default();
        let src = SourceParams::default();
        assert!(run(&scan(0, 1, 1), &optics, Transmittance::UNITY, &src, &det).is_err());
        assert!(run(&scan(10, 1, 0), &optics, Transmittance::UNITY, &src, &det).is_err());
        assert!(run(&scan(u64::MAX / 4, 1, 1), &optics, Transmittance::UNITY, &src, &det).is_err());
    }

    #[test]
    fn more_streams_than_windows() {
        let det = DetectorParams::default();
        let counts = run(&scan(1, 1, 64), &OpticsParams::default(), Transmittance::UNITY, &strong_source(), &det).unwrap();
        assert_eq!(counts.total_windows(), 8);
    }

    #[test]
    fn sift_examples() {
        assert_eq!(sift(&RunCounts::default()), (0, 0));

        let mut conjugate_only = RunCounts::default();
        for s in Setting::all().filter(|s| !s.is_sifted()) {
            conjugate_only[s] = CellCounts { correct: 17, wrong: 19, double: 2, empty: 100 };
        }
        assert_eq!(sift(&conjugate_only), (0, 0));
    }

    #[test]
    fn sift_matches_enumeration() {
        let mut counts = RunCounts::default();
        let mut expected = (0, 0);
        // brute force over every (bit, alice basis, bob basis) combination
        for (i, bit) in [Bit::Zero, Bit::One].into_iter().enumerate() {
            for (j, ab) in Basis::ALL.into_iter().enumerate() {
                for (k, bb) in Basis::ALL.into_iter().enumerate() {
                    let correct = (100 * i + 10 * j + k + 1) as u64;
                    let wrong = (3 * i + 5 * j + 7 * k) as u64;
                    let s = Setting { alice: AliceState::from_bit_basis(bit, ab), bob: bb };
                    counts[s] = CellCounts { correct, wrong, double: 9, empty: 1000 };
                    if ab == bb {
                        expected.0 += correct;
                        expected.1 += wrong;
                    }
                }
            }
        }
        assert_eq!(sift(&counts), expected);
    }

    #[test]
    fn qber_examples() {
        assert_eq!(qber(100, 0).unwrap().qber, 0.0);
        assert_eq!(qber(0, 100).unwrap().qber, 1.0);
        let q = qber(1201, 100).unwrap();
        assert!((q.qber - 0.076_863_950_807_071_48).abs() < 1e-15);
        assert_eq!(q.n_sifted, 1301);
        assert!(qber(0, 0).is_none());
    }

    #[test]
    fn conjugate_cells_are_balanced() {
        let det = DetectorParams::default();
        let counts = run(&scan(400_000, 8, 2), &OpticsParams::ideal(), Transmittance::UNITY, &strong_source(), &det).unwrap();
        for (setting, cell) in counts.cells().filter(|(s, _)| !s.is_sifted()) {
            let n = (cell.correct + cell.wrong) as f64;
            let sigma = (n * 0.25).sqrt();
            let diff = cell.correct as f64 - cell.wrong as f64;
            assert!(diff.abs() / 2.0 <= 4.0 * sigma, "{setting:?}: {cell:?}");
        }
    }

    #[test]
    fn thread_count_does_not_change_counts() {
        let det = DetectorParams { dark_rate_hz: 5e4, ..DetectorParams::default() };
        let config = ProtocolConfig { mode: Mode::RandomBb84, ..scan(300_000, 42, 6) };
        let go = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run(&config, &OpticsParams::default(), Transmittance::UNITY, &strong_source(), &det).unwrap())
        };
        let one = go(1);
        assert_eq!(one, go(2));
        assert_eq!(one, go(5));
    }

    #[test]
    fn multinomial_conserves() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(0);
        let out = multinomial(1_000_000, [0.1, 0.2, 0.3, 0.4], &mut rng);
        assert_eq!(out.iter().sum::<u64>(), 1_000_000);
        assert_eq!(multinomial(10, [0.0, 0.0, 1.0], &mut rng), [0, 0, 10]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn qber_bounded(c in 0u64..1_000_000, w in 0u64..1_000_000) {
            if let Some(est) = qber(c, w) {
                prop_assert!((0.0..=1.0).contains(&est.qber));
                prop_assert!(est.stderr >= 0.0);
            }
        }

        #[test]
        fn conservation(n in 1u64..5000, seed in any::<u64>(), workers in 1usize..9, random in any::<bool>(), agg in any::<bool>()) {
            let config = ProtocolConfig {
                mode: if random { Mode::RandomBb84 } else { Mode::SettingScan },
                n_windows: n,
                seed,
                worker_streams: workers,
                sampler: if agg { Sampler::Aggregated } else { Sampler::PerWindow },
            };
            let det = DetectorParams { dark_rate_hz: 1e6, ..DetectorParams::default() };
            let counts = run(&config, &OpticsParams::default(), Transmittance::UNITY, &strong_source(), &det).unwrap();
            prop_assert_eq!(counts.total_windows(), config.total_windows());
            if !random {
                for (_, cell) in counts.cells() {
                    prop_assert_eq!(cell.windows(), n);
                }
            }
        }
    }
}
