//! Entanglement-based secure ranging: polarization-entangled pairs in
//! (|HH⟩ + |VV⟩)/√2, one photon measured locally and one after the round
//! trip to the target, a CHSH test over four basis pairs, and a
//! time-of-flight distance estimate.
//!
//! Outcomes are sampled from the closed-form joint distribution of each
//! basis pair rather than from simulated amplitudes.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::pulse_rng;

/// Metres per second, exact by definition of the metre.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Local (Alice) analyzer angles in degrees.
pub const ALICE_THETAS: [f64; 2] = [0.0, 45.0];
/// Return-path (Bob) analyzer angles in degrees.
pub const BOB_THETAS: [f64; 2] = [22.5, -22.5];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RangingError {
    #[error("coincidence tally is empty")]
    EmptyTally,
    #[error("arrival time {arrival} s precedes emission time {emission} s")]
    ArrivalBeforeEmission { emission: f64, arrival: f64 },
    #[error("pairs per basis setting must be at least 1")]
    ZeroPairs,
    #[error("invalid ranging parameter {name}: {value}")]
    BadParameter { name: &'static str, value: f64 },
}

/// The analyzer angles of both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairBases {
    pub alice_thetas: [f64; 2],
    pub bob_thetas: [f64; 2],
}

impl Default for PairBases {
    fn default() -> Self {
        Self {
            alice_thetas: ALICE_THETAS,
            bob_thetas: BOB_THETAS,
        }
    }
}

impl PairBases {
    /// The four settings in CHSH order: (a,b), (a,b′), (a′,b), (a′,b′).
    pub fn settings(&self) -> [(f64, f64); 4] {
        let [a, a2] = self.alice_thetas;
        let [b, b2] = self.bob_thetas;
        [(a, b), (a, b2), (a2, b), (a2, b2)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairChannel {
    Honest,
    /// The target measures the returning photon at `theta_e` degrees and
    /// resends the collapsed state.
    InterceptResend {
        theta_e: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub alice: i8,
    pub bob: i8,
    pub emission_time: f64,
    pub arrival_time: f64,
}

fn cos2(deg: f64) -> f64 {
    let c = deg.to_radians().cos();
    c * c
}

fn sign(plus: bool) -> i8 {
    if plus {
        1
    } else {
        -1
    }
}

/// Round-trip delay to a target `range_m` metres away.
pub fn round_trip_time(range_m: f64) -> f64 {
    2.0 * range_m / SPEED_OF_LIGHT
}

/// Samples one pair's joint outcome (±1, ±1) at analyzer angles
/// `alice_theta`, `bob_theta`, plus its timing.
pub fn sample_pair<R: Rng + ?Sized>(
    alice_theta: f64,
    bob_theta: f64,
    channel: &PairChannel,
    range_m: f64,
    emission_time: f64,
    rng: &mut R,
) -> PairSample {
    let (alice, bob) = match *channel {
        PairChannel::Honest => {
            let same = rng.random::<f64>() < cos2(alice_theta - bob_theta);
            let alice = rng.random::<f64>() < 0.5;
            (sign(alice), sign(alice == same))
        }
        PairChannel::InterceptResend { theta_e } => {
            // the jammer's click is unbiased and steers the local photon
            // onto the same axis
            let axis = if rng.random::<f64>() < 0.5 {
                theta_e
            } else {
                theta_e + 90.0
            };
            let alice = rng.random::<f64>() < cos2(alice_theta - axis);
            let bob = rng.random::<f64>() < cos2(bob_theta - axis);
            (sign(alice), sign(bob))
        }
    };
    PairSample {
        alice,
        bob,
        emission_time,
        arrival_time: emission_time + round_trip_time(range_m),
    }
}

/// Coincidence counts for one basis pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceTally {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
}

impl CoincidenceTally {
    pub fn record(&mut self, alice: i8, bob: i8) {
        match (alice > 0, bob > 0) {
            (true, true) => self.pp += 1,
            (true, false) => self.pm += 1,
            (false, true) => self.mp += 1,
            (false, false) => self.mm += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.pp + self.pm + self.mp + self.mm
    }
}

/// E = (n₊₊ + n₋₋ − n₊₋ − n₋₊) / total.
pub fn correlation(tally: &CoincidenceTally) -> Result<f64, RangingError> {
    let total = tally.total();
    if total == 0 {
        return Err(RangingError::EmptyTally);
    }
    let agree = (tally.pp + tally.mm) as f64;
    let disagree = (tally.pm + tally.mp) as f64;
    Ok((agree - disagree) / total as f64)
}

/// S = E(a,b) + E(a,b′) + E(a′,b) − E(a′,b′).
pub fn chsh_s(e: [f64; 4]) -> f64 {
    e[0] + e[1] + e[2] - e[3]
}

/// Closed-form correlation at analyzer angles `alpha`, `beta`.
pub fn expected_correlation(alpha: f64, beta: f64, channel: &PairChannel) -> f64 {
    let c2 = |deg: f64| (2.0 * deg).to_radians().cos();
    match *channel {
        PairChannel::Honest => c2(alpha - beta),
        PairChannel::InterceptResend { theta_e } => c2(alpha - theta_e) * c2(beta - theta_e),
    }
}

pub fn expected_s(bases: &PairBases, channel: &PairChannel) -> f64 {
    chsh_s(
        bases
            .settings()
            .map(|(a, b)| expected_correlation(a, b, channel)),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingTally {
    pub alice_theta: f64,
    pub bob_theta: f64,
    pub tally: CoincidenceTally,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshRecord {
    pub settings: [SettingTally; 4],
    pub correlations: [f64; 4],
    pub s: f64,
    /// Binomial standard error of `s`, from Var(E) = (1 − E²)/n per setting.
    pub s_std_error: f64,
    pub secure: bool,
}

impl ChshRecord {
    pub fn from_tallies(settings: [SettingTally; 4]) -> Result<Self, RangingError> {
        let mut correlations = [0.0; 4];
        let mut variance = 0.0;
        for (e, st) in correlations.iter_mut().zip(&settings) {
            *e = correlation(&st.tally)?;
            variance += (1.0 - *e * *e) / st.tally.total() as f64;
        }
        let s = chsh_s(correlations);
        Ok(Self {
            settings,
            correlations,
            s,
            s_std_error: variance.sqrt(),
            secure: s.abs() > 2.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeEstimate {
    pub round_trip_time: f64,
    pub distance: f64,
}

/// distance = c·(arrival − emission)/2.
pub fn estimate_range(
    emission_time: f64,
    arrival_time: f64,
) -> Result<RangeEstimate, RangingError> {
    if arrival_time.is_nan() || emission_time.is_nan() || arrival_time < emission_time {
        return Err(RangingError::ArrivalBeforeEmission {
            emission: emission_time,
            arrival: arrival_time,
        });
    }
    let dt = arrival_time - emission_time;
    Ok(RangeEstimate {
        round_trip_time: dt,
        distance: SPEED_OF_LIGHT * dt / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshConfig {
    pub pairs_per_setting: u64,
    pub channel: PairChannel,
    pub range_m: f64,
    pub pulse_period_s: f64,
}

impl Default for ChshConfig {
    fn default() -> Self {
        Self {
            pairs_per_setting: 100_000,
            channel: PairChannel::Honest,
            range_m: 150.0,
            pulse_period_s: 1e-6,
        }
    }
}

impl ChshConfig {
    pub fn validate(&self) -> Result<(), RangingError> {
        if self.pairs_per_setting == 0 {
            return Err(RangingError::ZeroPairs);
        }
        if !(self.range_m.is_finite() && self.range_m >= 0.0) {
            return Err(RangingError::BadParameter {
                name: "range_m",
                value: self.range_m,
            });
        }
        if !(self.pulse_period_s.is_finite() && self.pulse_period_s > 0.0) {
            return Err(RangingError::BadParameter {
                name: "pulse_period_s",
                value: self.pulse_period_s,
            });
        }
        if let PairChannel::InterceptResend { theta_e } = self.channel {
            if !theta_e.is_finite() {
                return Err(RangingError::BadParameter {
                    name: "theta_e",
                    value: theta_e,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshRun {
    pub record: ChshRecord,
    pub range: RangeEstimate,
    pub pairs: u64,
}

/// Emits `4 × pairs_per_setting` pulses, cycling through the basis
/// settings, and tallies coincidences per setting. The range estimate uses
/// the mean round-trip time over all pairs.
pub fn run_chsh(config: &ChshConfig, seed: u64, workers: usize) -> Result<ChshRun, RangingError> {
    config.validate()?;
    let workers = workers.max(1);
    let bases = PairBases::default();
    let settings = bases.settings();
    let pairs = config.pairs_per_setting * 4;

    let simulate = |i: u64| {
        let (a, b) = settings[(i % 4) as usize];
        let mut rng = pulse_rng(seed, i);
        sample_pair(
            a,
            b,
            &config.channel,
            config.range_m,
            i as f64 * config.pulse_period_s,
            &mut rng,
        )
    };
    let samples: Vec<PairSample> = if workers == 1 {
        (0..pairs).map(simulate).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool")
            .install(|| (0..pairs).into_par_iter().map(simulate).collect())
    };

    let mut tallies = [CoincidenceTally::default(); 4];
    let mut delay_sum = 0.0;
    for (i, s) in samples.iter().enumerate() {
        tallies[i % 4].record(s.alice, s.bob);
        delay_sum += estimate_range(s.emission_time, s.arrival_time)?.round_trip_time;
    }
    let mean_delay = delay_sum / pairs as f64;
    let per_setting = std::array::from_fn(|k| SettingTally {
        alice_theta: settings[k].0,
        bob_theta: settings[k].1,
        tally: tallies[k],
    });
    Ok(ChshRun {
        record: ChshRecord::from_tallies(per_setting)?,
        range: estimate_range(0.0, mean_delay)?,
        pairs,
    })
}
