//! Pulse-by-pulse imaging protocol: source, channel (honest object or
//! jammer), matched-basis detector, and the run loop that accumulates the
//! four polarization-port images.
//!
//! Every pulse draws from its own random stream, keyed by the master seed and
//! the pulse index, so a run is a pure function of its inputs no matter how
//! many worker threads simulate it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polar::{measure, Axis, MeasurementBasis, Outcome, PolarizationState, ProtocolState};
use crate::scene::{
    reflect, sample_position, scale, CountGrid, ObjectMask, PixelCoord, Reflection,
};

/// Pulses simulated per parallel batch. Results do not depend on it.
const CHUNK: u64 = 8192;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("mean photons per pulse must be finite and > 0, got {0}")]
    MeanPhotons(f64),
    #[error("PBS extinction must lie in [0, 0.5], got {0}")]
    Extinction(f64),
    #[error("detection efficiency must lie in (0, 1], got {0}")]
    Efficiency(f64),
    #[error("frame budget must be at least 1")]
    ZeroFrames,
    #[error("worker count must be at least 1")]
    ZeroWorkers,
    #[error("{what} mask is {got:?} but the scene is {expected:?}")]
    MaskShape {
        what: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("spoof mask has no reflective pixels to paint")]
    EmptySpoof,
}

/// Weak-coherent source: Poissonian photon number, state uniform over
/// H, V, D, A.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub mean_photons_per_pulse: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            mean_photons_per_pulse: 1.0,
        }
    }
}

impl SourceConfig {
    pub fn new(mean_photons_per_pulse: f64) -> Result<Self, SimError> {
        let cfg = Self {
            mean_photons_per_pulse,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let mu = self.mean_photons_per_pulse;
        if !(mu.is_finite() && mu > 0.0) {
            return Err(SimError::MeanPhotons(mu));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Probability a photon leaves the wrong PBS port.
    pub pbs_extinction: f64,
    pub detection_efficiency: f64,
}

impl DetectorConfig {
    /// Lossless detector with a perfect PBS.
    pub const IDEAL: Self = Self {
        pbs_extinction: 0.0,
        detection_efficiency: 1.0,
    };

    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=0.5).contains(&self.pbs_extinction) {
            return Err(SimError::Extinction(self.pbs_extinction));
        }
        let eta = self.detection_efficiency;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(SimError::Efficiency(eta));
        }
        Ok(())
    }
}

impl Default for DetectorConfig {
    /// Symmetric 0.84% port flip, the baseline imperfection of the
    /// laboratory PBS.
    fn default() -> Self {
        Self {
            pbs_extinction: 0.0084,
            detection_efficiency: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResendPolicy {
    /// Resend the state the jammer's measurement collapsed to.
    EavesdropBasis,
    /// Resend every photon in one fixed state.
    FixedState(PolarizationState),
}

/// A spoof image with its reflective pixels precomputed for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SpoofImage {
    mask: ObjectMask,
    pixels: Vec<PixelCoord>,
}

impl SpoofImage {
    pub fn new(mask: ObjectMask) -> Result<Self, SimError> {
        let pixels = mask.reflective_pixels();
        if pixels.is_empty() {
            return Err(SimError::EmptySpoof);
        }
        Ok(Self { mask, pixels })
    }

    pub fn mask(&self) -> &ObjectMask {
        &self.mask
    }

    /// Uniform pixel over the reflective region.
    pub fn sample(&self, u: f64) -> PixelCoord {
        self.pixels[scale(u, self.pixels.len())]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    /// The real object reflects the photon where its mask is set.
    Honest { mask: ObjectMask },
    /// The object measures each photon in `eavesdrop_basis` and resends a
    /// replacement carrying a spoof position.
    InterceptResend {
        eavesdrop_basis: MeasurementBasis,
        spoof: SpoofImage,
        resend_policy: ResendPolicy,
    },
    /// Multi-photon pulses are split and their state identified perfectly;
    /// single-photon pulses fall back to intercept-resend in
    /// `fallback_basis`. Photons landing on absorbing pixels of `mask` are
    /// lost before the jammer sees them.
    PhotonNumberSplitting {
        mask: ObjectMask,
        spoof: SpoofImage,
        fallback_basis: MeasurementBasis,
    },
}

impl ChannelModel {
    pub fn honest(mask: ObjectMask) -> Self {
        Self::Honest { mask }
    }

    pub fn intercept_resend(
        eavesdrop_basis: MeasurementBasis,
        spoof_mask: ObjectMask,
        resend_policy: ResendPolicy,
    ) -> Result<Self, SimError> {
        Ok(Self::InterceptResend {
            eavesdrop_basis,
            spoof: SpoofImage::new(spoof_mask)?,
            resend_policy,
        })
    }

    /// Photon-number splitting with the Breidbart single-photon fallback.
    pub fn photon_number_splitting(
        mask: ObjectMask,
        spoof_mask: ObjectMask,
    ) -> Result<Self, SimError> {
        Ok(Self::PhotonNumberSplitting {
            mask,
            spoof: SpoofImage::new(spoof_mask)?,
            fallback_basis: MeasurementBasis::BREIDBART,
        })
    }

    fn check_shape(&self, scene: &ObjectMask) -> Result<(), SimError> {
        let check = |what, m: &ObjectMask| {
            if m.same_shape(scene) {
                Ok(())
            } else {
                Err(SimError::MaskShape {
                    what,
                    expected: (scene.width(), scene.height()),
                    got: (m.width(), m.height()),
                })
            }
        };
        match self {
            Self::Honest { mask } => check("object", mask),
            Self::InterceptResend { spoof, .. } => check("spoof", spoof.mask()),
            Self::PhotonNumberSplitting { mask, spoof, .. } => {
                check("object", mask)?;
                check("spoof", spoof.mask())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelAction {
    /// The pulse carried no photon.
    Vacuum,
    Passed,
    Absorbed,
    InterceptedResent,
    Split,
}

/// Full lifecycle of one source pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonEvent {
    /// Pulse index; also the key of this pulse's random stream.
    pub frame_index: u64,
    pub sent: ProtocolState,
    pub true_pixel: PixelCoord,
    pub photon_count: u32,
    pub channel_action: ChannelAction,
    /// The jammer's measurement result, when it measured this photon.
    pub jammer_outcome: Option<Outcome>,
    /// Polarization reaching the detector.
    pub arriving_state: Option<PolarizationState>,
    pub reported_pixel: Option<PixelCoord>,
    pub detected_outcome: Option<Outcome>,
    pub is_error: Option<bool>,
}

impl PhotonEvent {
    pub fn sent_state(&self) -> PolarizationState {
        self.sent.state()
    }

    pub fn sent_basis(&self) -> MeasurementBasis {
        self.sent.basis()
    }

    pub fn is_detected(&self) -> bool {
        self.detected_outcome.is_some()
    }

    /// The camera quadrant that clicked.
    pub fn detected_port(&self) -> Option<ProtocolState> {
        let outcome = self.detected_outcome?;
        ProtocolState::from_state(outcome.as_state)
    }

    /// Whether the jammer's measurement mapped to the wrong bit value
    /// (aligned axis read as H/D, orthogonal as V/A). `None` when the
    /// jammer did not measure this photon.
    pub fn jammer_misidentified(&self) -> Option<bool> {
        self.jammer_outcome.map(|o| o.axis != self.sent.axis())
    }
}

/// A source with its photon-number distribution ready to sample.
#[derive(Debug, Clone)]
pub struct Source {
    config: SourceConfig,
    photons: Poisson<f64>,
}

impl Source {
    pub fn new(config: SourceConfig) -> Result<Self, SimError> {
        config.validate()?;
        let photons = Poisson::new(config.mean_photons_per_pulse)
            .map_err(|_| SimError::MeanPhotons(config.mean_photons_per_pulse))?;
        Ok(Self { config, photons })
    }

    pub fn config(&self) -> &SourceConfig {
        &self.config
    }

    /// Draws the prepared state and the pulse's photon number.
    pub fn generate_pulse<R: Rng + ?Sized>(&self, rng: &mut R) -> (ProtocolState, u32) {
        let state = ProtocolState::ALL[rng.random_range(0..4)];
        let n = self.photons.sample(rng);
        (state, n.min(u32::MAX as f64) as u32)
    }
}

/// Free-function form of [`Source::generate_pulse`].
pub fn generate_pulse<R: Rng + ?Sized>(
    cfg: &SourceConfig,
    rng: &mut R,
) -> Result<(PolarizationState, MeasurementBasis, u32), SimError> {
    let (state, n) = Source::new(*cfg)?.generate_pulse(rng);
    Ok((state.state(), state.basis(), n))
}

fn intercept<R: Rng + ?Sized>(
    mut event: PhotonEvent,
    basis: MeasurementBasis,
    policy: ResendPolicy,
    spoof: &SpoofImage,
    rng: &mut R,
) -> PhotonEvent {
    let outcome = measure(event.sent_state(), basis, rng.random());
    let resent = match policy {
        ResendPolicy::EavesdropBasis => outcome.as_state,
        ResendPolicy::FixedState(state) => state,
    };
    event.channel_action = ChannelAction::InterceptedResent;
    event.jammer_outcome = Some(outcome);
    event.arriving_state = Some(resent);
    event.reported_pixel = Some(spoof.sample(rng.random()));
    event
}

fn pass_object(mut event: PhotonEvent, mask: &ObjectMask) -> Result<PhotonEvent, PhotonEvent> {
    match reflect(mask, event.true_pixel).expect("true pixel sampled inside the scene") {
        Reflection::Reflected => {
            event.channel_action = ChannelAction::Passed;
            event.arriving_state = Some(event.sent_state());
            event.reported_pixel = Some(event.true_pixel);
            Ok(event)
        }
        Reflection::Absorbed => {
            event.channel_action = ChannelAction::Absorbed;
            Err(event)
        }
    }
}

/// Sends the pulse through the object or the jammer.
pub fn apply_channel<R: Rng + ?Sized>(
    model: &ChannelModel,
    mut event: PhotonEvent,
    rng: &mut R,
) -> PhotonEvent {
    if event.photon_count == 0 {
        event.channel_action = ChannelAction::Vacuum;
        return event;
    }
    match model {
        ChannelModel::Honest { mask } => pass_object(event, mask).unwrap_or_else(|e| e),
        ChannelModel::InterceptResend {
            eavesdrop_basis,
            spoof,
            resend_policy,
        } => intercept(event, *eavesdrop_basis, *resend_policy, spoof, rng),
        ChannelModel::PhotonNumberSplitting {
            mask,
            spoof,
            fallback_basis,
        } => match pass_object(event, mask) {
            Err(absorbed) => absorbed,
            Ok(mut event) if event.photon_count >= 2 => {
                // One photon kept and read in both bases identifies the
                // state; a perfect copy goes back out.
                event.channel_action = ChannelAction::Split;
                event.arriving_state = Some(event.sent_state());
                event.reported_pixel = Some(spoof.sample(rng.random()));
                event
            }
            Ok(event) => intercept(
                event,
                *fallback_basis,
                ResendPolicy::EavesdropBasis,
                spoof,
                rng,
            ),
        },
    }
}

/// Matched-basis measurement of the arriving photon, with PBS port flips
/// and detector loss.
pub fn detect<R: Rng + ?Sized>(
    mut event: PhotonEvent,
    det: &DetectorConfig,
    rng: &mut R,
) -> PhotonEvent {
    let Some(arriving) = event.arriving_state else {
        return event;
    };
    let basis = event.sent_basis();
    let mut outcome = measure(arriving, basis, rng.random());
    if rng.random::<f64>() < det.pbs_extinction {
        let flipped = match outcome.axis {
            Axis::Aligned => Axis::Orthogonal,
            Axis::Orthogonal => Axis::Aligned,
        };
        outcome = Outcome {
            axis: flipped,
            as_state: basis.state_for(flipped),
        };
    }
    if rng.random::<f64>() >= det.detection_efficiency {
        return event;
    }
    event.is_error = Some(outcome.axis != event.sent.axis());
    event.detected_outcome = Some(outcome);
    event
}

/// Random stream for one pulse.
pub fn pulse_rng(seed: u64, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame_index);
    rng
}

/// The four port images, indexed by [`ProtocolState`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortGrids {
    pub h: CountGrid,
    pub v: CountGrid,
    pub d: CountGrid,
    pub a: CountGrid,
}

impl PortGrids {
    pub fn zeros(width: usize, height: usize) -> Self {
        let g = CountGrid::zeros(width, height);
        Self {
            h: g.clone(),
            v: g.clone(),
            d: g.clone(),
            a: g,
        }
    }

    pub fn port(&self, p: ProtocolState) -> &CountGrid {
        match p {
            ProtocolState::H => &self.h,
            ProtocolState::V => &self.v,
            ProtocolState::D => &self.d,
            ProtocolState::A => &self.a,
        }
    }

    fn port_mut(&mut self, p: ProtocolState) -> &mut CountGrid {
        match p {
            ProtocolState::H => &mut self.h,
            ProtocolState::V => &mut self.v,
            ProtocolState::D => &mut self.d,
            ProtocolState::A => &mut self.a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    /// Hard stop on simulated pulses; `None` means 1000 per budgeted frame
    /// (at least one million).
    pub max_pulses: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            max_pulses: None,
        }
    }
}

/// Everything one imaging run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub frame_budget: u64,
    /// Frames with a camera click. Equals `frame_budget` unless the pulse
    /// cap was reached first.
    pub frames_emitted: u64,
    pub pulses_simulated: u64,
    /// Every simulated pulse, in pulse order.
    pub events: Vec<PhotonEvent>,
    pub grids: PortGrids,
}

impl RunRecord {
    pub fn detected(&self) -> impl Iterator<Item = &PhotonEvent> {
        self.events.iter().filter(|e| e.is_detected())
    }
}

/// Simulates one pulse from its own random stream.
pub fn simulate_pulse(
    scene: &ObjectMask,
    source: &Source,
    detector: &DetectorConfig,
    channel: &ChannelModel,
    seed: u64,
    frame_index: u64,
) -> PhotonEvent {
    let mut rng = pulse_rng(seed, frame_index);
    let (sent, photon_count) = source.generate_pulse(&mut rng);
    let true_pixel = sample_position(scene, rng.random(), rng.random());
    let event = PhotonEvent {
        frame_index,
        sent,
        true_pixel,
        photon_count,
        channel_action: ChannelAction::Vacuum,
        jammer_outcome: None,
        arriving_state: None,
        reported_pixel: None,
        detected_outcome: None,
        is_error: None,
    };
    let event = apply_channel(channel, event, &mut rng);
    detect(event, detector, &mut rng)
}

/// Runs pulses until `frame_budget` frames register a click (one detection
/// per frame at most), or the pulse cap is hit.
pub fn run_simulation(
    scene: &ObjectMask,
    source: &SourceConfig,
    detector: &DetectorConfig,
    channel: &ChannelModel,
    seed: u64,
    frame_budget: u64,
    options: &RunOptions,
) -> Result<RunRecord, SimError> {
    let source = Source::new(*source)?;
    detector.validate()?;
    channel.check_shape(scene)?;
    if frame_budget == 0 {
        return Err(SimError::ZeroFrames);
    }
    if options.workers == 0 {
        return Err(SimError::ZeroWorkers);
    }
    let max_pulses = options
        .max_pulses
        .unwrap_or_else(|| frame_budget.saturating_mul(1000).max(1_000_000));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .expect("thread pool");

    let mut record = RunRecord {
        seed,
        width: scene.width(),
        height: scene.height(),
        frame_budget,
        frames_emitted: 0,
        pulses_simulated: 0,
        events: Vec::new(),
        grids: PortGrids::zeros(scene.width(), scene.height()),
    };
    let mut next = 0u64;
    'outer: while next < max_pulses {
        let end = (next + CHUNK).min(max_pulses);
        let batch: Vec<PhotonEvent> = if options.workers == 1 {
            (next..end)
                .map(|i| simulate_pulse(scene, &source, detector, channel, seed, i))
                .collect()
        } else {
            pool.install(|| {
                (next..end)
                    .into_par_iter()
                    .map(|i| simulate_pulse(scene, &source, detector, channel, seed, i))
                    .collect()
            })
        };
        next = end;
        for event in batch {
            record.pulses_simulated += 1;
            if let (Some(port), Some(pixel)) = (event.detected_port(), event.reported_pixel) {
                record.grids.port_mut(port).increment(pixel);
                record.frames_emitted += 1;
            }
            record.events.push(event);
            if record.frames_emitted == frame_budget {
                break 'outer;
            }
        }
    }
    Ok(record)
}
