//! Error-rate estimation, the 25% security verdict, image reconstruction,
//! and deterministic JSON/CSV/PGM report output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::polar::{
    bob_error_rate, jammer_error_rate, mutual_information, MeasurementBasis, PolarError,
    ProtocolState,
};
use crate::protocol::{
    run_simulation, ChannelModel, DetectorConfig, PhotonEvent, PortGrids, ResendPolicy, RunOptions,
    RunRecord, SimError, SourceConfig,
};
use crate::ranging::ChshRecord;
use crate::scene::{write_image_pgm, CountGrid, ObjectMask, SceneError};

/// Error rate above which intercept-resend jamming cannot be ruled out.
pub const SECURE_ERROR_BOUND: f64 = 0.25;

pub const DEFAULT_CONFIDENCE: f64 = 0.99;

const VERDICT_RULE: &str = "secure if the Wilson upper limit is below 0.25, compromised if the \
    lower limit is above 0.25, otherwise inconclusive; the inconclusive band is a finite-sample \
    extension of the sharp 25% bound";

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no detected photons to analyze")]
    NoDetections,
    #[error("confidence level must lie in (0, 1), got {0}")]
    Confidence(f64),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Errors among detections whose SENT state was `state`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelErrors {
    pub state: ProtocolState,
    pub errors: u64,
    pub total: u64,
}

impl ChannelErrors {
    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.errors as f64 / self.total as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// In H, V, D, A order.
    pub channels: [ChannelErrors; 4],
    pub n_detected: u64,
    pub errors: u64,
    pub average_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
}

impl ErrorReport {
    pub fn channel(&self, state: ProtocolState) -> &ChannelErrors {
        &self.channels[state.index()]
    }

    /// Builds a report from per-channel `(errors, total)` counts in H, V,
    /// D, A order.
    pub fn from_counts(counts: [(u64, u64); 4], confidence: f64) -> Result<Self, AnalysisError> {
        let channels = std::array::from_fn(|i| ChannelErrors {
            state: ProtocolState::ALL[i],
            errors: counts[i].0,
            total: counts[i].1,
        });
        let n_detected: u64 = counts.iter().map(|c| c.1).sum();
        let errors: u64 = counts.iter().map(|c| c.0).sum();
        if n_detected == 0 {
            return Err(AnalysisError::NoDetections);
        }
        let (ci_low, ci_high) = wilson_interval(errors, n_detected, confidence)?;
        Ok(Self {
            channels,
            n_detected,
            errors,
            average_error: errors as f64 / n_detected as f64,
            ci_low,
            ci_high,
            confidence,
        })
    }
}

/// Wilson score interval for `successes` out of `n` at two-sided
/// `confidence`.
pub fn wilson_interval(
    successes: u64,
    n: u64,
    confidence: f64,
) -> Result<(f64, f64), AnalysisError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(AnalysisError::Confidence(confidence));
    }
    if n == 0 {
        return Err(AnalysisError::NoDetections);
    }
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z / denom * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    let low = if successes == 0 {
        0.0
    } else {
        (centre - half).clamp(0.0, p)
    };
    let high = if successes == n {
        1.0
    } else {
        (centre + half).clamp(p, 1.0)
    };
    Ok((low, high))
}

/// Per-channel error tally over the detected events, at the default 99%
/// confidence.
pub fn tally_errors<'a, I>(events: I) -> Result<ErrorReport, AnalysisError>
where
    I: IntoIterator<Item = &'a PhotonEvent>,
{
    tally_errors_at(events, DEFAULT_CONFIDENCE)
}

pub fn tally_errors_at<'a, I>(events: I, confidence: f64) -> Result<ErrorReport, AnalysisError>
where
    I: IntoIterator<Item = &'a PhotonEvent>,
{
    let mut counts = [(0u64, 0u64); 4];
    for event in events {
        if let Some(is_error) = event.is_error {
            let c = &mut counts[event.sent.index()];
            c.0 += is_error as u64;
            c.1 += 1;
        }
    }
    ErrorReport::from_counts(counts, confidence)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Secure,
    Compromised,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityVerdict {
    pub verdict: Verdict,
    pub bound: f64,
    pub mutual_information_bits: f64,
    /// Mutual information at the bound (≈ 0.1887 bit/photon).
    pub mutual_information_threshold: f64,
}

pub fn security_verdict(report: &ErrorReport) -> SecurityVerdict {
    let verdict = if report.ci_high < SECURE_ERROR_BOUND {
        Verdict::Secure
    } else if report.ci_low > SECURE_ERROR_BOUND {
        Verdict::Compromised
    } else {
        Verdict::Inconclusive
    };
    SecurityVerdict {
        verdict,
        bound: SECURE_ERROR_BOUND,
        mutual_information_bits: mutual_information(report.average_error),
        mutual_information_threshold: mutual_information(SECURE_ERROR_BOUND),
    }
}

/// Port images plus their pixelwise sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    pub ports: PortGrids,
    pub composite: CountGrid,
}

pub fn reconstruct_image(run: &RunRecord) -> ImageSet {
    let ports = run.grids.clone();
    let mut composite = CountGrid::zeros(run.width, run.height);
    for p in ProtocolState::ALL {
        composite.add(ports.port(p));
    }
    ImageSet { ports, composite }
}

/// Misidentification tally for the jammer's own measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JammerErrors {
    pub misidentified: u64,
    pub intercepted: u64,
}

impl JammerErrors {
    pub fn rate(&self) -> Option<f64> {
        (self.intercepted > 0).then(|| self.misidentified as f64 / self.intercepted as f64)
    }
}

pub fn jammer_errors(run: &RunRecord) -> JammerErrors {
    let mut out = JammerErrors {
        misidentified: 0,
        intercepted: 0,
    };
    for wrong in run.events.iter().filter_map(|e| e.jammer_misidentified()) {
        out.intercepted += 1;
        out.misidentified += wrong as u64;
    }
    out
}

/// One eavesdropping angle of the jammer/receiver error sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackCurveRow {
    pub theta: f64,
    pub e_j_analytic: f64,
    pub e_j_mc: f64,
    pub e_b_analytic: f64,
    pub e_b_mc: f64,
    pub n_intercepted: u64,
    pub n_detected: u64,
}

#[derive(Debug, Clone)]
pub struct AttackCurveSetup {
    pub scene: ObjectMask,
    pub spoof: ObjectMask,
    pub source: SourceConfig,
    pub detector: DetectorConfig,
}

/// Intercept-resend in the eavesdropping basis at each angle, run until
/// `detections_per_row` frames are detected. Row `k` uses seed `seed + k`.
pub fn attack_curve(
    setup: &AttackCurveSetup,
    thetas: &[f64],
    detections_per_row: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<Vec<AttackCurveRow>, AnalysisError> {
    let mut rows = Vec::with_capacity(thetas.len());
    for (k, &theta) in thetas.iter().enumerate() {
        let basis = MeasurementBasis::new(theta)?;
        let channel = ChannelModel::intercept_resend(
            basis,
            setup.spoof.clone(),
            ResendPolicy::EavesdropBasis,
        )?;
        let run = run_simulation(
            &setup.scene,
            &setup.source,
            &setup.detector,
            &channel,
            seed.wrapping_add(k as u64),
            detections_per_row,
            options,
        )?;
        let bob = tally_errors(&run.events)?;
        let jim = jammer_errors(&run);
        rows.push(AttackCurveRow {
            theta,
            e_j_analytic: jammer_error_rate(theta),
            e_j_mc: jim.rate().unwrap_or(f64::NAN),
            e_b_analytic: bob_error_rate(theta),
            e_b_mc: bob.average_error,
            n_intercepted: jim.intercepted,
            n_detected: bob.n_detected,
        });
    }
    Ok(rows)
}

pub fn attack_curve_csv(rows: &[AttackCurveRow]) -> String {
    let mut out = String::from("theta,e_J_analytic,e_J_mc,e_B_analytic,e_B_mc\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6}",
            r.theta, r.e_j_analytic, r.e_j_mc, r.e_b_analytic, r.e_b_mc
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSummary {
    pub state: ProtocolState,
    pub errors: u64,
    pub total: u64,
    pub error_rate: Option<f64>,
}

/// The JSON report document. Field order here is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagingReport {
    pub seed: u64,
    pub config: serde_json::Value,
    pub frame_budget: u64,
    pub frames_emitted: u64,
    pub pulses_simulated: u64,
    pub channels: Vec<ChannelSummary>,
    pub n_detected: u64,
    pub errors: u64,
    pub average_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub verdict: Verdict,
    pub bound: f64,
    pub verdict_rule: String,
    pub mutual_information_bits: f64,
    pub mutual_information_threshold: f64,
    pub chsh_s: Option<f64>,
}

impl ImagingReport {
    pub fn new(
        run: &RunRecord,
        report: &ErrorReport,
        verdict: &SecurityVerdict,
        config: serde_json::Value,
        chsh: Option<&ChshRecord>,
    ) -> Self {
        Self {
            seed: run.seed,
            config,
            frame_budget: run.frame_budget,
            frames_emitted: run.frames_emitted,
            pulses_simulated: run.pulses_simulated,
            channels: report
                .channels
                .iter()
                .map(|c| ChannelSummary {
                    state: c.state,
                    errors: c.errors,
                    total: c.total,
                    error_rate: c.rate(),
                })
                .collect(),
            n_detected: report.n_detected,
            errors: report.errors,
            average_error: report.average_error,
            ci_low: report.ci_low,
            ci_high: report.ci_high,
            confidence: report.confidence,
            verdict: verdict.verdict,
            bound: verdict.bound,
            verdict_rule: VERDICT_RULE.to_owned(),
            mutual_information_bits: verdict.mutual_information_bits,
            mutual_information_threshold: verdict.mutual_information_threshold,
            chsh_s: chsh.map(|c| c.s),
        }
    }

    pub fn to_json(&self) -> Result<String, AnalysisError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub const CSV_HEADER: &str =
    "frame,sent_state,basis,true_x,true_y,reported_x,reported_y,port,is_error";

/// One row per emitted frame (detected photon), in pulse order.
pub fn events_csv(run: &RunRecord) -> String {
    let mut out = String::with_capacity(64 * (run.frames_emitted as usize + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for e in run.detected() {
        let basis = match e.sent {
            ProtocolState::H | ProtocolState::V => "HV",
            ProtocolState::D | ProtocolState::A => "DA",
        };
        let reported = e.reported_pixel.expect("detected photons carry a position");
        let port = e
            .detected_port()
            .expect("detections land in a protocol port");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            e.frame_index,
            e.sent,
            basis,
            e.true_pixel.x,
            e.true_pixel.y,
            reported.x,
            reported.y,
            port,
            e.is_error.expect("detected") as u8,
        );
    }
    out
}

/// Where [`write_report`] puts its files.
#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub json: PathBuf,
    pub csv: PathBuf,
}

impl ReportPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            json: dir.join("report.json"),
            csv: dir.join("events.csv"),
        }
    }
}

pub fn write_report(
    doc: &ImagingReport,
    run: &RunRecord,
    paths: &ReportPaths,
) -> Result<(), AnalysisError> {
    fs::write(&paths.json, doc.to_json()?)?;
    fs::write(&paths.csv, events_csv(run))?;
    Ok(())
}

/// Writes the report, event log, composite image and the four port images
/// into `dir`, creating it if needed.
pub fn write_bundle(
    dir: impl AsRef<Path>,
    doc: &ImagingReport,
    run: &RunRecord,
    images: &ImageSet,
) -> Result<(), AnalysisError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_report(doc, run, &ReportPaths::in_dir(dir))?;
    write_image_pgm(&images.composite, dir.join("composite.pgm"))?;
    for p in ProtocolState::ALL {
        let name = format!("port_{}.pgm", p.label().to_ascii_lowercase());
        write_image_pgm(images.ports.port(p), dir.join(name))?;
    }
    Ok(())
}
