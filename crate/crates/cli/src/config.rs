use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qsi_core::polar::MeasurementBasis;
use qsi_core::protocol::{ChannelModel, DetectorConfig, ResendPolicy, SourceConfig};
use qsi_core::ranging::{ChshConfig, PairChannel};
use qsi_core::scene::{resolve_mask, ObjectMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Image,
    AttackCurve,
    Chsh,
    Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSettings {
    Honest,
    InterceptResend {
        eavesdrop_theta: f64,
        spoof: String,
        resend: ResendPolicy,
    },
    PhotonNumberSplitting {
        spoof: String,
        #[serde(default = "breidbart")]
        fallback_theta: f64,
    },
}

fn breidbart() -> f64 {
    MeasurementBasis::BREIDBART.theta()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackCurveSettings {
    pub thetas: Vec<f64>,
    pub spoof: String,
}

impl Default for AttackCurveSettings {
    fn default() -> Self {
        Self {
            thetas: (0..36).map(|i| i as f64 * 2.5).collect(),
            spoof: "bird".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChshSettings {
    pub channel: PairChannel,
    pub range_m: f64,
    pub pulse_period_s: f64,
}

impl Default for ChshSettings {
    fn default() -> Self {
        let d = ChshConfig::default();
        Self {
            channel: d.channel,
            range_m: d.range_m,
            pulse_period_s: d.pulse_period_s,
        }
    }
}

/// One experiment bundle. `frames` is detected frames for `image`,
/// detections per angle for `attack-curve`, and pairs per basis setting for
/// `chsh`/`range`. Worker count and output directory are not echoed into
/// reports, so they cannot change output bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub seed: u64,
    pub frames: u64,
    #[serde(skip_serializing)]
    pub workers: usize,
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub scene: String,
    pub source: SourceConfig,
    pub detector: DetectorConfig,
    pub channel: ChannelSettings,
    pub confidence: f64,
    pub attack_curve: AttackCurveSettings,
    pub chsh: ChshSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: None,
            seed: 2013,
            frames: 10_000,
            workers: 1,
            out_dir: None,
            scene: "aircraft".into(),
            source: SourceConfig::default(),
            detector: DetectorConfig::default(),
            channel: ChannelSettings::Honest,
            confidence: qsi_core::analysis::DEFAULT_CONFIDENCE,
            attack_curve: AttackCurveSettings::default(),
            chsh: ChshSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn check_mode(&self, wanted: Mode) -> Result<()> {
        match self.mode {
            Some(m) if m != wanted => bail!("config is for mode {m:?}, not {wanted:?}"),
            _ => Ok(()),
        }
    }

    pub fn scene_mask(&self) -> Result<ObjectMask> {
        resolve_mask(&self.scene).with_context(|| format!("loading scene mask {:?}", self.scene))
    }

    pub fn channel_model(&self, scene: &ObjectMask) -> Result<ChannelModel> {
        let spoof =
            |name: &str| resolve_mask(name).with_context(|| format!("loading spoof mask {name:?}"));
        Ok(match &self.channel {
            ChannelSettings::Honest => ChannelModel::honest(scene.clone()),
            ChannelSettings::InterceptResend {
                eavesdrop_theta,
                spoof: name,
                resend,
            } => ChannelModel::intercept_resend(
                MeasurementBasis::new(*eavesdrop_theta)?,
                spoof(name)?,
                *resend,
            )?,
            ChannelSettings::PhotonNumberSplitting {
                spoof: name,
                fallback_theta,
            } => match ChannelModel::photon_number_splitting(scene.clone(), spoof(name)?)? {
                ChannelModel::PhotonNumberSplitting { mask, spoof, .. } => {
                    ChannelModel::PhotonNumberSplitting {
                        mask,
                        spoof,
                        fallback_basis: MeasurementBasis::new(*fallback_theta)?,
                    }
                }
                other => other,
            },
        })
    }

    pub fn chsh_config(&self) -> ChshConfig {
        ChshConfig {
            pairs_per_setting: self.frames,
            channel: self.chsh.channel,
            range_m: self.chsh.range_m,
            pulse_period_s: self.chsh.pulse_period_s,
        }
    }

    /// Effective configuration as echoed into reports, limited to the
    /// sections the mode reads.
    pub fn echo(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("config serializes");
        let unused: &[&str] = match self.mode {
            Some(Mode::Image) => &["attack_curve", "chsh"],
            Some(Mode::AttackCurve) => &["channel", "confidence", "chsh"],
            Some(Mode::Chsh | Mode::Range) => &[
                "scene",
                "source",
                "detector",
                "channel",
                "confidence",
                "attack_curve",
            ],
            None => &[],
        };
        if let Some(map) = value.as_object_mut() {
            for key in unused {
                map.remove(*key);
            }
        }
        value
    }
}
