//! Pipeline configuration file.

use std::fs;
use std::path::Path;

use farfield_core::augment::SamplerProfile;
use farfield_core::beamform::BeamformConfig;
use farfield_core::reliability::ReliabilityRule;
use farfield_core::rir::RirConfig;
use farfield_core::wav::WavEncoding;
use farfield_core::wpe::WpeConfig;
use farfield_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Everything a run depends on besides its input and output paths. Every
/// field has a default, and the resolved values are written into each
/// manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub master_seed: Option<u64>,
    /// Rate of generated RIRs.
    pub sample_rate: u32,
    pub profile: SamplerProfile,
    pub rir: RirConfig,
    pub augment: AugmentOptions,
    pub wpe: WpeConfig,
    pub beamform: BeamformConfig,
    pub reliability: ReliabilityRule,
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            master_seed: None,
            sample_rate: 16000,
            profile: SamplerProfile::chime5(),
            rir: RirConfig::default(),
            augment: AugmentOptions::default(),
            wpe: WpeConfig::default(),
            beamform: BeamformConfig::default(),
            reliability: ReliabilityRule::default(),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentOptions {
    pub output_encoding: WavEncoding,
    /// Sample one scenario per session instead of one per utterance.
    pub reuse_scenario_per_session: bool,
    /// Add copies at the standard speed factors.
    pub speed_perturb: bool,
    /// Scale each output by a random factor from the volume range.
    pub volume_perturb: bool,
    /// Keep a seeded random subset of this many input utterances.
    pub subset: Option<usize>,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions {
            output_encoding: WavEncoding::Pcm16,
            reuse_scenario_per_session: false,
            speed_perturb: false,
            volume_perturb: false,
            subset: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let config = match path {
            None => PipelineConfig::default(),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.profile.validate()?;
        self.rir.validate()?;
        self.wpe.validate()?;
        self.beamform.validate()?;
        self.reliability.validate()
    }

    pub fn seed(&self) -> Result<u64> {
        self.master_seed
            .ok_or_else(|| Error::Config("a master seed is required (--seed or master_seed)".into()))
    }

    /// The configuration as recorded in manifests. The worker count is left
    /// out because it never changes results.
    pub fn echo(&self) -> serde_json::Value {
        let mut c = self.clone();
        c.workers = None;
        serde_json::to_value(c).expect("config serializes")
    }
}
