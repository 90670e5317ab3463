use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Point3, Rir, RirConfig, RoomSpec};
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::wav::{write_wav, WavEncoding};

pub const GENERATOR_VERSION: &str = concat!("farfield-image-method/", env!("CARGO_PKG_VERSION"));

/// Sidecar record written next to every persisted RIR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirMetadata {
    pub generator: String,
    pub room: RoomSpec,
    pub source: Point3,
    pub mic: Point3,
    pub sample_rate: u32,
    pub reflection_coefficients: [f64; 6],
    pub t60: f64,
    pub config: RirConfig,
}

impl RirMetadata {
    pub fn describe(rir: &Rir, room: &RoomSpec, config: &RirConfig) -> Result<Self> {
        Ok(RirMetadata {
            generator: GENERATOR_VERSION.to_string(),
            room: *room,
            source: rir.source,
            mic: rir.mic,
            sample_rate: rir.sample_rate,
            reflection_coefficients: room.betas(config.t60_conversion)?,
            t60: room.nominal_t60()?,
            config: config.clone(),
        })
    }
}

/// Writes the taps as mono float32 WAV and the metadata as pretty JSON.
pub fn write_rir(rir: &Rir, metadata: &RirMetadata, wav_path: &Path, sidecar_path: &Path) -> Result<()> {
    let audio = AudioBuffer::mono(rir.sample_rate, rir.taps.clone())?;
    write_wav(&audio, wav_path, WavEncoding::Float32)?;
    let json = serde_json::to_string_pretty(metadata).map_err(|e| Error::Data(e.to_string()))?;
    fs::write(sidecar_path, json + "\n").map_err(|e| Error::io(sidecar_path, e))
}

pub fn read_rir_metadata(path: &Path) -> Result<RirMetadata> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}
