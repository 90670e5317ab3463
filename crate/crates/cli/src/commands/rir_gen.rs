use std::path::Path;

use farfield_core::augment::{sample_scenario, RoomScenario};
use farfield_core::rir::{generate_rir, RirConfig, GENERATOR_VERSION};
use farfield_core::wav::{write_wav, WavEncoding};
use farfield_core::{AudioBuffer, Result, SeededRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, with_workers, write_json};
use crate::config::PipelineConfig;
use crate::manifest::{output_file, Manifest, Record};

/// JSON written next to each multichannel RIR file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirSidecar {
    pub generator: String,
    pub sample_rate: u32,
    pub scenario: RoomScenario,
    pub reflection_coefficients: [f64; 6],
    pub rir: RirConfig,
    /// Taps of each microphone's response before zero padding.
    pub lengths: Vec<usize>,
}

/// Samples `count` scenarios and writes one RIR per microphone of each,
/// stacked as channels of `rir-NNNNNN.wav`.
pub fn run(config: &PipelineConfig, count: usize, out_dir: &Path) -> Result<Manifest> {
    let seed = config.seed()?;
    create_dir(out_dir)?;
    let records = with_workers(config.workers, || {
        (0..count)
            .into_par_iter()
            .map(|i| one(config, seed, i, out_dir))
            .collect::<Result<Vec<_>>>()
    })??;
    log::info!("wrote {count} rir sets to {}", out_dir.display());
    Ok(Manifest::new("rir-gen", config.echo(), records))
}

fn one(config: &PipelineConfig, seed: u64, index: usize, out_dir: &Path) -> Result<Record> {
    let stream = format!("rir-{index:06}");
    let mut rng = SeededRng::new(seed, stream.clone());
    let scenario = sample_scenario(&config.profile, &mut rng)?;
    let rirs = scenario
        .mic_positions
        .iter()
        .map(|m| generate_rir(&scenario.room, &scenario.speaker_position, m, config.sample_rate, &config.rir))
        .collect::<Result<Vec<_>>>()?;
    let lengths: Vec<usize> = rirs.iter().map(|r| r.len()).collect();
    let longest = lengths.iter().copied().max().unwrap_or(0);
    let channels = rirs
        .into_iter()
        .map(|r| {
            let mut t = r.taps;
            t.resize(longest, 0.0);
            t
        })
        .collect();
    let audio = AudioBuffer::new(config.sample_rate, channels)?;

    let wav = format!("{stream}.wav");
    let json = format!("{stream}.json");
    write_wav(&audio, out_dir.join(&wav), WavEncoding::Float32)?;
    let sidecar = RirSidecar {
        generator: GENERATOR_VERSION.to_string(),
        sample_rate: config.sample_rate,
        reflection_coefficients: scenario.room.betas(config.rir.t60_conversion)?,
        scenario,
        rir: config.rir.clone(),
        lengths,
    };
    write_json(&out_dir.join(&json), &sidecar)?;
    Ok(Record {
        input: None,
        outputs: vec![output_file(out_dir, &wav)?, output_file(out_dir, &json)?],
        stream_id: Some(stream),
        params: serde_json::Value::Null,
    })
}
