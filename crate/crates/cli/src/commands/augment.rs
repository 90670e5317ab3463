use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use farfield_core::augment::{
    augment_utterance, parse_noise_chunk_file_name, sample_scenario, sample_volume_factor, speed_perturb, volume_perturb,
    NoiseChunk, RoomScenario, SPEED_FACTORS,
};
use farfield_core::wav::{read_wav, write_wav};
use farfield_core::{Error, Result, SeededRng};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, read_json, resolve, with_workers};
use crate::config::PipelineConfig;
use crate::manifest::{output_file, Manifest, Record};

/// One clean utterance of the input list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceEntry {
    pub id: String,
    /// Relative to the list file unless absolute.
    pub path: String,
    #[serde(default)]
    pub session: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicAudit {
    pub output: String,
    /// Channel-0 power of the reverberant speech component.
    pub speech_power: f64,
    /// Channel-0 power of the scaled noise component, zero without noise.
    pub noise_power: f64,
    pub noise_gain: f64,
    pub normalization_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub utterance_id: String,
    pub variant_id: String,
    pub speed_factor: f64,
    pub volume_factor: Option<f64>,
    pub scenario_stream: String,
    pub scenario: RoomScenario,
    /// Noise pool file names per noise source, in playback order.
    pub noise_chunks: Vec<Vec<String>>,
    pub mics: Vec<MicAudit>,
}

pub struct NoisePool {
    pub chunks: Vec<NoiseChunk>,
    pub names: Vec<String>,
}

/// Loads every `{session}_{channel}_{offset}.wav` in `dir`, sorted by name.
pub fn load_noise_pool(dir: &Path) -> Result<NoisePool> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".wav") {
            names.push(name);
        }
    }
    names.sort();
    let mut chunks = Vec::with_capacity(names.len());
    for name in &names {
        let provenance = parse_noise_chunk_file_name(name)
            .ok_or_else(|| Error::Data(format!("noise file {name} is not named session_channel_offset.wav")))?;
        let audio = read_wav(dir.join(name))?.select_channel(0)?;
        chunks.push(NoiseChunk { audio, provenance });
    }
    Ok(NoisePool { chunks, names })
}

fn variant_id(id: &str, factor: f64) -> String {
    if factor == 1.0 {
        id.to_string()
    } else {
        format!("sp{factor}-{id}")
    }
}

pub fn read_utterances(list: &Path) -> Result<Vec<UtteranceEntry>> {
    let entries: Vec<UtteranceEntry> = read_json(list)?;
    let mut seen = BTreeSet::new();
    for e in &entries {
        if e.id.is_empty() || e.id.contains(['/', '\\']) {
            return Err(Error::Data(format!("utterance id '{}' is not a plain file stem", e.id)));
        }
        if !seen.insert(&e.id) {
            return Err(Error::Data(format!("utterance id '{}' appears twice", e.id)));
        }
    }
    Ok(entries)
}

/// Simulates every utterance of `list` and writes one file per microphone.
pub fn run(config: &PipelineConfig, list: &Path, noise_dir: Option<&Path>, out_dir: &Path) -> Result<Manifest> {
    let seed = config.seed()?;
    let mut utterances = read_utterances(list)?;
    if let Some(k) = config.augment.subset {
        if k < utterances.len() {
            let mut rng = SeededRng::new(seed, "augment/subset");
            let mut keep = sample(&mut rng, utterances.len(), k).into_vec();
            keep.sort_unstable();
            utterances = keep.into_iter().map(|i| utterances[i].clone()).collect();
        }
    }
    let pool = match noise_dir {
        Some(d) => load_noise_pool(d)?,
        None => NoisePool {
            chunks: Vec::new(),
            names: Vec::new(),
        },
    };
    create_dir(out_dir)?;

    let factors: Vec<f64> = if config.augment.speed_perturb {
        SPEED_FACTORS.to_vec()
    } else {
        vec![1.0]
    };
    let jobs: Vec<(&UtteranceEntry, f64)> = utterances
        .iter()
        .flat_map(|u| factors.iter().map(move |&f| (u, f)))
        .collect();
    let records = with_workers(config.workers, || {
        jobs.par_iter()
            .map(|&(u, f)| one(config, seed, list, u, f, &pool, out_dir))
            .collect::<Result<Vec<_>>>()
    })??;
    log::info!("augmented {} utterance variants into {}", records.len(), out_dir.display());
    Ok(Manifest::new("augment", config.echo(), records))
}

fn one(
    config: &PipelineConfig,
    seed: u64,
    list: &Path,
    entry: &UtteranceEntry,
    factor: f64,
    pool: &NoisePool,
    out_dir: &Path,
) -> Result<Record> {
    let path: PathBuf = resolve(list, &entry.path);
    let clean = read_wav(&path)?;
    if clean.num_channels() != 1 {
        return Err(Error::Shape(format!("{} has {} channels, expected mono", path.display(), clean.num_channels())));
    }
    let clean = speed_perturb(&clean, factor)?;
    let variant = variant_id(&entry.id, factor);
    let stream = format!("augment/{variant}");
    let rng = SeededRng::new(seed, stream.clone());

    let mut scenario_rng = match (&entry.session, config.augment.reuse_scenario_per_session) {
        (Some(s), true) => SeededRng::new(seed, format!("augment/session/{s}")),
        _ => rng.derive("scenario"),
    };
    let scenario_stream = scenario_rng.stream_id().to_string();
    let mut scenario = sample_scenario(&config.profile, &mut scenario_rng)?;
    let result = augment_utterance(&clean, &scenario, &pool.chunks, &config.rir, &rng.derive("noise"))?;
    scenario.noise_sources = result.noise_sources.clone();

    let volume = config
        .augment
        .volume_perturb
        .then(|| sample_volume_factor(&mut rng.derive("volume")));
    let mut outputs = Vec::new();
    let mut mics = Vec::new();
    for (j, mic) in result.mics.iter().enumerate() {
        let name = format!("{variant}-m{j}.wav");
        let audio = match volume {
            Some(v) => volume_perturb(&mic.audio, v)?,
            None => mic.audio.clone(),
        };
        write_wav(&audio, out_dir.join(&name), config.augment.output_encoding)?;
        outputs.push(output_file(out_dir, &name)?);
        mics.push(MicAudit {
            output: name,
            speech_power: mic.speech.mean_power(0),
            noise_power: mic.noise.as_ref().map_or(0.0, |n| n.mean_power(0)),
            noise_gain: mic.noise_gain,
            normalization_gain: mic.normalization_gain,
        });
    }
    let noise_chunks = scenario
        .noise_sources
        .iter()
        .map(|s| s.chunk_ids.iter().map(|&i| pool.names[i].clone()).collect())
        .collect();
    let params = AugmentParams {
        utterance_id: entry.id.clone(),
        variant_id: variant,
        speed_factor: factor,
        volume_factor: volume,
        scenario_stream,
        scenario,
        noise_chunks,
        mics,
    };
    Ok(Record {
        input: Some(entry.path.clone()),
        outputs,
        stream_id: Some(stream),
        params: serde_json::to_value(params).expect("params serialize"),
    })
}
