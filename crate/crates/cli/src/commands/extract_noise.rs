use std::path::Path;

use farfield_core::augment::{extract_noise_chunks, noise_chunk_file_name, SegmentAnnotation, NOISE_CHUNK_SECONDS};
use farfield_core::wav::{read_wav, write_wav, WavEncoding};
use farfield_core::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, read_json, resolve, with_workers};
use crate::config::PipelineConfig;
use crate::manifest::{output_file, Manifest, Record};

/// One session recording of the input list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingEntry {
    pub session_id: String,
    pub path: String,
}

/// Cuts the non-speech parts of every listed recording into 20 s noise
/// files. `channels` limits which channels are used; empty means all.
pub fn run(
    config: &PipelineConfig,
    recordings: &Path,
    annotations: &Path,
    channels: &[usize],
    out_dir: &Path,
) -> Result<Manifest> {
    let list: Vec<RecordingEntry> = read_json(recordings)?;
    let annotations: Vec<SegmentAnnotation> = read_json(annotations)?;
    for a in &annotations {
        a.validate()?;
    }
    create_dir(out_dir)?;
    let records = with_workers(config.workers, || {
        list.par_iter()
            .map(|r| one(recordings, r, &annotations, channels, out_dir))
            .collect::<Result<Vec<_>>>()
    })??;
    let total: usize = records.iter().map(|r| r.outputs.len()).sum();
    log::info!("wrote {total} noise chunks to {}", out_dir.display());
    Ok(Manifest::new("extract-noise", config.echo(), records))
}

fn one(
    list: &Path,
    entry: &RecordingEntry,
    annotations: &[SegmentAnnotation],
    channels: &[usize],
    out_dir: &Path,
) -> Result<Record> {
    if entry.session_id.is_empty() || entry.session_id.contains(['/', '\\']) {
        return Err(Error::Data(format!("session id '{}' is not a plain file stem", entry.session_id)));
    }
    let audio = read_wav(resolve(list, &entry.path))?;
    let selected: Vec<usize> = if channels.is_empty() {
        (0..audio.num_channels()).collect()
    } else {
        channels.to_vec()
    };
    let mut outputs = Vec::new();
    let mut offsets = Vec::new();
    for &c in &selected {
        for chunk in extract_noise_chunks(&audio, c, &entry.session_id, annotations, NOISE_CHUNK_SECONDS)? {
            let name = noise_chunk_file_name(&chunk.provenance);
            write_wav(&chunk.audio, out_dir.join(&name), WavEncoding::Float32)?;
            outputs.push(output_file(out_dir, &name)?);
            offsets.push(chunk.provenance);
        }
    }
    Ok(Record {
        input: Some(entry.path.clone()),
        outputs,
        stream_id: None,
        params: serde_json::json!({ "session_id": entry.session_id, "channels": selected, "chunks": offsets }),
    })
}
