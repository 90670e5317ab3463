use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub const NOISE_CHUNK_SECONDS: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    #[default]
    Speech,
    Other,
}

/// One annotated interval of a session transcript, times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentAnnotation {
    pub session_id: String,
    pub start: f64,
    pub end: f64,
    pub speaker: String,
    #[serde(default)]
    pub kind: SegmentKind,
}

impl SegmentAnnotation {
    pub fn validate(&self) -> Result<()> {
        if !(self.start >= 0.0 && self.start < self.end && self.end.is_finite()) {
            return Err(Error::Data(format!(
                "annotation {}:{} has invalid interval [{}, {})",
                self.session_id, self.speaker, self.start, self.end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProvenance {
    pub session_id: String,
    pub channel: usize,
    /// Chunk start within the source recording, seconds.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseChunk {
    pub audio: AudioBuffer,
    pub provenance: NoiseProvenance,
}

fn chunk_frames(sample_rate: u32, chunk_seconds: f64) -> Result<usize> {
    let frames = (chunk_seconds * sample_rate as f64).round();
    if !(frames >= 1.0) {
        return Err(Error::Config(format!("chunk length {chunk_seconds} s is too short")));
    }
    Ok(frames as usize)
}

/// Splits the non-speech parts of one recording channel into fixed-length
/// chunks.
///
/// Speech intervals are widened outward to whole samples before taking the
/// complement, so no chunk ever touches annotated speech. Each maximal gap
/// yields consecutive chunks from its start; a remainder shorter than one
/// chunk is dropped. Only speech annotations of `session_id` are used.
pub fn extract_noise_chunks(
    recording: &AudioBuffer,
    channel: usize,
    session_id: &str,
    annotations: &[SegmentAnnotation],
    chunk_seconds: f64,
) -> Result<Vec<NoiseChunk>> {
    let samples = recording.select_channel(channel)?.into_channels().remove(0);
    let fs = recording.sample_rate() as f64;
    let chunk = chunk_frames(recording.sample_rate(), chunk_seconds)?;
    let total = samples.len();

    let mut speech: Vec<(usize, usize)> = Vec::new();
    for a in annotations
        .iter()
        .filter(|a| a.kind == SegmentKind::Speech && a.session_id == session_id)
    {
        a.validate()?;
        let lo = ((a.start * fs).floor() as usize).min(total);
        let hi = ((a.end * fs).ceil() as usize).min(total);
        if lo < hi {
            speech.push((lo, hi));
        }
    }
    speech.sort_unstable();

    let mut gaps = Vec::new();
    let mut cursor = 0;
    for (lo, hi) in speech {
        if lo > cursor {
            gaps.push((cursor, lo));
        }
        cursor = cursor.max(hi);
    }
    if cursor < total {
        gaps.push((cursor, total));
    }

    let mut out = Vec::new();
    for (lo, hi) in gaps {
        let mut start = lo;
        while start + chunk <= hi {
            out.push(NoiseChunk {
                audio: AudioBuffer::mono(recording.sample_rate(), samples[start..start + chunk].to_vec())?,
                provenance: NoiseProvenance {
                    session_id: session_id.to_string(),
                    channel,
                    offset: start as f64 / fs,
                },
            });
            start += chunk;
        }
    }
    Ok(out)
}

/// Pool indices drawn uniformly with replacement until their total length
/// covers `target_frames`.
pub fn draw_noise_chunks(pool: &[NoiseChunk], target_frames: usize, rng: &mut SeededRng) -> Result<Vec<usize>> {
    if pool.is_empty() {
        return Err(Error::NoNoiseAvailable);
    }
    let mut ids = Vec::new();
    let mut covered = 0;
    while covered < target_frames {
        let id = rng.random_range(0..pool.len());
        let len = pool[id].audio.num_frames();
        if len == 0 {
            return Err(Error::Data(format!("noise chunk {id} is empty")));
        }
        covered += len;
        ids.push(id);
    }
    Ok(ids)
}

/// Concatenates randomly drawn chunks and truncates to exactly `target_frames`.
pub fn assemble_noise(pool: &[NoiseChunk], target_frames: usize, rng: &mut SeededRng) -> Result<(AudioBuffer, Vec<usize>)> {
    let ids = draw_noise_chunks(pool, target_frames, rng)?;
    let rate = pool[0].audio.sample_rate();
    if let Some(c) = pool.iter().find(|c| c.audio.sample_rate() != rate) {
        return Err(Error::RateMismatch(rate, c.audio.sample_rate()));
    }
    let mut samples = Vec::with_capacity(target_frames);
    for &id in &ids {
        samples.extend_from_slice(pool[id].audio.channel(0));
    }
    samples.truncate(target_frames);
    Ok((AudioBuffer::mono(rate, samples)?, ids))
}

/// `{session}_{channel}_{offset}.wav`, offset in milliseconds.
pub fn noise_chunk_file_name(p: &NoiseProvenance) -> String {
    format!("{}_{}_{:09}.wav", p.session_id, p.channel, (p.offset * 1000.0).round() as u64)
}

pub fn parse_noise_chunk_file_name(name: &str) -> Option<NoiseProvenance> {
    let stem = name.strip_suffix(".wav")?;
    let mut parts = stem.rsplitn(3, '_');
    let offset_ms: u64 = parts.next()?.parse().ok()?;
    let channel: usize = parts.next()?.parse().ok()?;
    let session_id = parts.next()?.to_string();
    if session_id.is_empty() {
        return None;
    }
    Some(NoiseProvenance {
        session_id,
        channel,
        offset: offset_ms as f64 / 1000.0,
    })
}
