use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::rir::{generate_rir, RirConfig};
use crate::rng::SeededRng;

use super::mix::{convolve, mix_at_snr, normalize_intensity};
use super::noise::{assemble_noise, NoiseChunk};
use super::scenario::{NoiseSource, RoomScenario};

/// One simulated microphone signal plus the components it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct MicOutput {
    /// Final waveform, same length and RMS as the clean input.
    pub audio: AudioBuffer,
    /// Reverberant speech before normalization.
    pub speech: AudioBuffer,
    /// Scaled reverberant noise before normalization, absent without noise sources.
    pub noise: Option<AudioBuffer>,
    pub noise_gain: f64,
    pub normalization_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedUtterance {
    pub mics: Vec<MicOutput>,
    /// The scenario's noise sources with the chunk indices actually used.
    pub noise_sources: Vec<NoiseSource>,
}

/// Runs the full simulation for one mono utterance.
///
/// Noise sources with an empty `chunk_ids` list get chunks drawn from
/// `noise_pool` on the stream `rng.derive("noise{i}")`; sources that already
/// list chunk ids reuse them, which replays a recorded scenario exactly.
/// Reverberant speech and noise are cut to the clean length so outputs stay
/// frame-aligned with the clean transcript.
pub fn augment_utterance(
    clean: &AudioBuffer,
    scenario: &RoomScenario,
    noise_pool: &[NoiseChunk],
    rir_config: &RirConfig,
    rng: &SeededRng,
) -> Result<AugmentedUtterance> {
    scenario.validate()?;
    if clean.num_channels() != 1 {
        return Err(Error::Shape(format!("clean speech has {} channels, expected 1", clean.num_channels())));
    }
    let fs = clean.sample_rate();
    let frames = clean.num_frames();

    let mut sources = Vec::with_capacity(scenario.noise_sources.len());
    let mut noise_audio = Vec::with_capacity(scenario.noise_sources.len());
    for (i, src) in scenario.noise_sources.iter().enumerate() {
        let (audio, ids) = if src.chunk_ids.is_empty() {
            assemble_noise(noise_pool, frames, &mut rng.derive(&format!("noise{i}")))?
        } else {
            (replay_noise(noise_pool, &src.chunk_ids, frames)?, src.chunk_ids.clone())
        };
        if audio.sample_rate() != fs {
            return Err(Error::RateMismatch(fs, audio.sample_rate()));
        }
        noise_audio.push(audio);
        sources.push(NoiseSource {
            position: src.position,
            chunk_ids: ids,
        });
    }

    let mut mics = Vec::with_capacity(scenario.mic_positions.len());
    for mic in &scenario.mic_positions {
        let h = generate_rir(&scenario.room, &scenario.speaker_position, mic, fs, rir_config)?;
        let speech = truncate(convolve(clean, &h)?, frames)?;
        let (mixture, noise, noise_gain) = if sources.is_empty() {
            (speech.clone(), None, 0.0)
        } else {
            let mut reverberant = Vec::with_capacity(sources.len());
            for (src, audio) in sources.iter().zip(&noise_audio) {
                let hn = generate_rir(&scenario.room, &src.position, mic, fs, rir_config)?;
                reverberant.push(truncate(convolve(audio, &hn)?, frames)?);
            }
            let mix = mix_at_snr(&speech, &reverberant, scenario.snr_db)?;
            let noise = AudioBuffer::mono(
                fs,
                mix.mixture.channel(0).iter().zip(speech.channel(0)).map(|(m, s)| m - s).collect(),
            )?;
            (mix.mixture, Some(noise), mix.noise_gain)
        };
        let audio = normalize_intensity(&mixture, clean)?;
        let normalization_gain = clean.rms() / mixture.rms();
        mics.push(MicOutput {
            audio,
            speech,
            noise,
            noise_gain,
            normalization_gain,
        });
    }
    Ok(AugmentedUtterance {
        mics,
        noise_sources: sources,
    })
}

fn replay_noise(pool: &[NoiseChunk], ids: &[usize], frames: usize) -> Result<AudioBuffer> {
    let mut samples = Vec::with_capacity(frames);
    let mut rate = None;
    for &id in ids {
        let chunk = pool
            .get(id)
            .ok_or_else(|| Error::Data(format!("noise chunk {id} not in a pool of {}", pool.len())))?;
        rate.get_or_insert(chunk.audio.sample_rate());
        samples.extend_from_slice(chunk.audio.channel(0));
    }
    if samples.len() < frames {
        return Err(Error::Data(format!("recorded chunks give {} frames, need {frames}", samples.len())));
    }
    samples.truncate(frames);
    AudioBuffer::mono(rate.unwrap_or(1), samples)
}

fn truncate(buffer: AudioBuffer, frames: usize) -> Result<AudioBuffer> {
    let rate = buffer.sample_rate();
    let channels = buffer
        .into_channels()
        .into_iter()
        .map(|mut c| {
            c.truncate(frames);
            c
        })
        .collect();
    AudioBuffer::new(rate, channels)
}
