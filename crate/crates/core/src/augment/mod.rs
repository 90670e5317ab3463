//! Reverberant, noisy training-data simulation.
//!
//! A [`RoomScenario`] is sampled per utterance from a [`SamplerProfile`].
//! Clean speech is convolved with the speaker-to-microphone RIR, 0 to 3
//! point noise sources built from 20 s non-speech chunks are convolved with
//! their own RIRs, the noise is scaled to the scenario SNR and the mixture
//! is brought back to the loudness of the clean recording.

mod mix;
mod noise;
mod perturb;
mod pipeline;
mod scenario;

pub use mix::{convolve, mix_at_snr, normalize_intensity, SnrMix};
pub use noise::{
    assemble_noise, draw_noise_chunks, extract_noise_chunks, noise_chunk_file_name, parse_noise_chunk_file_name,
    NoiseChunk, NoiseProvenance, SegmentAnnotation, SegmentKind, NOISE_CHUNK_SECONDS,
};
pub use perturb::{sample_volume_factor, speed_perturb, volume_perturb, SPEED_FACTORS, VOLUME_RANGE};
pub use pipeline::{augment_utterance, AugmentedUtterance, MicOutput};
pub use scenario::{
    sample_scenario, MicPlacement, NoiseSource, ProfileName, RoomDistribution, RoomScenario, SamplerProfile,
    SeedIdentity, T60Distribution, MAX_NOISE_SOURCES,
};
