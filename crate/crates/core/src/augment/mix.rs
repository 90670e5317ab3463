use crate::audio::AudioBuffer;
use crate::dsp::fft_convolve;
use crate::error::{Error, Result};
use crate::rir::Rir;

/// Full linear convolution of every channel with `rir`.
pub fn convolve(signal: &AudioBuffer, rir: &Rir) -> Result<AudioBuffer> {
    if signal.sample_rate() != rir.sample_rate {
        return Err(Error::RateMismatch(signal.sample_rate(), rir.sample_rate));
    }
    let channels = signal.channels().iter().map(|x| fft_convolve(x, &rir.taps)).collect();
    AudioBuffer::new(signal.sample_rate(), channels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrMix {
    pub mixture: AudioBuffer,
    /// Gain applied to the summed noise.
    pub noise_gain: f64,
    pub speech_power: f64,
    /// Power of the summed noise before scaling.
    pub noise_power: f64,
}

/// Adds the summed noises to `speech` so the channel-0 power ratio equals
/// `snr_db`. Powers are measured over the whole duration.
pub fn mix_at_snr(speech: &AudioBuffer, noises: &[AudioBuffer], snr_db: f64) -> Result<SnrMix> {
    if !snr_db.is_finite() {
        return Err(Error::Config(format!("snr {snr_db} dB is not finite")));
    }
    if noises.is_empty() {
        return Err(Error::DegenerateNoise);
    }
    let (rate, chans, frames) = (speech.sample_rate(), speech.num_channels(), speech.num_frames());
    let mut sum = vec![vec![0.0; frames]; chans];
    for n in noises {
        if n.sample_rate() != rate {
            return Err(Error::RateMismatch(rate, n.sample_rate()));
        }
        if n.num_channels() != chans || n.num_frames() != frames {
            return Err(Error::Shape(format!(
                "noise is {}x{}, speech is {chans}x{frames}",
                n.num_channels(),
                n.num_frames()
            )));
        }
        for (acc, ch) in sum.iter_mut().zip(n.channels()) {
            for (a, s) in acc.iter_mut().zip(ch) {
                *a += s;
            }
        }
    }
    let speech_power = speech.mean_power(0);
    if !(speech_power > 0.0) {
        return Err(Error::DegenerateSignal("speech has zero power".into()));
    }
    let noise_power = crate::audio::mean_square(&sum[0]);
    if !(noise_power > 0.0) {
        return Err(Error::DegenerateNoise);
    }
    let noise_gain = (speech_power / (noise_power * 10f64.powf(snr_db / 10.0))).sqrt();
    let channels = speech
        .channels()
        .iter()
        .zip(&sum)
        .map(|(s, n)| s.iter().zip(n).map(|(s, n)| s + noise_gain * n).collect())
        .collect();
    Ok(SnrMix {
        mixture: AudioBuffer::new(rate, channels)?,
        noise_gain,
        speech_power,
        noise_power,
    })
}

/// Rescales `mixed` so its RMS over all samples equals that of `reference`.
pub fn normalize_intensity(mixed: &AudioBuffer, reference: &AudioBuffer) -> Result<AudioBuffer> {
    let rms = mixed.rms();
    if !(rms > 0.0) {
        return Err(Error::DegenerateSignal("cannot normalize a silent signal".into()));
    }
    let target = reference.rms();
    if target == rms {
        return Ok(mixed.clone());
    }
    mixed.scaled(target / rms)
}
