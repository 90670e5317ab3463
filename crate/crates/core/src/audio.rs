//! Multichannel sample container shared by every processing stage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channel-major multichannel audio at 64-bit precision.
///
/// Every sample is finite, all channels share one frame count and the
/// sample rate is positive. Buffers are immutable once built; processing
/// functions return new buffers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioBuffer {
    sample_rate: u32,
    frames: usize,
    channels: Vec<Vec<f64>>,
}

impl AudioBuffer {
    pub fn new(sample_rate: u32, channels: Vec<Vec<f64>>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        if channels.is_empty() {
            return Err(Error::Shape("audio needs at least one channel".into()));
        }
        let frames = channels[0].len();
        if let Some((i, ch)) = channels.iter().enumerate().find(|(_, c)| c.len() != frames) {
            return Err(Error::Shape(format!(
                "channel {i} has {} frames, channel 0 has {frames}",
                ch.len()
            )));
        }
        for (c, ch) in channels.iter().enumerate() {
            if let Some(i) = ch.iter().position(|s| !s.is_finite()) {
                return Err(Error::Data(format!("non-finite sample at channel {c}, frame {i}")));
            }
        }
        Ok(AudioBuffer {
            sample_rate,
            frames,
            channels,
        })
    }

    pub fn mono(sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        Self::new(sample_rate, vec![samples])
    }

    pub fn zeros(sample_rate: u32, channels: usize, frames: usize) -> Result<Self> {
        Self::new(sample_rate, vec![vec![0.0; frames]; channels.max(1)])
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn num_frames(&self) -> usize {
        self.frames
    }

    pub fn duration(&self) -> f64 {
        self.frames as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    /// Copy of a single channel as a mono buffer.
    pub fn select_channel(&self, index: usize) -> Result<AudioBuffer> {
        let ch = self.channels.get(index).ok_or_else(|| {
            Error::Config(format!(
                "channel {index} requested from a {}-channel buffer",
                self.channels.len()
            ))
        })?;
        AudioBuffer::mono(self.sample_rate, ch.clone())
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<AudioBuffer> {
        let channels = self
            .channels
            .iter()
            .map(|c| c.iter().map(|s| s * gain).collect())
            .collect();
        AudioBuffer::new(self.sample_rate, channels)
    }

    /// Mean square over all frames of one channel; zero for empty audio.
    pub fn mean_power(&self, channel: usize) -> f64 {
        mean_square(&self.channels[channel])
    }

    /// Root mean square over every sample of every channel.
    pub fn rms(&self) -> f64 {
        let n = self.frames * self.channels.len();
        if n == 0 {
            return 0.0;
        }
        let sum: f64 = self.channels.iter().flatten().map(|s| s * s).sum();
        (sum / n as f64).sqrt()
    }
}

pub(crate) fn mean_square(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().map(|s| s * s).sum::<f64>() / x.len() as f64
    }
}
