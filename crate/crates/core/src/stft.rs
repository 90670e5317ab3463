//! Short-time Fourier analysis and weighted overlap-add synthesis.

use std::f64::consts::PI;

use ndarray::Array3;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    HannPeriodic,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::HannPeriodic => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; len],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    pub window_length: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub window: Window,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            window_length: 512,
            hop: 128,
            fft_size: 512,
            window: Window::HannPeriodic,
        }
    }
}

impl StftConfig {
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Leading zeros inserted before the first sample so that every input
    /// sample is covered by the same number of frames.
    pub fn front_padding(&self) -> usize {
        self.window_length - self.hop
    }

    pub fn num_frames(&self, samples: usize) -> usize {
        if samples == 0 {
            0
        } else {
            (samples + self.front_padding() - 1) / self.hop + 1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_length == 0 || self.hop == 0 {
            return Err(Error::Config("STFT window and hop must be positive".into()));
        }
        if self.window_length > self.fft_size {
            return Err(Error::Config(format!(
                "window length {} exceeds FFT size {}",
                self.window_length, self.fft_size
            )));
        }
        if self.hop > self.window_length {
            return Err(Error::Config("STFT hop exceeds window length".into()));
        }
        // constant overlap-add: shifted windows must sum to a constant
        let w = self.window.coefficients(self.window_length);
        let mut sums = vec![0.0; self.hop];
        for (n, v) in w.iter().enumerate() {
            sums[n % self.hop] += v;
        }
        let mean = sums.iter().sum::<f64>() / sums.len() as f64;
        if sums.iter().any(|s| (s - mean).abs() > 1e-9 * mean.max(1.0)) {
            return Err(Error::Config(format!(
                "{:?} window of length {} is not COLA at hop {}",
                self.window, self.window_length, self.hop
            )));
        }
        Ok(())
    }
}

/// Complex one-sided spectrogram laid out as `(channel, frame, bin)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Array3<Complex64>,
}

impl Spectrogram {
    pub fn new(values: Array3<Complex64>) -> Self {
        Spectrogram { values }
    }

    pub fn channels(&self) -> usize {
        self.values.dim().0
    }

    pub fn frames(&self) -> usize {
        self.values.dim().1
    }

    pub fn bins(&self) -> usize {
        self.values.dim().2
    }
}

pub fn stft(buffer: &AudioBuffer, config: &StftConfig) -> Result<Spectrogram> {
    config.validate()?;
    let frames = config.num_frames(buffer.num_frames());
    let bins = config.bins();
    let pad = config.front_padding() as isize;
    let window = config.window.coefficients(config.window_length);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(config.fft_size);
    let mut values = Array3::zeros((buffer.num_channels(), frames, bins));
    let mut frame_buf = vec![Complex64::new(0.0, 0.0); config.fft_size];

    for (c, samples) in buffer.channels().iter().enumerate() {
        for t in 0..frames {
            frame_buf.fill(Complex64::new(0.0, 0.0));
            let origin = (t * config.hop) as isize - pad;
            for (j, w) in window.iter().enumerate() {
                let idx = origin + j as isize;
                if idx >= 0 && (idx as usize) < samples.len() {
                    frame_buf[j] = Complex64::new(samples[idx as usize] * w, 0.0);
                }
            }
            fft.process(&mut frame_buf);
            for k in 0..bins {
                values[[c, t, k]] = frame_buf[k];
            }
        }
    }
    Ok(Spectrogram { values })
}

/// Inverse of [`stft`]: weighted overlap-add normalised by the summed squared
/// synthesis window, truncated or zero-padded to `length` frames.
pub fn istft(spec: &Spectrogram, config: &StftConfig, length: usize, sample_rate: u32) -> Result<AudioBuffer> {
    config.validate()?;
    if spec.bins() != config.bins() {
        return Err(Error::Shape(format!(
            "spectrogram has {} bins, config expects {}",
            spec.bins(),
            config.bins()
        )));
    }
    let n = config.fft_size;
    let pad = config.front_padding() as isize;
    let window = config.window.coefficients(config.window_length);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut norm = vec![0.0; length];
    for t in 0..spec.frames() {
        let origin = (t * config.hop) as isize - pad;
        for (j, w) in window.iter().enumerate() {
            let idx = origin + j as isize;
            if idx >= 0 && (idx as usize) < length {
                norm[idx as usize] += w * w;
            }
        }
    }

    let mut out = Vec::with_capacity(spec.channels());
    for c in 0..spec.channels() {
        let mut signal = vec![0.0; length];
        for t in 0..spec.frames() {
            for k in 0..spec.bins() {
                buf[k] = spec.values[[c, t, k]];
            }
            for k in spec.bins()..n {
                buf[k] = spec.values[[c, t, n - k]].conj();
            }
            ifft.process(&mut buf);
            let origin = (t * config.hop) as isize - pad;
            for (j, w) in window.iter().enumerate() {
                let idx = origin + j as isize;
                if idx >= 0 && (idx as usize) < length {
                    signal[idx as usize] += buf[j].re / n as f64 * w;
                }
            }
        }
        for (s, &d) in signal.iter_mut().zip(&norm) {
            if d > 1e-12 {
                *s /= d;
            } else {
                *s = 0.0;
            }
        }
        out.push(signal);
    }
    if out.is_empty() {
        out.push(vec![0.0; length]);
    }
    AudioBuffer::new(sample_rate, out)
}
