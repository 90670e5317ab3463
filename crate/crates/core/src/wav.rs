//! RIFF/WAVE reading and writing for 16/24-bit PCM and 32-bit float.
//!
//! Integer PCM maps to `[-1, 1)` by dividing by `2^(bits-1)`. Writing PCM
//! rounds to nearest and clips to `[-1, 1 - lsb]`; float32 is written as is.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavEncoding {
    Pcm16,
    Pcm24,
    Float32,
}

impl WavEncoding {
    fn spec(self, channels: u16, sample_rate: u32) -> WavSpec {
        let (bits_per_sample, sample_format) = match self {
            WavEncoding::Pcm16 => (16, SampleFormat::Int),
            WavEncoding::Pcm24 => (24, SampleFormat::Int),
            WavEncoding::Float32 => (32, SampleFormat::Float),
        };
        WavSpec {
            channels,
            sample_rate,
            bits_per_sample,
            sample_format,
        }
    }
}

impl FromStr for WavEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcm16" => Ok(WavEncoding::Pcm16),
            "pcm24" => Ok(WavEncoding::Pcm24),
            "float32" => Ok(WavEncoding::Float32),
            other => Err(Error::Config(format!("unknown WAV encoding {other:?}"))),
        }
    }
}

fn map_read_err(e: hound::Error) -> Error {
    match e {
        hound::Error::Unsupported => Error::UnsupportedFormat("encoding not handled by the WAV decoder".into()),
        hound::Error::IoError(io) => Error::Format(format!("truncated or unreadable WAV data: {io}")),
        other => Error::Format(format!("WAV: {other}")),
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = WavReader::new(BufReader::new(file)).map_err(map_read_err)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Format("WAV fmt chunk declares zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = 1.0 / f64::from(1u32 << (bits - 1));
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| f64::from(v) * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(map_read_err)?
        }
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_read_err)?,
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!(
                "{bits}-bit {}",
                if fmt == SampleFormat::Int { "integer PCM" } else { "float" }
            )))
        }
    };
    let frames = interleaved.len() / channels;
    let mut out = vec![Vec::with_capacity(frames); channels];
    for frame in interleaved.chunks_exact(channels) {
        for (c, &s) in frame.iter().enumerate() {
            out[c].push(s);
        }
    }
    AudioBuffer::new(spec.sample_rate, out)
}

fn quantize(x: f64, bits: u32) -> i32 {
    let full = f64::from(1u32 << (bits - 1));
    (x * full).round().clamp(-full, full - 1.0) as i32
}

pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    let channels = u16::try_from(buffer.num_channels())
        .map_err(|_| Error::Config("too many channels for a WAV file".into()))?;
    let spec = encoding.spec(channels, buffer.sample_rate());
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let to_io = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("WAV: {other}")),
    };
    let mut writer = WavWriter::new(BufWriter::new(file), spec).map_err(to_io)?;
    for i in 0..buffer.num_frames() {
        for ch in buffer.channels() {
            let s = ch[i];
            match encoding {
                WavEncoding::Pcm16 => writer.write_sample(quantize(s, 16) as i16),
                WavEncoding::Pcm24 => writer.write_sample(quantize(s, 24)),
                WavEncoding::Float32 => writer.write_sample(s as f32),
            }
            .map_err(to_io)?;
        }
    }
    writer.finalize().map_err(to_io)
}
