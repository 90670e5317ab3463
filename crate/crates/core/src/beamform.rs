//! Time-difference estimation and weighted delay-and-sum beamforming.
//!
//! Delays are measured per segment against a reference channel with
//! GCC-PHAT. A channel with delay `τ` carries the reference waveform `τ`
//! samples late, so alignment reads it at `n + τ`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::dsp::windowed_sinc;
use crate::error::{Error, Result};

/// Half-width of the fractional-delay interpolator, samples.
const INTERP_HALF_WIDTH: usize = 32;
/// Grid that normalized weights are rounded to.
const WEIGHT_QUANTUM: f64 = 4294967296.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamformConfig {
    pub segment_seconds: f64,
    pub hop_seconds: f64,
    pub max_delay_ms: f64,
    pub reference_channel: usize,
    pub viterbi: bool,
    /// Viterbi cost per sample of delay change between segments, in units
    /// of normalized correlation.
    pub transition_penalty: f64,
    pub crossfade_ms: f64,
    pub weights: Weighting,
}

impl Default for BeamformConfig {
    fn default() -> Self {
        BeamformConfig {
            segment_seconds: 0.5,
            hop_seconds: 0.25,
            max_delay_ms: 10.0,
            reference_channel: 0,
            viterbi: true,
            transition_penalty: 0.002,
            crossfade_ms: 10.0,
            weights: Weighting::Equal,
        }
    }
}

impl BeamformConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.into()));
        if !(self.segment_seconds > 0.0 && self.hop_seconds > 0.0) {
            return fail("segment and hop must be positive");
        }
        if self.hop_seconds > self.segment_seconds {
            return fail("hop must not exceed the segment length");
        }
        if !(self.max_delay_ms >= 0.0 && self.transition_penalty >= 0.0 && self.crossfade_ms >= 0.0) {
            return fail("max delay, transition penalty and crossfade must be non-negative");
        }
        if self.crossfade_ms * 1e-3 >= self.hop_seconds {
            return fail("crossfade must be shorter than the hop");
        }
        if let Weighting::Fixed(w) = &self.weights {
            check_weights(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Equal,
    /// Mean per-channel GCC-PHAT confidence over the track.
    Confidence,
    Fixed(Vec<f64>),
}

/// Per-segment delays of every channel against the reference channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdoaTrack {
    pub sample_rate: u32,
    pub reference_channel: usize,
    /// First sample each segment's delays apply to.
    pub segment_starts: Vec<usize>,
    /// `delays[segment][channel]`, samples.
    pub delays: Vec<Vec<f64>>,
    /// `confidence[segment][channel]` in `[0, 1]`.
    pub confidence: Vec<Vec<f64>>,
}

impl TdoaTrack {
    /// A single zero-delay segment.
    pub fn zeros(sample_rate: u32, channels: usize, reference_channel: usize) -> Self {
        let mut confidence = vec![0.0; channels];
        if reference_channel < channels {
            confidence[reference_channel] = 1.0;
        }
        TdoaTrack {
            sample_rate,
            reference_channel,
            segment_starts: vec![0],
            delays: vec![vec![0.0; channels]],
            confidence: vec![confidence],
        }
    }

    pub fn num_channels(&self) -> usize {
        self.delays.first().map_or(0, Vec::len)
    }
}

/// GCC-PHAT correlation of `x` against `reference`, lags `-max_lag..=max_lag`.
fn gcc_phat(x: &[f64], reference: &[f64], max_lag: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = x.len();
    let nfft = (2 * n).next_power_of_two();
    let fwd = planner.plan_fft_forward(nfft);
    let inv = planner.plan_fft_inverse(nfft);
    let spectrum = |s: &[f64]| {
        let mut b: Vec<Complex64> = s.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        b.resize(nfft, Complex64::new(0.0, 0.0));
        fwd.process(&mut b);
        b
    };
    let a = spectrum(x);
    let b = spectrum(reference);
    let mut cross: Vec<Complex64> = a
        .iter()
        .zip(&b)
        .map(|(a, b)| {
            let c = a * b.conj();
            let m = c.norm();
            if m > 1e-300 {
                c / m
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    inv.process(&mut cross);
    let r: Vec<f64> = cross.iter().map(|c| c.re / nfft as f64).collect();
    let energy = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let max_lag = max_lag.min(nfft / 2 - 1);
    (0..=2 * max_lag)
        .map(|i| {
            let lag = i as isize - max_lag as isize;
            let v = r[lag.rem_euclid(nfft as isize) as usize];
            if energy > 0.0 {
                v / energy
            } else {
                0.0
            }
        })
        .collect()
}

fn parabolic(r: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= r.len() {
        return 0.0;
    }
    let (a, b, c) = (r[i - 1], r[i], r[i + 1]);
    let den = a - 2.0 * b + c;
    if den >= 0.0 {
        return 0.0;
    }
    (0.5 * (a - c) / den).clamp(-0.5, 0.5)
}

fn argmax(r: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in r.iter().enumerate() {
        if *v > r[best] {
            best = i;
        }
    }
    best
}

/// Best lag path through per-segment correlation curves.
fn viterbi(curves: &[Vec<f64>], penalty: f64) -> Vec<usize> {
    let states = curves[0].len();
    let mut score = curves[0].clone();
    let mut back = vec![vec![0usize; states]; curves.len()];
    for (t, curve) in curves.iter().enumerate().skip(1) {
        let mut next = vec![0.0; states];
        for j in 0..states {
            let mut best = (f64::NEG_INFINITY, 0);
            for (i, s) in score.iter().enumerate() {
                let v = s - penalty * i.abs_diff(j) as f64;
                if v > best.0 {
                    best = (v, i);
                }
            }
            next[j] = best.0 + curve[j];
            back[t][j] = best.1;
        }
        score = next;
    }
    let mut path = vec![argmax(&score); curves.len()];
    for t in (1..curves.len()).rev() {
        path[t - 1] = back[t][path[t]];
    }
    path
}

fn segments(n: usize, segment: usize, hop: usize) -> Vec<(usize, usize, usize)> {
    // (block start, analysis window start, analysis window end)
    if n <= segment {
        return vec![(0, 0, n)];
    }
    let count = n.div_ceil(hop);
    (0..count)
        .map(|k| {
            let start = k * hop;
            let win = start.min(n - segment);
            (start, win, win + segment)
        })
        .collect()
}

/// Tracks each channel's delay relative to the reference channel.
///
/// Single-channel input gives a zero track.
pub fn estimate_tdoa(input: &AudioBuffer, config: &BeamformConfig) -> Result<TdoaTrack> {
    config.validate()?;
    let chans = input.num_channels();
    let reference = config.reference_channel;
    if reference >= chans {
        return Err(Error::Config(format!("reference channel {reference} of {chans}")));
    }
    let fs = input.sample_rate() as f64;
    if chans < 2 {
        return Ok(TdoaTrack::zeros(input.sample_rate(), chans, reference));
    }
    let seg = ((config.segment_seconds * fs).round() as usize).max(1);
    let hop = ((config.hop_seconds * fs).round() as usize).max(1);
    let max_lag = (config.max_delay_ms * 1e-3 * fs).round() as usize;
    let spans = segments(input.num_frames(), seg, hop);

    // curves[channel][segment]
    let curves: Vec<Vec<Vec<f64>>> = (0..chans)
        .map(|c| {
            spans
                .par_iter()
                .map_init(FftPlanner::new, |planner, &(_, lo, hi)| {
                    gcc_phat(&input.channel(c)[lo..hi], &input.channel(reference)[lo..hi], max_lag, planner)
                })
                .collect()
        })
        .collect();

    let mut delays = vec![vec![0.0; chans]; spans.len()];
    let mut confidence = vec![vec![0.0; chans]; spans.len()];
    for (c, per_segment) in curves.iter().enumerate() {
        if c == reference {
            for row in confidence.iter_mut() {
                row[c] = 1.0;
            }
            continue;
        }
        let lags = if config.viterbi {
            viterbi(per_segment, config.transition_penalty)
        } else {
            per_segment.iter().map(|r| argmax(r)).collect()
        };
        let centre = (per_segment[0].len() - 1) / 2;
        for (k, (r, &i)) in per_segment.iter().zip(&lags).enumerate() {
            delays[k][c] = i as f64 - centre as f64 + parabolic(r, i);
            confidence[k][c] = r[i].clamp(0.0, 1.0);
        }
    }
    Ok(TdoaTrack {
        sample_rate: input.sample_rate(),
        reference_channel: reference,
        segment_starts: spans.iter().map(|s| s.0).collect(),
        delays,
        confidence,
    })
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Config("beamformer weights must be finite and non-negative".into()));
    }
    if !(w.iter().sum::<f64>() > 0.0) {
        return Err(Error::Config("beamformer weights sum to zero".into()));
    }
    Ok(())
}

/// Normalizes weights to sum to one on a 2⁻³² grid so that a common
/// positive scale factor leaves the result unchanged.
fn normalize_weights(w: &[f64]) -> Result<Vec<f64>> {
    check_weights(w)?;
    let sum: f64 = w.iter().sum();
    let mut out: Vec<f64> = w.iter().map(|v| (v / sum * WEIGHT_QUANTUM).round() / WEIGHT_QUANTUM).collect();
    let last = out.iter().rposition(|v| *v > 0.0).unwrap_or(out.len() - 1);
    let rest: f64 = out.iter().enumerate().filter(|(i, _)| *i != last).map(|(_, v)| v).sum();
    out[last] = 1.0 - rest;
    Ok(out)
}

/// `x(n + shift)` for every output sample `n`, zero outside the signal.
fn shifted(x: &[f64], shift: f64, range: std::ops::Range<usize>) -> Vec<f64> {
    let base = shift.floor();
    let frac = shift - base;
    let base = base as isize;
    let at = |i: isize| if i >= 0 && (i as usize) < x.len() { x[i as usize] } else { 0.0 };
    if frac == 0.0 {
        return range.map(|n| at(n as isize + base)).collect();
    }
    let hw = INTERP_HALF_WIDTH as isize;
    let taps: Vec<(isize, f64)> = (-hw + 1..=hw)
        .map(|j| (j, windowed_sinc(frac - j as f64, INTERP_HALF_WIDTH as f64)))
        .collect();
    range
        .map(|n| {
            let i = n as isize + base;
            taps.iter().map(|&(j, c)| c * at(i + j)).sum()
        })
        .collect()
}

/// Aligns and averages the channels into one output of the same length.
pub fn delay_and_sum(input: &AudioBuffer, track: &TdoaTrack, weighting: &Weighting, crossfade_ms: f64) -> Result<AudioBuffer> {
    let chans = input.num_channels();
    if track.num_channels() != chans || track.delays.len() != track.confidence.len() || track.segment_starts.is_empty() {
        return Err(Error::Shape(format!(
            "track with {} channels for {chans}-channel audio",
            track.num_channels()
        )));
    }
    let raw = match weighting {
        Weighting::Equal => vec![1.0; chans],
        Weighting::Fixed(w) if w.len() == chans => w.clone(),
        Weighting::Fixed(w) => return Err(Error::Config(format!("{} weights for {chans} channels", w.len()))),
        Weighting::Confidence => (0..chans)
            .map(|c| track.confidence.iter().map(|r| r[c]).sum::<f64>() / track.confidence.len() as f64)
            .collect(),
    };
    let weights = normalize_weights(&raw)?;
    if chans == 1 {
        return input.select_channel(0);
    }

    let n = input.num_frames();
    let half = ((crossfade_ms * 1e-3 * input.sample_rate() as f64) / 2.0).round() as usize;
    let starts = &track.segment_starts;
    let mut out = vec![0.0; n];
    for (k, delays) in track.delays.iter().enumerate() {
        let start = starts[k].min(n);
        let end = starts.get(k + 1).copied().unwrap_or(n).min(n);
        let lo = if k == 0 { 0 } else { start.saturating_sub(half) };
        let hi = if k + 1 == starts.len() { n } else { (end + half).min(n) };
        if lo >= hi {
            continue;
        }
        let mut block = vec![0.0; hi - lo];
        for (c, (&w, &d)) in weights.iter().zip(delays).enumerate() {
            if w == 0.0 {
                continue;
            }
            for (b, v) in block.iter_mut().zip(shifted(input.channel(c), d, lo..hi)) {
                *b += w * v;
            }
        }
        for (i, v) in block.into_iter().enumerate() {
            let t = (lo + i) as f64 + 0.5;
            let mut g = 1.0;
            if k > 0 && half > 0 {
                g *= ((t - (start as f64 - half as f64)) / (2 * half) as f64).clamp(0.0, 1.0);
            }
            if k + 1 < starts.len() && half > 0 {
                g *= (((end + half) as f64 - t) / (2 * half) as f64).clamp(0.0, 1.0);
            }
            out[lo + i] += g * v;
        }
    }
    AudioBuffer::mono(input.sample_rate(), out)
}

/// TDOA tracking followed by delay-and-sum with the configured weights.
pub fn beamform(input: &AudioBuffer, config: &BeamformConfig) -> Result<(AudioBuffer, TdoaTrack)> {
    let track = estimate_tdoa(input, config)?;
    let out = delay_and_sum(input, &track, &config.weights, config.crossfade_ms)?;
    Ok((out, track))
}
