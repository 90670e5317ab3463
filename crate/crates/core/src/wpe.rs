//! Weighted prediction error dereverberation.
//!
//! Per frequency bin, late reverberation is modelled as a delayed
//! multichannel linear prediction from past STFT frames,
//! `d_t = x_t - Gᴴ x̄_t` with `x̄_t = [x_{t-D}; …; x_{t-D-K+1}]`, and the
//! filter is fitted by alternating a per-frame variance estimate
//! `λ_t = mean_c |d_{t,c}|²` with a λ-weighted least-squares solve.
//! Both steps decrease the Gaussian negative log-likelihood
//! `Σ_t (Σ_c |d_{t,c}|² / λ_t + C ln λ_t)`, which is reported per iteration.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::stft::{istft, stft, Spectrogram, StftConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WpeConfig {
    /// Filter length K in frames, per channel.
    pub taps: usize,
    /// Prediction delay D in frames.
    pub delay: usize,
    pub iterations: usize,
    pub stft: StftConfig,
    /// Diagonal loading relative to `trace(R) / dim`.
    pub epsilon: f64,
    /// Lower bound on λ_t relative to the bin's mean input power.
    pub psd_floor: f64,
    /// Frames on each side averaged into λ_t.
    pub context: usize,
}

impl Default for WpeConfig {
    fn default() -> Self {
        WpeConfig {
            taps: 10,
            delay: 3,
            iterations: 3,
            stft: StftConfig::default(),
            epsilon: 1e-8,
            psd_floor: 1e-6,
            context: 0,
        }
    }
}

impl WpeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 || self.delay == 0 || self.iterations == 0 {
            return Err(Error::Config("wpe taps, delay and iterations must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("wpe epsilon {} must be positive", self.epsilon)));
        }
        if !(self.psd_floor > 0.0 && self.psd_floor.is_finite()) {
            return Err(Error::Config(format!("wpe psd floor {} must be positive", self.psd_floor)));
        }
        self.stft.validate()
    }

    /// STFT frames needed for at least one predictable frame.
    pub fn min_frames(&self) -> usize {
        self.delay + self.taps + 1
    }
}

/// Diagnostics of one WPE run.
#[derive(Debug, Clone, PartialEq)]
pub struct WpeState {
    /// Prediction filter per bin, `K·C × C`.
    pub filters: Vec<DMatrix<Complex64>>,
    /// Variance estimates of the last iteration, `bins × frames`.
    pub lambdas: Array2<f64>,
    /// Negative log-likelihood after each iteration, summed over bins.
    pub costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WpeOutput {
    pub audio: AudioBuffer,
    pub state: WpeState,
}

/// Dereverberates every channel of `input`.
pub fn wpe_dereverberate(input: &AudioBuffer, config: &WpeConfig) -> Result<WpeOutput> {
    wpe_with_init(input, config, None)
}

fn wpe_with_init(input: &AudioBuffer, config: &WpeConfig, init: Option<&[DMatrix<Complex64>]>) -> Result<WpeOutput> {
    config.validate()?;
    let spec = stft(input, &config.stft)?;
    let (chans, frames, bins) = (spec.channels(), spec.frames(), spec.bins());
    if frames < config.min_frames() {
        return Err(Error::InsufficientFrames {
            frames,
            required: config.min_frames(),
        });
    }

    let results: Vec<BinResult> = (0..bins)
        .into_par_iter()
        .map(|f| {
            let mut x = Vec::with_capacity(frames * chans);
            for t in 0..frames {
                for c in 0..chans {
                    x.push(spec.values[[c, t, f]]);
                }
            }
            wpe_bin(&x, chans, config, init.map(|g| &g[f]))
        })
        .collect();

    let mut values = Array3::zeros((chans, frames, bins));
    let mut lambdas = Array2::zeros((bins, frames));
    let mut costs = vec![0.0; config.iterations];
    let mut filters = Vec::with_capacity(bins);
    for (f, r) in results.into_iter().enumerate() {
        for t in 0..frames {
            for c in 0..chans {
                values[[c, t, f]] = r.d[t * chans + c];
            }
            lambdas[[f, t]] = r.lambda[t];
        }
        for (acc, v) in costs.iter_mut().zip(&r.costs) {
            *acc += v;
        }
        filters.push(r.filter);
    }
    let audio = istft(&Spectrogram::new(values), &config.stft, input.num_frames(), input.sample_rate())?;
    Ok(WpeOutput {
        audio,
        state: WpeState {
            filters,
            lambdas,
            costs,
        },
    })
}

struct BinResult {
    d: Vec<Complex64>,
    lambda: Vec<f64>,
    filter: DMatrix<Complex64>,
    costs: Vec<f64>,
}

/// Stacked past frames for frame `t`, zero before the signal start.
fn stacked(x: &[Complex64], chans: usize, t: usize, config: &WpeConfig, out: &mut [Complex64]) {
    for k in 0..config.taps {
        let dst = &mut out[k * chans..(k + 1) * chans];
        match t.checked_sub(config.delay + k) {
            Some(s) => dst.copy_from_slice(&x[s * chans..(s + 1) * chans]),
            None => dst.fill(Complex64::new(0.0, 0.0)),
        }
    }
}

fn predict(x: &[Complex64], chans: usize, g: &DMatrix<Complex64>, config: &WpeConfig) -> Vec<Complex64> {
    let frames = x.len() / chans;
    let dim = config.taps * chans;
    let mut d = x.to_vec();
    let mut bar = vec![Complex64::new(0.0, 0.0); dim];
    for t in 0..frames {
        stacked(x, chans, t, config, &mut bar);
        for c in 0..chans {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, b) in bar.iter().enumerate() {
                acc += g[(i, c)].conj() * b;
            }
            d[t * chans + c] -= acc;
        }
    }
    d
}

fn variances(d: &[Complex64], chans: usize, config: &WpeConfig, floor: f64) -> Vec<f64> {
    let frames = d.len() / chans;
    let power: Vec<f64> = (0..frames)
        .map(|t| d[t * chans..(t + 1) * chans].iter().map(|v| v.norm_sqr()).sum::<f64>() / chans as f64)
        .collect();
    (0..frames)
        .map(|t| {
            let lo = t.saturating_sub(config.context);
            let hi = (t + config.context).min(frames - 1);
            let mean = power[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
            mean.max(floor)
        })
        .collect()
}

fn wpe_bin(x: &[Complex64], chans: usize, config: &WpeConfig, init: Option<&DMatrix<Complex64>>) -> BinResult {
    let frames = x.len() / chans;
    let dim = config.taps * chans;
    let mut d = match init {
        Some(g) => predict(x, chans, g, config),
        None => x.to_vec(),
    };
    let mut filter = DMatrix::zeros(dim, chans);
    let mut lambda = Vec::new();
    let mut costs = Vec::with_capacity(config.iterations);
    let mut bar = vec![Complex64::new(0.0, 0.0); dim];
    let power = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
    let floor = (config.psd_floor * power).max(f64::MIN_POSITIVE);

    for _ in 0..config.iterations {
        lambda = variances(&d, chans, config, floor);
        let mut r = DMatrix::<Complex64>::zeros(dim, dim);
        let mut p = DMatrix::<Complex64>::zeros(dim, chans);
        for t in 0..frames {
            stacked(x, chans, t, config, &mut bar);
            let w = 1.0 / lambda[t];
            for i in 0..dim {
                let bi = bar[i] * w;
                if bi.re == 0.0 && bi.im == 0.0 {
                    continue;
                }
                for j in i..dim {
                    r[(i, j)] += bi * bar[j].conj();
                }
                for c in 0..chans {
                    p[(i, c)] += bi * x[t * chans + c].conj();
                }
            }
        }
        for i in 0..dim {
            for j in 0..i {
                r[(i, j)] = r[(j, i)].conj();
            }
        }
        filter = solve(r, &p, config.epsilon);
        d = predict(x, chans, &filter, config);
        let cost = (0..frames)
            .map(|t| {
                let e: f64 = d[t * chans..(t + 1) * chans].iter().map(|v| v.norm_sqr()).sum();
                e / lambda[t] + chans as f64 * lambda[t].ln()
            })
            .sum();
        costs.push(cost);
    }
    BinResult {
        d,
        lambda,
        filter,
        costs,
    }
}

/// `(R + δI)⁻¹ P` with `δ = ε·trace(R)/dim`; zero when R carries no energy.
fn solve(r: DMatrix<Complex64>, p: &DMatrix<Complex64>, epsilon: f64) -> DMatrix<Complex64> {
    let dim = r.nrows();
    let trace: f64 = (0..dim).map(|i| r[(i, i)].re).sum();
    if !(trace > 0.0 && trace.is_finite()) {
        return DMatrix::zeros(dim, p.ncols());
    }
    let mut load = epsilon * trace / dim as f64;
    for _ in 0..8 {
        let mut loaded = r.clone();
        for i in 0..dim {
            loaded[(i, i)] += load;
        }
        if let Some(ch) = loaded.cholesky() {
            return ch.solve(p);
        }
        load *= 100.0;
    }
    log::warn!("wpe normal equations not positive definite, filter zeroed");
    DMatrix::zeros(dim, p.ncols())
}

/// Blockwise WPE for long recordings.
///
/// Blocks of `block_seconds` overlap by a quarter block and are joined with
/// linear crossfades. Each block starts from the previous block's filters
/// instead of from the raw input. A block covering the whole input gives the
/// batch result.
pub fn wpe_block_online(input: &AudioBuffer, config: &WpeConfig, block_seconds: f64) -> Result<AudioBuffer> {
    config.validate()?;
    let fs = input.sample_rate() as f64;
    let min_block = 4.0 * config.stft.window_length as f64 / fs;
    if !(block_seconds >= min_block) {
        return Err(Error::Config(format!(
            "block of {block_seconds} s is shorter than {min_block} s (four windows)"
        )));
    }
    let n = input.num_frames();
    let block = (block_seconds * fs).round() as usize;
    if block >= n {
        return Ok(wpe_dereverberate(input, config)?.audio);
    }
    let overlap = block / 4;
    let step = block - overlap;
    let mut spans = Vec::new();
    let mut start = 0;
    loop {
        if start + block >= n || n - (start + step) < block / 2 {
            spans.push((start, n));
            break;
        }
        spans.push((start, start + block));
        start += step;
    }

    let chans = input.num_channels();
    let mut out = vec![vec![0.0; n]; chans];
    let mut carry: Option<Vec<DMatrix<Complex64>>> = None;
    for (b, &(lo, hi)) in spans.iter().enumerate() {
        let piece = AudioBuffer::new(
            input.sample_rate(),
            input.channels().iter().map(|c| c[lo..hi].to_vec()).collect(),
        )?;
        let res = wpe_with_init(&piece, config, carry.as_deref())?;
        let fade_in = if b == 0 { 0 } else { spans[b - 1].1 - lo };
        let fade_out = if b + 1 == spans.len() { 0 } else { hi - spans[b + 1].0 };
        let len = hi - lo;
        for (acc, y) in out.iter_mut().zip(res.audio.channels()) {
            for i in 0..len {
                let mut w = 1.0;
                if i < fade_in {
                    w = (i as f64 + 0.5) / fade_in as f64;
                }
                if i >= len - fade_out {
                    w = (len - i) as f64 - 0.5;
                    w /= fade_out as f64;
                }
                acc[lo + i] += w * y[i];
            }
        }
        carry = Some(res.state.filters);
    }
    AudioBuffer::new(input.sample_rate(), out)
}
