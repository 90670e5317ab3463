//! Delay estimation and delay-and-sum checks on constructed arrays.

use farfield_core::beamform::{beamform, delay_and_sum, estimate_tdoa, BeamformConfig, TdoaTrack, Weighting};
use farfield_core::AudioBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const FS: u32 = 16000;

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// `s` delayed by an integer number of samples (zeros shifted in).
fn delayed(s: &[f64], d: isize) -> Vec<f64> {
    (0..s.len() as isize)
        .map(|n| {
            let i = n - d;
            if i >= 0 && (i as usize) < s.len() {
                s[i as usize]
            } else {
                0.0
            }
        })
        .collect()
}

fn power(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

#[test]
fn identical_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = gaussian(&mut rng, FS as usize);
    let a = AudioBuffer::new(FS, vec![s.clone(), s.clone(), s.clone()]).unwrap();
    let track = estimate_tdoa(&a, &BeamformConfig::default()).unwrap();
    for (d, c) in track.delays.iter().zip(&track.confidence) {
        assert!(d.iter().all(|v| *v == 0.0));
        assert!(c.iter().all(|v| (v - 1.0).abs() < 1e-9), "{c:?}");
    }
    let out = delay_and_sum(&a, &track, &Weighting::Equal, 10.0).unwrap();
    for (o, x) in out.channel(0).iter().zip(&s) {
        assert!((o - x).abs() < 1e-10);
    }
}

#[test]
fn constructed_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let s = gaussian(&mut rng, 2 * FS as usize);
    let a = AudioBuffer::new(FS, vec![s.clone(), delayed(&s, 5)]).unwrap();
    let track = estimate_tdoa(&a, &BeamformConfig::default()).unwrap();
    for d in &track.delays {
        assert_eq!(d[0], 0.0);
        assert!((d[1] - 5.0).abs() <= 0.5, "{d:?}");
    }
}

#[test]
fn noisy_shift_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let config = BeamformConfig {
        viterbi: false,
        ..BeamformConfig::default()
    };
    let noise_gain = 10f64.powf(-10.0 / 20.0);
    let mut hits = 0;
    for _ in 0..100 {
        let d = rng.random_range(-40i64..=40) as isize;
        let s = gaussian(&mut rng, FS as usize / 2);
        let n0 = gaussian(&mut rng, s.len());
        let n1 = gaussian(&mut rng, s.len());
        let x0: Vec<f64> = s.iter().zip(&n0).map(|(a, b)| a + noise_gain * b).collect();
        let x1: Vec<f64> = delayed(&s, d).iter().zip(&n1).map(|(a, b)| a + noise_gain * b).collect();
        let track = estimate_tdoa(&AudioBuffer::new(FS, vec![x0, x1]).unwrap(), &config).unwrap();
        if track.delays.iter().all(|r| (r[1] - d as f64).abs() <= 1.0) {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

fn known_track(delays: &[f64]) -> TdoaTrack {
    let mut t = TdoaTrack::zeros(FS, delays.len(), 0);
    t.delays = vec![delays.to_vec()];
    t
}

#[test]
fn independent_noise_halves() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 4 * FS as usize;
    let a = AudioBuffer::new(FS, vec![gaussian(&mut rng, n), gaussian(&mut rng, n)]).unwrap();
    let out = delay_and_sum(&a, &known_track(&[0.0, 7.0]), &Weighting::Equal, 10.0).unwrap();
    let db = 10.0 * power(out.channel(0)).log10();
    assert!((db + 3.0103).abs() < 0.3, "{db}");
}

#[test]
fn four_channel_gain_after_tracking() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 4 * FS as usize;
    let s = gaussian(&mut rng, n);
    let delays = [0isize, 3, -6, 11];
    let signal: Vec<Vec<f64>> = delays.iter().map(|&d| delayed(&s, d)).collect();
    let noise: Vec<Vec<f64>> = (0..4).map(|_| gaussian(&mut rng, n)).collect();
    let mixed: Vec<Vec<f64>> = signal
        .iter()
        .zip(&noise)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect();
    let config = BeamformConfig::default();
    let (out, track) = beamform(&AudioBuffer::new(FS, mixed).unwrap(), &config).unwrap();
    assert_eq!(out.num_frames(), n);
    // the beamformer is linear for a fixed track: run the components through it
    let ys = delay_and_sum(&AudioBuffer::new(FS, signal).unwrap(), &track, &config.weights, 10.0).unwrap();
    let yn = delay_and_sum(&AudioBuffer::new(FS, noise).unwrap(), &track, &config.weights, 10.0).unwrap();
    let edge = 1000;
    let gain = 10.0 * (power(&ys.channel(0)[edge..n - edge]) / power(&yn.channel(0)[edge..n - edge])).log10();
    assert!((gain - 10.0 * 4f64.log10()).abs() < 0.5, "gain {gain} dB");
}

#[test]
fn weight_scaling_is_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = AudioBuffer::new(FS, (0..3).map(|_| gaussian(&mut rng, 8000)).collect()).unwrap();
    let track = known_track(&[0.0, 1.25, -3.5]);
    let base = delay_and_sum(&a, &track, &Weighting::Fixed(vec![0.2, 0.5, 0.3]), 10.0).unwrap();
    for k in [0.01, 3.0, 1234.5] {
        let w = Weighting::Fixed(vec![0.2 * k, 0.5 * k, 0.3 * k]);
        assert_eq!(delay_and_sum(&a, &track, &w, 10.0).unwrap(), base);
    }
    assert!(delay_and_sum(&a, &track, &Weighting::Fixed(vec![0.0; 3]), 10.0).is_err());
}

#[test]
fn single_channel_passthrough() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = AudioBuffer::mono(FS, gaussian(&mut rng, 5000)).unwrap();
    let (out, track) = beamform(&a, &BeamformConfig::default()).unwrap();
    assert_eq!(out, a);
    assert_eq!(track.delays, vec![vec![0.0]]);
}

#[test]
fn segment_seams_crossfade_between_delays() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = AudioBuffer::new(FS, vec![gaussian(&mut rng, 16000), gaussian(&mut rng, 16000)]).unwrap();
    let mut track = TdoaTrack::zeros(FS, 2, 0);
    track.segment_starts = vec![0, 8000];
    track.delays = vec![vec![0.0, 0.0], vec![0.0, 4.0]];
    track.confidence = vec![vec![1.0, 1.0]; 2];
    let out = delay_and_sum(&a, &track, &Weighting::Equal, 10.0).unwrap();
    let (x0, x1) = (a.channel(0), a.channel(1));
    let y = out.channel(0);
    assert_eq!(y.len(), 16000);
    for n in [0, 7000, 7919] {
        assert!((y[n] - 0.5 * (x0[n] + x1[n])).abs() < 1e-12);
    }
    for n in [8081, 9000, 15000] {
        assert!((y[n] - 0.5 * (x0[n] + x1[n + 4])).abs() < 1e-12);
    }
    // halfway through the fade both alignments contribute equally
    let n = 8000;
    let expected = 0.5 * (x0[n] + 0.5 * (x1[n] + x1[n + 4]));
    assert!((y[n] - expected).abs() < 1e-3 * (1.0 + expected.abs()), "{} vs {expected}", y[n]);
}
