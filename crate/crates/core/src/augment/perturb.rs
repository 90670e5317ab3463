use std::f64::consts::PI;

use rand::Rng;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Factors of the three-way speed perturbation recipe.
pub const SPEED_FACTORS: [f64; 3] = [0.9, 1.0, 1.1];
pub const VOLUME_RANGE: (f64, f64) = (0.8, 2.0);
const SPEED_RANGE: (f64, f64) = (0.5, 2.0);
/// Zero crossings of the interpolation kernel on each side.
const KERNEL_ZEROS: f64 = 32.0;

/// Plays `audio` back `factor` times faster at the same nominal rate.
///
/// The output has `floor(n / factor)` frames. Output sample `j` is the
/// band-limited interpolation of the input at time `j * factor`; when
/// speeding up, the kernel cutoff drops to `1 / factor` of Nyquist to
/// prevent aliasing.
pub fn speed_perturb(audio: &AudioBuffer, factor: f64) -> Result<AudioBuffer> {
    if !(SPEED_RANGE.0..=SPEED_RANGE.1).contains(&factor) {
        return Err(Error::Config(format!(
            "speed factor {factor} outside [{}, {}]",
            SPEED_RANGE.0, SPEED_RANGE.1
        )));
    }
    if factor == 1.0 {
        return Ok(audio.clone());
    }
    let out_len = (audio.num_frames() as f64 / factor).floor() as usize;
    let cutoff = factor.recip().min(1.0);
    let reach = KERNEL_ZEROS / cutoff;
    let channels = audio
        .channels()
        .iter()
        .map(|x| {
            (0..out_len)
                .map(|j| {
                    let t = j as f64 * factor;
                    let lo = ((t - reach).ceil().max(0.0)) as usize;
                    let hi = ((t + reach).floor() as usize).min(x.len() - 1);
                    let mut acc = 0.0;
                    for (k, &s) in x.iter().enumerate().take(hi + 1).skip(lo) {
                        acc += s * kernel(t - k as f64, cutoff, reach);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    AudioBuffer::new(audio.sample_rate(), channels)
}

fn kernel(d: f64, cutoff: f64, reach: f64) -> f64 {
    if d.abs() >= reach {
        return 0.0;
    }
    let x = cutoff * d;
    let sinc = if x == 0.0 { 1.0 } else { (PI * x).sin() / (PI * x) };
    cutoff * sinc * 0.5 * (1.0 + (PI * d / reach).cos())
}

pub fn volume_perturb(audio: &AudioBuffer, factor: f64) -> Result<AudioBuffer> {
    if !(VOLUME_RANGE.0..=VOLUME_RANGE.1).contains(&factor) {
        return Err(Error::Config(format!(
            "volume factor {factor} outside [{}, {}]",
            VOLUME_RANGE.0, VOLUME_RANGE.1
        )));
    }
    audio.scaled(factor)
}

pub fn sample_volume_factor(rng: &mut SeededRng) -> f64 {
    rng.random_range(VOLUME_RANGE.0..=VOLUME_RANGE.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths() {
        let a = AudioBuffer::zeros(16000, 2, 16000).unwrap();
        assert_eq!(speed_perturb(&a, 1.1).unwrap().num_frames(), 14545);
        assert_eq!(speed_perturb(&a, 0.9).unwrap().num_frames(), 17777);
        assert_eq!(speed_perturb(&a, 1.0).unwrap(), a);
        assert!(speed_perturb(&a, 0.4).is_err());
        assert!(speed_perturb(&a, f64::NAN).is_err());
    }

    #[test]
    fn volume() {
        let a = AudioBuffer::mono(8000, vec![0.3; 10]).unwrap();
        assert!(volume_perturb(&a, 2.0).unwrap().channel(0).iter().all(|&v| v == 0.6));
        assert_eq!(volume_perturb(&a, 1.0).unwrap(), a);
        assert!(volume_perturb(&a, 2.5).is_err());
        assert!(volume_perturb(&a, 0.7).is_err());
        let mut rng = SeededRng::new(3, "v");
        for _ in 0..1000 {
            let f = sample_volume_factor(&mut rng);
            assert!((0.8..=2.0).contains(&f));
        }
    }

    #[test]
    fn slow_constant_stays_constant_in_the_interior() {
        let a = AudioBuffer::mono(8000, vec![1.0; 400]).unwrap();
        let b = speed_perturb(&a, 0.9).unwrap();
        for &v in &b.channel(0)[60..380] {
            assert!((v - 1.0).abs() < 2e-3, "{v}");
        }
    }
}
