//! Small signal-processing kernels shared across modules.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Hann-windowed sinc evaluated at offset `t` samples from its centre.
/// Zero outside `|t| < half_width`.
pub fn windowed_sinc(t: f64, half_width: f64) -> f64 {
    if t.abs() >= half_width {
        return 0.0;
    }
    let window = 0.5 * (1.0 + (PI * t / half_width).cos());
    let sinc = if t == 0.0 { 1.0 } else { (PI * t).sin() / (PI * t) };
    window * sinc
}

/// Adds `amplitude` times a windowed-sinc kernel centred at the fractional
/// sample position `delay`. Taps falling outside `out` are dropped.
pub fn add_fractional_impulse(out: &mut [f64], delay: f64, amplitude: f64, half_width: usize) {
    let hw = half_width as f64;
    // reduce around the nearest integer so sin(pi * frac) keeps full
    // relative precision when the delay is within rounding of an integer
    let centre = delay.round();
    let frac = delay - centre;
    let centre = centre as i64;
    if frac == 0.0 {
        if centre >= 0 && (centre as usize) < out.len() {
            out[centre as usize] += amplitude;
        }
        return;
    }
    // sin(pi (n - delay)) = -(-1)^(n - centre) sin(pi frac), and the window
    // cosine advances by a constant angle per tap.
    let sin_frac = (PI * frac).sin();
    let step = PI / hw;
    let (step_sin, step_cos) = step.sin_cos();
    let first = (delay - hw).floor() as i64 + 1;
    let last = (delay + hw).ceil() as i64 - 1;
    let t0 = first as f64 - delay;
    let (mut s, mut c) = (PI * t0 / hw).sin_cos();
    let mut sign = if (first - centre).rem_euclid(2) == 0 { -1.0 } else { 1.0 };
    for n in first..=last {
        let t = n as f64 - delay;
        if n >= 0 && (n as usize) < out.len() && t.abs() < hw {
            let sinc = sign * sin_frac / (PI * t);
            out[n as usize] += amplitude * 0.5 * (1.0 + c) * sinc;
        }
        let next_c = c * step_cos - s * step_sin;
        s = s * step_cos + c * step_sin;
        c = next_c;
        sign = -sign;
    }
}

/// Full linear convolution via FFT overlap-add. Output length is
/// `x.len() + h.len() - 1`, or zero when either input is empty.
pub fn fft_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    let block_target = (4 * h.len()).max(4096).min(x.len());
    let nfft = (h.len() + block_target - 1).next_power_of_two();
    let block = nfft - h.len() + 1;

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nfft);
    let inv = planner.plan_fft_inverse(nfft);

    let mut h_spec: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    h_spec.resize(nfft, Complex64::new(0.0, 0.0));
    fwd.process(&mut h_spec);

    let mut out = vec![0.0; out_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    let scale = 1.0 / nfft as f64;
    for start in (0..x.len()).step_by(block) {
        let end = (start + block).min(x.len());
        buf.fill(Complex64::new(0.0, 0.0));
        for (b, &v) in buf.iter_mut().zip(&x[start..end]) {
            b.re = v;
        }
        fwd.process(&mut buf);
        for (b, hs) in buf.iter_mut().zip(&h_spec) {
            *b *= hs;
        }
        inv.process(&mut buf);
        let valid = (end - start + h.len() - 1).min(out_len - start);
        for (o, b) in out[start..start + valid].iter_mut().zip(&buf) {
            *o += b.re * scale;
        }
    }
    out
}
