//! Reverberation-time conversions and Schroeder decay analysis.

use super::{Rir, RoomSpec};
use crate::error::{Error, Result};

/// Sabine constant in s/m, i.e. `24 ln 10 / c` at c = 343 m/s.
pub const SABINE_CONSTANT: f64 = 0.1611;

/// Uniform wall coefficients reproducing `t60` under Sabine's formula.
pub fn t60_to_reflection(room: &RoomSpec, t60: f64) -> Result<[f64; 6]> {
    if !(t60 > 0.0) {
        return Err(Error::Config(format!("T60 must be positive, got {t60}")));
    }
    let ratio = SABINE_CONSTANT * room.volume() / room.surface_area();
    let alpha = ratio / t60;
    if alpha >= 1.0 {
        return Err(Error::InfeasibleT60 {
            requested: t60,
            minimum: ratio,
        });
    }
    let beta = (1.0 - alpha.max(0.0)).sqrt();
    Ok([beta; 6])
}

/// Uniform wall coefficients whose specular image lattice decays at `t60`.
///
/// Along a ray of direction `u` the image source at path length `ct` has
/// undergone `ct · Σ|u_i|/L_i` reflections, each scaling energy by `β²`.
/// Averaging over directions gives an energy decay curve whose shape in
/// `κt` (with `κ = -2c ln β`) is fixed by the room proportions, so the fitted
/// T60 is `K / κ` for a room constant `K` and the inversion is closed form.
/// Unlike Sabine's formula this tracks the lattice both in absorbent rooms
/// (faster than Sabine) and in live ones (slower, grazing paths dominate).
pub fn t60_to_reflection_image_matched(room: &RoomSpec, t60: f64) -> Result<[f64; 6]> {
    if !(t60 > 0.0) {
        return Err(Error::Config(format!("T60 must be positive, got {t60}")));
    }
    let k = lattice_decay_constant(room);
    let beta = (-k / (2.0 * room.speed_of_sound * t60)).exp();
    Ok([beta; 6])
}

/// T60 of the specular image lattice for uniform coefficient `beta`.
pub fn image_lattice_t60(room: &RoomSpec, beta: f64) -> f64 {
    if beta <= 0.0 {
        return 0.0;
    }
    if beta >= 1.0 {
        return f64::INFINITY;
    }
    lattice_decay_constant(room) / (-2.0 * room.speed_of_sound * beta.ln())
}

/// `K` such that the lattice T60 is `K / κ`, from a -5..-25 dB line fit on
/// the direction-averaged decay, mirroring [`estimate_t60`].
fn lattice_decay_constant(room: &RoomSpec) -> f64 {
    const GRID: usize = 64;
    let [lx, ly, lz] = room.dimensions;
    let step = std::f64::consts::FRAC_PI_2 / GRID as f64;
    // reflections per metre of path and solid-angle weight, first octant
    let mut rays = Vec::with_capacity(GRID * GRID);
    for i in 0..GRID {
        let theta = (i as f64 + 0.5) * step;
        for j in 0..GRID {
            let phi = (j as f64 + 0.5) * step;
            let (st, ct) = theta.sin_cos();
            let (sp, cp) = phi.sin_cos();
            let g = st * cp / lx + st * sp / ly + ct / lz;
            rays.push((g, st));
        }
    }
    // backward-integrated energy at reduced time s = κt
    let edc = |s: f64| rays.iter().map(|&(g, w)| w * (-s * g).exp() / g).sum::<f64>();
    let total = edc(0.0);
    let level = |s: f64| 10.0 * (edc(s) / total).log10();
    let crossing = |db: f64| {
        let (mut lo, mut hi) = (0.0, 1.0);
        while level(hi) > db {
            hi *= 2.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if level(mid) > db {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let (s5, s25) = (crossing(-5.0), crossing(-25.0));
    const POINTS: usize = 128;
    let (mut sx, mut sy, mut sxy, mut sxx) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..POINTS {
        let s = s5 + (s25 - s5) * i as f64 / (POINTS - 1) as f64;
        let y = level(s);
        sx += s;
        sy += y;
        sxy += s * y;
        sxx += s * s;
    }
    let n = POINTS as f64;
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    -60.0 / slope
}

/// Sabine T60 for the given wall coefficients; infinite for lossless walls.
pub fn sabine_t60(room: &RoomSpec, betas: &[f64; 6]) -> f64 {
    let [x, y, z] = room.dimensions;
    let areas = [y * z, y * z, x * z, x * z, x * y, x * y];
    let absorption: f64 = areas.iter().zip(betas).map(|(s, b)| s * (1.0 - b * b)).sum();
    if absorption <= 0.0 {
        f64::INFINITY
    } else {
        SABINE_CONSTANT * room.volume() / absorption
    }
}

/// T60 from a line fit to the Schroeder energy decay curve between -5 and
/// -25 dB, extrapolated to 60 dB.
pub fn estimate_t60(rir: &Rir) -> Result<f64> {
    let fs = rir.sample_rate as f64;
    let mut edc = vec![0.0; rir.taps.len()];
    let mut acc = 0.0;
    for (e, v) in edc.iter_mut().zip(&rir.taps).rev() {
        acc += v * v;
        *e = acc;
    }
    let total = edc.first().copied().unwrap_or(0.0);
    if total <= 0.0 {
        return Err(Error::InsufficientDecay { range_db: 0.0 });
    }
    let db: Vec<f64> = edc.iter().map(|e| 10.0 * (e / total).log10()).collect();
    let floor = db.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::min);
    if -floor < 20.0 {
        return Err(Error::InsufficientDecay { range_db: -floor });
    }

    let start = db.iter().position(|&v| v <= -5.0);
    let end = db.iter().position(|&v| v <= -25.0);
    let (start, end) = match (start, end) {
        (Some(s), Some(e)) if e > s + 1 && db[e].is_finite() => (s, e),
        _ => return Err(Error::InsufficientDecay { range_db: -floor }),
    };

    let n = (end - start + 1) as f64;
    let (mut sx, mut sy, mut sxy, mut sxx) = (0.0, 0.0, 0.0, 0.0);
    for (i, &y) in db.iter().enumerate().take(end + 1).skip(start) {
        let x = i as f64 / fs;
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if !(slope < 0.0) {
        return Err(Error::InsufficientDecay { range_db: -floor });
    }
    Ok(-60.0 / slope)
}
