//! Image-method room impulse responses for rectangular rooms.
//!
//! Each image source is addressed by a mirror parity `p ∈ {0,1}` and a room
//! period `m ∈ Z` per axis. Its coordinate along an axis of length `L` is
//! `(1 - 2p)·s + 2mL`, and it has been reflected `|m - p|` times by the wall
//! at the origin and `|m|` times by the opposite wall. The tap contribution
//! is the product of wall coefficients raised to those counts over `4πd`,
//! placed at the propagation delay with a Hann-windowed sinc kernel.

mod io;
mod reverb;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub use io::{read_rir_metadata, write_rir, RirMetadata, GENERATOR_VERSION};
pub use reverb::{
    estimate_t60, image_lattice_t60, sabine_t60, t60_to_reflection, t60_to_reflection_image_matched,
    SABINE_CONSTANT,
};

use crate::dsp::add_fractional_impulse;
use crate::error::{Error, Result};

/// Minimum distance between any source or microphone and any wall, metres.
pub const WALL_MARGIN: f64 = 0.1;

pub const DEFAULT_SPEED_OF_SOUND: f64 = 343.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Surface reflection: either six amplitude coefficients ordered
/// `[x=0, x=Lx, y=0, y=Ly, z=0, z=Lz]` or a target reverberation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reflection {
    Coefficients([f64; 6]),
    T60(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub dimensions: [f64; 3],
    pub reflection: Reflection,
    #[serde(default = "default_speed_of_sound")]
    pub speed_of_sound: f64,
}

fn default_speed_of_sound() -> f64 {
    DEFAULT_SPEED_OF_SOUND
}

impl RoomSpec {
    pub fn with_t60(dimensions: [f64; 3], t60: f64) -> Self {
        RoomSpec {
            dimensions,
            reflection: Reflection::T60(t60),
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
        }
    }

    pub fn with_coefficients(dimensions: [f64; 3], betas: [f64; 6]) -> Self {
        RoomSpec {
            dimensions,
            reflection: Reflection::Coefficients(betas),
            speed_of_sound: DEFAULT_SPEED_OF_SOUND,
        }
    }

    pub fn cube(edge: f64, t60: f64) -> Self {
        Self::with_t60([edge; 3], t60)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return Err(Error::Geometry(format!(
                "room dimensions must be positive, got {:?}",
                self.dimensions
            )));
        }
        if !(self.speed_of_sound.is_finite() && self.speed_of_sound > 0.0) {
            return Err(Error::Config("speed of sound must be positive".into()));
        }
        match self.reflection {
            Reflection::Coefficients(b) => {
                if b.iter().any(|&v| !(0.0..1.0).contains(&v)) {
                    return Err(Error::Config(format!("reflection coefficients must lie in [0, 1), got {b:?}")));
                }
            }
            Reflection::T60(t) => {
                if !(t.is_finite() && t > 0.0) {
                    return Err(Error::Config(format!("T60 must be positive, got {t}")));
                }
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.dimensions.iter().product()
    }

    pub fn surface_area(&self) -> f64 {
        let [x, y, z] = self.dimensions;
        2.0 * (x * y + x * z + y * z)
    }

    /// Whether `p` lies inside the room at least `margin` from every wall.
    pub fn contains(&self, p: &Point3, margin: f64) -> bool {
        p.coords()
            .iter()
            .zip(self.dimensions)
            .all(|(&c, l)| c >= margin && c <= l - margin)
    }

    /// Wall coefficients, converting a target T60 with `conversion` when needed.
    pub fn betas(&self, conversion: T60Conversion) -> Result<[f64; 6]> {
        match (self.reflection, conversion) {
            (Reflection::Coefficients(b), _) => Ok(b),
            (Reflection::T60(t), T60Conversion::Sabine) => t60_to_reflection(self, t),
            (Reflection::T60(t), T60Conversion::ImageMatched) => t60_to_reflection_image_matched(self, t),
        }
    }

    /// Target T60 if given, otherwise the Sabine estimate from the walls.
    pub fn nominal_t60(&self) -> Result<f64> {
        match self.reflection {
            Reflection::T60(t) => Ok(t),
            Reflection::Coefficients(b) => Ok(sabine_t60(self, &b)),
        }
    }
}

/// How a target T60 becomes wall coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T60Conversion {
    /// Inverted Sabine formula, `α = 0.1611 V / (S T60)`.
    Sabine,
    /// Match the decay rate of the specular image lattice itself.
    ImageMatched,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Cut the response at 1.25 × the room's nominal T60.
    Auto,
    /// Keep only images with at most this many reflections.
    MaxOrder(u32),
    /// Cut the response after this many seconds.
    Duration(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RirConfig {
    pub truncation: Truncation,
    pub interp_half_width: usize,
    pub highpass: bool,
    pub t60_conversion: T60Conversion,
}

impl Default for RirConfig {
    fn default() -> Self {
        RirConfig {
            truncation: Truncation::Auto,
            interp_half_width: 40,
            highpass: true,
            t60_conversion: T60Conversion::ImageMatched,
        }
    }
}

impl RirConfig {
    pub fn validate(&self) -> Result<()> {
        if self.interp_half_width == 0 {
            return Err(Error::Config("interpolation half-width must be at least 1".into()));
        }
        if let Truncation::Duration(d) = self.truncation {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Config(format!("RIR duration cutoff must be positive, got {d}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rir {
    pub taps: Vec<f64>,
    pub sample_rate: u32,
    pub source: Point3,
    pub mic: Point3,
}

impl Rir {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|v| v * v).sum()
    }
}

/// One axis worth of image candidates: signed offset from the microphone
/// coordinate, reflection count and accumulated wall attenuation.
struct AxisImage {
    offset: f64,
    order: u32,
    gain: f64,
}

fn axis_images(source: f64, mic: f64, length: f64, betas: [f64; 2], periods: i64, max_order: Option<u32>) -> Vec<AxisImage> {
    let mut out = Vec::new();
    for m in -periods..=periods {
        for p in 0..=1i64 {
            let lower = (m - p).unsigned_abs() as u32;
            let upper = m.unsigned_abs() as u32;
            let order = lower + upper;
            if max_order.is_some_and(|n| order > n) {
                continue;
            }
            out.push(AxisImage {
                offset: (1 - 2 * p) as f64 * source + 2.0 * m as f64 * length - mic,
                order,
                gain: betas[0].powi(lower as i32) * betas[1].powi(upper as i32),
            });
        }
    }
    out
}

fn check_positions(room: &RoomSpec, source: &Point3, mic: &Point3) -> Result<()> {
    for (what, p) in [("source", source), ("microphone", mic)] {
        if !room.contains(p, WALL_MARGIN) {
            return Err(Error::Geometry(format!(
                "{what} at ({:.3}, {:.3}, {:.3}) is not inside room {:?} with {WALL_MARGIN} m margin",
                p.x, p.y, p.z, room.dimensions
            )));
        }
    }
    if source.distance(mic) == 0.0 {
        return Err(Error::Geometry("source and microphone coincide".into()));
    }
    Ok(())
}

/// Allen-Berkeley style high-pass applied in place at 80 Hz.
fn highpass_in_place(taps: &mut [f64], sample_rate: u32) {
    let w = 2.0 * PI * 80.0 / sample_rate as f64;
    let r1 = (-w).exp();
    let b1 = 2.0 * r1 * w.cos();
    let b2 = -r1 * r1;
    let a1 = -(1.0 + r1);
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in taps.iter_mut() {
        let y0 = b1 * y1 + b2 * y2 + *v;
        *v = y0 + a1 * y1 + r1 * y2;
        y2 = y1;
        y1 = y0;
    }
}

pub fn generate_rir(room: &RoomSpec, source: &Point3, mic: &Point3, sample_rate: u32, config: &RirConfig) -> Result<Rir> {
    room.validate()?;
    config.validate()?;
    if sample_rate == 0 {
        return Err(Error::Config("sample rate must be positive".into()));
    }
    check_positions(room, source, mic)?;
    let betas = room.betas(config.t60_conversion)?;
    let fs = sample_rate as f64;
    let c = room.speed_of_sound;
    let hw = config.interp_half_width;
    let s = source.coords();
    let r = mic.coords();
    let dims = room.dimensions;

    let (max_order, periods, length) = match config.truncation {
        Truncation::MaxOrder(n) => {
            let periods = i64::from(n + 1) / 2;
            (Some(n), [periods; 3], None)
        }
        Truncation::Duration(_) | Truncation::Auto => {
            let seconds = match config.truncation {
                Truncation::Duration(d) => d,
                _ => {
                    let t60 = room.nominal_t60()?;
                    if !t60.is_finite() {
                        return Err(Error::Config(
                            "walls are lossless; set an explicit truncation for this room".into(),
                        ));
                    }
                    1.25 * t60
                }
            };
            let len = (seconds * fs).ceil().max(1.0) as usize;
            let reach = (len + hw) as f64 * c / fs;
            let periods = dims.map(|l| (reach / (2.0 * l)).ceil() as i64 + 1);
            (None, periods, Some(len))
        }
    };

    let axes: Vec<Vec<AxisImage>> = (0..3)
        .map(|a| axis_images(s[a], r[a], dims[a], [betas[2 * a], betas[2 * a + 1]], periods[a], max_order))
        .collect();

    let samples_per_metre = fs / c;
    let length = match length {
        Some(len) => len,
        None => {
            // longest delay among admitted images
            let mut far: f64 = 0.0;
            for ix in &axes[0] {
                for iy in &axes[1] {
                    for iz in &axes[2] {
                        if max_order.is_some_and(|n| ix.order + iy.order + iz.order > n) {
                            continue;
                        }
                        let d = (ix.offset * ix.offset + iy.offset * iy.offset + iz.offset * iz.offset).sqrt();
                        far = far.max(d);
                    }
                }
            }
            (far * samples_per_metre).ceil() as usize + hw + 1
        }
    };
    let horizon = (length + hw) as f64;

    let mut taps = vec![0.0; length];
    for ix in &axes[0] {
        for iy in &axes[1] {
            let oxy = ix.order + iy.order;
            if max_order.is_some_and(|n| oxy > n) {
                continue;
            }
            let gxy = ix.gain * iy.gain;
            let dxy2 = ix.offset * ix.offset + iy.offset * iy.offset;
            for iz in &axes[2] {
                if max_order.is_some_and(|n| oxy + iz.order > n) {
                    continue;
                }
                let d = (dxy2 + iz.offset * iz.offset).sqrt();
                let delay = d * samples_per_metre;
                if delay >= horizon {
                    continue;
                }
                let gain = gxy * iz.gain;
                if gain == 0.0 {
                    continue;
                }
                add_fractional_impulse(&mut taps, delay, gain / (4.0 * PI * d), hw);
            }
        }
    }
    if config.highpass {
        highpass_in_place(&mut taps, sample_rate);
    }
    Ok(Rir {
        taps,
        sample_rate,
        source: *source,
        mic: *mic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anechoic_direct_path_is_analytic() {
        let room = RoomSpec::with_coefficients([10.0, 10.0, 10.0], [0.0; 6]);
        let src = Point3::new(2.0, 5.0, 5.0);
        let mic = Point3::new(5.43, 5.0, 5.0);
        let cfg = RirConfig {
            truncation: Truncation::MaxOrder(3),
            highpass: false,
            ..RirConfig::default()
        };
        let rir = generate_rir(&room, &src, &mic, 16000, &cfg).unwrap();
        let peak = rir
            .taps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        assert_eq!(peak.0, 160);
        let expected = 1.0 / (4.0 * PI * 3.43);
        assert!((peak.1 - expected).abs() < 1e-12, "{} vs {expected}", peak.1);
        assert!((expected - 0.0232).abs() < 1e-4);
        // delay is (numerically) an integer: the kernel collapses to one tap
        let off_peak: f64 = rir.taps.iter().enumerate().filter(|(i, _)| *i != 160).map(|(_, v)| v.abs()).sum();
        assert!(off_peak < 1e-12);
    }

    #[test]
    fn first_energy_respects_direct_delay() {
        let room = RoomSpec::with_coefficients([5.0, 4.0, 3.0], [0.8; 6]);
        let src = Point3::new(1.0, 1.0, 1.5);
        let mic = Point3::new(3.7, 2.9, 1.2);
        let cfg = RirConfig {
            truncation: Truncation::MaxOrder(4),
            highpass: false,
            ..RirConfig::default()
        };
        let rir = generate_rir(&room, &src, &mic, 16000, &cfg).unwrap();
        let direct = src.distance(&mic) / 343.0 * 16000.0;
        let first = rir.taps.iter().position(|v| *v != 0.0).unwrap();
        assert!(first as f64 >= direct - 40.0);
    }

    #[test]
    fn geometry_errors() {
        let room = RoomSpec::cube(4.0, 0.4);
        let cfg = RirConfig::default();
        let p = Point3::new(1.0, 1.0, 1.0);
        assert!(matches!(generate_rir(&room, &p, &p, 16000, &cfg), Err(Error::Geometry(_))));
        let outside = Point3::new(4.05, 1.0, 1.0);
        assert!(matches!(generate_rir(&room, &outside, &p, 16000, &cfg), Err(Error::Geometry(_))));
        let on_margin = Point3::new(0.05, 1.0, 1.0);
        assert!(matches!(generate_rir(&room, &p, &on_margin, 16000, &cfg), Err(Error::Geometry(_))));
    }

    #[test]
    fn duration_truncation_sets_length() {
        let room = RoomSpec::cube(4.0, 0.3);
        let cfg = RirConfig {
            truncation: Truncation::Duration(0.2),
            ..RirConfig::default()
        };
        let rir = generate_rir(&room, &Point3::new(1.0, 1.0, 1.0), &Point3::new(3.0, 2.0, 1.5), 16000, &cfg).unwrap();
        assert_eq!(rir.len(), 3200);
        let auto = generate_rir(&room, &Point3::new(1.0, 1.0, 1.0), &Point3::new(3.0, 2.0, 1.5), 16000, &RirConfig::default()).unwrap();
        assert_eq!(auto.len(), (1.25f64 * 0.3 * 16000.0).ceil() as usize);
    }

    #[test]
    fn highpass_removes_dc() {
        let room = RoomSpec::cube(5.0, 0.4);
        let plain_cfg = RirConfig {
            highpass: false,
            ..RirConfig::default()
        };
        let rir = generate_rir(&room, &Point3::new(1.0, 2.0, 1.5), &Point3::new(3.5, 2.5, 1.2), 16000, &RirConfig::default()).unwrap();
        let plain = generate_rir(&room, &Point3::new(1.0, 2.0, 1.5), &Point3::new(3.5, 2.5, 1.2), 16000, &plain_cfg).unwrap();
        let dc_hp: f64 = rir.taps.iter().sum();
        let dc: f64 = plain.taps.iter().sum();
        assert!(dc_hp.abs() < 0.1 * dc.abs());
        assert!(rir.taps.iter().all(|v| v.is_finite()));
    }
}
