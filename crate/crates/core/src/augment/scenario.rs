use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rir::{Point3, Reflection, RoomSpec, DEFAULT_SPEED_OF_SOUND, WALL_MARGIN};
use crate::rng::SeededRng;

pub const MAX_NOISE_SOURCES: usize = 3;
const MAX_T60: f64 = 0.9;
const SNR_LIMITS: [f64; 2] = [0.0, 30.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Chime5,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomDistribution {
    /// Cube with edge length uniform on `[min, max]` metres.
    Cube { edge: [f64; 2] },
    /// Box with each side uniform on its own range.
    Box { x: [f64; 2], y: [f64; 2], z: [f64; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T60Distribution {
    /// Gaussian restricted to `(min, max]` by rejection.
    TruncatedGaussian { mean: f64, sd: f64, min: f64, max: f64 },
    Uniform { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MicPlacement {
    /// Array with fixed offsets around a centre drawn uniformly in the room.
    Array { offsets: Vec<Point3> },
    /// Microphone positions taken as given, e.g. read off a floor plan.
    Fixed { positions: Vec<Point3> },
}

impl MicPlacement {
    /// Four-element linear array, 4 cm spacing along x.
    pub fn linear_array() -> Self {
        MicPlacement::Array {
            offsets: [-0.06, -0.02, 0.02, 0.06].iter().map(|&x| Point3::new(x, 0.0, 0.0)).collect(),
        }
    }

    fn len(&self) -> usize {
        match self {
            MicPlacement::Array { offsets } => offsets.len(),
            MicPlacement::Fixed { positions } => positions.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerProfile {
    pub name: ProfileName,
    pub room: RoomDistribution,
    pub t60: T60Distribution,
    pub snr_db: [f64; 2],
    pub noise_count: [usize; 2],
    pub mics: MicPlacement,
    /// Minimum source-to-microphone distance, metres.
    #[serde(default = "default_min_distance")]
    pub min_source_distance: f64,
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

fn default_min_distance() -> f64 {
    0.3
}

fn default_attempts() -> usize {
    1000
}

impl SamplerProfile {
    /// Cube rooms, truncated-Gaussian T60 on (0.05, 0.9] s, 0-3 noise sources
    /// and SNR uniform on [0, 30] dB.
    pub fn chime5() -> Self {
        SamplerProfile {
            name: ProfileName::Chime5,
            room: RoomDistribution::Cube { edge: [3.0, 8.0] },
            t60: T60Distribution::TruncatedGaussian {
                mean: 0.45,
                sd: 0.15,
                min: 0.05,
                max: 0.9,
            },
            snr_db: SNR_LIMITS,
            noise_count: [0, MAX_NOISE_SOURCES],
            mics: MicPlacement::linear_array(),
            min_source_distance: default_min_distance(),
            max_attempts: default_attempts(),
        }
    }

    /// Wider box rooms with uniform T60, for many-RIR augmentation.
    pub fn synthetic() -> Self {
        SamplerProfile {
            name: ProfileName::Synthetic,
            room: RoomDistribution::Box {
                x: [2.0, 20.0],
                y: [2.0, 20.0],
                z: [2.2, 5.0],
            },
            t60: T60Distribution::Uniform { min: 0.1, max: 0.9 },
            ..Self::chime5()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let range_ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        match &self.room {
            RoomDistribution::Cube { edge } => {
                if !range_ok(*edge) || edge[0] <= 2.0 * WALL_MARGIN {
                    return bad(format!("cube edge range {edge:?} is invalid"));
                }
            }
            RoomDistribution::Box { x, y, z } => {
                for r in [x, y, z] {
                    if !range_ok(*r) || r[0] <= 2.0 * WALL_MARGIN {
                        return bad(format!("room side range {r:?} is invalid"));
                    }
                }
            }
        }
        let (lo, hi) = match self.t60 {
            T60Distribution::TruncatedGaussian { mean, sd, min, max } => {
                if !(sd > 0.0 && mean.is_finite()) {
                    return bad("T60 Gaussian needs finite mean and positive sd".into());
                }
                (min, max)
            }
            T60Distribution::Uniform { min, max } => (min, max),
        };
        if !(lo >= 0.0 && lo < hi && hi <= MAX_T60) {
            return bad(format!("T60 support ({lo}, {hi}] must lie within (0, {MAX_T60}]"));
        }
        if !range_ok(self.snr_db) || self.snr_db[0] < SNR_LIMITS[0] || self.snr_db[1] > SNR_LIMITS[1] {
            return bad(format!("SNR range {:?} must lie within {SNR_LIMITS:?} dB", self.snr_db));
        }
        if self.noise_count[0] > self.noise_count[1] || self.noise_count[1] > MAX_NOISE_SOURCES {
            return bad(format!("noise count range {:?} must lie within 0..={MAX_NOISE_SOURCES}", self.noise_count));
        }
        if self.mics.len() == 0 {
            return bad("at least one microphone is required".into());
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive".into());
        }
        Ok(())
    }

    fn draw_t60(&self, rng: &mut SeededRng) -> Result<f64> {
        match self.t60 {
            T60Distribution::Uniform { min, max } => {
                // (min, max]: reflect the half-open draw
                Ok(max - rng.random_range(0.0..(max - min)))
            }
            T60Distribution::TruncatedGaussian { mean, sd, min, max } => {
                let normal = Normal::new(mean, sd).map_err(|e| Error::Config(e.to_string()))?;
                for _ in 0..self.max_attempts {
                    let v = normal.sample(rng);
                    if v > min && v <= max {
                        return Ok(v);
                    }
                }
                Err(Error::Sampler(self.max_attempts))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedIdentity {
    pub master_seed: u64,
    pub stream_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSource {
    pub position: Point3,
    /// Indices into the noise chunk pool, in playback order. Filled in when
    /// the noise is assembled for a concrete utterance length.
    #[serde(default)]
    pub chunk_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomScenario {
    pub room: RoomSpec,
    pub speaker_position: Point3,
    pub mic_positions: Vec<Point3>,
    pub t60: f64,
    pub noise_sources: Vec<NoiseSource>,
    pub snr_db: f64,
    pub seed: SeedIdentity,
}

impl RoomScenario {
    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        let fail = |m: String| Err(Error::Config(m));
        if self.noise_sources.len() > MAX_NOISE_SOURCES {
            return fail(format!("{} noise sources (max {MAX_NOISE_SOURCES})", self.noise_sources.len()));
        }
        if !(self.snr_db >= SNR_LIMITS[0] && self.snr_db <= SNR_LIMITS[1]) {
            return fail(format!("SNR {} dB outside {SNR_LIMITS:?}", self.snr_db));
        }
        if !(self.t60 > 0.0 && self.t60 <= MAX_T60) {
            return fail(format!("T60 {} s outside (0, {MAX_T60}]", self.t60));
        }
        if self.mic_positions.is_empty() {
            return fail("scenario has no microphones".into());
        }
        let points = std::iter::once(&self.speaker_position)
            .chain(&self.mic_positions)
            .chain(self.noise_sources.iter().map(|n| &n.position));
        for p in points {
            if !self.room.contains(p, WALL_MARGIN) {
                return Err(Error::Geometry(format!("position {p:?} is outside the room margin")));
            }
        }
        Ok(())
    }
}

fn uniform_point(rng: &mut SeededRng, dims: [f64; 3], margin: f64) -> Point3 {
    let mut c = [0.0; 3];
    for (v, l) in c.iter_mut().zip(dims) {
        *v = rng.random_range(margin..=l - margin);
    }
    Point3::new(c[0], c[1], c[2])
}

fn draw_range(rng: &mut SeededRng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

/// Draws one scenario, resampling until every invariant holds.
pub fn sample_scenario(profile: &SamplerProfile, rng: &mut SeededRng) -> Result<RoomScenario> {
    profile.validate()?;
    let seed = SeedIdentity {
        master_seed: rng.master_seed(),
        stream_id: rng.stream_id().to_string(),
    };
    for _ in 0..profile.max_attempts {
        let dims = match &profile.room {
            RoomDistribution::Cube { edge } => [draw_range(rng, *edge); 3],
            RoomDistribution::Box { x, y, z } => [draw_range(rng, *x), draw_range(rng, *y), draw_range(rng, *z)],
        };
        let t60 = profile.draw_t60(rng)?;
        let mic_positions = match &profile.mics {
            MicPlacement::Fixed { positions } => positions.clone(),
            MicPlacement::Array { offsets } => {
                let centre = uniform_point(rng, dims, WALL_MARGIN);
                offsets
                    .iter()
                    .map(|o| Point3::new(centre.x + o.x, centre.y + o.y, centre.z + o.z))
                    .collect()
            }
        };
        let speaker_position = uniform_point(rng, dims, WALL_MARGIN);
        let count = rng.random_range(profile.noise_count[0]..=profile.noise_count[1]);
        let noise_sources = (0..count)
            .map(|_| NoiseSource {
                position: uniform_point(rng, dims, WALL_MARGIN),
                chunk_ids: Vec::new(),
            })
            .collect::<Vec<_>>();
        let snr_db = draw_range(rng, profile.snr_db);

        let scenario = RoomScenario {
            room: RoomSpec {
                dimensions: dims,
                reflection: Reflection::T60(t60),
                speed_of_sound: DEFAULT_SPEED_OF_SOUND,
            },
            speaker_position,
            mic_positions,
            t60,
            noise_sources,
            snr_db,
            seed: seed.clone(),
        };
        if scenario.validate().is_err() {
            continue;
        }
        let sources = std::iter::once(&scenario.speaker_position).chain(scenario.noise_sources.iter().map(|n| &n.position));
        let too_close = sources
            .flat_map(|s| scenario.mic_positions.iter().map(move |m| s.distance(m)))
            .any(|d| d < profile.min_source_distance);
        if too_close {
            continue;
        }
        return Ok(scenario);
    }
    Err(Error::Sampler(profile.max_attempts))
}
