//! Far-field speech corpus simulation and enhancement.
//!
//! The crate covers the signal path used to turn close-talk recordings into
//! simulated distant-microphone training data, the test-time enhancement
//! chain for real array recordings, and the word-level reliability filter
//! that feeds speaker-adaptation statistics:
//!
//! * [`audio`], [`wav`], [`stft`], [`rng`]: containers, file I/O, time-frequency
//!   transforms and named random streams.
//! * [`rir`]: image-method room impulse responses and T60 utilities.
//! * [`augment`]: scenario sampling, noise chunk extraction, convolution,
//!   SNR mixing, intensity normalisation and speed/volume perturbation.
//! * [`wpe`]: iterative weighted-prediction-error dereverberation.
//! * [`beamform`]: GCC-PHAT delay tracking and weighted delay-and-sum.
//! * [`reliability`]: confident-word region selection and frame masks.

pub mod audio;
pub mod augment;
pub mod beamform;
pub mod dsp;
pub mod error;
pub mod reliability;
pub mod rir;
pub mod rng;
pub mod stft;
pub mod wpe;
pub mod wav;

pub use audio::AudioBuffer;
pub use error::{Error, ErrorClass, Result};
pub use rng::SeededRng;
