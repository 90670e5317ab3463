#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use farfield_cli::PipelineConfig;
use farfield_core::augment::{noise_chunk_file_name, NoiseProvenance, RoomDistribution, SamplerProfile, T60Distribution};
use farfield_core::wav::{write_wav, WavEncoding};
use farfield_core::AudioBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tempfile::TempDir;

pub const FS: u32 = 8000;

/// Runs the command line in-process and returns the exit status.
pub fn cli(args: &[&str]) -> i32 {
    let mut full = vec!["farfield"];
    full.extend_from_slice(args);
    farfield_cli::run(full)
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Resonant noise gated on and off at a syllabic rate.
pub fn speech_like(rng: &mut ChaCha8Rng, n: usize, fs: u32) -> Vec<f64> {
    let e = gaussian(rng, n);
    let (r, w) = (0.95, 2.0 * std::f64::consts::PI * 700.0 / fs as f64);
    let (a1, a2) = (2.0 * r * w.cos(), -r * r);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let y1 = if i > 0 { y[i - 1] } else { 0.0 };
        let y2 = if i > 1 { y[i - 2] } else { 0.0 };
        y[i] = e[i] + a1 * y1 + a2 * y2;
    }
    let syllable = fs as usize / 10;
    let mut gate = 1.0;
    let mut next = 0;
    for (i, v) in y.iter_mut().enumerate() {
        if i >= next {
            next = i + rng.random_range(syllable..3 * syllable);
            gate = if rng.random_bool(0.7) { 1.0 } else { 0.02 };
        }
        *v *= gate;
    }
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    y.iter().map(|v| 0.3 * v / peak).collect()
}

/// Small rooms with short reverberation so simulation stays quick.
pub fn quick_config() -> PipelineConfig {
    PipelineConfig {
        sample_rate: FS,
        profile: SamplerProfile {
            room: RoomDistribution::Box {
                x: [4.0, 7.0],
                y: [4.0, 7.0],
                z: [2.5, 3.5],
            },
            t60: T60Distribution::Uniform { min: 0.15, max: 0.35 },
            ..SamplerProfile::chime5()
        },
        ..PipelineConfig::default()
    }
}

pub struct Corpus {
    pub dir: TempDir,
    pub list: PathBuf,
    pub noise_dir: PathBuf,
    pub config: PathBuf,
}

/// `utterances` clean files over two sessions, four noise chunks and a
/// quick configuration file.
pub fn corpus(utterances: usize) -> Corpus {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let clean = dir.path().join("clean");
    fs::create_dir(&clean).unwrap();
    let mut list = Vec::new();
    for i in 0..utterances {
        let n = rng.random_range(FS as usize..3 * FS as usize / 2);
        let audio = AudioBuffer::mono(FS, speech_like(&mut rng, n, FS)).unwrap();
        let name = format!("utt{i:02}.wav");
        write_wav(&audio, clean.join(&name), WavEncoding::Pcm16).unwrap();
        list.push(serde_json::json!({
            "id": format!("S0{}-utt{i:02}", 1 + i % 2),
            "path": format!("clean/{name}"),
            "session": format!("S0{}", 1 + i % 2),
        }));
    }
    let list_path = dir.path().join("utterances.json");
    fs::write(&list_path, serde_json::to_string_pretty(&list).unwrap()).unwrap();

    let noise_dir = dir.path().join("noise");
    fs::create_dir(&noise_dir).unwrap();
    for k in 0..4 {
        let audio = AudioBuffer::mono(FS, gaussian(&mut rng, 20 * FS as usize).iter().map(|v| 0.05 * v).collect()).unwrap();
        let prov = NoiseProvenance {
            session_id: format!("S0{}", 1 + k % 2),
            channel: k / 2,
            offset: 20.0 * k as f64,
        };
        write_wav(&audio, noise_dir.join(noise_chunk_file_name(&prov)), WavEncoding::Float32).unwrap();
    }

    let config = dir.path().join("config.json");
    fs::write(&config, serde_json::to_string_pretty(&quick_config()).unwrap()).unwrap();
    Corpus {
        list: list_path,
        noise_dir,
        config,
        dir,
    }
}

/// Every file below `dir`, keyed by relative path.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}
