//! End-to-end runs of each subcommand against small on-disk fixtures.

mod common;

use std::fs;
use std::process::Command;

use common::{cli, corpus, p, quick_config, speech_like, FS};
use farfield_cli::commands::rir_gen::RirSidecar;
use farfield_cli::Manifest;
use farfield_core::augment::{RoomDistribution, SamplerProfile};
use farfield_core::dsp::fft_convolve;
use farfield_core::rir::{generate_rir, Point3, RirConfig, RoomSpec, Truncation};
use farfield_core::wav::{read_wav, write_wav, WavEncoding};
use farfield_core::AudioBuffer;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn binary(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_farfield")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn checksums(m: &Manifest) -> Vec<String> {
    m.records.iter().flat_map(|r| r.outputs.iter().map(|o| o.sha256.clone())).collect()
}

#[test]
fn rir_gen_zero_count_writes_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rirs");
    assert_eq!(cli(&["rir-gen", "--seed", "1", "--count", "0", "--out-dir", p(&out)]), 0);
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    assert!(m.records.is_empty());
    assert_eq!(m.command, "rir-gen");
}

#[test]
fn rir_gen_is_deterministic() {
    let c = corpus(0);
    let (a, b) = (c.dir.path().join("a"), c.dir.path().join("b"));
    for (out, workers) in [(&a, "1"), (&b, "2")] {
        let code = cli(&["rir-gen", "--config", p(&c.config), "--seed", "5", "--workers", workers, "--count", "10", "--out-dir", p(out)]);
        assert_eq!(code, 0);
    }
    let ma = Manifest::read(&a.join("manifest.json")).unwrap();
    let mb = Manifest::read(&b.join("manifest.json")).unwrap();
    assert_eq!(ma.records.len(), 10);
    assert_eq!(checksums(&ma), checksums(&mb));
    assert_eq!(common::tree(&a), common::tree(&b));
}

#[test]
fn rir_gen_sidecars_satisfy_scenario_invariants() {
    let dir = tempfile::tempdir().unwrap();
    // full-size rooms, low image order so 100 sets stay cheap
    let config = farfield_cli::PipelineConfig {
        sample_rate: FS,
        rir: RirConfig {
            truncation: Truncation::MaxOrder(2),
            ..RirConfig::default()
        },
        ..Default::default()
    };
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = dir.path().join("rirs");
    assert_eq!(cli(&["rir-gen", "--config", p(&cfg_path), "--seed", "11", "--count", "100", "--out-dir", p(&out)]), 0);
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(m.records.len(), 100);
    for i in 0..100 {
        let sidecar: RirSidecar = serde_json::from_slice(&fs::read(out.join(format!("rir-{i:06}.json"))).unwrap()).unwrap();
        let s = &sidecar.scenario;
        s.validate().unwrap();
        assert!(s.noise_sources.len() <= 3);
        assert!((0.0..=30.0).contains(&s.snr_db));
        assert!(s.t60 > 0.0 && s.t60 <= 0.9);
        let edge = s.room.dimensions[0];
        assert!(s.room.dimensions.iter().all(|&d| d == edge) && (3.0..=8.0).contains(&edge));
        let audio = read_wav(out.join(format!("rir-{i:06}.wav"))).unwrap();
        assert_eq!(audio.num_channels(), s.mic_positions.len());
        assert_eq!(sidecar.lengths.len(), s.mic_positions.len());
    }
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["rir-gen", "--count", "1", "--out-dir", p(&dir.path().join("x"))]), 1);
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"master_seed": 1, "sampel_rate": 8000}"#).unwrap();
    let (code, stderr) = binary(&["rir-gen", "--config", p(&cfg), "--count", "1", "--out-dir", p(&dir.path().join("x"))]);
    assert_eq!(code, 1);
    assert!(stderr.contains("sampel_rate"), "{stderr}");
    for line in stderr.lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn usage_error_exits_one() {
    assert_eq!(cli(&["rir-gen", "--count", "many"]), 1);
    assert_eq!(cli(&["no-such-command"]), 1);
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("absent.json");
    assert_eq!(cli(&["rir-gen", "--config", p(&cfg), "--seed", "1", "--count", "1", "--out-dir", p(dir.path())]), 3);
}

#[test]
fn augment_empty_list() {
    let c = corpus(0);
    let out = c.dir.path().join("out");
    let code = cli(&["augment", "--config", p(&c.config), "--seed", "3", "--input", p(&c.list), "--noise-dir", p(&c.noise_dir), "--out-dir", p(&out)]);
    assert_eq!(code, 0);
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    assert!(m.records.is_empty());
    assert_eq!(fs::read_dir(&out).unwrap().count(), 1);
}

#[test]
fn augment_rerun_is_byte_identical_and_snr_audits() {
    let c = corpus(4);
    let (a, b) = (c.dir.path().join("a"), c.dir.path().join("b"));
    for out in [&a, &b] {
        let code = cli(&["augment", "--config", p(&c.config), "--seed", "21", "--input", p(&c.list), "--noise-dir", p(&c.noise_dir), "--out-dir", p(out)]);
        assert_eq!(code, 0);
    }
    assert_eq!(common::tree(&a), common::tree(&b));

    let m = Manifest::read(&a.join("manifest.json")).unwrap();
    assert_eq!(m.records.len(), 4);
    let mut audited = 0;
    for r in &m.records {
        let snr = r.params["scenario"]["snr_db"].as_f64().unwrap();
        let sources = r.params["scenario"]["noise_sources"].as_array().unwrap().len();
        let mics = r.params["mics"].as_array().unwrap();
        // one output per simulated microphone, each listed once
        assert_eq!(mics.len(), r.outputs.len());
        for (mic, out) in mics.iter().zip(&r.outputs) {
            assert_eq!(mic["output"].as_str().unwrap(), out.path);
            let (ps, pn) = (mic["speech_power"].as_f64().unwrap(), mic["noise_power"].as_f64().unwrap());
            if sources == 0 {
                assert_eq!(pn, 0.0);
                continue;
            }
            if out.path.ends_with("-m0.wav") {
                let measured = 10.0 * (ps / pn).log10();
                assert!((measured - snr).abs() < 0.01, "{}: {measured} vs {snr}", r.input.as_deref().unwrap());
                audited += 1;
            }
        }
    }
    assert!(audited > 0, "fixture drew no noise sources");
}

#[test]
fn augment_reuses_scenarios_within_a_session() {
    let c = corpus(4);
    let out = c.dir.path().join("out");
    let code = cli(&[
        "augment", "--config", p(&c.config), "--seed", "8", "--input", p(&c.list), "--noise-dir", p(&c.noise_dir),
        "--out-dir", p(&out), "--reuse-scenario-per-session",
    ]);
    assert_eq!(code, 0);
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    let room = |i: usize| m.records[i].params["scenario"]["room"].clone();
    let session = |i: usize| m.records[i].params["utterance_id"].as_str().unwrap()[..3].to_string();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(session(i) == session(j), room(i) == room(j), "records {i} and {j}");
        }
    }
}

#[test]
fn augment_speed_perturbation_and_subset() {
    let c = corpus(5);
    let out = c.dir.path().join("out");
    let code = cli(&[
        "augment", "--config", p(&c.config), "--seed", "9", "--input", p(&c.list), "--noise-dir", p(&c.noise_dir),
        "--out-dir", p(&out), "--subset", "2", "--speed-perturb", "--volume-perturb",
    ]);
    assert_eq!(code, 0);
    let m = Manifest::read(&out.join("manifest.json")).unwrap();
    assert_eq!(m.records.len(), 6);
    for r in &m.records {
        let f = r.params["speed_factor"].as_f64().unwrap();
        let v = r.params["volume_factor"].as_f64().unwrap();
        assert!([0.9, 1.0, 1.1].contains(&f));
        assert!((0.8..=2.0).contains(&v));
    }
}

#[test]
fn augment_rejects_bad_inputs() {
    let c = corpus(2);
    let out = c.dir.path().join("out");
    let base = ["augment", "--config", p(&c.config), "--seed", "1", "--noise-dir", p(&c.noise_dir), "--out-dir", p(&out)];
    let bad = c.dir.path().join("bad.json");
    fs::write(&bad, r#"[{"id": "a", "path": "clean/utt00.wav", "speaker": "x"}]"#).unwrap();
    let missing = c.dir.path().join("missing.json");
    fs::write(&missing, r#"[{"id": "a", "path": "clean/none.wav"}]"#).unwrap();
    let mut args = base.to_vec();
    args.extend(["--input", p(&bad)]);
    assert_eq!(cli(&args), 2);
    let mut args = base.to_vec();
    args.extend(["--input", p(&missing)]);
    assert_eq!(cli(&args), 3);
}

#[test]
fn extract_noise_cuts_gaps_per_channel() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 60 * FS as usize;
    let audio = AudioBuffer::new(FS, vec![common::gaussian(&mut rng, n), common::gaussian(&mut rng, n)]).unwrap();
    write_wav(&audio, dir.path().join("S03.wav"), WavEncoding::Float32).unwrap();
    fs::write(dir.path().join("rec.json"), r#"[{"session_id": "S03", "path": "S03.wav"}]"#).unwrap();
    fs::write(
        dir.path().join("ann.json"),
        r#"[{"session_id": "S03", "start": 0.0, "end": 5.0, "speaker": "P09"},
            {"session_id": "S03", "start": 55.0, "end": 60.0, "speaker": "P10"},
            {"session_id": "S04", "start": 20.0, "end": 30.0, "speaker": "P11"}]"#,
    )
    .unwrap();
    let out = dir.path().join("noise");
    let code = cli(&[
        "extract-noise", "--recordings", p(&dir.path().join("rec.json")), "--annotations", p(&dir.path().join("ann.json")),
        "--channel", "1", "--out-dir", p(&out),
    ]);
    assert_eq!(code, 0);
    let mut names: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["S03_1_000005000.wav", "S03_1_000025000.wav", "manifest.json"]);
    let chunk = read_wav(out.join("S03_1_000025000.wav")).unwrap();
    assert_eq!(chunk.num_frames(), 20 * FS as usize);
    let start = 25 * FS as usize;
    for (a, b) in chunk.channel(0).iter().zip(&audio.channel(1)[start..]) {
        assert!((a - b).abs() < 1e-6);
    }
}

fn drr_db(dry: &[f64], y: &[f64], lags: usize, range: std::ops::Range<usize>) -> f64 {
    let rev: Vec<f64> = dry.iter().rev().copied().collect();
    let auto = fft_convolve(dry, &rev);
    let cross = fft_convolve(y, &rev);
    let mid = dry.len() - 1;
    let a = DMatrix::<f64>::from_fn(lags, lags, |i, j| auto[mid + i.abs_diff(j)]);
    let b = DVector::<f64>::from_fn(lags, |i, _| cross[mid + i]);
    let coef: Vec<f64> = a.cholesky().unwrap().solve(&b).iter().copied().collect();
    let fit = fft_convolve(dry, &coef);
    let (mut direct, mut resid) = (0.0, 0.0);
    for n in range {
        direct += fit[n] * fit[n];
        resid += (y[n] - fit[n]).powi(2);
    }
    10.0 * (direct / resid).log10()
}

#[test]
fn enhance_passthrough_equals_reference_channel() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let chans: Vec<Vec<f64>> = (0..3).map(|_| speech_like(&mut rng, FS as usize, FS)).collect();
    let input = AudioBuffer::new(FS, chans).unwrap();
    write_wav(&input, dir.path().join("in.wav"), WavEncoding::Float32).unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"beamform": {"reference_channel": 1}}"#).unwrap();
    let out = dir.path().join("out.wav");
    let code = cli(&["enhance", "--config", p(&cfg), "--input", p(&dir.path().join("in.wav")), "--output", p(&out), "--no-wpe", "--no-beamform"]);
    assert_eq!(code, 0);
    let y = read_wav(&out).unwrap();
    assert_eq!(y.num_channels(), 1);
    assert_eq!(y.channel(0), read_wav(dir.path().join("in.wav")).unwrap().channel(1));
}

#[test]
fn enhance_beats_every_single_channel() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 6 * FS as usize;
    let dry = speech_like(&mut rng, n, FS);
    let room = RoomSpec::with_t60([6.0, 5.0, 3.0], 0.6);
    let src = Point3::new(1.4, 3.6, 1.5);
    let mics: Vec<Point3> = (0..4).map(|k| Point3::new(4.0 + 0.04 * k as f64, 1.5, 1.2)).collect();
    let chans: Vec<Vec<f64>> = mics
        .iter()
        .map(|m| {
            let h = generate_rir(&room, &src, m, FS, &RirConfig::default()).unwrap();
            let mut y = fft_convolve(&dry, &h.taps);
            y.truncate(n);
            y
        })
        .collect();
    let input = AudioBuffer::new(FS, chans).unwrap();
    write_wav(&input, dir.path().join("in.wav"), WavEncoding::Float32).unwrap();
    let out = dir.path().join("out.wav");
    let tdoa = dir.path().join("tdoa.json");
    let code = cli(&["enhance", "--input", p(&dir.path().join("in.wav")), "--output", p(&out), "--tdoa-out", p(&tdoa)]);
    assert_eq!(code, 0);
    let y = read_wav(&out).unwrap();
    assert_eq!(y.num_frames(), n);
    let lags = 3 * 128 + 512;
    let range = FS as usize..n - 1000;
    let best = (0..4).map(|c| drr_db(&dry, input.channel(c), lags, range.clone())).fold(f64::MIN, f64::max);
    let enhanced = drr_db(&dry, y.channel(0), lags, range);
    assert!(enhanced > best, "enhanced {enhanced:.2} dB vs best channel {best:.2} dB");
    assert!(tdoa.exists());
}

#[test]
fn enhance_rejects_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = AudioBuffer::new(FS, vec![vec![], vec![]]).unwrap();
    write_wav(&input, dir.path().join("in.wav"), WavEncoding::Float32).unwrap();
    let (code, stderr) = binary(&["enhance", "--input", p(&dir.path().join("in.wav")), "--output", p(&dir.path().join("o.wav"))]);
    assert_eq!(code, 2, "{stderr}");
    assert!(!dir.path().join("o.wav").exists());
}

const FIVE_LINE_CTM: &str = "\
rec1 1 0.00 0.40 dinner 1.0
rec1 1 0.50 0.40 dinner 0.93
rec1 1 1.00 0.40 <sil> 1.0
rec1 1 1.50 0.50 umm-hmm 1.0
rec1 1 2.10 1.20 great 1.0
";

#[test]
fn select_reliable_golden() {
    let dir = tempfile::tempdir().unwrap();
    let ctm = dir.path().join("in.ctm");
    fs::write(&ctm, FIVE_LINE_CTM).unwrap();
    let (regions, masks, manifest) = (dir.path().join("r.txt"), dir.path().join("m.json"), dir.path().join("manifest.json"));
    let code = cli(&[
        "select-reliable", "--ctm", p(&ctm), "--regions-out", p(&regions), "--mask-out", p(&masks), "--manifest-out", p(&manifest),
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(&regions).unwrap(), "rec1 0 0.4\n");
    let m: serde_json::Value = serde_json::from_slice(&fs::read(&masks).unwrap()).unwrap();
    let mask = m["rec1"].as_array().unwrap();
    assert_eq!(mask.len(), 330);
    assert_eq!(mask.iter().filter(|v| v.as_u64() == Some(1)).count(), 40);
    assert_eq!(Manifest::read(&manifest).unwrap().records[0].outputs.len(), 2);
}

#[test]
fn select_reliable_flags_relax_the_rule() {
    let dir = tempfile::tempdir().unwrap();
    let ctm = dir.path().join("in.ctm");
    fs::write(&ctm, FIVE_LINE_CTM).unwrap();
    let regions = dir.path().join("r.txt");
    let code = cli(&[
        "select-reliable", "--ctm", p(&ctm), "--regions-out", p(&regions), "--min-posterior", "0.9", "--max-duration", "2",
    ]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(&regions).unwrap(), "rec1 0 0.4\nrec1 0.5 0.9\nrec1 2.1 3.3\n");
}

#[test]
fn select_reliable_empty_ctm() {
    let dir = tempfile::tempdir().unwrap();
    let ctm = dir.path().join("in.ctm");
    fs::write(&ctm, "").unwrap();
    let regions = dir.path().join("r.txt");
    assert_eq!(cli(&["select-reliable", "--ctm", p(&ctm), "--regions-out", p(&regions)]), 0);
    assert_eq!(fs::read_to_string(&regions).unwrap(), "");
}

#[test]
fn select_reliable_names_the_bad_line() {
    let dir = tempfile::tempdir().unwrap();
    let ctm = dir.path().join("in.ctm");
    fs::write(&ctm, "rec1 1 0.00 0.40 dinner 1.0\nrec1 1 0.50 oops dinner 1.0\n").unwrap();
    let (code, stderr) = binary(&["select-reliable", "--ctm", p(&ctm), "--regions-out", p(&dir.path().join("r.txt"))]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 2"), "{stderr}");
}

#[test]
fn quick_profile_round_trips_through_json() {
    let config = quick_config();
    let text = serde_json::to_string(&config).unwrap();
    let back: farfield_cli::PipelineConfig = serde_json::from_str(&text).unwrap();
    assert_eq!(back, config);
    assert!(matches!(back.profile, SamplerProfile { room: RoomDistribution::Box { .. }, .. }));
}
