//! Command-line driver for far-field corpus simulation, enhancement and
//! reliable-region selection.
//!
//! Every subcommand reads an optional JSON [`PipelineConfig`], takes
//! `--seed`, `--workers` and `--manifest-out`, logs JSON lines on stderr and
//! writes data only to files. Exit status is 0 on success, 1 for usage or
//! configuration errors, 2 for bad input data and 3 for I/O failures.

pub mod commands;
pub mod config;
pub mod error;
pub mod logging;
pub mod manifest;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use farfield_core::Result;

pub use config::PipelineConfig;
pub use manifest::Manifest;

#[derive(Debug, Parser)]
#[command(name = "farfield", version, about = "Far-field speech corpus simulation and enhancement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON pipeline configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the configuration file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Where to write the run manifest.
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample room scenarios and write their impulse responses.
    RirGen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Reverberate clean utterances and add point-source noise.
    Augment {
        #[command(flatten)]
        common: Common,
        /// JSON list of {id, path, session}.
        #[arg(long)]
        input: PathBuf,
        /// Directory of 20 s noise chunks.
        #[arg(long)]
        noise_dir: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// One scenario per session instead of per utterance.
        #[arg(long)]
        reuse_scenario_per_session: bool,
        /// Keep a seeded random subset of this many utterances.
        #[arg(long)]
        subset: Option<usize>,
        #[arg(long)]
        speed_perturb: bool,
        #[arg(long)]
        volume_perturb: bool,
    },
    /// Cut non-speech parts of session recordings into noise chunks.
    ExtractNoise {
        #[command(flatten)]
        common: Common,
        /// JSON list of {session_id, path}.
        #[arg(long)]
        recordings: PathBuf,
        /// JSON list of {session_id, start, end, speaker}.
        #[arg(long)]
        annotations: PathBuf,
        /// Channel to use; repeatable, default all.
        #[arg(long = "channel")]
        channels: Vec<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Dereverberate and beamform a multichannel recording.
    Enhance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        no_wpe: bool,
        #[arg(long)]
        no_beamform: bool,
        /// Run WPE in blocks of this many seconds.
        #[arg(long)]
        block_seconds: Option<f64>,
        #[arg(long)]
        taps: Option<usize>,
        #[arg(long)]
        delay: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Write the TDOA track as JSON.
        #[arg(long)]
        tdoa_out: Option<PathBuf>,
        /// Write the per-iteration WPE cost as JSON.
        #[arg(long)]
        cost_out: Option<PathBuf>,
    },
    /// Keep confidently recognized word regions of a CTM.
    SelectReliable {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ctm: PathBuf,
        #[arg(long)]
        regions_out: PathBuf,
        /// Per-utterance frame masks as JSON.
        #[arg(long)]
        mask_out: Option<PathBuf>,
        /// JSON object of utterance durations in seconds.
        #[arg(long)]
        durations: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        frame_shift: f64,
        #[arg(long)]
        min_posterior: Option<f64>,
        #[arg(long)]
        max_duration: Option<f64>,
        /// Additional excluded token; repeatable.
        #[arg(long = "exclude")]
        exclude: Vec<String>,
    },
}

fn load(common: &Common) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::load(common.config.as_deref())?;
    if common.seed.is_some() {
        config.master_seed = common.seed;
    }
    if common.workers.is_some() {
        config.workers = common.workers;
    }
    config.validate()?;
    Ok(config)
}

fn finish(manifest: Manifest, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => manifest.write(p),
        None => Ok(()),
    }
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RirGen { common, count, out_dir } => {
            let config = load(&common)?;
            let m = commands::rir_gen::run(&config, count, &out_dir)?;
            finish(m, Some(&common.manifest_out.unwrap_or_else(|| out_dir.join("manifest.json"))))
        }
        Command::Augment {
            common,
            input,
            noise_dir,
            out_dir,
            reuse_scenario_per_session,
            subset,
            speed_perturb,
            volume_perturb,
        } => {
            let mut config = load(&common)?;
            let a = &mut config.augment;
            a.reuse_scenario_per_session |= reuse_scenario_per_session;
            a.speed_perturb |= speed_perturb;
            a.volume_perturb |= volume_perturb;
            if subset.is_some() {
                a.subset = subset;
            }
            let m = commands::augment::run(&config, &input, noise_dir.as_deref(), &out_dir)?;
            finish(m, Some(&common.manifest_out.unwrap_or_else(|| out_dir.join("manifest.json"))))
        }
        Command::ExtractNoise {
            common,
            recordings,
            annotations,
            channels,
            out_dir,
        } => {
            let config = load(&common)?;
            let m = commands::extract_noise::run(&config, &recordings, &annotations, &channels, &out_dir)?;
            finish(m, Some(&common.manifest_out.unwrap_or_else(|| out_dir.join("manifest.json"))))
        }
        Command::Enhance {
            common,
            input,
            output,
            no_wpe,
            no_beamform,
            block_seconds,
            taps,
            delay,
            iterations,
            tdoa_out,
            cost_out,
        } => {
            let mut config = load(&common)?;
            config.wpe.taps = taps.unwrap_or(config.wpe.taps);
            config.wpe.delay = delay.unwrap_or(config.wpe.delay);
            config.wpe.iterations = iterations.unwrap_or(config.wpe.iterations);
            config.validate()?;
            let opts = commands::enhance::EnhanceOptions {
                skip_wpe: no_wpe,
                skip_beamform: no_beamform,
                block_seconds,
            };
            let paths = commands::enhance::EnhancePaths {
                input: &input,
                output: &output,
                tdoa_out: tdoa_out.as_deref(),
                cost_out: cost_out.as_deref(),
            };
            let m = commands::with_workers(config.workers, || commands::enhance::run(&config, &opts, &paths))??;
            finish(m, common.manifest_out.as_deref())
        }
        Command::SelectReliable {
            common,
            ctm,
            regions_out,
            mask_out,
            durations,
            frame_shift,
            min_posterior,
            max_duration,
            exclude,
        } => {
            let mut config = load(&common)?;
            let rule = &mut config.reliability;
            rule.min_posterior = min_posterior.unwrap_or(rule.min_posterior);
            rule.max_duration = max_duration.unwrap_or(rule.max_duration);
            rule.excluded_tokens.extend(exclude.into_iter().map(|t| t.to_lowercase()));
            config.validate()?;
            let paths = commands::select_reliable::SelectPaths {
                ctm: &ctm,
                regions_out: &regions_out,
                mask_out: mask_out.as_deref(),
                durations: durations.as_deref(),
            };
            let m = commands::select_reliable::run(&config, frame_shift, &paths)?;
            finish(m, common.manifest_out.as_deref())
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    logging::init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_CONFIG } else { error::EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => error::EXIT_OK,
        Err(e) => {
            log::error!("{e}");
            error::exit_code(&e)
        }
    }
}
