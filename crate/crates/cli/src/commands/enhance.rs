use std::path::Path;

use farfield_core::beamform::{beamform, TdoaTrack};
use farfield_core::wav::{read_wav, write_wav, WavEncoding};
use farfield_core::wpe::{wpe_block_online, wpe_dereverberate};
use farfield_core::{AudioBuffer, Error, Result};

use super::write_json;
use crate::config::PipelineConfig;
use crate::manifest::{output_file, Manifest, Record};

#[derive(Debug, Clone, Default)]
pub struct EnhanceOptions {
    pub skip_wpe: bool,
    pub skip_beamform: bool,
    /// Run WPE blockwise with blocks of this many seconds.
    pub block_seconds: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Enhanced {
    pub audio: AudioBuffer,
    /// Per-iteration WPE cost, batch mode only.
    pub wpe_costs: Option<Vec<f64>>,
    pub track: Option<TdoaTrack>,
}

/// WPE on all channels, then TDOA tracking and delay-and-sum to mono.
/// With both stages skipped the reference channel is returned.
pub fn enhance_audio(input: &AudioBuffer, config: &PipelineConfig, opts: &EnhanceOptions) -> Result<Enhanced> {
    if input.num_frames() == 0 {
        return Err(Error::Data("input audio is empty".into()));
    }
    let reference = config.beamform.reference_channel;
    if reference >= input.num_channels() {
        return Err(Error::Config(format!(
            "reference channel {reference} but input has {} channels",
            input.num_channels()
        )));
    }
    let (dereverbed, wpe_costs) = if opts.skip_wpe {
        (input.clone(), None)
    } else if let Some(block) = opts.block_seconds {
        (wpe_block_online(input, &config.wpe, block)?, None)
    } else {
        let out = wpe_dereverberate(input, &config.wpe)?;
        (out.audio, Some(out.state.costs))
    };
    let (audio, track) = if opts.skip_beamform {
        (dereverbed.select_channel(reference)?, None)
    } else {
        let (audio, track) = beamform(&dereverbed, &config.beamform)?;
        (audio, Some(track))
    };
    Ok(Enhanced {
        audio,
        wpe_costs,
        track,
    })
}

pub struct EnhancePaths<'a> {
    pub input: &'a Path,
    pub output: &'a Path,
    pub tdoa_out: Option<&'a Path>,
    pub cost_out: Option<&'a Path>,
}

pub fn run(config: &PipelineConfig, opts: &EnhanceOptions, paths: &EnhancePaths) -> Result<Manifest> {
    let input = read_wav(paths.input)?;
    let result = enhance_audio(&input, config, opts)?;
    if let Some(dir) = paths.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        super::create_dir(dir)?;
    }
    write_wav(&result.audio, paths.output, WavEncoding::Float32)?;
    let dir = paths.output.parent().unwrap_or(Path::new(""));
    let name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut outputs = vec![output_file(dir, &name(paths.output))?];
    if let (Some(p), Some(track)) = (paths.tdoa_out, &result.track) {
        write_json(p, track)?;
        outputs.push(output_file(p.parent().unwrap_or(Path::new("")), &name(p))?);
    }
    if let (Some(p), Some(costs)) = (paths.cost_out, &result.wpe_costs) {
        write_json(p, costs)?;
        outputs.push(output_file(p.parent().unwrap_or(Path::new("")), &name(p))?);
    }
    log::info!("enhanced {} -> {}", paths.input.display(), paths.output.display());
    let record = Record {
        input: Some(paths.input.display().to_string()),
        outputs,
        stream_id: None,
        params: serde_json::json!({
            "wpe": !opts.skip_wpe,
            "beamform": !opts.skip_beamform,
            "block_seconds": opts.block_seconds,
        }),
    };
    Ok(Manifest::new("enhance", config.echo(), vec![record]))
}
