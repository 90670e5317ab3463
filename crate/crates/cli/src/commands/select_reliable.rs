use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use farfield_core::reliability::{format_regions, frame_mask, parse_ctm, select_reliable_regions, ReliableRegion};
use farfield_core::{Error, Result};

use super::{read_json, write_json};
use crate::config::PipelineConfig;
use crate::manifest::{output_file, Manifest, Record};

pub struct SelectPaths<'a> {
    pub ctm: &'a Path,
    pub regions_out: &'a Path,
    pub mask_out: Option<&'a Path>,
    /// JSON object of utterance durations in seconds.
    pub durations: Option<&'a Path>,
}

/// Applies the configured rule to a CTM and writes `utt start end` region
/// lines and, optionally, per-utterance frame masks as JSON.
///
/// Without a durations file an utterance is taken to end at its last CTM
/// word.
pub fn run(config: &PipelineConfig, frame_shift: f64, paths: &SelectPaths) -> Result<Manifest> {
    let text = fs::read_to_string(paths.ctm).map_err(|e| Error::io(paths.ctm, e))?;
    let entries = parse_ctm(&text)?;
    let regions = select_reliable_regions(&entries, &config.reliability);
    fs::write(paths.regions_out, format_regions(&regions)).map_err(|e| Error::io(paths.regions_out, e))?;
    let parent = |p: &Path| p.parent().unwrap_or(Path::new("")).to_path_buf();
    let name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut outputs = vec![output_file(&parent(paths.regions_out), &name(paths.regions_out))?];

    if let Some(mask_path) = paths.mask_out {
        let mut durations: BTreeMap<String, f64> = match paths.durations {
            Some(p) => read_json(p)?,
            None => BTreeMap::new(),
        };
        for e in &entries {
            if paths.durations.is_none() {
                let d = durations.entry(e.utterance_id.clone()).or_insert(0.0);
                *d = d.max(e.end());
            } else if !durations.contains_key(&e.utterance_id) {
                return Err(Error::Data(format!("no duration given for utterance {}", e.utterance_id)));
            }
        }
        let mut by_utt: BTreeMap<&str, Vec<ReliableRegion>> = BTreeMap::new();
        for r in &regions {
            by_utt.entry(&r.utterance_id).or_default().push(r.clone());
        }
        let mut masks = BTreeMap::new();
        for (utt, duration) in &durations {
            let rs = by_utt.get(utt.as_str()).map_or(&[][..], Vec::as_slice);
            masks.insert(utt.clone(), frame_mask(rs, *duration, frame_shift)?);
        }
        write_json(mask_path, &masks)?;
        outputs.push(output_file(&parent(mask_path), &name(mask_path))?);
    }
    log::info!("selected {} regions from {} ctm entries", regions.len(), entries.len());
    let record = Record {
        input: Some(paths.ctm.display().to_string()),
        outputs,
        stream_id: None,
        params: serde_json::json!({ "frame_shift": frame_shift, "regions": regions.len() }),
    };
    Ok(Manifest::new("select-reliable", config.echo(), vec![record]))
}
