//! Selection of confidently recognized word regions from first-pass
//! decoder output, and per-frame masks over them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Posteriors this close below the threshold still pass.
pub const POSTERIOR_TOLERANCE: f64 = 1e-6;

/// One time-marked word hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtmEntry {
    pub utterance_id: String,
    pub channel: String,
    pub start: f64,
    pub duration: f64,
    pub word: String,
    pub posterior: f64,
}

impl CtmEntry {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Data(format!("duration {} must be positive", self.duration)));
        }
        if !(self.start >= 0.0 && self.start.is_finite()) {
            return Err(Error::Data(format!("start {} must be non-negative", self.start)));
        }
        if !(0.0..=1.0).contains(&self.posterior) {
            return Err(Error::Data(format!("posterior {} outside [0, 1]", self.posterior)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReliabilityRule {
    pub min_posterior: f64,
    /// Exclusive upper bound on word duration, seconds.
    pub max_duration: f64,
    /// Compared case-insensitively.
    pub excluded_tokens: BTreeSet<String>,
}

impl Default for ReliabilityRule {
    fn default() -> Self {
        let tokens = [
            "<sil>", "sil", "<eps>", "<unk>", "<noise>", "[noise]", "[laughter]", "[vocalized-noise]", "[unintelligible]",
            "uh", "um", "umm", "hmm", "mm", "mhm", "mm-hmm", "umm-hmm", "uh-huh", "huh", "ah", "er",
        ];
        ReliabilityRule {
            min_posterior: 1.0,
            max_duration: 1.0,
            excluded_tokens: tokens.iter().map(|t| t.to_string()).collect(),
        }
    }
}

impl ReliabilityRule {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_posterior) {
            return Err(Error::Config(format!("min_posterior {} outside [0, 1]", self.min_posterior)));
        }
        if !(self.max_duration > 0.0) {
            return Err(Error::Config(format!("max_duration {} must be positive", self.max_duration)));
        }
        Ok(())
    }

    pub fn accepts(&self, e: &CtmEntry) -> bool {
        e.posterior >= self.min_posterior - POSTERIOR_TOLERANCE
            && e.duration < self.max_duration
            && !self.excluded_tokens.contains(&e.word.to_lowercase())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliableRegion {
    pub utterance_id: String,
    pub start: f64,
    pub end: f64,
}

/// Regions of the accepted words, merged where they touch or overlap,
/// sorted by utterance and start time.
pub fn select_reliable_regions(entries: &[CtmEntry], rule: &ReliabilityRule) -> Vec<ReliableRegion> {
    let mut by_utt: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for e in entries.iter().filter(|e| rule.accepts(e)) {
        by_utt.entry(&e.utterance_id).or_default().push((e.start, e.end()));
    }
    let mut out = Vec::new();
    for (utt, mut spans) in by_utt {
        spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut current = spans[0];
        for &(s, e) in &spans[1..] {
            if s <= current.1 {
                current.1 = current.1.max(e);
            } else {
                out.push(region(utt, current));
                current = (s, e);
            }
        }
        out.push(region(utt, current));
    }
    out
}

fn region(utt: &str, (start, end): (f64, f64)) -> ReliableRegion {
    ReliableRegion {
        utterance_id: utt.to_string(),
        start,
        end,
    }
}

/// Number of frames covering `duration` at `shift`.
pub fn mask_length(duration: f64, shift: f64) -> usize {
    (duration / shift - 1e-9).ceil().max(0.0) as usize
}

/// 1 for every frame whose centre lies inside a region, else 0.
pub fn frame_mask(regions: &[ReliableRegion], duration: f64, shift: f64) -> Result<Vec<u8>> {
    if !(shift > 0.0 && shift.is_finite()) {
        return Err(Error::Config(format!("frame shift {shift} must be positive")));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::Data(format!("utterance duration {duration} is invalid")));
    }
    let len = mask_length(duration, shift);
    let mut mask = vec![0u8; len];
    for r in regions {
        if r.end > duration {
            log::warn!(
                "region {}:[{}, {}) extends past the utterance end {duration}; clipped",
                r.utterance_id,
                r.start,
                r.end
            );
        }
        let end = r.end.min(duration);
        if r.start >= end {
            continue;
        }
        // centre (f + 1/2)·shift in [start, end)
        let first = ((r.start / shift - 1.5).floor().max(0.0)) as usize;
        for (f, m) in mask.iter_mut().enumerate().skip(first) {
            let centre = (f as f64 + 0.5) * shift;
            if centre >= end {
                break;
            }
            if centre >= r.start {
                *m = 1;
            }
        }
    }
    Ok(mask)
}

/// Parses `utt chan start dur word posterior` lines. Blank lines and `;;`
/// comments are skipped; errors name the 1-based line number.
pub fn parse_ctm(text: &str) -> Result<Vec<CtmEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(";;") {
            continue;
        }
        let fail = |m: String| Error::Data(format!("ctm line {}: {m}", i + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(fail(format!("expected 6 fields, found {}", fields.len())));
        }
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| fail(format!("{what} '{s}' is not a number")));
        let entry = CtmEntry {
            utterance_id: fields[0].to_string(),
            channel: fields[1].to_string(),
            start: num(fields[2], "start")?,
            duration: num(fields[3], "duration")?,
            word: fields[4].to_string(),
            posterior: num(fields[5], "posterior")?,
        };
        entry.validate().map_err(|e| fail(e.to_string()))?;
        out.push(entry);
    }
    Ok(out)
}

fn tidy(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// `utt start end` per line.
pub fn format_regions(regions: &[ReliableRegion]) -> String {
    regions
        .iter()
        .map(|r| format!("{} {} {}\n", r.utterance_id, tidy(r.start), tidy(r.end)))
        .collect()
}
