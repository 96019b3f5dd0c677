//! Self-describing snapshot files for bit-exact resume.
//!
//! A snapshot is plain text: a version line, a `[state]` section with the
//! time and counters (floats in hexadecimal bit encoding), a `[phi]`
//! section with one hex-encoded node value per line, and the full config
//! echo after a `[config]` marker.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::flow::{init_flow, FlowError, FlowParams, FlowState};
use crate::radial::{RadialError, RadialPotential};

const MAGIC: &str = "krflow-snapshot v1";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a snapshot file (missing magic line)")]
    BadMagic,
    #[error("malformed snapshot: {0}")]
    Malformed(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

pub type Result<T> = std::result::Result<T, SnapshotError>;

fn hex_f64(v: f64) -> String {
    format!("{:#018x}", v.to_bits())
}

fn parse_hex_f64(text: &str) -> Result<f64> {
    let digits = text
        .strip_prefix("0x")
        .ok_or_else(|| SnapshotError::Malformed(format!("expected hex float, got '{text}'")))?;
    let bits = u64::from_str_radix(digits, 16)
        .map_err(|_| SnapshotError::Malformed(format!("bad hex float '{text}'")))?;
    Ok(f64::from_bits(bits))
}

pub fn render(state: &FlowState, cfg: &RunConfig) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str("\n[state]\n");
    out.push_str(&format!("t = {}\n", hex_f64(state.t)));
    out.push_str(&format!("t_display = {}\n", state.t));
    out.push_str(&format!("step_count = {}\n", state.step_count));
    out.push_str(&format!("record_count = {}\n", state.record_count));
    out.push_str(&format!("dt_history_len = {}\n", state.dt_history_len));
    out.push_str(&format!("last_dt = {}\n", hex_f64(state.last_dt)));
    out.push_str(&format!("nodes = {}\n", state.nodes()));
    out.push_str("\n[phi]\n");
    for v in &state.phi {
        out.push_str(&hex_f64(*v));
        out.push('\n');
    }
    out.push_str("\n[config]\n");
    out.push_str(&cfg.serialize());
    out
}

/// Atomic write: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("snapshot")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save(state: &FlowState, cfg: &RunConfig, path: &Path) -> Result<()> {
    write_atomic(path, &render(state, cfg))
}

/// Reconstructs the run configuration and the exact flow state.
pub fn load(path: &Path) -> Result<(RunConfig, FlowState)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(SnapshotError::BadMagic);
    }
    let mut section = String::new();
    let mut t: Option<f64> = None;
    let mut step_count: Option<u64> = None;
    let mut record_count: Option<u64> = None;
    let mut dt_history_len: Option<u64> = None;
    let mut last_dt: Option<f64> = None;
    let mut phi: Vec<f64> = Vec::new();
    let mut config_text = String::new();
    let mut in_config = false;
    for raw in lines {
        if in_config {
            config_text.push_str(raw);
            config_text.push('\n');
            continue;
        }
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "[config]" {
            in_config = true;
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.to_string();
            continue;
        }
        match section.as_str() {
            "state" => {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| SnapshotError::Malformed(line.to_string()))?;
                let value = value.trim();
                match key.trim() {
                    "t" => t = Some(parse_hex_f64(value)?),
                    "t_display" | "nodes" => {}
                    "step_count" => {
                        step_count = Some(value.parse().map_err(|_| {
                            SnapshotError::Malformed(format!("bad step_count '{value}'"))
                        })?)
                    }
                    "record_count" => {
                        record_count = Some(value.parse().map_err(|_| {
                            SnapshotError::Malformed(format!("bad record_count '{value}'"))
                        })?)
                    }
                    "dt_history_len" => {
                        dt_history_len = Some(value.parse().map_err(|_| {
                            SnapshotError::Malformed(format!("bad dt_history_len '{value}'"))
                        })?)
                    }
                    "last_dt" => last_dt = Some(parse_hex_f64(value)?),
                    other => {
                        return Err(SnapshotError::Malformed(format!(
                            "unknown state key '{other}'"
                        )))
                    }
                }
            }
            "phi" => phi.push(parse_hex_f64(line)?),
            other => {
                return Err(SnapshotError::Malformed(format!("unexpected section [{other}]")))
            }
        }
    }
    let cfg = RunConfig::parse(&config_text)?;
    cfg.validate().map_err(SnapshotError::Config)?;
    let missing = |what: &str| SnapshotError::Malformed(format!("missing {what}"));
    let t = t.ok_or_else(|| missing("t"))?;
    if phi.len() != cfg.grid_n + 1 {
        return Err(SnapshotError::Malformed(format!(
            "phi has {} values, expected {}",
            phi.len(),
            cfg.grid_n + 1
        )));
    }
    for (i, v) in phi.iter().enumerate() {
        if !v.is_finite() {
            return Err(SnapshotError::Flow(FlowError::NonFinite { t, node: i }));
        }
    }
    let potential = RadialPotential::make_family(
        cfg.n,
        cfg.family.to_family(),
        cfg.s_max,
        cfg.s_buf,
        cfg.grid_n,
    )?;
    let mut state = init_flow(
        potential,
        FlowParams {
            grid_n: cfg.grid_n,
            cfl_safety: cfg.cfl_safety,
            snapshot_cadence: cfg.snapshot_cadence,
        },
    )?;
    state.t = t;
    state.phi = phi;
    state.step_count = step_count.ok_or_else(|| missing("step_count"))?;
    state.record_count = record_count.ok_or_else(|| missing("record_count"))?;
    state.dt_history_len = dt_history_len.ok_or_else(|| missing("dt_history_len"))?;
    state.last_dt = last_dt.ok_or_else(|| missing("last_dt"))?;
    Ok((cfg, state))
}
