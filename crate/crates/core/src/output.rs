//! `trajectory.csv` and `run.jsonl` emission and parsing.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::json;

use crate::analysis::{DiagnosticsRecord, MODE_COLUMNS};
use crate::error::{Error, Result};
use crate::evolution::{RunMeta, TrajectoryLog};

/// Fixed column order of `trajectory.csv`.
pub fn columns() -> Vec<String> {
    let mut cols: Vec<String> =
        ["t", "E", "H", "D", "bary", "cx", "cy", "Vs2", "EED", "sup_rho_dev", "sup_slope"].iter().map(|s| s.to_string()).collect();
    cols.extend((1..=MODE_COLUMNS).map(|k| format!("a{k}")));
    cols
}

/// 17 significant digits; `NaN` marks a missing `H`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn trajectory_csv(log: &TrajectoryLog) -> String {
    let mut out = String::new();
    out.push_str("# msrelax trajectory v1\n");
    out.push_str(&format!("# config_hash = {}\n", log.meta.config_hash));
    out.push_str(&format!("# seed = {}\n# N = {}\n# R = {}\n", log.meta.seed, log.meta.n_modes, fmt_f64(log.meta.radius)));
    out.push_str(&format!("# dt_policy = {}\n", log.meta.dt_policy));
    out.push_str("# columns: t, energy gap E, squared distance H (NaN when skipped), dissipation D, |c - c0|, c - c0,\n");
    out.push_str("#   |V_s|^2, E^2 D, sup|rho - R|, sup|rho_phi|, |rho_k| for k = 1..16\n");
    out.push_str(&columns().join(","));
    out.push('\n');
    for r in &log.rows {
        let mut vals = vec![r.t, r.e, r.h.unwrap_or(f64::NAN), r.d, r.bary, r.center[0], r.center[1], r.vs2, r.eed, r.sup_rho_dev, r.sup_slope];
        vals.extend(&r.mode_amps);
        out.push_str(&vals.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

pub fn events_jsonl(log: &TrajectoryLog) -> String {
    let mut out = String::new();
    let head = json!({
        "kind": "meta",
        "config_hash": log.meta.config_hash,
        "seed": log.meta.seed,
        "n_modes": log.meta.n_modes,
        "radius": log.meta.radius,
        "dt_policy": log.meta.dt_policy,
    });
    out.push_str(&head.to_string());
    out.push('\n');
    for e in &log.events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    let tail = json!({
        "kind": "summary",
        "config_hash": log.meta.config_hash,
        "status": log.status,
        "steps": log.steps,
        "rejections": log.rejections,
        "rows": log.rows.len(),
        "max_area_drift": log.max_area_drift,
        "max_area_error": log.max_area_error,
    });
    out.push_str(&tail.to_string());
    out.push('\n');
    out
}

/// Writes both files into `dir`.
pub fn write_outputs(log: &TrajectoryLog, dir: &Path, trajectory: &str, events: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::File::create(dir.join(trajectory))?.write_all(trajectory_csv(log).as_bytes())?;
    fs::File::create(dir.join(events))?.write_all(events_jsonl(log).as_bytes())?;
    Ok(())
}

/// Parses `trajectory.csv` back into rows and metadata.
pub fn read_trajectory_csv(text: &str) -> Result<(RunMeta, Vec<DiagnosticsRecord>)> {
    let mut meta = RunMeta { config_hash: String::new(), seed: 0, n_modes: 0, radius: 1.0, dt_policy: String::new() };
    let mut rows = Vec::new();
    let mut header_seen = false;
    let cols = columns();
    for (lineno, line) in text.lines().enumerate() {
        let bad = |msg: &str| Error::Parse(format!("line {}: {msg}", lineno + 1));
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.split_once('=') {
                let v = v.trim();
                match k.trim() {
                    "config_hash" => meta.config_hash = v.into(),
                    "seed" => meta.seed = v.parse().map_err(|_| bad("seed"))?,
                    "N" => meta.n_modes = v.parse().map_err(|_| bad("N"))?,
                    "R" => meta.radius = v.parse().map_err(|_| bad("R"))?,
                    "dt_policy" => meta.dt_policy = v.into(),
                    _ => {}
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line.split(',').map(str::trim).ne(cols.iter().map(String::as_str)) {
                return Err(bad("unexpected column header"));
            }
            header_seen = true;
            continue;
        }
        let v: Vec<f64> = line.split(',').map(|x| x.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad("number"))?;
        if v.len() != cols.len() {
            return Err(bad("wrong field count"));
        }
        rows.push(DiagnosticsRecord {
            t: v[0],
            e: v[1],
            h: if v[2].is_nan() { None } else { Some(v[2]) },
            d: v[3],
            bary: v[4],
            center: [v[5], v[6]],
            vs2: v[7],
            eed: v[8],
            sup_rho_dev: v[9],
            sup_slope: v[10],
            mode_amps: v[11..].to_vec(),
        });
    }
    if !header_seen {
        return Err(Error::Parse("missing column header".into()));
    }
    Ok((meta, rows))
}
