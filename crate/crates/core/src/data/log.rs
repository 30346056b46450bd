//! CSV force-log format.
//!
//! ```text
//! # fs=65
//! # <key>=<value>            free-form metadata, file level
//! # set id=0
//! # params=theta_h_max=...;theta_h_min=...;theta_k_min=...;theta_k_max=...;freq=...;phi=...;alpha=a|b|c|d
//! # v_flow=0.1
//! t,V_flow,theta_H,theta_K,dtheta_H,dtheta_K,tau_x,tau_y,tau_z,f_x,f_y,f_z
//! 0,0.1,...
//! # set id=1
//! ...
//! ```
//!
//! Angles are radians, forces newtons, torques newton-metres. Floats are
//! written in shortest round-trip form, so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::path::Path;

use super::{ForceRecord, RecordSet, SAMPLE_RATE_HZ};
use crate::error::{Error, Result};
use crate::kinematics::GaitParams;
use crate::wrench::Wrench;

pub const HEADER: &str = "t,V_flow,theta_H,theta_K,dtheta_H,dtheta_K,tau_x,tau_y,tau_z,f_x,f_y,f_z";

/// Relative tolerance on sample spacing.
const DT_TOLERANCE: f64 = 0.01;

/// File-level `key=value` comment lines other than `fs`.
pub type LogMetadata = Vec<(String, String)>;

pub fn format_force_log(sets: &[RecordSet], metadata: &[(String, String)]) -> String {
    let fs = sets.first().map(|s| s.fs).unwrap_or(SAMPLE_RATE_HZ);
    let mut s = String::new();
    let _ = writeln!(s, "# fs={fs}");
    for (k, v) in metadata {
        let _ = writeln!(s, "# {k}={v}");
    }
    for rs in sets {
        let p = &rs.params;
        let _ = writeln!(s, "# set id={}", rs.id);
        let _ = writeln!(
            s,
            "# params=theta_h_max={};theta_h_min={};theta_k_min={};theta_k_max={};freq={};phi={};alpha={}|{}|{}|{}",
            p.theta_h_max,
            p.theta_h_min,
            p.theta_k_min,
            p.theta_k_max,
            p.freq,
            p.phi,
            p.alpha[0],
            p.alpha[1],
            p.alpha[2],
            p.alpha[3]
        );
        let _ = writeln!(s, "# v_flow={}", rs.v_flow);
        s.push_str(HEADER);
        s.push('\n');
        for r in &rs.records {
            let c = r.wrench.to_channels();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.t, r.v_flow, r.theta_h, r.theta_k, r.dtheta_h, r.dtheta_k, c[0], c[1], c[2], c[3], c[4], c[5]
            );
        }
    }
    s
}

pub fn write_force_log(path: &Path, sets: &[RecordSet], metadata: &[(String, String)]) -> Result<()> {
    std::fs::write(path, format_force_log(sets, metadata)).map_err(|e| Error::io(path, e))
}

pub fn load_force_log(path: &Path) -> Result<(Vec<RecordSet>, LogMetadata)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_force_log(&text)
}

struct Block {
    id: usize,
    params: Option<GaitParams>,
    v_flow: Option<f64>,
    header_seen: bool,
    records: Vec<ForceRecord>,
    line: usize,
}

/// Parses a force log; sets come back in file order.
pub fn parse_force_log(text: &str) -> Result<(Vec<RecordSet>, LogMetadata)> {
    if text.trim().is_empty() {
        return Err(Error::Schema("empty force log".into()));
    }
    let mut fs: Option<f64> = None;
    let mut meta = LogMetadata::new();
    let mut blocks: Vec<Block> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if comment == "set" || comment.starts_with("set ") {
                let id = match comment.strip_prefix("set").map(str::trim) {
                    Some(rest) if !rest.is_empty() => rest
                        .strip_prefix("id=")
                        .and_then(|v| v.trim().parse().ok())
                        .ok_or_else(|| Error::Schema(format!("line {line_no}: bad set marker '{line}'")))?,
                    _ => blocks.len(),
                };
                blocks.push(Block {
                    id,
                    params: None,
                    v_flow: None,
                    header_seen: false,
                    records: Vec::new(),
                    line: line_no,
                });
                continue;
            }
            let Some((key, value)) = comment.split_once('=') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            match (blocks.last_mut(), key) {
                (None, "fs") => {
                    fs = Some(parse_num(value, line_no)?);
                }
                (None, _) => meta.push((key.to_string(), value.to_string())),
                (Some(b), "params") => b.params = Some(parse_params(value, line_no)?),
                (Some(b), "v_flow") => b.v_flow = Some(parse_num(value, line_no)?),
                (Some(_), _) => {}
            }
            continue;
        }

        let Some(block) = blocks.last_mut() else {
            return Err(Error::Schema(format!("line {line_no}: data before the first '# set' marker")));
        };
        if !block.header_seen {
            if line != HEADER {
                return Err(Error::Schema(format!(
                    "line {line_no}: expected header '{HEADER}', found '{line}'"
                )));
            }
            block.header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(Error::Schema(format!(
                "line {line_no}: expected 12 columns, found {}",
                fields.len()
            )));
        }
        let mut v = [0.0; 12];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = parse_num(f, line_no)?;
        }
        block.records.push(ForceRecord {
            t: v[0],
            v_flow: v[1],
            theta_h: v[2],
            theta_k: v[3],
            dtheta_h: v[4],
            dtheta_k: v[5],
            wrench: Wrench::from_channels([v[6], v[7], v[8], v[9], v[10], v[11]]),
        });
    }

    let fs = fs.ok_or_else(|| Error::Schema("missing '# fs=' header line".into()))?;
    if !(fs > 0.0) || (fs - SAMPLE_RATE_HZ).abs() > DT_TOLERANCE * SAMPLE_RATE_HZ {
        return Err(Error::Sampling(format!(
            "declared fs = {fs} Hz, expected {SAMPLE_RATE_HZ} Hz"
        )));
    }
    if blocks.is_empty() {
        return Err(Error::Schema("no '# set' blocks found".into()));
    }

    let mut sets = Vec::with_capacity(blocks.len());
    for b in blocks {
        let params = b
            .params
            .ok_or_else(|| Error::Schema(format!("set at line {}: missing '# params=' line", b.line)))?;
        if b.records.is_empty() {
            return Err(Error::Schema(format!("set at line {}: no records", b.line)));
        }
        let v_flow = b.v_flow.unwrap_or(b.records[0].v_flow);
        if b.records.iter().any(|r| r.v_flow != v_flow) {
            return Err(Error::Schema(format!("set at line {}: V_flow varies within the set", b.line)));
        }
        let dt = 1.0 / fs;
        for (i, w) in b.records.windows(2).enumerate() {
            let step = w[1].t - w[0].t;
            if !((step - dt).abs() <= DT_TOLERANCE * dt) {
                return Err(Error::Sampling(format!(
                    "set {}: step {} -> {} is {:.6} s, expected {:.6} s +/- 1%",
                    b.id,
                    i,
                    i + 1,
                    step,
                    dt
                )));
            }
        }
        let rs = RecordSet {
            id: b.id,
            params,
            v_flow,
            fs,
            records: b.records,
        };
        if rs.len() < rs.min_len() {
            return Err(Error::Schema(format!(
                "set {}: {} samples, fewer than {} gait cycles ({} samples)",
                rs.id,
                rs.len(),
                super::CYCLES_PER_SET,
                rs.min_len()
            )));
        }
        sets.push(rs);
    }
    Ok((sets, meta))
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Schema(format!("line {line}: '{s}' is not a number")))
}

fn parse_params(s: &str, line: usize) -> Result<GaitParams> {
    let mut vals = [None; 6];
    let mut alpha = None;
    for part in s.split(';') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Schema(format!("line {line}: bad params entry '{part}'")))?;
        let slot = match k.trim() {
            "theta_h_max" => 0,
            "theta_h_min" => 1,
            "theta_k_min" => 2,
            "theta_k_max" => 3,
            "freq" => 4,
            "phi" => 5,
            "alpha" => {
                let a: Vec<f64> = v.split('|').map(|x| parse_num(x, line)).collect::<Result<_>>()?;
                if a.len() != 4 {
                    return Err(Error::Schema(format!("line {line}: alpha needs 4 values")));
                }
                alpha = Some([a[0], a[1], a[2], a[3]]);
                continue;
            }
            other => return Err(Error::Schema(format!("line {line}: unknown params key '{other}'"))),
        };
        vals[slot] = Some(parse_num(v, line)?);
    }
    let get = |i: usize, name: &str| vals[i].ok_or_else(|| Error::Schema(format!("line {line}: params missing '{name}'")));
    Ok(GaitParams {
        theta_h_max: get(0, "theta_h_max")?,
        theta_h_min: get(1, "theta_h_min")?,
        theta_k_min: get(2, "theta_k_min")?,
        theta_k_max: get(3, "theta_k_max")?,
        freq: get(4, "freq")?,
        phi: get(5, "phi")?,
        alpha: alpha.unwrap_or([0.0; 4]),
    })
}
