//! Trace file format: one `# `-prefixed JSON header line, a CSV body with
//! columns `k,F,L_k,mu_k,i_k,step_norm,wall_ms`, and a `# sha256:` footer
//! over the body so truncation is detectable. Floats print in shortest
//! round-trip form, which keeps re-runs byte-identical (the wall_ms column
//! excepted: wall time is measured, not derived).

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use teprog::solver::RunTrace;

use crate::schema::hex_string;
use crate::CliError;

pub const TRACE_FORMAT: &str = "teprog-trace-v1";
pub const COLUMNS: &str = "k,F,L_k,mu_k,i_k,step_norm,wall_ms";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: String,
    pub instance_hash: String,
    pub schedule: String,
    pub geometry: String,
    pub norm_exponent: f64,
    pub mu_provenance: String,
    pub rng: String,
    pub rule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub l1: f64,
    pub k_max: u64,
    pub inner_tol: f64,
    pub x1: Vec<f64>,
    /// Wall-clock start; timestamps live here, never in the body.
    pub started_unix: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub k: u64,
    pub f: f64,
    pub l: f64,
    pub mu: f64,
    pub i_k: u32,
    pub step_norm: f64,
    pub wall_ms: f64,
}

fn body_of(trace: &RunTrace) -> String {
    let mut body = String::new();
    body.push_str(COLUMNS);
    body.push('\n');
    for r in &trace.records {
        let wall_ms = r.wall.as_secs_f64() * 1e3;
        body.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.k,
            r.f,
            r.l,
            r.mu,
            r.backtracks,
            r.step_norm,
            wall_ms
        ));
    }
    body
}

pub fn write_trace(path: &Path, header: &TraceHeader, trace: &RunTrace) -> Result<(), CliError> {
    let header_json = serde_json::to_string(header)
        .map_err(|e| CliError::input(format!("header serialization failed: {e}")))?;
    let body = body_of(trace);
    let mut h = Sha256::new();
    h.update(body.as_bytes());
    let digest = hex_string(&h.finalize());
    let text = format!("# {header_json}\n{body}# sha256:{digest}\n");
    std::fs::write(path, text)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

pub struct ReadTrace {
    pub header: TraceHeader,
    pub rows: Vec<TraceRow>,
}

pub fn read_trace(path: &Path) -> Result<ReadTrace, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| CliError::input("trace is missing its header line".into()))?;
    let header: TraceHeader = serde_json::from_str(header_line)
        .map_err(|e| CliError::input(format!("bad trace header: {e}")))?;
    if header.format != TRACE_FORMAT {
        return Err(CliError::input(format!(
            "unsupported trace format {}",
            header.format
        )));
    }

    let mut body = String::new();
    let mut footer: Option<String> = None;
    for line in lines {
        if let Some(rest) = line.strip_prefix("# sha256:") {
            footer = Some(rest.to_string());
            break;
        }
        body.push_str(line);
        body.push('\n');
    }
    let footer = footer.ok_or_else(|| {
        CliError::consistency("trace has no checksum footer (truncated?)".into())
    })?;
    let mut h = Sha256::new();
    h.update(body.as_bytes());
    if hex_string(&h.finalize()) != footer {
        return Err(CliError::consistency(
            "trace body does not match its checksum footer (truncated or edited)".into(),
        ));
    }

    let mut rows = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if i == 0 {
            if line != COLUMNS {
                return Err(CliError::input(format!("unexpected column header {line}")));
            }
            continue;
        }
        rows.push(parse_row(line, i)?);
    }
    Ok(ReadTrace { header, rows })
}

fn parse_row(line: &str, lineno: usize) -> Result<TraceRow, CliError> {
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != 7 {
        return Err(CliError::input(format!(
            "trace line {lineno} has {} fields, expected 7",
            parts.len()
        )));
    }
    let num = |s: &str| -> Result<f64, CliError> {
        if s == "inf" {
            Ok(f64::INFINITY)
        } else {
            s.parse::<f64>()
                .map_err(|e| CliError::input(format!("trace line {lineno}: bad float {s}: {e}")))
        }
    };
    Ok(TraceRow {
        k: parts[0]
            .parse()
            .map_err(|e| CliError::input(format!("trace line {lineno}: bad k: {e}")))?,
        f: num(parts[1])?,
        l: num(parts[2])?,
        mu: num(parts[3])?,
        i_k: parts[4]
            .parse()
            .map_err(|e| CliError::input(format!("trace line {lineno}: bad i_k: {e}")))?,
        step_norm: num(parts[5])?,
        wall_ms: num(parts[6])?,
    })
}
