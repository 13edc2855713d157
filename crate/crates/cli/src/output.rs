//! Metadata header, CSV/JSON encoding and atomic file output.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use almost_iid::record::{fmt, CertificationRecord, RECORD_HEADER};
use almost_iid::rng::PRNG_ID;
use serde_json::{json, Value};

use crate::config::Settings;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Prefix of metadata lines in CSV output.
pub const META_PREFIX: &str = "# ";

/// Run metadata as ordered key/value pairs, timestamp last.
pub fn metadata(s: &Settings) -> Vec<(String, String)> {
    let mut m = vec![
        ("tool".to_string(), format!("almostiid {VERSION}")),
        ("command".to_string(), s.command.name().to_string()),
        ("seed".to_string(), s.seed.to_string()),
        ("prng".to_string(), PRNG_ID.to_string()),
        ("log_base".to_string(), "2".to_string()),
        (
            "tol".to_string(),
            s.tol.map(fmt).unwrap_or_else(|| "per-check".to_string()),
        ),
        ("entropy.tol".to_string(), fmt(s.solver.tol)),
        (
            "entropy.max_iters".to_string(),
            s.solver.max_iters.to_string(),
        ),
        ("entropy.starts".to_string(), s.solver.starts.to_string()),
    ];
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    m.push(("timestamp_unix".to_string(), now.to_string()));
    m
}

pub fn csv_header(meta: &[(String, String)]) -> String {
    meta.iter()
        .map(|(k, v)| format!("{META_PREFIX}{k}: {v}\n"))
        .collect()
}

pub fn json_metadata(meta: &[(String, String)]) -> Value {
    Value::Object(
        meta.iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect(),
    )
}

/// Header of the certification-record CSV.
pub fn records_header() -> String {
    format!("{RECORD_HEADER},section,metadata")
}

/// One CSV row; metadata is `key=value` pairs joined by `;`.
pub fn record_row(section: &str, r: &CertificationRecord) -> String {
    let meta: Vec<String> = r.metadata.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{},{section},{}", r.csv_row(), meta.join(";"))
}

pub fn record_json(section: &str, r: &CertificationRecord) -> Value {
    json!({
        "check_id": r.check_id,
        "anchor": r.anchor,
        "section": section,
        "lhs": r.lhs,
        "rhs": r.rhs,
        "tol": r.tol,
        "margin": r.margin(),
        "pass": r.pass,
        "metadata": r.metadata,
    })
}

/// Re-judge a record with a global slack.
pub fn rejudge(mut r: CertificationRecord, tol: Option<f64>) -> CertificationRecord {
    if let Some(t) = tol {
        r.tol = t;
        r.pass = r.lhs <= r.rhs + t;
    }
    r
}

/// Write `body` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, body: &str) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(body.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

/// Send `body` to `--out` or standard output.
pub fn emit(s: &Settings, body: &str) -> std::io::Result<()> {
    match &s.out {
        Some(p) => write_atomic(p, body),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())?;
            out.flush()
        }
    }
}

/// Strip metadata lines, leaving the CSV body.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with(META_PREFIX))
        .map(|l| format!("{l}\n"))
        .collect()
}
