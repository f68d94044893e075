//! Run manifest: the single record every completed run writes, tying the
//! emitted artifacts to the exact configuration (by hash), seed, and wall
//! clock interval that produced them.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use layerwave::Result;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    /// FNV-1a hash of the canonical configuration serialization, in hex.
    pub config_hash: String,
    pub seed: u64,
    pub subcommand: String,
    pub started_utc: String,
    pub finished_utc: String,
    /// Files written by the run, in creation order.  The manifest itself is
    /// not listed.
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// Serialize to `<dir>/manifest.json`, creating the directory.  The
    /// manifest is the last file written, so its presence marks a complete
    /// run.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

/// Current wall-clock time as an RFC 3339 UTC timestamp with millisecond
/// resolution.
pub fn utc_now() -> String {
    let d = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default();
    let secs = d.as_secs() as i64;
    let millis = d.subsec_millis();
    let days = secs.div_euclid(86_400);
    let sod = secs.rem_euclid(86_400);
    let (y, m, dd) = civil_from_days(days);
    format!(
        "{y:04}-{m:02}-{dd:02}T{:02}:{:02}:{:02}.{millis:03}Z",
        sod / 3600,
        (sod % 3600) / 60,
        sod % 60
    )
}

/// Proleptic Gregorian date from days since 1970-01-01 (era decomposition).
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}
