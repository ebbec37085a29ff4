use anyhow::{Context, Result};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::Path;

/// Writes through a temporary file in the destination directory and
/// renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// File name only, so reports do not depend on where a run happened.
pub fn display_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

pub fn json_bytes(value: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s.into_bytes()
}

/// Picks `lon`, `lat` and `column` out of a headed CSV and returns
/// `lon,lat,value` text for the grid reader.
pub fn project_column(text: &str, column: &str) -> Result<String> {
    let mut lines = text.lines();
    let header = lines.next().context("input is empty")?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |want: &str| {
        names
            .iter()
            .position(|n| *n == want)
            .with_context(|| format!("column '{want}' not in header '{header}'"))
    };
    let (lon, lat, val) = (find("lon")?, find("lat")?, find(column)?);
    let mut out = String::from("lon,lat,value\n");
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |k: usize| {
            fields
                .get(k)
                .copied()
                .with_context(|| format!("line {}: expected {} fields", i + 2, names.len()))
        };
        out.push_str(&format!("{},{},{}\n", get(lon)?, get(lat)?, get(val)?));
    }
    Ok(out)
}
