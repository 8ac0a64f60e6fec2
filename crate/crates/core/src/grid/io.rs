use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::evolve::Trajectory;
use super::spec::{GridField, GridSpec};
use crate::error::{LabError, Result};
use crate::group::PotentialSpec;
use crate::SCHEMA_VERSION;

/// JSON sidecar describing a flat binary snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub schema_version: u32,
    pub config_hash: String,
    pub grid: GridSpec,
    pub time: f64,
    pub potential: Option<PotentialSpec>,
    pub len: usize,
    /// Always "f64-le".
    pub encoding: String,
}

fn paths(base: &Path) -> (PathBuf, PathBuf) {
    (base.with_extension("bin"), base.with_extension("json"))
}

/// Writes `<base>.bin` (little-endian f64) and `<base>.json`.
pub fn write_snapshot(base: &Path, field: &GridField, potential: Option<&PotentialSpec>, config_hash: &str) -> Result<()> {
    let (bin, json) = paths(base);
    let mut w = BufWriter::new(fs::File::create(bin)?);
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let meta = SnapshotMeta {
        schema_version: SCHEMA_VERSION,
        config_hash: config_hash.to_string(),
        grid: field.spec.clone(),
        time: field.time,
        potential: potential.cloned(),
        len: field.len(),
        encoding: "f64-le".into(),
    };
    fs::write(json, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

pub fn read_snapshot(base: &Path) -> Result<(GridField, SnapshotMeta)> {
    let (bin, json) = paths(base);
    let meta: SnapshotMeta = serde_json::from_str(&fs::read_to_string(json)?)?;
    let bytes = fs::read(bin)?;
    if bytes.len() != 8 * meta.len || meta.len != meta.grid.len() {
        return Err(LabError::InvalidGrid(format!(
            "snapshot holds {} bytes, sidecar expects {} values",
            bytes.len(),
            meta.len
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let field = GridField::from_values(&meta.grid, values)?.with_time(meta.time);
    Ok((field, meta))
}

/// Comment line opening every CSV file.
pub fn csv_header(config_hash: &str) -> String {
    format!("# schema_version={SCHEMA_VERSION} config_hash={config_hash}\n")
}

/// Probe series as CSV with columns `t,probe_id,value`.
pub fn write_probe_csv(path: &Path, traj: &Trajectory, config_hash: &str) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(csv_header(config_hash).as_bytes())?;
    writeln!(w, "t,probe_id,value")?;
    for s in &traj.samples {
        for (id, v) in s.probes.iter().enumerate() {
            writeln!(w, "{},{},{:e}", s.t, id, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::symmetric(1, 1.0, 1.0, 4).unwrap();
        let f = GridField::from_fn(&spec, |p| p.l() + p.x()[0].sin()).with_time(0.25);
        let base = dir.path().join("snap");
        write_snapshot(&base, &f, Some(&PotentialSpec::hardy(0.5)), "abc").unwrap();
        let (g, meta) = read_snapshot(&base).unwrap();
        assert_eq!(g, f);
        assert_eq!(meta.config_hash, "abc");
        assert_eq!(meta.schema_version, 1);
    }

    #[test]
    fn truncated_snapshot_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let spec = GridSpec::symmetric(1, 1.0, 1.0, 4).unwrap();
        let base = dir.path().join("snap");
        write_snapshot(&base, &GridField::zeros(&spec), None, "h").unwrap();
        fs::write(base.with_extension("bin"), [0u8; 16]).unwrap();
        assert!(read_snapshot(&base).is_err());
    }
}
