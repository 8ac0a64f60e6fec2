use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::verify::run_verify;
use crate::calculus::{estimate_hardy_constant, HardyLevel, VerificationRecord};
use crate::cascade::{run_cascade, weighted_mass_check, CascadeReport, Verdict};
use crate::error::{LabError, Result};
use crate::grid::{csv_header, heat_kernel_fits, kernel_samples, write_snapshot, KernelFit};

/// What a subcommand produced: an exit code and a plain-text summary.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Output directory with the config echo and hash written into it.
pub struct RunDir {
    pub path: PathBuf,
    pub hash: String,
}

impl RunDir {
    pub fn prepare(cfg: &ExperimentConfig, out: &Path) -> Result<Self> {
        fs::create_dir_all(out)?;
        let hash = cfg.hash()?;
        fs::write(out.join("resolved_config.toml"), cfg.to_toml()?)?;
        Ok(Self {
            path: out.to_path_buf(),
            hash,
        })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }
}

#[derive(Serialize, Deserialize)]
struct JsonlHeader<'a> {
    schema_version: u32,
    config_hash: &'a str,
}

/// Writes the records as JSONL behind a header line naming the config.
pub fn write_records(path: &Path, hash: &str, records: &[VerificationRecord]) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    let header = JsonlHeader {
        schema_version: crate::SCHEMA_VERSION,
        config_hash: hash,
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    crate::calculus::write_jsonl(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn cmd_verify(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome> {
    let records = run_verify(&cfg.verify, cfg.seed)?;
    let path = dir.file("verify.jsonl");
    write_records(&path, &dir.hash, &records)?;
    let failed: Vec<&VerificationRecord> = records.iter().filter(|r| !r.passed).collect();
    let mut summary = String::new();
    if records.is_empty() {
        log::warn!("empty sample plan: nothing verified");
        summary.push_str("warning: empty sample plan, 0 records\n");
    }
    let mut names: Vec<&str> = Vec::new();
    for r in &records {
        if !names.contains(&r.identity_name.as_str()) {
            names.push(&r.identity_name);
        }
    }
    for name in names {
        let group: Vec<&VerificationRecord> = records.iter().filter(|r| r.identity_name == name).collect();
        let worst = group.iter().map(|r| r.rel_error).fold(0.0, f64::max);
        let bad = group.iter().filter(|r| !r.passed).count();
        summary.push_str(&format!(
            "{name:<34} {:>4} records  worst rel {worst:.3e}  {}\n",
            group.len(),
            if bad == 0 { "ok".to_string() } else { format!("{bad} FAILED") }
        ));
    }
    summary.push_str(&format!("{} records, {} failed\n", records.len(), failed.len()));
    Ok(Outcome {
        exit_code: if failed.is_empty() { 0 } else { 1 },
        summary,
        files: vec![path],
    })
}

pub fn cmd_hardy(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome> {
    let h = &cfg.hardy;
    if h.levels.len() < 2 {
        return Err(LabError::Config("hardy needs at least 2 refinement levels".into()));
    }
    let levels = estimate_hardy_constant(&h.grids()?, &h.options)?;
    let target = (h.n * h.n) as f64;
    let path = dir.file("hardy.csv");
    write_hardy_csv(&path, &dir.hash, &levels, target)?;
    let mut summary = format!("Rayleigh minima against C* = {target}\n");
    for l in &levels {
        summary.push_str(&format!(
            "  {:?}: {:.6} ({} iterations, residual {:.2e}{})\n",
            l.cells,
            l.estimate,
            l.iterations,
            l.residual,
            if l.converged { "" } else { ", NOT CONVERGED" }
        ));
    }
    Ok(Outcome {
        exit_code: if levels.iter().all(|l| l.converged) { 0 } else { 1 },
        summary,
        files: vec![path],
    })
}

fn write_hardy_csv(path: &Path, hash: &str, levels: &[HardyLevel], target: f64) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    write!(w, "{}", csv_header(hash))?;
    writeln!(w, "cells,estimate,target,converged,iterations,residual")?;
    for l in levels {
        let cells: Vec<String> = l.cells.iter().map(|c| c.to_string()).collect();
        writeln!(
            w,
            "{},{:.12e},{},{},{},{:.3e}",
            cells.join("x"),
            l.estimate,
            target,
            l.converged,
            l.iterations,
            l.residual
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_kernel(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome> {
    let k = &cfg.kernel;
    let (fits, traj) = heat_kernel_fits(&k.grid, &k.times, &k.options)?;
    let fits_path = dir.file("kernel_fits.csv");
    let pairs_path = dir.file("kernel_pairs.csv");
    write_kernel_fits(&fits_path, &dir.hash, &fits)?;
    let mut w = std::io::BufWriter::new(fs::File::create(&pairs_path)?);
    write!(w, "{}", csv_header(&dir.hash))?;
    writeln!(w, "t,d2_over_t,neg_log_scaled_p")?;
    for &t in &k.times {
        let snap = traj
            .snapshot_at(t)
            .ok_or_else(|| LabError::Precondition(format!("no snapshot at t = {t}")))?;
        for (x, y) in kernel_samples(snap, t, k.options.floor) {
            writeln!(w, "{t},{x:.10e},{y:.10e}")?;
        }
    }
    w.flush()?;
    let mut summary = String::from("t        mass       min          slope     r2\n");
    for f in &fits {
        summary.push_str(&format!(
            "{:<8} {:.6}  {:+.3e}  {:.4}  {:.4}\n",
            f.t, f.mass, f.min_value, f.slope, f.r2
        ));
    }
    Ok(Outcome {
        exit_code: 0,
        summary,
        files: vec![fits_path, pairs_path],
    })
}

fn write_kernel_fits(path: &Path, hash: &str, fits: &[KernelFit]) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    write!(w, "{}", csv_header(hash))?;
    writeln!(w, "t,slope,intercept,r2,mass,min_value,points_used")?;
    for f in fits {
        writeln!(
            w,
            "{},{:.10e},{:.10e},{:.10e},{:.12e},{:.3e},{}",
            f.t, f.slope, f.intercept, f.r2, f.mass, f.min_value, f.points_used
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_cascade(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome> {
    let mut report = run_cascade(&cfg.cascade)?;
    report.config_hash = Some(dir.hash.clone());
    let json = dir.file("cascade.json");
    fs::write(&json, report.to_json()?)?;
    let probes = dir.file("cascade_probes.csv");
    report.write_probe_csv(&probes)?;
    let levels = dir.file("cascade_levels.csv");
    report.write_levels_csv(&levels)?;
    let n_max = *cfg.cascade.n_schedule.last().expect("validated");
    let snap = dir.file(&format!("u_n{n_max}"));
    if let Some(f) = report.final_field(n_max) {
        write_snapshot(&snap, f, Some(&cfg.cascade.potential(n_max)), &dir.hash)?;
    }
    let mut summary = report.summary();
    if report.alpha.is_some() && cfg.cascade.bounded_part.is_none() {
        let w = weighted_mass_check(&report, &cfg.cascade)?;
        summary.push_str(&format!(
            "  weighted mass: worst excess {:+.3e} (alpha = {:.6}) {}\n",
            w.worst_excess,
            w.alpha,
            if w.passed { "ok" } else { "VIOLATED" }
        ));
        fs::write(dir.file("weighted_mass.json"), serde_json::to_string_pretty(&w)?)?;
    }
    fs::write(dir.file("cascade_summary.txt"), &summary)?;
    Ok(Outcome {
        exit_code: 0,
        summary,
        files: vec![json, probes, levels],
    })
}

/// Re-reads `cascade.json` from the output directory and prints its summary.
pub fn cmd_report(dir: &Path) -> Result<Outcome> {
    let path = dir.join("cascade.json");
    let text = fs::read_to_string(&path)
        .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
    let report: CascadeReport = serde_json::from_str(&text)?;
    if report.schema_version != crate::SCHEMA_VERSION {
        return Err(LabError::Config(format!("unsupported schema_version {}", report.schema_version)));
    }
    let mut summary = format!("config {}\n", report.config_hash.as_deref().unwrap_or("unknown"));
    summary.push_str(&report.summary());
    let exit_code = match report.classification.verdict {
        Verdict::Indeterminate if !report.critical => 2,
        _ => 0,
    };
    Ok(Outcome {
        exit_code,
        summary,
        files: Vec::new(),
    })
}
