use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::run::CascadeReport;
use crate::error::Result;
use crate::grid::csv_header;

impl CascadeReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Probe series as CSV: `n,t,probe_id,value`.
    pub fn write_probe_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(w, "{}", csv_header(self.config_hash.as_deref().unwrap_or("none")))?;
        writeln!(w, "n,t,probe_id,value")?;
        for run in &self.runs {
            for s in &run.samples {
                for (p, v) in s.probes.iter().enumerate() {
                    writeln!(w, "{},{:.10e},{},{:.17e}", run.n, s.t, p, v)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Per-level diagnostics as CSV.
    pub fn write_levels_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(w, "{}", csv_header(self.config_hash.as_deref().unwrap_or("none")))?;
        writeln!(
            w,
            "n,reused_from,sup_norm,mass,weighted_mass,monotonicity_margin,free_flow_margin,radial_max_cv,solver_iterations"
        )?;
        for r in &self.runs {
            let last = r.samples.last().expect("at least the initial sample");
            writeln!(
                w,
                "{},{},{:.10e},{:.10e},{},{},{:.3e},{:.4},{}",
                r.n,
                r.reused_from.map(|v| v.to_string()).unwrap_or_default(),
                last.sup_norm,
                last.mass,
                last.weighted_mass.map(|v| format!("{v:.10e}")).unwrap_or_default(),
                r.monotonicity_margin.map(|v| format!("{v:.3e}")).unwrap_or_default(),
                r.free_flow_margin,
                r.radiality.max_cv,
                r.solver_iterations
            )?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let cls = &self.classification;
        let _ = writeln!(
            s,
            "c = {} (N = {}), alpha = {}, dt = {:.3e}, verdict: {}{}",
            self.c,
            self.group_dim,
            self.alpha.map_or("none".into(), |a| format!("{a:.6}")),
            self.dt,
            cls.verdict,
            if cls.critical { " [critical]" } else { "" }
        );
        for (i, ev) in cls.probes.iter().enumerate() {
            let ratios: Vec<String> = ev.ratios.iter().map(|r| format!("{r:.4}")).collect();
            let _ = writeln!(
                s,
                "  probe {i}: u(n_max) = {:.6e}, slope = {:.4}, ratios [{}] -> {}",
                ev.values.last().copied().unwrap_or(f64::NAN),
                ev.slope,
                ratios.join(", "),
                ev.verdict
            );
        }
        let worst = self
            .runs
            .iter()
            .filter_map(|r| r.monotonicity_margin)
            .fold(f64::INFINITY, f64::min);
        let _ = writeln!(s, "  min monotonicity margin {worst:.3e}");
        for note in &cls.notes {
            let _ = writeln!(s, "  note: {note}");
        }
        s
    }
}
