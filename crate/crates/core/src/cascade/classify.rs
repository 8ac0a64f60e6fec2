use serde::{Deserialize, Serialize};

use super::config::Thresholds;
use super::run::CascadeReport;
use crate::grid::linear_fit;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    Blowup,
    #[default]
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converged => "converged",
            Verdict::Blowup => "blowup",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeEvidence {
    /// Probe value at the final time, one per schedule level.
    pub values: Vec<f64>,
    /// `values[k+1] / values[k]`.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `log u` against `log n`.
    pub slope: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub critical: bool,
    pub probes: Vec<ProbeEvidence>,
    pub notes: Vec<String>,
}

/// Classifies one probe's values along the schedule.
pub fn classify_series(schedule: &[u64], values: &[f64], th: &Thresholds) -> ProbeEvidence {
    let ratios: Vec<f64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    let mut ev = ProbeEvidence {
        values: values.to_vec(),
        ratios: ratios.clone(),
        slope: f64::NAN,
        verdict: Verdict::Indeterminate,
    };
    if values.iter().any(|v| v.is_infinite()) {
        ev.slope = f64::INFINITY;
        ev.verdict = Verdict::Blowup;
        return ev;
    }
    if values.iter().any(|&v| !(v > 0.0)) || values.len() < 2 {
        return ev;
    }
    let xs: Vec<f64> = schedule.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    ev.slope = linear_fit(&xs, &ys).0;
    let persistent = ratios.iter().all(|&r| r > 1.0 + th.tau_conv);
    let decaying = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let settled = ratios.last().is_some_and(|&r| r <= 1.0 + th.tau_conv);
    ev.verdict = if ev.slope >= th.tau_blow || persistent {
        Verdict::Blowup
    } else if settled && decaying {
        Verdict::Converged
    } else {
        Verdict::Indeterminate
    };
    ev
}

/// Combines the probe verdicts; disagreement or a short schedule gives
/// `Indeterminate`.
pub fn classify(report: &CascadeReport, th: &Thresholds) -> Classification {
    let mut out = Classification {
        critical: report.critical,
        ..Default::default()
    };
    let finals: Vec<Vec<f64>> = report.runs.iter().map(|r| r.final_probes()).collect();
    let probes = report.probes.len();
    for p in 0..probes {
        let values: Vec<f64> = finals.iter().map(|f| f[p]).collect();
        out.probes.push(classify_series(&report.schedule, &values, th));
    }
    let s = &report.schedule;
    let decades = match (s.first(), s.last()) {
        (Some(&a), Some(&b)) => (b as f64 / a as f64).log10(),
        _ => 0.0,
    };
    if s.len() < 4 || decades < 2.0 - 1e-12 {
        out.notes.push("schedule too short: use at least 4 levels over 2 decades".into());
        return out;
    }
    if out.probes.is_empty() {
        out.notes.push("no probes".into());
        return out;
    }
    let first = out.probes[0].verdict;
    out.verdict = if out.probes.iter().all(|e| e.verdict == first) {
        first
    } else {
        out.notes.push("probes disagree".into());
        Verdict::Indeterminate
    };
    let n_max = *s.last().expect("nonempty") as f64;
    if report.grid_sup_potential < n_max {
        out.notes.push(format!(
            "levels above {:.3} coincide on this grid",
            report.grid_sup_potential
        ));
    }
    if report.critical {
        out.notes.push("critical coefficient: the dichotomy is borderline here".into());
    }
    out
}
