use serde::{Deserialize, Serialize};

use super::config::CascadeConfig;
use super::run::{cascade_dt, order_margin, potential_field, CascadeReport, Setup};
use crate::error::{LabError, Result};
use crate::grid::{evolve, GridField, Termination};

/// Relative slack allowed in the weighted mass inequality.
pub const WEIGHTED_MASS_SLACK: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMassEntry {
    pub n: u64,
    pub t: f64,
    /// `sum u_n(t) d^{-alpha} vol`.
    pub lhs: f64,
    /// `sum u_0 d^{-alpha} vol + t sum f_n d^{-alpha} vol`.
    pub rhs: f64,
}

impl WeightedMassEntry {
    pub fn excess(&self) -> f64 {
        (self.lhs - self.rhs) / self.rhs.abs().max(f64::MIN_POSITIVE)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedMassCheck {
    pub alpha: f64,
    pub entries: Vec<WeightedMassEntry>,
    pub worst_excess: f64,
    pub passed: bool,
}

/// Checks `int u_n(t) d^{-alpha} <= int u_0 d^{-alpha} + t int f_n d^{-alpha}`
/// on every recorded sample.
pub fn weighted_mass_check(report: &CascadeReport, cfg: &CascadeConfig) -> Result<WeightedMassCheck> {
    let n = cfg.grid.n as f64;
    let alpha = report
        .alpha
        .ok_or_else(|| LabError::Precondition(format!("no weight for c = {} > N^2", report.c)))?;
    let implied = alpha * (2.0 * n - alpha);
    if (implied - report.c).abs() > 1e-9 * report.c.max(1.0) {
        return Err(LabError::InvalidArgument(format!(
            "alpha = {alpha} gives alpha(2N - alpha) = {implied}, not c = {}",
            report.c
        )));
    }
    if cfg.bounded_part.is_some() {
        return Err(LabError::Precondition("the weighted mass bound needs V_n <= c V*".into()));
    }
    let mut entries = Vec::new();
    for run in &report.runs {
        let m0 = run.samples[0]
            .weighted_mass
            .ok_or_else(|| LabError::Precondition("run recorded no weighted mass".into()))?;
        let fw = run.source_weighted.unwrap_or(0.0);
        for s in &run.samples[1..] {
            entries.push(WeightedMassEntry {
                n: run.n,
                t: s.t,
                lhs: s.weighted_mass.expect("weight set for every sample"),
                rhs: m0 + s.t * fw,
            });
        }
    }
    let worst_excess = entries.iter().map(|e| e.excess()).fold(f64::NEG_INFINITY, f64::max);
    Ok(WeightedMassCheck {
        alpha,
        entries,
        worst_excess,
        passed: worst_excess <= WEIGHTED_MASS_SLACK,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerProfile {
    /// `min u d^alpha` over the gauge ball, origin cells excluded.
    pub c_est: f64,
    pub argmin: Vec<f64>,
    pub nodes: usize,
}

/// Estimates the constant in `u(t, w) >= C d(w)^{-alpha}` on `d < radius`.
pub fn lower_profile_check(field: &GridField, alpha: f64, radius: f64, min_time: f64) -> Result<LowerProfile> {
    if field.time < min_time {
        return Err(LabError::Precondition(format!(
            "lower profile needs t >= {min_time}, field is at t = {}",
            field.time
        )));
    }
    let spec = &field.spec;
    let mut best = (f64::INFINITY, 0usize);
    let mut nodes = 0;
    for i in 0..spec.len() {
        if spec.is_origin_adjacent(i) {
            continue;
        }
        let d = spec.gauge(i);
        if d >= radius {
            continue;
        }
        nodes += 1;
        let v = field.values[i] * d.powf(alpha);
        if v < best.0 {
            best = (v, i);
        }
    }
    if nodes == 0 {
        return Err(LabError::Precondition(format!("no nodes with gauge below {radius}")));
    }
    Ok(LowerProfile {
        c_est: best.0,
        argmin: spec.coords(best.1),
        nodes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCompare {
    pub lambda: f64,
    pub dt: f64,
    /// `max (v_n - e^{lambda t} u_n) / max(1, sup e^{lambda t} u_n)` per level.
    pub violations: Vec<(u64, f64)>,
    pub worst: f64,
}

/// Compares the cascade with potential `V_n + B` against `e^{lambda t}` times
/// the cascade without `B`, with `lambda = sup |B|` unless given.
pub fn bounded_perturbation_compare(cfg: &CascadeConfig, lambda: Option<f64>) -> Result<PerturbationCompare> {
    let b = cfg
        .bounded_part
        .clone()
        .ok_or_else(|| LabError::Precondition("no bounded part configured".into()))?;
    let lambda = lambda.unwrap_or_else(|| b.sup_norm());
    if lambda < b.sup_norm() {
        return Err(LabError::InvalidArgument(format!("lambda {lambda} below sup |B| = {}", b.sup_norm())));
    }
    let dt = cascade_dt(cfg);
    let setup = Setup::new(cfg, dt)?;
    let opts = setup.options(cfg, None);
    let bare = CascadeConfig {
        bounded_part: None,
        ..cfg.clone()
    };
    let mut violations = Vec::new();
    for &n in &cfg.n_schedule {
        let f = setup.truncated_source(n);
        let v_pert = potential_field(&cfg.grid, &cfg.potential(n));
        let v_bare = potential_field(&cfg.grid, &bare.potential(n));
        let pert = evolve(&setup.u0, &setup.a, &v_pert, &f, &opts)?;
        let base = evolve(&setup.u0, &setup.a, &v_bare, &f, &opts)?;
        if pert.termination != Termination::Completed || base.termination != Termination::Completed {
            return Err(LabError::Precondition(format!("overflow at level {n}")));
        }
        let scaled: Vec<GridField> = base
            .snapshots
            .iter()
            .map(|s| {
                let g = (lambda * s.time).exp();
                GridField {
                    spec: s.spec.clone(),
                    values: s.values.iter().map(|x| g * x).collect(),
                    time: s.time,
                }
            })
            .collect();
        let (m, _) = order_margin(&pert.snapshots, &scaled);
        violations.push((n, -m));
    }
    let worst = violations.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(PerturbationCompare {
        lambda,
        dt: opts.schedule()?.1,
        violations,
        worst,
    })
}

/// `min (u_high - u_low) / max(1, sup u_high)` for the top level of the
/// schedule, run with coefficients `cfg.c <= c_high` on a shared step.
pub fn comparison_in_potential(cfg: &CascadeConfig, c_high: f64) -> Result<f64> {
    if c_high < cfg.c {
        return Err(LabError::InvalidArgument(format!("need c_high >= {}", cfg.c)));
    }
    let high = CascadeConfig {
        c: c_high,
        ..cfg.clone()
    };
    let dt = cascade_dt(&high).min(cascade_dt(cfg));
    let setup = Setup::new(cfg, dt)?;
    let opts = setup.options(cfg, None);
    let n = *cfg.n_schedule.last().expect("validated");
    let f = setup.truncated_source(n);
    let lo = evolve(&setup.u0, &setup.a, &potential_field(&cfg.grid, &cfg.potential(n)), &f, &opts)?;
    let hi = evolve(&setup.u0, &setup.a, &potential_field(&cfg.grid, &high.potential(n)), &f, &opts)?;
    Ok(order_margin(&lo.snapshots, &hi.snapshots).0)
}
