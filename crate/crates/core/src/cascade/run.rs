use serde::{Deserialize, Serialize};

use super::classify::{classify, Classification};
use super::config::CascadeConfig;
use crate::error::{LabError, Result};
use crate::grid::{assemble_sublaplacian, evolve, EvolveOptions, GridField, GridSpec, Sample, SparseOperator, Termination, Trajectory};
use crate::group::PotentialSpec;
use crate::par;

/// Margins below this (relative to `max(1, sup u)`) are ordering violations.
pub const ORDER_TOL: f64 = 1e-12;
/// Largest `dt * sup V_n` the cascade accepts.
pub const REACTION_BUDGET: f64 = 0.5;

/// Spread of `u` over gauge spheres: per shell, standard deviation over mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Radiality {
    pub shells: usize,
    pub max_cv: f64,
    pub mean_cv: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: u64,
    /// Earlier level whose potential and source were identical on the grid.
    pub reused_from: Option<u64>,
    pub samples: Vec<Sample>,
    pub termination: Termination,
    pub solver_iterations: usize,
    /// `min (u_n - u_prev) / max(1, sup u_n)` over nodes and sample times.
    pub monotonicity_margin: Option<f64>,
    /// The same against the free flow `e^{t A} u_0`.
    pub free_flow_margin: f64,
    /// `sum f_n phi vol`.
    pub source_weighted: Option<f64>,
    pub radiality: Radiality,
}

impl RunRecord {
    /// Probe values at the last sample; `inf` after an overflow.
    pub fn final_probes(&self) -> Vec<f64> {
        match self.termination {
            Termination::Overflow { .. } => vec![f64::INFINITY; self.samples[0].probes.len()],
            Termination::Completed => self.samples.last().map(|s| s.probes.clone()).unwrap_or_default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CascadeReport {
    pub schema_version: u32,
    pub config_hash: Option<String>,
    pub c: f64,
    pub group_dim: usize,
    pub alpha: Option<f64>,
    pub critical: bool,
    pub dt: f64,
    /// Largest value of the untruncated potential over grid nodes.
    pub grid_sup_potential: f64,
    pub schedule: Vec<u64>,
    pub probes: Vec<Vec<f64>>,
    pub free_flow: Vec<Sample>,
    pub runs: Vec<RunRecord>,
    pub classification: Classification,
    #[serde(skip)]
    pub final_fields: Vec<GridField>,
}

impl CascadeReport {
    pub fn run(&self, n: u64) -> Option<&RunRecord> {
        self.runs.iter().find(|r| r.n == n)
    }

    pub fn final_field(&self, n: u64) -> Option<&GridField> {
        self.runs.iter().position(|r| r.n == n).map(|i| &self.final_fields[i])
    }
}

/// `d^{-alpha}` at the nodes, zero on the cells touching the origin.
pub fn gauge_weight(spec: &GridSpec, alpha: f64) -> Vec<f64> {
    par::map_range(spec.len(), |i| {
        if spec.is_origin_adjacent(i) {
            0.0
        } else {
            spec.gauge(i).powf(-alpha)
        }
    })
}

pub fn potential_field(spec: &GridSpec, v: &PotentialSpec) -> GridField {
    GridField::from_fn(spec, |p| v.eval(p))
}

/// Common step: `min(dt, REACTION_BUDGET / sup_n sup V_n)`.
pub fn cascade_dt(cfg: &CascadeConfig) -> f64 {
    let n_max = *cfg.n_schedule.last().expect("validated schedule") as f64;
    let full = PotentialSpec {
        truncation: None,
        bounded_part: None,
        ..cfg.potential(1)
    };
    let grid_sup = potential_field(&cfg.grid, &full).max_value();
    let b = cfg.bounded_part.as_ref().map_or(0.0, |b| b.sup_norm());
    let sup = grid_sup.min(n_max) + b;
    if sup > 0.0 {
        cfg.dt.min(REACTION_BUDGET / sup)
    } else {
        cfg.dt
    }
}

pub(crate) struct Setup {
    pub a: SparseOperator,
    pub u0: GridField,
    pub source: GridField,
    pub dt: f64,
    pub sample_every: usize,
}

impl Setup {
    pub fn new(cfg: &CascadeConfig, dt: f64) -> Result<Self> {
        cfg.validate()?;
        let a = assemble_sublaplacian(&cfg.grid)?;
        let u0 = cfg.u0.field(&cfg.grid)?;
        let source = GridField::from_fn(&cfg.grid, |p| cfg.source.eval(p));
        let steps = EvolveOptions::new(dt, cfg.t_final).schedule()?.0;
        let sample_every = (steps / cfg.samples).max(1);
        Ok(Self {
            a,
            u0,
            source,
            dt,
            sample_every,
        })
    }

    pub fn options(&self, cfg: &CascadeConfig, weight: Option<Vec<f64>>) -> EvolveOptions {
        EvolveOptions {
            dt: self.dt,
            t_final: cfg.t_final,
            sample_every: self.sample_every,
            keep_snapshots: true,
            probes: cfg.probes.clone(),
            weight,
            reaction_cap: 1.0,
            solver: cfg.solver,
        }
    }

    pub fn truncated_source(&self, n: u64) -> GridField {
        let cap = n as f64;
        GridField {
            spec: self.source.spec.clone(),
            values: self.source.values.iter().map(|&f| f.min(cap)).collect(),
            time: 0.0,
        }
    }
}

/// `min (hi - lo) / max(1, sup hi)` over nodes and the common sample times,
/// with the worst nodes when the margin is below `-ORDER_TOL`.
pub fn order_margin(lo: &[GridField], hi: &[GridField]) -> (f64, Vec<(usize, f64, f64, f64)>) {
    let mut worst = f64::INFINITY;
    let mut offenders = Vec::new();
    for (a, b) in lo.iter().zip(hi) {
        let scale = b.sup_norm().max(1.0);
        let m = par::min_indexed(a.len(), |i| b.values[i] - a.values[i]) / scale;
        worst = worst.min(m);
        if m < -ORDER_TOL && offenders.len() < 8 {
            for i in 0..a.len() {
                if (b.values[i] - a.values[i]) / scale < -ORDER_TOL {
                    offenders.push((i, b.time, a.values[i], b.values[i]));
                    if offenders.len() >= 8 {
                        break;
                    }
                }
            }
        }
    }
    (worst, offenders)
}

pub fn radiality(field: &GridField, max_gauge: f64) -> Radiality {
    let spec = &field.spec;
    let width = spec.spacing(0);
    let bins = (max_gauge / width).ceil() as usize;
    let mut acc = vec![(0usize, 0.0f64, 0.0f64); bins];
    for i in 0..spec.len() {
        if spec.is_origin_adjacent(i) {
            continue;
        }
        let d = spec.gauge(i);
        if d >= max_gauge {
            continue;
        }
        let b = &mut acc[(d / width) as usize];
        let u = field.values[i];
        b.0 += 1;
        b.1 += u;
        b.2 += u * u;
    }
    let cvs: Vec<f64> = acc
        .iter()
        .filter(|b| b.0 >= 8 && b.1 > 0.0)
        .map(|&(k, s, s2)| {
            let mean = s / k as f64;
            let var = (s2 / k as f64 - mean * mean).max(0.0);
            var.sqrt() / mean
        })
        .collect();
    let shells = cvs.len();
    Radiality {
        shells,
        max_cv: cvs.iter().cloned().fold(0.0, f64::max),
        mean_cv: if shells > 0 { cvs.iter().sum::<f64>() / shells as f64 } else { 0.0 },
    }
}

fn describe(spec: &GridSpec, offenders: &[(usize, f64, f64, f64)]) -> String {
    offenders
        .iter()
        .map(|&(i, t, lo, hi)| format!("cell {:?} at t={t:.4}: {lo:.6e} > {hi:.6e}", spec.multi_index(i)))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Runs the truncated problems for every level of the schedule on a common
/// time step, checks monotonicity in `n` and classifies the probe growth.
pub fn run_cascade(cfg: &CascadeConfig) -> Result<CascadeReport> {
    let dt = cascade_dt(cfg);
    let setup = Setup::new(cfg, dt)?;
    let spec = &cfg.grid;
    let alpha = cfg.alpha();
    let weight = alpha.map(|a| gauge_weight(spec, a));
    let vol = spec.cell_volume();
    let opts = setup.options(cfg, weight.clone());
    let max_gauge = 0.75 * spec.bounds[0][1].min(-spec.bounds[0][0]);

    let zero = GridField::zeros(spec);
    let free = evolve(&setup.u0, &setup.a, &zero, &zero, &opts)?;
    log::info!("free flow: {} solver iterations", free.solver_iterations);

    let mut runs: Vec<RunRecord> = Vec::with_capacity(cfg.n_schedule.len());
    let mut finals = Vec::with_capacity(cfg.n_schedule.len());
    let mut prev: Option<(GridField, GridField, Trajectory)> = None;
    for &n in &cfg.n_schedule {
        let v = potential_field(spec, &cfg.potential(n));
        let f = setup.truncated_source(n);
        let reuse = prev
            .as_ref()
            .filter(|(pv, pf, _)| pv.values == v.values && pf.values == f.values)
            .map(|_| runs.last().map(|r: &RunRecord| r.reused_from.unwrap_or(r.n)).expect("previous run"));
        let traj = match (&prev, reuse) {
            (Some((_, _, t)), Some(_)) => t.clone(),
            _ => evolve(&setup.u0, &setup.a, &v, &f, &opts)?,
        };
        let monotonicity_margin = match &prev {
            Some((_, _, pt)) => {
                let (m, offenders) = order_margin(&pt.snapshots, &traj.snapshots);
                if m < -ORDER_TOL {
                    return Err(LabError::Monotonicity(format!(
                        "u_{n} < u_prev beyond tolerance (margin {m:.3e}): {}",
                        describe(spec, &offenders)
                    )));
                }
                Some(m)
            }
            None => None,
        };
        let (free_flow_margin, _) = order_margin(&free.snapshots, &traj.snapshots);
        let source_weighted = weight
            .as_ref()
            .map(|w| par::sum_indexed(w.len(), |i| w[i] * f.values[i]) * vol);
        log::info!(
            "n = {n}: {} solver iterations, margin {:?}, reused {:?}",
            traj.solver_iterations,
            monotonicity_margin,
            reuse
        );
        runs.push(RunRecord {
            n,
            reused_from: reuse,
            samples: traj.samples.clone(),
            termination: traj.termination,
            solver_iterations: traj.solver_iterations,
            monotonicity_margin,
            free_flow_margin,
            source_weighted,
            radiality: radiality(&traj.final_field, max_gauge),
        });
        finals.push(traj.final_field.clone());
        prev = Some((v, f, traj));
    }

    let full = PotentialSpec {
        truncation: None,
        bounded_part: None,
        ..cfg.potential(1)
    };
    let mut report = CascadeReport {
        schema_version: crate::SCHEMA_VERSION,
        config_hash: None,
        c: cfg.c,
        group_dim: spec.n,
        alpha,
        critical: cfg.is_critical(),
        dt: free.dt,
        grid_sup_potential: potential_field(spec, &full).max_value(),
        schedule: cfg.n_schedule.clone(),
        probes: cfg.probes.iter().map(|p| p.coords()).collect(),
        free_flow: free.samples,
        runs,
        classification: Classification::default(),
        final_fields: finals,
    };
    report.classification = classify(&report, &cfg.thresholds);
    Ok(report)
}
