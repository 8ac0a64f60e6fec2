use serde::{Deserialize, Serialize};

use super::operator::SparseOperator;
use super::solver::{bicgstab, SolveStats, SolverOptions};
use super::spec::{GridField, GridSpec};
use crate::error::{LabError, Result};
use crate::group::GroupPoint;
use crate::par;

/// Values beyond this magnitude count as overflow.
pub const OVERFLOW_THRESHOLD: f64 = 1e300;

/// Reusable Lie-splitting step `u' = e^{dt V} ((I - dt A)^{-1} u + dt f)`.
#[derive(Clone, Debug)]
pub struct Stepper {
    dt: f64,
    system: SparseOperator,
    opts: SolverOptions,
}

impl Stepper {
    pub fn new(a: &SparseOperator, dt: f64, opts: SolverOptions) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(LabError::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            dt,
            system: a.shifted(1.0, -dt),
            opts,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn spec(&self) -> &GridSpec {
        self.system.spec()
    }

    /// `out = (I - dt A)^{-1} u`, started from `u`.
    pub fn diffuse(&self, u: &[f64], out: &mut [f64]) -> Result<SolveStats> {
        out.copy_from_slice(u);
        bicgstab(&self.system, u, out, true, &self.opts)
    }

    /// `m` consecutive diffusion solves.
    pub fn diffuse_n(&self, u: &[f64], m: usize) -> Result<Vec<f64>> {
        let mut cur = u.to_vec();
        let mut next = vec![0.0; u.len()];
        for _ in 0..m {
            self.diffuse(&cur, &mut next)?;
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// One full step with precomputed reaction factors `e^{dt V}`.
    pub fn step_values(&self, u: &[f64], reaction: &[f64], f: &[f64], out: &mut [f64]) -> Result<SolveStats> {
        let stats = self.diffuse(u, out)?;
        let dt = self.dt;
        par::update_indexed(out, |i, w| reaction[i] * (w + dt * f[i]));
        Ok(stats)
    }

    pub fn reaction_factors(&self, v: &[f64]) -> Vec<f64> {
        let dt = self.dt;
        par::map_range(v.len(), |i| (dt * v[i]).exp())
    }
}

fn check_fields(u: &GridField, v: &GridField, f: &GridField, a: &SparseOperator) -> Result<()> {
    for (name, g) in [("potential", v), ("source", f)] {
        if g.spec != u.spec {
            return Err(LabError::InvalidGrid(format!("{name} field lives on a different grid")));
        }
    }
    if a.spec() != &u.spec {
        return Err(LabError::InvalidGrid("operator lives on a different grid".into()));
    }
    // Signed V is fine: exp(dt V) > 0.
    if v.values.iter().any(|x| !x.is_finite()) {
        return Err(LabError::InvalidArgument("potential must be finite".into()));
    }
    if f.values.iter().any(|&x| x < 0.0) {
        return Err(LabError::InvalidArgument("source must be nonnegative".into()));
    }
    Ok(())
}

/// One implicit-diffusion / exact-reaction step.
pub fn step(u: &GridField, dt: f64, a: &SparseOperator, v: &GridField, f: &GridField) -> Result<GridField> {
    check_fields(u, v, f, a)?;
    let stepper = Stepper::new(a, dt, SolverOptions::default())?;
    let reaction = stepper.reaction_factors(&v.values);
    let mut out = vec![0.0; u.len()];
    stepper.step_values(&u.values, &reaction, &f.values, &mut out)?;
    Ok(GridField {
        spec: u.spec.clone(),
        values: out,
        time: u.time + dt,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_final: f64,
    /// Record diagnostics every this many steps (and at the last step).
    pub sample_every: usize,
    pub keep_snapshots: bool,
    pub probes: Vec<GroupPoint>,
    /// Weight for `sum u * weight * vol`; typically `d^{-alpha}` with the
    /// origin cells zeroed.
    #[serde(skip)]
    pub weight: Option<Vec<f64>>,
    /// Upper bound on `dt * sup V`.
    pub reaction_cap: f64,
    pub solver: SolverOptions,
}

impl EvolveOptions {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            sample_every: 1,
            keep_snapshots: false,
            probes: Vec::new(),
            weight: None,
            reaction_cap: 1.0,
            solver: SolverOptions::default(),
        }
    }

    /// Number of steps and the step actually used (`t_final / steps`).
    pub fn schedule(&self) -> Result<(usize, f64)> {
        if !(self.dt > 0.0) || !(self.t_final >= 0.0) {
            return Err(LabError::InvalidArgument(format!(
                "need dt > 0 and t_final >= 0, got dt = {}, t_final = {}",
                self.dt, self.t_final
            )));
        }
        if self.t_final == 0.0 {
            return Ok((0, self.dt));
        }
        let steps = (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize;
        Ok((steps, self.t_final / steps as f64))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub step: usize,
    pub t: f64,
    pub probes: Vec<f64>,
    pub weighted_mass: Option<f64>,
    pub mass: f64,
    pub sup_norm: f64,
    pub min_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    /// Non-finite or overflowing values appeared after `step`.
    Overflow { step: usize, t: f64 },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<Sample>,
    /// Fields at the sample times, when requested.
    pub snapshots: Vec<GridField>,
    pub final_field: GridField,
    pub termination: Termination,
    pub solver_iterations: usize,
}

impl Trajectory {
    pub fn probe_series(&self, probe: usize) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.probes[probe])).collect()
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&GridField> {
        self.snapshots.iter().find(|s| (s.time - t).abs() <= 1e-9 * t.max(1.0))
    }
}

struct Recorder<'a> {
    probes: Vec<Vec<(usize, f64)>>,
    weight: Option<&'a [f64]>,
    vol: f64,
}

impl Recorder<'_> {
    fn sample(&self, step: usize, t: f64, u: &[f64]) -> Sample {
        Sample {
            step,
            t,
            probes: self
                .probes
                .iter()
                .map(|ws| ws.iter().map(|&(i, w)| w * u[i]).sum())
                .collect(),
            weighted_mass: self
                .weight
                .map(|w| par::sum_indexed(u.len(), |i| u[i] * w[i]) * self.vol),
            mass: par::sum_indexed(u.len(), |i| u[i]) * self.vol,
            sup_norm: par::max_indexed(u.len(), |i| u[i].abs()),
            min_value: par::min_indexed(u.len(), |i| u[i]),
        }
    }
}

/// Advances `u0` to `t_final` under `u_t = A u + V u + f`.
pub fn evolve(u0: &GridField, a: &SparseOperator, v: &GridField, f: &GridField, opts: &EvolveOptions) -> Result<Trajectory> {
    check_fields(u0, v, f, a)?;
    let (steps, dt) = opts.schedule()?;
    let sup_v = v.sup_norm();
    if dt * sup_v > opts.reaction_cap * (1.0 + 1e-12) {
        return Err(LabError::Precondition(format!(
            "dt * sup V = {} exceeds the cap {}",
            dt * sup_v,
            opts.reaction_cap
        )));
    }
    if let Some(w) = &opts.weight {
        if w.len() != u0.len() {
            return Err(LabError::InvalidGrid("weight has the wrong length".into()));
        }
    }
    let spec = &u0.spec;
    let recorder = Recorder {
        probes: opts
            .probes
            .iter()
            .map(|p| spec.interpolation_weights(p))
            .collect::<Result<_>>()?,
        weight: opts.weight.as_deref(),
        vol: spec.cell_volume(),
    };
    let stepper = Stepper::new(a, dt, opts.solver)?;
    let reaction = stepper.reaction_factors(&v.values);
    let every = opts.sample_every.max(1);

    let mut u = u0.values.clone();
    let mut next = vec![0.0; u.len()];
    let mut samples = vec![recorder.sample(0, 0.0, &u)];
    let mut snapshots = Vec::new();
    if opts.keep_snapshots {
        snapshots.push(GridField {
            spec: spec.clone(),
            values: u.clone(),
            time: 0.0,
        });
    }
    let mut termination = Termination::Completed;
    let mut iterations = 0;
    for k in 1..=steps {
        let stats = match stepper.step_values(&u, &reaction, &f.values, &mut next) {
            Ok(s) => s,
            Err(LabError::SolveFailed { .. })
                if next.iter().any(|x| !x.is_finite() || x.abs() > OVERFLOW_THRESHOLD) =>
            {
                termination = Termination::Overflow { step: k, t: k as f64 * dt };
                break;
            }
            Err(e) => return Err(e),
        };
        iterations += stats.iterations;
        std::mem::swap(&mut u, &mut next);
        let worst = par::max_indexed(u.len(), |i| {
            let x = u[i];
            if x.is_finite() { x.abs() } else { f64::INFINITY }
        });
        if worst > OVERFLOW_THRESHOLD {
            log::warn!("overflow at step {k}");
            termination = Termination::Overflow { step: k, t: k as f64 * dt };
            break;
        }
        let t = if k == steps { opts.t_final } else { k as f64 * dt };
        if k % every == 0 || k == steps {
            samples.push(recorder.sample(k, t, &u));
            if opts.keep_snapshots {
                snapshots.push(GridField {
                    spec: spec.clone(),
                    values: u.clone(),
                    time: t,
                });
            }
        }
    }
    let t_end = samples.last().map_or(0.0, |s| s.t);
    Ok(Trajectory {
        dt,
        samples,
        snapshots,
        final_field: GridField {
            spec: spec.clone(),
            values: u,
            time: t_end,
        },
        termination,
        solver_iterations: iterations,
    })
}

/// Relative discrepancy between the stored `u(t)` and the right side of the
/// variation-of-parameters formula evaluated with the same discrete
/// semigroup and trapezoid quadrature over the stored snapshot times.
pub fn duhamel_residual(traj: &Trajectory, a: &SparseOperator, v: &GridField, f: &GridField, t: f64) -> Result<f64> {
    duhamel_residual_strided(traj, a, v, f, t, 1)
}

/// As [`duhamel_residual`], using only every `stride`-th stored snapshot as a
/// quadrature node.
pub fn duhamel_residual_strided(
    traj: &Trajectory,
    a: &SparseOperator,
    v: &GridField,
    f: &GridField,
    t: f64,
    stride: usize,
) -> Result<f64> {
    let stride = stride.max(1);
    let end = traj
        .snapshots
        .iter()
        .position(|s| (s.time - t).abs() <= 1e-9 * t.max(1.0))
        .ok_or_else(|| LabError::Precondition(format!("no stored snapshot at t = {t}")))?;
    if end == 0 || end % stride != 0 {
        return Err(LabError::Precondition(format!(
            "need at least two quadrature nodes ending at t = {t} (snapshot {end}, stride {stride})"
        )));
    }
    let nodes: Vec<&GridField> = traj.snapshots[..=end].iter().step_by(stride).collect();
    let ds = nodes[1].time - nodes[0].time;
    for w in nodes.windows(2) {
        if ((w[1].time - w[0].time) - ds).abs() > 1e-9 * ds {
            return Err(LabError::Precondition("quadrature nodes must be equally spaced".into()));
        }
    }
    let sub = (ds / traj.dt).round() as usize;
    if sub == 0 || ((sub as f64) * traj.dt - ds).abs() > 1e-9 * ds {
        return Err(LabError::Precondition("node spacing must be a multiple of dt".into()));
    }
    let stepper = Stepper::new(a, traj.dt, SolverOptions::default())?;
    let k = nodes.len() - 1;
    // acc <- S(ds) acc + g_i, with g_i the trapezoid-weighted forcing at node i.
    let forcing = |i: usize| -> Vec<f64> {
        let wq = if i == 0 || i == k { 0.5 * ds } else { ds };
        let u = &nodes[i].values;
        par::map_range(u.len(), |j| wq * (v.values[j] * u[j] + f.values[j]))
    };
    let mut acc = forcing(0);
    par::axpy(1.0, &nodes[0].values, &mut acc);
    for i in 1..=k {
        acc = stepper.diffuse_n(&acc, sub)?;
        let g = forcing(i);
        par::axpy(1.0, &g, &mut acc);
    }
    let ut = &nodes[k].values;
    let diff = par::sum_indexed(ut.len(), |j| (ut[j] - acc[j]).powi(2)).sqrt();
    let scale = par::sum_indexed(ut.len(), |j| ut[j] * ut[j]).sqrt();
    if scale == 0.0 {
        return Ok(diff);
    }
    Ok(diff / scale)
}
