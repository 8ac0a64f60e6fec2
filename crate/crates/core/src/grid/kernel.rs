use serde::{Deserialize, Serialize};

use super::evolve::{evolve, EvolveOptions, Trajectory};
use super::expm::linear_fit;
use super::operator::{assemble_sublaplacian, SparseOperator};
use super::spec::{GridField, GridSpec};
use crate::error::{LabError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFit {
    pub t: f64,
    /// Coefficient of `d^2/t` in `-log(p_t t^{Q/2})`.
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `sum p_t * vol`.
    pub mass: f64,
    pub min_value: f64,
    pub points_used: usize,
    /// Cells above the spread floor along each axis through the origin.
    pub spread_cells: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelOptions {
    pub dt: f64,
    /// Nodes with `p >= floor * max p` enter the regression.
    pub floor: f64,
    /// Relative level defining the spread of the kernel.
    pub spread_floor: f64,
    pub min_spread_cells: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            floor: 1e-4,
            spread_floor: 1e-3,
            min_spread_cells: 5,
        }
    }
}

/// Unit-mass discrete delta spread evenly over the cells touching the origin.
pub fn discrete_delta(spec: &GridSpec) -> GridField {
    let nodes: Vec<usize> = (0..spec.len()).filter(|&i| spec.is_origin_adjacent(i)).collect();
    let mut f = GridField::zeros(spec);
    let value = 1.0 / (nodes.len() as f64 * spec.cell_volume());
    for i in nodes {
        f.values[i] = value;
    }
    f
}

/// Regression pairs `(d^2/t, -log(p t^{Q/2}))` over nodes above `floor * max`.
pub fn kernel_samples(field: &GridField, t: f64, floor: f64) -> Vec<(f64, f64)> {
    let spec = &field.spec;
    let q = (2 * spec.n + 2) as f64;
    let max = field.max_value();
    let tq = t.powf(q / 2.0);
    (0..spec.len())
        .filter(|&i| field.values[i] >= floor * max && field.values[i] > 0.0)
        .map(|i| {
            let d = spec.gauge(i);
            (d * d / t, -(field.values[i] * tq).ln())
        })
        .collect()
}

fn spread_cells(field: &GridField, floor: f64) -> Vec<usize> {
    let spec = &field.spec;
    let max = field.max_value();
    // Start from the origin-adjacent node with all indices on the lower side.
    let base: Vec<usize> = (0..spec.dims())
        .map(|a| {
            let p = -spec.bounds[a][0] / spec.spacing(a) - 0.5;
            p.floor() as usize
        })
        .collect();
    (0..spec.dims())
        .map(|a| {
            let mut m = base.clone();
            (0..spec.cells[a])
                .filter(|&i| {
                    m[a] = i;
                    field.values[spec.index(&m)] >= floor * max
                })
                .count()
        })
        .collect()
}

fn fit_field(field: &GridField, t: f64, opts: &KernelOptions) -> Result<KernelFit> {
    let min_value = field.min_value();
    if min_value < -1e-12 {
        return Err(LabError::Monotonicity(format!("kernel has negative value {min_value}")));
    }
    let spread = spread_cells(field, opts.spread_floor);
    if spread.iter().any(|&c| c < opts.min_spread_cells) {
        return Err(LabError::Precondition(format!(
            "at t = {t} the kernel spans only {spread:?} cells per axis; need {}",
            opts.min_spread_cells
        )));
    }
    let pairs = kernel_samples(field, t, opts.floor);
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (slope, intercept, r2) = linear_fit(&x, &y);
    Ok(KernelFit {
        t,
        slope,
        intercept,
        r2,
        mass: field.mass(),
        min_value,
        points_used: pairs.len(),
        spread_cells: spread,
    })
}

/// Evolves the discrete delta under the free flow and fits the Gaussian
/// profile at each requested time.
pub fn heat_kernel_fits(spec: &GridSpec, times: &[f64], opts: &KernelOptions) -> Result<(Vec<KernelFit>, Trajectory)> {
    let a = assemble_sublaplacian(spec)?;
    heat_kernel_fits_with(spec, &a, times, opts)
}

pub fn heat_kernel_fits_with(
    spec: &GridSpec,
    a: &SparseOperator,
    times: &[f64],
    opts: &KernelOptions,
) -> Result<(Vec<KernelFit>, Trajectory)> {
    if times.is_empty() || times.iter().any(|&t| !(t > 0.0)) {
        return Err(LabError::InvalidArgument("kernel times must be positive".into()));
    }
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let steps = (t_max / opts.dt).round().max(1.0) as usize;
    let dt = t_max / steps as f64;
    let mut every = 0;
    for &t in times {
        let k = t / dt;
        if (k - k.round()).abs() > 1e-6 || k.round() < 1.0 {
            return Err(LabError::InvalidArgument(format!("time {t} is not a multiple of dt = {dt}")));
        }
        every = gcd(every, k.round() as usize);
    }
    let zero = GridField::zeros(spec);
    let mut eo = EvolveOptions::new(dt, t_max);
    eo.keep_snapshots = true;
    eo.sample_every = every;
    let traj = evolve(&discrete_delta(spec), a, &zero, &zero, &eo)?;
    let fits = times
        .iter()
        .map(|&t| {
            let snap = traj
                .snapshot_at(t)
                .ok_or_else(|| LabError::Precondition(format!("no snapshot at {t}")))?;
            fit_field(snap, t, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((fits, traj))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn heat_kernel_fit(spec: &GridSpec, t: f64, opts: &KernelOptions) -> Result<KernelFit> {
    Ok(heat_kernel_fits(spec, &[t], opts)?.0.remove(0))
}
