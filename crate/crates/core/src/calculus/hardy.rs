//! Discrete Hardy quotient `int |grad_H u|^2 / int V u^2` with
//! `V = |z|^2 / (|z|^4 + l^2)` and its minimisation.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::quadrature::{integrate_box, QuadOptions};
use crate::error::{LabError, Result};
use crate::grid::{assemble_flow_differences, conjugate_gradient, GridSpec, SolverOptions, SparseOperator};
use crate::group::{hardy_weight, GroupPoint};
use crate::par;

/// Stiffness `K = vol sum_f D_f^T D_f` and Hardy mass `M = vol diag(V)` on a grid.
pub struct HardyForms {
    spec: GridSpec,
    d: Vec<SparseOperator>,
    dt: Vec<SparseOperator>,
    mass: Vec<f64>,
    k_diag: Vec<f64>,
    vol: f64,
}

impl HardyForms {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        let d = assemble_flow_differences(spec)?;
        let dt: Vec<SparseOperator> = d.iter().map(|o| o.transpose()).collect();
        let vol = spec.cell_volume();
        let mass = par::map_range(spec.len(), |i| hardy_weight(&spec.point(i)) * vol);
        if mass.iter().any(|m| !m.is_finite()) {
            return Err(LabError::InvalidGrid("a node sits at the origin".into()));
        }
        let k_diag = par::map_range(spec.len(), |i| {
            vol * dt.iter().map(|o| o.row(i).map(|(_, v)| v * v).sum::<f64>()).sum::<f64>()
        });
        Ok(Self {
            spec: spec.clone(),
            d,
            dt,
            mass,
            k_diag,
            vol,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn stiffness_apply(&self, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut t = vec![0.0; n];
        let mut s = vec![0.0; n];
        for (d, dt) in self.d.iter().zip(&self.dt) {
            d.apply(x, &mut t);
            dt.apply(&t, &mut s);
            par::axpy(self.vol, &s, y);
        }
    }

    /// `vol sum_f |D_f u|^2`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        let mut t = vec![0.0; u.len()];
        self.d
            .iter()
            .map(|d| {
                d.apply(u, &mut t);
                par::dot(&t, &t)
            })
            .sum::<f64>()
            * self.vol
    }

    /// `vol sum V u^2`.
    pub fn weighted_norm(&self, u: &[f64]) -> f64 {
        par::sum_indexed(u.len(), |i| self.mass[i] * u[i] * u[i])
    }

    pub fn rayleigh_quotient(&self, u: &[f64]) -> Result<f64> {
        let den = self.weighted_norm(u);
        if den == 0.0 {
            return Err(LabError::InvalidArgument("zero grid function".into()));
        }
        Ok(self.energy(u) / den)
    }
}

/// Rayleigh quotient of a grid function on `spec`.
pub fn rayleigh_quotient(spec: &GridSpec, u: &[f64]) -> Result<f64> {
    HardyForms::new(spec)?.rayleigh_quotient(u)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardyOptions {
    pub block: usize,
    pub max_iter: usize,
    /// Relative change of the smallest Ritz value between iterations.
    pub tol: f64,
    pub inner_tol: f64,
}

impl Default for HardyOptions {
    fn default() -> Self {
        Self {
            block: 4,
            max_iter: 200,
            tol: 1e-7,
            inner_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyLevel {
    pub cells: Vec<usize>,
    pub estimate: f64,
    pub converged: bool,
    pub iterations: usize,
    /// `|K x - lambda M x| / |K x|` for the returned vector.
    pub residual: f64,
}

/// Smallest generalised eigenpair of `K x = lambda M x` by block inverse
/// iteration with Rayleigh-Ritz. Non-convergence is reported in the result,
/// not raised.
pub fn minimise_quotient(forms: &HardyForms, opts: &HardyOptions) -> Result<(HardyLevel, Vec<f64>)> {
    let spec = forms.spec();
    let n = spec.len();
    let b = opts.block.max(1);
    // Smooth, decaying start vectors with different symmetries.
    let mut x: Vec<Vec<f64>> = (0..b)
        .map(|c| {
            par::map_range(n, |i| {
                let co = spec.coords(i);
                let d = spec.gauge(i);
                let base = (-(d * d)).exp() * (1.0 + 0.1 * c as f64 * co[0]);
                match c % 4 {
                    0 => base,
                    1 => base * (1.0 + co[1]),
                    2 => base * (1.0 + co[co.len() - 1]),
                    _ => base * (1.0 + 0.5 * co[0] * co[1]),
                }
            })
        })
        .collect();
    let mut lambdas: Vec<f64> = vec![1.0; b];
    let mut prev = f64::INFINITY;
    let solver = SolverOptions {
        rel_tol: opts.inner_tol,
        max_iter: 20_000,
    };
    let apply = |v: &[f64], out: &mut [f64]| forms.stiffness_apply(v, out);
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let y: Vec<Vec<f64>> = x
            .iter()
            .zip(&lambdas)
            .map(|(xi, &lam)| {
                let rhs: Vec<f64> = par::map_range(n, |i| forms.mass[i] * xi[i]);
                let mut sol: Vec<f64> = xi.iter().map(|v| v / lam.max(1e-12)).collect();
                conjugate_gradient(apply, &forms.k_diag, &rhs, &mut sol, &solver)?;
                Ok(sol)
            })
            .collect::<Result<_>>()?;
        let ky: Vec<Vec<f64>> = y
            .iter()
            .map(|v| {
                let mut o = vec![0.0; n];
                forms.stiffness_apply(v, &mut o);
                o
            })
            .collect();
        let kr = DMatrix::from_fn(b, b, |i, j| 0.5 * (par::dot(&y[i], &ky[j]) + par::dot(&y[j], &ky[i])));
        let mr = DMatrix::from_fn(b, b, |i, j| {
            par::sum_indexed(n, |k| forms.mass[k] * y[i][k] * y[j][k])
        });
        let chol = mr
            .clone()
            .cholesky()
            .ok_or_else(|| LabError::Precondition("Ritz basis lost independence".into()))?;
        let linv = chol.l().try_inverse().expect("triangular factor is invertible");
        let c = &linv * &kr * linv.transpose();
        let c = 0.5 * (&c + c.transpose());
        let eig = SymmetricEigen::new(c);
        let mut order: Vec<usize> = (0..b).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let coeffs = linv.transpose() * &eig.eigenvectors;
        x = order
            .iter()
            .map(|&col| {
                par::map_range(n, |k| (0..b).map(|r| coeffs[(r, col)] * y[r][k]).sum())
            })
            .collect();
        lambdas = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let lam = lambdas[0];
        if ((prev - lam) / lam).abs() < opts.tol {
            converged = true;
            break;
        }
        prev = lam;
    }
    let u = x.swap_remove(0);
    let mut ku = vec![0.0; n];
    forms.stiffness_apply(&u, &mut ku);
    let lam = forms.rayleigh_quotient(&u)?;
    let res = par::sum_indexed(n, |i| (ku[i] - lam * forms.mass[i] * u[i]).powi(2)).sqrt() / par::dot(&ku, &ku).sqrt();
    if !converged {
        log::warn!("Hardy iteration stopped after {iterations} sweeps without converging");
    }
    Ok((
        HardyLevel {
            cells: spec.cells.clone(),
            estimate: lam,
            converged,
            iterations,
            residual: res,
        },
        u,
    ))
}

/// Minimum discrete Hardy quotient on each grid of a refinement ladder.
pub fn estimate_hardy_constant(levels: &[GridSpec], opts: &HardyOptions) -> Result<Vec<HardyLevel>> {
    levels
        .iter()
        .map(|spec| {
            let forms = HardyForms::new(spec)?;
            Ok(minimise_quotient(&forms, opts)?.0)
        })
        .collect()
}

/// `int |grad_H u|^2 / int V u^2` for the bump `u = (1 - |w - c|^2/R^2)^3_+`
/// (Euclidean distance) on the first Heisenberg group, by nested quadrature.
pub fn bump_quotient(center: [f64; 3], radius: f64) -> Result<f64> {
    let c = GroupPoint::new(vec![center[0]], vec![center[1]], center[2])?;
    let dist0 = center.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dist0 <= radius || c.is_origin() {
        return Err(LabError::InvalidArgument("bump support must avoid the origin".into()));
    }
    let r2 = radius * radius;
    let grad2 = |x: f64, y: f64, l: f64| {
        let (dx, dy, dl) = (x - center[0], y - center[1], l - center[2]);
        let q = 1.0 - (dx * dx + dy * dy + dl * dl) / r2;
        if q <= 0.0 {
            return 0.0;
        }
        // u = q^3, du/dv = -6 q^2 dv / R^2
        let s = -6.0 * q * q / r2;
        let (ux, uy, ul) = (s * dx, s * dy, s * dl);
        let xf = ux + 2.0 * y * ul;
        let yf = uy - 2.0 * x * ul;
        xf * xf + yf * yf
    };
    let weighted = |x: f64, y: f64, l: f64| {
        let (dx, dy, dl) = (x - center[0], y - center[1], l - center[2]);
        let q = 1.0 - (dx * dx + dy * dy + dl * dl) / r2;
        if q <= 0.0 {
            return 0.0;
        }
        let z2 = x * x + y * y;
        z2 / (z2 * z2 + l * l) * q.powi(6)
    };
    let bounds = [
        [center[0] - radius, center[0] + radius],
        [center[1] - radius, center[1] + radius],
        [center[2] - radius, center[2] + radius],
    ];
    let opts = QuadOptions {
        rel_tol: 1e-7,
        ..Default::default()
    };
    Ok(integrate_box(&grad2, bounds, &opts) / integrate_box(&weighted, bounds, &opts))
}
