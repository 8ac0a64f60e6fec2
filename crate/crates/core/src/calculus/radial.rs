//! Radial reductions over gauge balls, weighted Sobolev ratios and the
//! integrability probes behind the existence threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::quadrature::{integrate, integrate_gauge_shells, QuadOptions};
use crate::error::{LabError, Result};
use crate::group::RadialProfile;

/// Area of the unit sphere `S^{2N-1}`, `2 pi^N / (N-1)!`.
pub fn sphere_area(n: usize) -> f64 {
    let fact: f64 = (1..n).map(|k| k as f64).product();
    2.0 * PI.powi(n as i32) / fact
}

/// `int_{-pi/2}^{pi/2} cos^m phi dphi`.
pub fn cos_power_integral(m: usize) -> f64 {
    match m {
        0 => PI,
        1 => 2.0,
        _ => (m as f64 - 1.0) / m as f64 * cos_power_integral(m - 2),
    }
}

/// `C_N = S_{2N-1} int cos^N`: `int |grad_H k(d)|^2 F(d) = C_N int k'(s)^2 F(s) s^{2N+1} ds`
/// and `int V F(d) = C_N int F(s) s^{2N-1} ds`.
pub fn gradient_constant(n: usize) -> f64 {
    sphere_area(n) * cos_power_integral(n)
}

/// `S_{2N-1} int cos^{N-1}`: `int F(d) dw = (this) int F(s) s^{2N+1} ds`.
pub fn volume_constant(n: usize) -> f64 {
    sphere_area(n) * cos_power_integral(n - 1)
}

fn check_alpha(alpha: f64, n: usize) -> Result<()> {
    if !(alpha >= 0.0 && alpha < n as f64 + 1.0) {
        return Err(LabError::InvalidArgument(format!("alpha = {alpha} outside [0, N + 1)")));
    }
    Ok(())
}

fn range(k: &RadialProfile, r: f64) -> Result<(f64, f64)> {
    let s = k.grid();
    if !(r > 0.0) || r > s[s.len() - 1] * (1.0 + 1e-12) {
        return Err(LabError::Domain(format!("radius {r} outside the profile range")));
    }
    Ok((s[0], r.min(s[s.len() - 1])))
}

/// `int_{s_min}^{r} F(s) ds` split at the profile nodes, so each panel sees
/// a single cubic piece.
fn profile_integral<F: Fn(f64) -> f64>(k: &RadialProfile, r: f64, f: F) -> Result<f64> {
    let (lo, hi) = range(k, r)?;
    let s = k.grid();
    let mut total = 0.0;
    let opts = QuadOptions::default();
    for w in s.windows(2) {
        let (a, b) = (w[0].max(lo), w[1].min(hi));
        if b > a {
            total += integrate(&f, a, b, &opts).0;
        }
    }
    Ok(total)
}

/// `C_N int_0^r k'(s)^2 s^{2N - 2 alpha + 1} ds`, the radial form of
/// `int_{B_r} |grad_H k(d)|^2 d^{-2 alpha} dw`.
pub fn radial_reduce(k: &RadialProfile, alpha: f64, r: f64, n: usize) -> Result<f64> {
    check_alpha(alpha, n)?;
    let p = 2.0 * n as f64 - 2.0 * alpha + 1.0;
    let v = profile_integral(k, r, |s| {
        let d = k.derivative(s).unwrap_or(0.0);
        d * d * s.powf(p)
    })?;
    Ok(gradient_constant(n) * v)
}

/// Cartesian nested quadrature of `int_{s_min < d < r} k'(d)^2 |grad_H d|^2 d^{-2 alpha} dw`
/// on the first Heisenberg group, with `k'` supplied directly.
pub fn radial_reduce_3d<D>(dk: D, alpha: f64, s_min: f64, r: f64) -> Result<f64>
where
    D: Fn(f64) -> f64 + Sync,
{
    check_alpha(alpha, 1)?;
    if !(r > 0.0 && s_min >= 0.0 && s_min < r) {
        return Err(LabError::InvalidArgument(format!("need 0 <= s_min < r, got {s_min}, {r}")));
    }
    let g = |rho2: f64, l: f64| {
        let d2 = (rho2 * rho2 + l * l).sqrt();
        let d = d2.sqrt();
        let kp = dk(d);
        kp * kp * (rho2 / d2) * d.powf(-2.0 * alpha)
    };
    let opts = QuadOptions {
        rel_tol: 1e-8,
        ..Default::default()
    };
    integrate_gauge_shells(&g, s_min.max(1e-6 * r), r, 2.0, &opts)
}

/// [`radial_reduce_3d`] with the derivative taken from a sampled profile.
pub fn radial_reduce_3d_profile(k: &RadialProfile, alpha: f64, r: f64) -> Result<f64> {
    let (lo, hi) = range(k, r)?;
    radial_reduce_3d(|s| k.derivative(s.clamp(lo, hi)).unwrap_or(0.0), alpha, lo, hi)
}

/// `beta = 1 / (N - alpha + 1)`, equivalently `1 - 2/p` with
/// `1/p = 1/2 - 1/(2N - 2 alpha + 2)`.
pub fn sobolev_beta(alpha: f64, n: usize) -> f64 {
    1.0 / (n as f64 - alpha + 1.0)
}

/// Ratio of `int_{B_r} k^{2+2 beta} phi^2` to
/// `(int_{B_r} (|grad_H k|^2 + k^2) phi^2)(int_{B_r} k^2 phi^2)^beta`
/// for radial `k` and `phi = d^{-alpha}`; zero for `k == 0`.
pub fn sobolev_ratio(k: &RadialProfile, alpha: f64, r: f64, n: usize) -> Result<f64> {
    check_alpha(alpha, n)?;
    if k.values().iter().any(|&v| v < 0.0) {
        return Err(LabError::InvalidArgument("profile must be nonnegative".into()));
    }
    let beta = sobolev_beta(alpha, n);
    let p = 2.0 * n as f64 + 1.0 - 2.0 * alpha;
    let val = |s: f64| k.eval(s).unwrap_or(0.0).max(0.0);
    let lhs = volume_constant(n) * profile_integral(k, r, |s| val(s).powf(2.0 + 2.0 * beta) * s.powf(p))?;
    let l2 = volume_constant(n) * profile_integral(k, r, |s| val(s).powi(2) * s.powf(p))?;
    let grad = radial_reduce(k, alpha, r, n)?;
    if l2 == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs / ((grad + l2) * l2.powf(beta)))
}

/// `count` nonnegative profiles `(1 - s/r)^2 (a + b s + c s^2 + e s^3)` with
/// coefficients uniform on `[0, 1)`.
pub fn bump_family(count: usize, r: f64, seed: u64, samples: usize) -> Result<Vec<RadialProfile>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let c: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
            RadialProfile::from_fn(
                move |s| (1.0 - s / r).powi(2) * (c[0] + s * (c[1] + s * (c[2] + s * c[3]))),
                0.0,
                r,
                samples,
                0.0,
            )
        })
        .collect()
}

/// Integrand selector for [`divergence_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum DivergenceCase {
    /// `V d^{-2 alpha}` with `alpha < N`.
    Subcritical { alpha: f64 },
    /// `V d^{-2N}`.
    Supercritical,
}

impl DivergenceCase {
    fn exponent(&self, n: usize) -> f64 {
        match self {
            DivergenceCase::Subcritical { alpha } => 2.0 * alpha,
            DivergenceCase::Supercritical => 2.0 * n as f64,
        }
    }
}

fn check_ladder(eps: &[f64]) -> Result<()> {
    if eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::InvalidArgument("eps ladder must be strictly decreasing in (0, 1]".into()));
    }
    Ok(())
}

/// `I(eps) = int_{eps < d < 1} |z|^2/(|z|^4 + l^2) d^{-p} dw` by Cartesian
/// quadrature on the first Heisenberg group, for each `eps`.
pub fn divergence_probe(case: DivergenceCase, eps: &[f64]) -> Result<Vec<f64>> {
    check_ladder(eps)?;
    if let DivergenceCase::Subcritical { alpha } = case {
        if !(0.0..1.0).contains(&alpha) {
            return Err(LabError::InvalidArgument(format!("subcritical alpha = {alpha} must lie in [0, N)")));
        }
    }
    let p = case.exponent(1);
    let g = |rho2: f64, l: f64| {
        let d4 = rho2 * rho2 + l * l;
        rho2 / d4 * d4.powf(-p / 4.0)
    };
    let opts = QuadOptions::default();
    // Accumulate shell integrals between consecutive ladder entries.
    let mut out = Vec::with_capacity(eps.len());
    let mut acc = 0.0;
    let mut upper = 1.0;
    for &e in eps {
        if e < upper {
            acc += integrate_gauge_shells(&g, e, upper, 2.0, &opts)?;
            upper = e;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Closed radial form of [`divergence_probe`] for any `N`:
/// `C_N int_eps^1 s^{2N-1-p} ds`.
pub fn divergence_probe_radial(case: DivergenceCase, eps: &[f64], n: usize) -> Result<Vec<f64>> {
    check_ladder(eps)?;
    let q = 2.0 * n as f64 - case.exponent(n);
    Ok(eps
        .iter()
        .map(|&e| {
            let v = if q.abs() < 1e-14 { -e.ln() } else { (1.0 - e.powf(q)) / q };
            gradient_constant(n) * v
        })
        .collect())
}

/// `|I_last - I_prev| / |I_last|`.
pub fn cauchy_tail(values: &[f64]) -> f64 {
    match values {
        [.., a, b] if *b != 0.0 => (b - a).abs() / b.abs(),
        _ => 0.0,
    }
}
