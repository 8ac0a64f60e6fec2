use serde::{Deserialize, Serialize};

use super::point::{gauge_calculus, GroupPoint};
use crate::error::{LabError, Result};

/// Samples of a one-variable profile `k(s)`, `s = d(w)`, with the exponent
/// `alpha` of the companion weight `phi = d^{-alpha}`.
///
/// Derivatives come from the cubic through the four samples nearest to `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    s: Vec<f64>,
    k: Vec<f64>,
    alpha: f64,
}

impl RadialProfile {
    pub fn new(s: Vec<f64>, k: Vec<f64>, alpha: f64) -> Result<Self> {
        if s.len() != k.len() || s.len() < 4 {
            return Err(LabError::InvalidArgument(
                "profile needs at least four samples and matching lengths".into(),
            ));
        }
        if s[0] < 0.0 || s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::InvalidArgument("profile grid must be strictly increasing and >= 0".into()));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(LabError::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(Self { s, k, alpha })
    }

    /// Samples `f` on `count` equispaced points of `[s_min, s_max]`.
    pub fn from_fn(f: impl Fn(f64) -> f64, s_min: f64, s_max: f64, count: usize, alpha: f64) -> Result<Self> {
        if count < 4 || !(s_max > s_min) {
            return Err(LabError::InvalidArgument("need count >= 4 and s_max > s_min".into()));
        }
        let h = (s_max - s_min) / (count - 1) as f64;
        let s: Vec<f64> = (0..count).map(|i| s_min + h * i as f64).collect();
        let k = s.iter().map(|&v| f(v)).collect();
        Self::new(s, k, alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> &[f64] {
        &self.s
    }

    pub fn values(&self) -> &[f64] {
        &self.k
    }

    /// Whether `alpha` lies in the admissible range `[0, N]`.
    pub fn admissible_for(&self, n: usize) -> bool {
        self.alpha <= n as f64
    }

    fn stencil(&self, s: f64) -> Result<usize> {
        let lo = self.s[0];
        let hi = *self.s.last().unwrap();
        let slack = 1e-12 * (1.0 + hi.abs());
        if s < lo - slack || s > hi + slack {
            return Err(LabError::Domain(format!("s = {s} outside profile range [{lo}, {hi}]")));
        }
        let i = self.s.partition_point(|&v| v <= s).saturating_sub(1);
        Ok(i.saturating_sub(1).min(self.s.len() - 4))
    }

    /// Value and first two derivatives at `s`.
    pub fn jet(&self, s: f64) -> Result<(f64, f64, f64)> {
        let i0 = self.stencil(s)?;
        let t = &self.s[i0..i0 + 4];
        let v = &self.k[i0..i0 + 4];
        let (mut f, mut df, mut d2f) = (0.0, 0.0, 0.0);
        for i in 0..4 {
            let mut o = [0usize; 3];
            let mut m = 0;
            for j in 0..4 {
                if j != i {
                    o[m] = j;
                    m += 1;
                }
            }
            let den = (t[i] - t[o[0]]) * (t[i] - t[o[1]]) * (t[i] - t[o[2]]);
            let (e0, e1, e2) = (s - t[o[0]], s - t[o[1]], s - t[o[2]]);
            f += v[i] * e0 * e1 * e2 / den;
            df += v[i] * (e1 * e2 + e0 * e2 + e0 * e1) / den;
            d2f += v[i] * 2.0 * (e0 + e1 + e2) / den;
        }
        Ok((f, df, d2f))
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        Ok(self.jet(s)?.0)
    }

    pub fn derivative(&self, s: f64) -> Result<f64> {
        Ok(self.jet(s)?.1)
    }
}

/// `Delta_H k(d(w)) = |grad_H d|^2 (k''(d) + (Q - 1) k'(d) / d)`.
pub fn radial_sublaplacian(k: &RadialProfile, w: &GroupPoint) -> Result<f64> {
    if w.is_origin() {
        return Err(LabError::Domain("radial sub-Laplacian is singular at the origin".into()));
    }
    let d = w.gauge();
    let (_, dk, d2k) = k.jet(d)?;
    let q = (2 * w.n() + 2) as f64;
    Ok(gauge_calculus::grad_sq(w)? * (d2k + (q - 1.0) * dk / d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_reproduces_cubics() {
        let p = RadialProfile::from_fn(|s| 2.0 * s * s * s - s + 1.0, 0.0, 2.0, 11, 0.0).unwrap();
        let (f, df, d2f) = p.jet(0.77).unwrap();
        assert!((f - (2.0 * 0.77f64.powi(3) - 0.77 + 1.0)).abs() < 1e-12);
        assert!((df - (6.0 * 0.77 * 0.77 - 1.0)).abs() < 1e-11);
        assert!((d2f - 12.0 * 0.77).abs() < 1e-10);
        assert!(p.eval(2.5).is_err());
    }

    #[test]
    fn constant_profile_has_zero_sublaplacian() {
        let k = RadialProfile::from_fn(|_| 3.0, 0.0, 4.0, 50, 0.0).unwrap();
        let w = GroupPoint::new(vec![0.4], vec![-0.3], 0.2).unwrap();
        assert!(radial_sublaplacian(&k, &w).unwrap().abs() < 1e-12);
        assert!(radial_sublaplacian(&k, &GroupPoint::origin(1)).is_err());
    }

    #[test]
    fn power_profile_matches_closed_form() {
        let alpha = 0.6;
        let k = RadialProfile::from_fn(|s| s.powf(-alpha), 0.2, 3.0, 10001, alpha).unwrap();
        for w in [
            GroupPoint::new(vec![0.7], vec![0.2], -0.5).unwrap(),
            GroupPoint::new(vec![1.1], vec![-0.4], 0.9).unwrap(),
        ] {
            let lhs = radial_sublaplacian(&k, &w).unwrap();
            let rhs = gauge_calculus::sublaplacian_of_power(&w, alpha).unwrap();
            assert!((lhs - rhs).abs() <= 1e-6 * rhs.abs(), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialProfile::new(vec![0.0, 1.0, 1.0, 2.0], vec![0.0; 4], 0.0).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0, 2.0], vec![0.0; 3], 0.0).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0, 2.0, 3.0], vec![0.0; 4], -1.0).is_err());
    }
}
