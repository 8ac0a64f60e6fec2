//! Finite-difference oracles built from the left-invariant fields
//! `X_j = d/dx_j + 2 y_j d/dl` and `Y_j = d/dy_j - 2 x_j d/dl`.
//!
//! Steps are homogeneous: a nominal step `h` becomes `h d(w)` on horizontal
//! axes and `h d(w)^2` on the `l` axis, so relative oracle errors are
//! invariant under dilations.

use serde::{Deserialize, Serialize};

use super::record::VerificationRecord;
use crate::error::{LabError, Result};
use crate::group::{gauge_calculus, hardy_weight, GroupPoint};

fn check(w: &GroupPoint, h: f64) -> Result<()> {
    if w.is_origin() {
        return Err(LabError::Domain("finite-difference oracle at the origin".into()));
    }
    if !(h > 0.0) {
        return Err(LabError::InvalidArgument(format!("step must be positive, got {h}")));
    }
    Ok(())
}

fn step_scale(w: &GroupPoint) -> f64 {
    let d = w.gauge();
    if d > 0.0 {
        d
    } else {
        1.0
    }
}

fn gauge_of(c: &[f64]) -> f64 {
    let n = (c.len() - 1) / 2;
    let z2: f64 = c[..2 * n].iter().map(|v| v * v).sum();
    (z2 * z2 + c[2 * n] * c[2 * n]).sqrt().sqrt()
}

fn shifted(c: &[f64], axis: usize, s: f64) -> Vec<f64> {
    let mut o = c.to_vec();
    o[axis] += s;
    o
}

/// `X_j f` and `Y_j f` by central differences of the ambient partials.
pub fn horizontal_gradient<F: Fn(&[f64]) -> f64>(f: &F, w: &GroupPoint, h: f64) -> Vec<f64> {
    let c = w.coords();
    let n = w.n();
    let d = step_scale(w);
    let (hz, hl) = (h * d, h * d * d);
    let la = 2 * n;
    let dl = (f(&shifted(&c, la, hl)) - f(&shifted(&c, la, -hl))) / (2.0 * hl);
    let mut g = Vec::with_capacity(2 * n);
    for j in 0..n {
        let dx = (f(&shifted(&c, j, hz)) - f(&shifted(&c, j, -hz))) / (2.0 * hz);
        g.push(dx + 2.0 * c[n + j] * dl);
    }
    for j in 0..n {
        let dy = (f(&shifted(&c, n + j, hz)) - f(&shifted(&c, n + j, -hz))) / (2.0 * hz);
        g.push(dy - 2.0 * c[j] * dl);
    }
    g
}

/// `sum_j (X_j^2 + Y_j^2) f` by three-point second differences along the
/// straight flow lines of each field.
pub fn sublaplacian<F: Fn(&[f64]) -> f64>(f: &F, w: &GroupPoint, h: f64) -> f64 {
    let c = w.coords();
    let n = w.n();
    let hz = h * step_scale(w);
    let la = 2 * n;
    let f0 = f(&c);
    let mut total = 0.0;
    for j in 0..n {
        for (axis, dl) in [(j, 2.0 * c[n + j]), (n + j, -2.0 * c[j])] {
            let mut p = c.clone();
            p[axis] += hz;
            p[la] += dl * hz;
            let mut m = c.clone();
            m[axis] -= hz;
            m[la] -= dl * hz;
            total += (f(&p) - 2.0 * f0 + f(&m)) / (hz * hz);
        }
    }
    total
}

fn ladder(h: f64) -> Vec<f64> {
    vec![h, h / 2.0, h / 4.0]
}

fn oracle_record<O>(name: &str, w: &GroupPoint, h: f64, closed: f64, scale: f64, tol: f64, oracle: O) -> VerificationRecord
where
    O: Fn(f64) -> f64,
{
    let steps = ladder(h);
    let errors: Vec<f64> = steps.iter().map(|&s| (oracle(s) - closed).abs()).collect();
    VerificationRecord::new(name, closed, oracle(h), scale, tol)
        .at(w.coords())
        .param("h", h)
        .with_ladder(steps, errors)
}

/// Default relative tolerance of the gauge identities.
pub const IDENTITY_TOL: f64 = 1e-5;

/// `|grad_H d|^2` against its closed form.
pub fn verify_eikonal(w: &GroupPoint, h: f64) -> Result<VerificationRecord> {
    check(w, h)?;
    let closed = gauge_calculus::grad_sq(w)?;
    Ok(oracle_record("eikonal", w, h, closed, 1.0, IDENTITY_TOL, |s| {
        horizontal_gradient(&gauge_of, w, s).iter().map(|g| g * g).sum()
    }))
}

/// `Delta_H d` against `(Q - 1) |grad_H d|^2 / d`.
pub fn verify_gauge_laplacian(w: &GroupPoint, h: f64) -> Result<VerificationRecord> {
    check(w, h)?;
    let closed = gauge_calculus::sublaplacian(w)?;
    let scale = 1.0 / w.gauge();
    Ok(oracle_record("gauge_sublaplacian", w, h, closed, scale, IDENTITY_TOL, |s| {
        sublaplacian(&gauge_of, w, s)
    }))
}

/// `Delta_H d^{-alpha}` against `-alpha (2N - alpha) d^{-alpha} |z|^2 / (|z|^4 + l^2)`.
pub fn verify_dalpha_identity(w: &GroupPoint, alpha: f64, h: f64) -> Result<VerificationRecord> {
    let c = alpha * (2.0 * w.n() as f64 - alpha);
    verify_dalpha_identity_with(w, alpha, h, c)
}

/// As [`verify_dalpha_identity`] with an explicit coefficient in the closed
/// form; anything but `alpha (2N - alpha)` should fail.
pub fn verify_dalpha_identity_with(w: &GroupPoint, alpha: f64, h: f64, coefficient: f64) -> Result<VerificationRecord> {
    check(w, h)?;
    if !(0.0..2.0 * w.n() as f64).contains(&alpha) {
        return Err(LabError::InvalidArgument(format!("alpha = {alpha} outside [0, 2N)")));
    }
    let closed = gauge_calculus::sublaplacian_of_power_with(w, alpha, coefficient)?;
    let scale = w.gauge_pow(-alpha - 2.0)?;
    let f = move |c: &[f64]| gauge_of(c).powf(-alpha);
    Ok(
        oracle_record("dalpha_identity", w, h, closed, scale, IDENTITY_TOL, |s| sublaplacian(&f, w, s))
            .param("alpha", alpha)
            .param("coefficient", coefficient),
    )
}

/// Smooth test fields with known sub-Laplacians.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestField {
    /// `|z|^2`, with `Delta_H = 4N`.
    ZSquared,
    /// `l`, with `Delta_H = 0`.
    L,
    /// `l^2`, with `Delta_H = 8 |z|^2`.
    LSquared,
    /// `x_1 y_1`, with `Delta_H = 0`.
    XY,
    /// `x_1 l`, with `Delta_H = 4 y_1`.
    XL,
}

impl TestField {
    pub const ALL: [TestField; 5] = [
        TestField::ZSquared,
        TestField::L,
        TestField::LSquared,
        TestField::XY,
        TestField::XL,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TestField::ZSquared => "z_squared",
            TestField::L => "l",
            TestField::LSquared => "l_squared",
            TestField::XY => "x1_y1",
            TestField::XL => "x1_l",
        }
    }

    pub fn eval_coords(&self, c: &[f64]) -> f64 {
        let n = (c.len() - 1) / 2;
        let l = c[2 * n];
        match self {
            TestField::ZSquared => c[..2 * n].iter().map(|v| v * v).sum(),
            TestField::L => l,
            TestField::LSquared => l * l,
            TestField::XY => c[0] * c[n],
            TestField::XL => c[0] * l,
        }
    }

    pub fn eval(&self, w: &GroupPoint) -> f64 {
        self.eval_coords(&w.coords())
    }

    pub fn sublaplacian(&self, w: &GroupPoint) -> f64 {
        match self {
            TestField::ZSquared => 4.0 * w.n() as f64,
            TestField::L | TestField::XY => 0.0,
            TestField::LSquared => 8.0 * w.z_norm_sq(),
            TestField::XL => 4.0 * w.y()[0],
        }
    }
}

/// Default tolerance of the covariance checks.
pub const COVARIANCE_TOL: f64 = 1e-8;

/// `Delta_H (f o D_lambda)(w)` by finite differences against
/// `lambda^2 (Delta_H f)(D_lambda w)` from the closed form.
pub fn verify_dilation_covariance(f: TestField, lambda: f64, w: &GroupPoint, h: f64) -> Result<VerificationRecord> {
    if !(h > 0.0) {
        return Err(LabError::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let dw = w.dilate(lambda)?;
    let n = w.n();
    let composed = move |c: &[f64]| {
        let mut s: Vec<f64> = c.iter().map(|v| lambda * v).collect();
        s[2 * n] *= lambda;
        f.eval_coords(&s)
    };
    // Every library field is at most quadratic along each flow line, so the
    // second differences are exact up to roundoff.
    let lhs = sublaplacian(&composed, w, h);
    let rhs = lambda * lambda * f.sublaplacian(&dw);
    let scale = lambda * lambda;
    Ok(VerificationRecord::new(&format!("dilation_covariance_{}", f.name()), rhs, lhs, scale, COVARIANCE_TOL)
        .at(w.coords())
        .param("lambda", lambda)
        .param("h", h))
}

/// `V(D_lambda w) = lambda^{-2} V(w)` for the unit Hardy weight.
pub fn verify_potential_scaling(lambda: f64, w: &GroupPoint) -> Result<VerificationRecord> {
    if w.is_origin() {
        return Err(LabError::Domain("Hardy weight is singular at the origin".into()));
    }
    let lhs = hardy_weight(&w.dilate(lambda)?);
    let rhs = hardy_weight(w) / (lambda * lambda);
    Ok(VerificationRecord::new("potential_scaling", rhs, lhs, 0.0, 1e-12)
        .at(w.coords())
        .param("lambda", lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1(x: f64, y: f64, l: f64) -> GroupPoint {
        GroupPoint::new(vec![x], vec![y], l).unwrap()
    }

    #[test]
    fn eikonal_examples() {
        let r = verify_eikonal(&p1(1.0, 0.0, 0.0), 1e-3).unwrap();
        assert_eq!(r.closed_form_value, 1.0);
        assert!(r.passed, "{r:?}");
        let r = verify_eikonal(&p1(0.0, 0.0, 2.0), 1e-3).unwrap();
        assert_eq!(r.closed_form_value, 0.0);
        assert!(r.abs_error < 1e-9);
        assert!(verify_eikonal(&GroupPoint::origin(1), 1e-3).is_err());
    }

    #[test]
    fn eikonal_order_two() {
        let r = verify_eikonal(&p1(0.6, -0.3, 0.45), 1e-2).unwrap();
        let o = r.fitted_order.unwrap();
        assert!((o - 2.0).abs() < 0.2, "{o}");
    }

    #[test]
    fn dalpha_examples() {
        let w = p1(0.7, 0.4, -0.5);
        let r = verify_dalpha_identity(&w, 0.0, 1e-3).unwrap();
        assert_eq!(r.closed_form_value, 0.0);
        assert!(r.abs_error < 1e-9);
        let r = verify_dalpha_identity(&w, 0.5, 1e-3).unwrap();
        assert!(r.passed, "{r:?}");
        // At alpha = N the coefficient is N^2.
        let r = verify_dalpha_identity(&w, 1.0, 1e-3).unwrap();
        assert_eq!(r.parameters[1].1, 1.0);
        assert!(r.passed);
        let bad = verify_dalpha_identity_with(&w, 0.5, 1e-3, 0.75 + 0.1).unwrap();
        assert!(!bad.passed);
    }

    #[test]
    fn power_two_profile_matches_fd() {
        use crate::group::{radial_sublaplacian, RadialProfile};
        let k = RadialProfile::from_fn(|s| s * s, 0.0, 3.0, 3001, 0.0).unwrap();
        let w = p1(1.0, 0.0, 0.0);
        let closed = radial_sublaplacian(&k, &w).unwrap();
        let oracle = sublaplacian(&|c: &[f64]| gauge_of(c).powi(2), &w, 2e-4);
        assert!((closed - oracle).abs() < 1e-6, "{closed} vs {oracle}");
    }

    #[test]
    fn covariance_library() {
        let w = p1(1.0, 0.0, 0.0);
        let r = verify_dilation_covariance(TestField::ZSquared, 1.7, &w, 1e-2).unwrap();
        assert!((r.closed_form_value - 4.0 * 1.7 * 1.7).abs() < 1e-12);
        for f in TestField::ALL {
            for lambda in [0.5, 1.0, 2.0, 3.0] {
                let w = p1(0.3, -0.8, 0.6);
                let r = verify_dilation_covariance(f, lambda, &w, 1e-2).unwrap();
                assert!(r.passed, "{r:?}");
            }
        }
        let r = verify_dilation_covariance(TestField::LSquared, 2.0, &p1(1.0, 0.0, 0.0), 1e-2).unwrap();
        assert!((r.closed_form_value - 4.0 * 8.0 * 4.0).abs() < 1e-12);
        assert!(verify_potential_scaling(2.5, &w).unwrap().passed);
    }

    #[test]
    fn fd_matches_test_library() {
        let w = GroupPoint::new(vec![0.3, -0.1], vec![0.5, 0.2], 0.7).unwrap();
        for f in TestField::ALL {
            let fd = sublaplacian(&|c: &[f64]| f.eval_coords(c), &w, 1e-2);
            assert!((fd - f.sublaplacian(&w)).abs() < 1e-8, "{f:?}");
        }
    }
}
