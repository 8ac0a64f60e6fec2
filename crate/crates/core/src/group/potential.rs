use serde::{Deserialize, Serialize};

use super::point::{hardy_weight, GroupPoint};
use crate::error::{LabError, Result};

/// A bounded, possibly sign-changing addition to the Hardy potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundedPart {
    Constant { value: f64 },
    /// Deterministic pseudo-random field with values in `[-amplitude, amplitude]`,
    /// piecewise constant on cubes of side `cell`.
    Hashed { amplitude: f64, seed: u64, cell: f64 },
    /// `amplitude * prod cos(k x_j) cos(k y_j) * cos(k l / 2)`.
    Wave { amplitude: f64, wavenumber: f64 },
}

impl BoundedPart {
    pub fn eval(&self, w: &GroupPoint) -> f64 {
        match *self {
            BoundedPart::Constant { value } => value,
            BoundedPart::Hashed { amplitude, seed, cell } => {
                let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
                for c in w.coords() {
                    let q = (c / cell).floor() as i64;
                    h = splitmix64(h ^ (q as u64));
                }
                let unit = (h >> 11) as f64 / (1u64 << 53) as f64;
                amplitude * (2.0 * unit - 1.0)
            }
            BoundedPart::Wave { amplitude, wavenumber } => {
                let k = wavenumber;
                let z: f64 = w.x().iter().chain(w.y()).map(|v| (k * v).cos()).product();
                amplitude * z * (0.5 * k * w.l()).cos()
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match *self {
            BoundedPart::Constant { value } => value.abs(),
            BoundedPart::Hashed { amplitude, .. } | BoundedPart::Wave { amplitude, .. } => amplitude.abs(),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// `V(w) = min(c |z|^2/(|z|^4+l^2) 1_{d(w) < R}, n) + B(w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub c: f64,
    /// Radius `R` of the gauge ball carrying the Hardy part; `None` means the whole group.
    #[serde(default)]
    pub localization_radius: Option<f64>,
    /// Truncation level `n`; `None` leaves the singular part unclipped.
    #[serde(default)]
    pub truncation: Option<u64>,
    #[serde(default)]
    pub bounded_part: Option<BoundedPart>,
}

impl PotentialSpec {
    pub fn hardy(c: f64) -> Self {
        Self {
            c,
            localization_radius: None,
            truncation: None,
            bounded_part: None,
        }
    }

    pub fn localized(mut self, radius: f64) -> Self {
        self.localization_radius = Some(radius);
        self
    }

    pub fn truncated(mut self, n: u64) -> Self {
        self.truncation = Some(n);
        self
    }

    pub fn with_bounded_part(mut self, b: BoundedPart) -> Self {
        self.bounded_part = Some(b);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(LabError::InvalidArgument(format!("Hardy coefficient must be >= 0, got {}", self.c)));
        }
        if let Some(r) = self.localization_radius {
            if !(r > 0.0) {
                return Err(LabError::InvalidArgument(format!("localization radius must be > 0, got {r}")));
            }
        }
        if self.truncation == Some(0) {
            return Err(LabError::InvalidArgument("truncation level must be positive".into()));
        }
        Ok(())
    }

    /// The Hardy part alone, before clipping.
    pub fn singular_part(&self, w: &GroupPoint) -> f64 {
        if self.c == 0.0 {
            return 0.0;
        }
        if let Some(r) = self.localization_radius {
            if w.gauge() >= r {
                return 0.0;
            }
        }
        self.c * hardy_weight(w)
    }

    /// Full potential. At the origin the singular part is `+inf` before clipping,
    /// so a truncated potential evaluates to its level there.
    pub fn eval(&self, w: &GroupPoint) -> f64 {
        let mut v = self.singular_part(w);
        if let Some(n) = self.truncation {
            v = v.min(n as f64);
        }
        if let Some(b) = &self.bounded_part {
            v += b.eval(w);
        }
        v
    }
}

/// Free-function form of [`PotentialSpec::eval`].
pub fn potential(spec: &PotentialSpec, w: &GroupPoint) -> f64 {
    spec.eval(w)
}

/// Smaller root of `alpha (2N - alpha) = c`, i.e. `N - sqrt(N^2 - c)`.
///
/// Computed as `c / (N + sqrt(N^2 - c))` to avoid cancellation for small `c`.
pub fn smallest_root_alpha(c: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    let cstar = nf * nf;
    if !(c >= 0.0) || !c.is_finite() {
        return Err(LabError::InvalidArgument(format!("c must be finite and >= 0, got {c}")));
    }
    if c > cstar {
        return Err(LabError::Supercritical { c, cstar });
    }
    Ok(c / (nf + (cstar - c).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p1(x: f64, y: f64, l: f64) -> GroupPoint {
        GroupPoint::new(vec![x], vec![y], l).unwrap()
    }

    #[test]
    fn potential_examples() {
        assert_eq!(potential(&PotentialSpec::hardy(1.0), &p1(1.0, 0.0, 0.0)), 1.0);
        let spec = PotentialSpec::hardy(3.0).localized(1.0).truncated(5);
        assert_eq!(potential(&spec, &p1(0.0, 0.0, 1.0)), 0.0);
        assert_eq!(potential(&PotentialSpec::hardy(2.0), &p1(0.0, 0.0, 1.0)), 0.0);
        // untruncated value 4 * |z|^2/|z|^4 = 4/0.4 = 10 at |z|^2 = 0.4, l = 0
        let w = p1(0.4f64.sqrt(), 0.0, 0.0);
        assert!((potential(&PotentialSpec::hardy(4.0), &w) - 10.0).abs() < 1e-12);
        assert_eq!(potential(&PotentialSpec::hardy(4.0).truncated(3), &w), 3.0);
    }

    #[test]
    fn origin_is_clipped_to_level() {
        let o = GroupPoint::origin(1);
        assert_eq!(PotentialSpec::hardy(1.0).truncated(7).eval(&o), 7.0);
        assert_eq!(PotentialSpec::hardy(1.0).eval(&o), f64::INFINITY);
        assert_eq!(PotentialSpec::hardy(0.0).eval(&o), 0.0);
    }

    #[test]
    fn localization_uses_gauge_ball() {
        // Euclidean norm of (0.9, 0, 0.8) exceeds 1.1 but the gauge is (0.6561 + 0.64)^(1/4) < 1.1
        let spec = PotentialSpec::hardy(1.0).localized(1.1);
        let w = p1(0.9, 0.0, 0.8);
        assert!(w.gauge() < 1.1);
        assert!(spec.eval(&w) > 0.0);
        assert_eq!(spec.eval(&p1(1.2, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn bounded_parts() {
        let w = p1(0.2, 0.1, -0.3);
        let spec = PotentialSpec::hardy(0.0).with_bounded_part(BoundedPart::Constant { value: 0.5 });
        assert_eq!(spec.eval(&w), 0.5);
        let h = BoundedPart::Hashed { amplitude: 2.0, seed: 7, cell: 0.1 };
        assert!(h.eval(&w).abs() <= 2.0);
        assert_eq!(h.eval(&w), h.eval(&w.clone()));
        assert_eq!(h.sup_norm(), 2.0);
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(smallest_root_alpha(0.0, 3).unwrap(), 0.0);
        assert_eq!(smallest_root_alpha(4.0, 2).unwrap(), 2.0);
        assert!((smallest_root_alpha(3.0, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(smallest_root_alpha(1.5, 1), Err(LabError::Supercritical { .. })));
        assert!(matches!(smallest_root_alpha(-0.1, 1), Err(LabError::InvalidArgument(_))));
    }

    proptest! {
        #[test]
        fn alpha_solves_quadratic(n in 1usize..5, frac in 0.0..1.0f64) {
            let c = frac * (n * n) as f64;
            let a = smallest_root_alpha(c, n).unwrap();
            prop_assert!((a * (2.0 * n as f64 - a) - c).abs() <= 1e-12 * (1.0 + c));
            prop_assert!(a >= 0.0 && a <= n as f64);
            let a2 = smallest_root_alpha((c + 0.01).min((n * n) as f64), n).unwrap();
            prop_assert!(a2 >= a);
        }

        #[test]
        fn truncation_is_monotone(x in -2.0..2.0f64, y in -2.0..2.0f64, l in -2.0..2.0f64,
                                  c in 0.0..5.0f64, n in 1u64..50) {
            let w = p1(x, y, l);
            let base = PotentialSpec::hardy(c);
            let vn = base.clone().truncated(n).eval(&w);
            let vn1 = base.clone().truncated(n + 1).eval(&w);
            prop_assert!(vn <= vn1);
            prop_assert!(vn1 <= base.eval(&w));
            prop_assert!(vn >= 0.0 && vn <= n as f64);
        }
    }
}
