use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Structural constants of the Heisenberg group `H^N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupParams {
    /// Heisenberg index `N >= 1`.
    pub n: usize,
    /// Homogeneous dimension `Q = 2N + 2`.
    pub q: usize,
    /// Critical Hardy constant `C*(N) = N^2`.
    pub cstar: f64,
}

impl GroupParams {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LabError::InvalidArgument("Heisenberg index N must be >= 1".into()));
        }
        Ok(Self {
            n,
            q: 2 * n + 2,
            cstar: (n * n) as f64,
        })
    }
}

/// A point `w = (x, y, l)` of `H^N` with `x, y in R^N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    x: Vec<f64>,
    y: Vec<f64>,
    l: f64,
}

impl GroupPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, l: f64) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(LabError::InvalidArgument(format!(
                "x and y must have the same positive length (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        if !l.is_finite() || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument("coordinates must be finite".into()));
        }
        Ok(Self { x, y, l })
    }

    pub fn origin(n: usize) -> Self {
        Self {
            x: vec![0.0; n],
            y: vec![0.0; n],
            l: 0.0,
        }
    }

    /// Builds a point from `z = (x, y)` of even length `2N`.
    pub fn from_z(z: &[f64], l: f64) -> Result<Self> {
        if z.is_empty() || !z.len().is_multiple_of(2) {
            return Err(LabError::InvalidArgument(format!(
                "z must have even positive length, got {}",
                z.len()
            )));
        }
        let n = z.len() / 2;
        Self::new(z[..n].to_vec(), z[n..].to_vec(), l)
    }

    /// Builds a point from ambient coordinates `(x_1..x_N, y_1..y_N, l)`.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        match coords.split_last() {
            Some((&l, z)) => Self::from_z(z, l),
            None => Err(LabError::InvalidArgument("empty coordinate list".into())),
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(2 * self.n() + 1);
        c.extend_from_slice(&self.x);
        c.extend_from_slice(&self.y);
        c.push(self.l);
        c
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn z_norm_sq(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|v| v * v).sum()
    }

    pub fn is_origin(&self) -> bool {
        self.l == 0.0 && self.x.iter().chain(&self.y).all(|&v| v == 0.0)
    }

    fn check_same_n(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() {
            return Err(LabError::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok(())
    }

    /// Group law `(x,y,l) o (x',y',l') = (x+x', y+y', l+l' + 2(x'.y - y'.x))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same_n(other)?;
        let twist: f64 = (0..self.n())
            .map(|j| other.x[j] * self.y[j] - other.y[j] * self.x[j])
            .sum();
        Ok(Self {
            x: self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect(),
            y: self.y.iter().zip(&other.y).map(|(a, b)| a + b).collect(),
            l: self.l + other.l + 2.0 * twist,
        })
    }

    pub fn inverse(&self) -> Self {
        Self {
            x: self.x.iter().map(|v| -v).collect(),
            y: self.y.iter().map(|v| -v).collect(),
            l: -self.l,
        }
    }

    /// Anisotropic dilation `D_lambda(z, l) = (lambda z, lambda^2 l)`.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(LabError::InvalidArgument(format!(
                "dilation factor must be positive and finite, got {lambda}"
            )));
        }
        Ok(Self {
            x: self.x.iter().map(|v| lambda * v).collect(),
            y: self.y.iter().map(|v| lambda * v).collect(),
            l: lambda * lambda * self.l,
        })
    }

    /// Koranyi gauge `d(w) = (|z|^4 + l^2)^(1/4)`.
    pub fn gauge(&self) -> f64 {
        let z2 = self.z_norm_sq();
        (z2 * z2 + self.l * self.l).sqrt().sqrt()
    }

    /// `d(w)^p`, refusing the origin for negative exponents.
    pub fn gauge_pow(&self, p: f64) -> Result<f64> {
        let d = self.gauge();
        if d == 0.0 && p < 0.0 {
            return Err(LabError::Domain(format!("d^{p} is singular at the origin")));
        }
        Ok(d.powf(p))
    }

    /// Gauge distance `rho(w, w2) = d(w2^{-1} o w)`.
    pub fn metric(&self, other: &Self) -> Result<f64> {
        Ok(other.inverse().compose(self)?.gauge())
    }
}

/// `|z|^2 / (|z|^4 + l^2)`, the unit-coefficient Hardy weight. Infinite at the origin.
pub fn hardy_weight(w: &GroupPoint) -> f64 {
    let z2 = w.z_norm_sq();
    let den = z2 * z2 + w.l * w.l;
    if den == 0.0 {
        f64::INFINITY
    } else {
        z2 / den
    }
}

/// Closed forms for derivatives of the gauge, valid away from the origin.
pub mod gauge_calculus {
    use super::*;

    fn nonzero(w: &GroupPoint) -> Result<()> {
        if w.is_origin() {
            Err(LabError::Domain("gauge is not differentiable at the origin".into()))
        } else {
            Ok(())
        }
    }

    /// `|grad_H d|^2 = |z|^2 (|z|^4 + l^2)^(-1/2)`.
    pub fn grad_sq(w: &GroupPoint) -> Result<f64> {
        nonzero(w)?;
        let z2 = w.z_norm_sq();
        Ok(z2 / (z2 * z2 + w.l * w.l).sqrt())
    }

    /// `Delta_H d = (Q - 1) / d * |grad_H d|^2`.
    pub fn sublaplacian(w: &GroupPoint) -> Result<f64> {
        let q = (2 * w.n() + 2) as f64;
        Ok((q - 1.0) / w.gauge() * grad_sq(w)?)
    }

    /// `Delta_H d^{-alpha} = -alpha (2N - alpha) d^{-alpha} |z|^2 / (|z|^4 + l^2)`.
    pub fn sublaplacian_of_power(w: &GroupPoint, alpha: f64) -> Result<f64> {
        sublaplacian_of_power_with(w, alpha, alpha * (2.0 * w.n() as f64 - alpha))
    }

    /// Same shape with an explicit coefficient in place of `alpha (2N - alpha)`.
    pub fn sublaplacian_of_power_with(w: &GroupPoint, alpha: f64, coefficient: f64) -> Result<f64> {
        nonzero(w)?;
        Ok(-coefficient * w.gauge_pow(-alpha)? * hardy_weight(w))
    }
}
