use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::group::GroupPoint;
use crate::par;

/// Cell-centred tensor grid over a box in `R^{2N+1}`.
///
/// Axis order is `x_1..x_N, y_1..y_N, l`; the `l` axis is contiguous in memory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub bounds: Vec<[f64; 2]>,
    pub cells: Vec<usize>,
}

impl GridSpec {
    pub fn new(n: usize, bounds: Vec<[f64; 2]>, cells: Vec<usize>) -> Result<Self> {
        let spec = Self { n, bounds, cells };
        spec.validate()?;
        Ok(spec)
    }

    /// Symmetric box `[-z_half, z_half]^{2N} x [-l_half, l_half]`, same cell count on every axis.
    pub fn symmetric(n: usize, z_half: f64, l_half: f64, cells: usize) -> Result<Self> {
        let mut bounds = vec![[-z_half, z_half]; 2 * n];
        bounds.push([-l_half, l_half]);
        Self::new(n, bounds, vec![cells; 2 * n + 1])
    }

    /// The 64^3 grid on `[-2,2]^2 x [-4,4]` for `N = 1`.
    pub fn reference() -> Self {
        Self::symmetric(1, 2.0, 4.0, 64).expect("reference grid is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let dims = 2 * self.n + 1;
        if self.n == 0 {
            return Err(LabError::InvalidGrid("N must be >= 1".into()));
        }
        if self.bounds.len() != dims || self.cells.len() != dims {
            return Err(LabError::InvalidGrid(format!(
                "expected {dims} axes, got {} bounds and {} cell counts",
                self.bounds.len(),
                self.cells.len()
            )));
        }
        for (a, (b, &c)) in self.bounds.iter().zip(&self.cells).enumerate() {
            if c < 2 {
                return Err(LabError::InvalidGrid(format!("axis {a} needs at least 2 cells")));
            }
            if !(b[0] < 0.0 && b[1] > 0.0) || !b[0].is_finite() || !b[1].is_finite() {
                return Err(LabError::InvalidGrid(format!(
                    "axis {a} bounds [{}, {}] must contain the origin strictly inside",
                    b[0], b[1]
                )));
            }
        }
        let z_ext = self.bounds[..2 * self.n]
            .iter()
            .map(|b| b[0].abs().max(b[1]))
            .fold(0.0, f64::max);
        let lb = self.bounds[2 * self.n];
        let l_ext = lb[0].abs().min(lb[1]);
        if l_ext < 0.5 * z_ext * z_ext {
            return Err(LabError::InvalidGrid(format!(
                "l extent {l_ext} is below half the squared z extent {}",
                0.5 * z_ext * z_ext
            )));
        }
        let origin_node = (0..dims).all(|a| {
            let p = -self.bounds[a][0] / self.spacing(a) - 0.5;
            (p - p.round()).abs() < 1e-9
        });
        if origin_node {
            return Err(LabError::InvalidGrid("a grid node coincides with the origin".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        2 * self.n + 1
    }

    pub fn l_axis(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.bounds[axis][1] - self.bounds[axis][0]) / self.cells[axis] as f64
    }

    pub fn center(&self, axis: usize, i: usize) -> f64 {
        self.bounds[axis][0] + (i as f64 + 0.5) * self.spacing(axis)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dims()).map(|a| self.spacing(a)).product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.cells[axis + 1..].iter().product()
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.cells).fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn multi_index_into(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.dims()).rev() {
            out[a] = idx % self.cells[a];
            idx /= self.cells[a];
        }
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims()];
        self.multi_index_into(idx, &mut out);
        out
    }

    pub fn coords_into(&self, idx: usize, out: &mut [f64]) {
        let mut rest = idx;
        for a in (0..self.dims()).rev() {
            let i = rest % self.cells[a];
            rest /= self.cells[a];
            out[a] = self.center(a, i);
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dims()];
        self.coords_into(idx, &mut out);
        out
    }

    pub fn point(&self, idx: usize) -> GroupPoint {
        GroupPoint::from_coords(&self.coords(idx)).expect("grid nodes are finite")
    }

    /// `|z|^2` and `l` of a node without allocating.
    pub fn z2_l(&self, idx: usize) -> (f64, f64) {
        let mut rest = idx;
        let mut z2 = 0.0;
        let mut l = 0.0;
        for a in (0..self.dims()).rev() {
            let i = rest % self.cells[a];
            rest /= self.cells[a];
            let c = self.center(a, i);
            if a == self.l_axis() {
                l = c;
            } else {
                z2 += c * c;
            }
        }
        (z2, l)
    }

    pub fn gauge(&self, idx: usize) -> f64 {
        let (z2, l) = self.z2_l(idx);
        (z2 * z2 + l * l).sqrt().sqrt()
    }

    /// Whether the node's cell touches the origin (within one spacing on every axis).
    pub fn is_origin_adjacent(&self, idx: usize) -> bool {
        let c = self.coords(idx);
        c.iter().enumerate().all(|(a, v)| v.abs() < self.spacing(a) * (1.0 - 1e-12))
    }

    /// Distance in cells from the node nearest to `p` to the box boundary.
    pub fn cells_from_boundary(&self, p: &GroupPoint) -> f64 {
        p.coords()
            .iter()
            .enumerate()
            .map(|(a, &v)| {
                let h = self.spacing(a);
                ((v - self.bounds[a][0]) / h).min((self.bounds[a][1] - v) / h)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Multilinear interpolation weights `(node, weight)` for the point `p`.
    /// Corners outside the box are dropped (Dirichlet ghosts).
    pub fn interpolation_weights(&self, p: &GroupPoint) -> Result<Vec<(usize, f64)>> {
        if p.n() != self.n {
            return Err(LabError::DimensionMismatch {
                expected: self.n,
                found: p.n(),
            });
        }
        let coords = p.coords();
        let dims = self.dims();
        let mut base = vec![0i64; dims];
        let mut frac = vec![0.0; dims];
        for a in 0..dims {
            let pos = (coords[a] - self.bounds[a][0]) / self.spacing(a) - 0.5;
            let k = pos.floor();
            base[a] = k as i64;
            frac[a] = pos - k;
        }
        let mut out = Vec::with_capacity(1 << dims);
        let mut multi = vec![0usize; dims];
        'corner: for corner in 0..(1usize << dims) {
            let mut w = 1.0;
            for a in 0..dims {
                let bit = (corner >> a) & 1;
                let i = base[a] + bit as i64;
                if i < 0 || i >= self.cells[a] as i64 {
                    continue 'corner;
                }
                multi[a] = i as usize;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                out.push((self.index(&multi), w));
            }
        }
        Ok(out)
    }

    /// The same box with every cell count scaled by `num/den` (rounded, kept even).
    pub fn refined(&self, num: usize, den: usize) -> Result<Self> {
        let cells = self
            .cells
            .iter()
            .map(|&c| {
                let m = (c * num + den / 2) / den;
                m + (m % 2)
            })
            .collect();
        Self::new(self.n, self.bounds.clone(), cells)
    }
}

/// A scalar field sampled at the nodes of a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub time: f64,
}

impl GridField {
    pub fn zeros(spec: &GridSpec) -> Self {
        Self {
            spec: spec.clone(),
            values: vec![0.0; spec.len()],
            time: 0.0,
        }
    }

    pub fn from_values(spec: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(LabError::InvalidGrid(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                spec.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument("field values must be finite".into()));
        }
        Ok(Self {
            spec: spec.clone(),
            values,
            time: 0.0,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn<F>(spec: &GridSpec, f: F) -> Self
    where
        F: Fn(&GroupPoint) -> f64 + Sync + Send,
    {
        let values = par::map_range(spec.len(), |i| f(&spec.point(i)));
        Self {
            spec: spec.clone(),
            values,
            time: 0.0,
        }
    }

    pub fn constant(spec: &GridSpec, v: f64) -> Self {
        Self {
            spec: spec.clone(),
            values: vec![v; spec.len()],
            time: 0.0,
        }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `sum u * cell volume`.
    pub fn mass(&self) -> f64 {
        let v = &self.values;
        par::sum_indexed(v.len(), |i| v[i]) * self.spec.cell_volume()
    }

    /// `sum u * weight * cell volume`.
    pub fn weighted_mass(&self, weight: &[f64]) -> f64 {
        let v = &self.values;
        par::sum_indexed(v.len(), |i| v[i] * weight[i]) * self.spec.cell_volume()
    }

    pub fn sup_norm(&self) -> f64 {
        let v = &self.values;
        par::max_indexed(v.len(), |i| v[i].abs())
    }

    pub fn min_value(&self) -> f64 {
        let v = &self.values;
        par::min_indexed(v.len(), |i| v[i])
    }

    pub fn max_value(&self) -> f64 {
        let v = &self.values;
        par::max_indexed(v.len(), |i| v[i])
    }

    /// Multilinear interpolation between node values; outside the box the
    /// field is taken to vanish.
    pub fn sample(&self, p: &GroupPoint) -> Result<f64> {
        Ok(self
            .spec
            .interpolation_weights(p)?
            .iter()
            .map(|&(i, w)| w * self.values[i])
            .sum())
    }
}
