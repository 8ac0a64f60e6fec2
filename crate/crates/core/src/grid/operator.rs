use serde::{Deserialize, Serialize};

use super::spec::GridSpec;
use crate::error::{LabError, Result};
use crate::par;

/// Which left-invariant field a stencil leg follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flow {
    X(usize),
    Y(usize),
}

/// One end of a flow-aligned second difference: the flow moves the node by
/// `sign * h` along its horizontal axis and lands at height `target_l`, which
/// is resolved by linear interpolation between the bracketing l-nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowEndpoint {
    pub flow: Flow,
    pub sign: i8,
    pub target_l: f64,
    /// `(node, weight)` pairs that lie inside the box; missing ones are
    /// Dirichlet ghosts.
    pub nodes: Vec<(usize, f64)>,
    /// Whether any interpolation weight landed outside the box.
    pub truncated: bool,
}

/// Boundary treatment of an assembled operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// Values outside the box are zero.
    DirichletZero,
}

/// Row-compressed sparse matrix over the nodes of a grid.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    spec: GridSpec,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    boundary: BoundaryCondition,
}

impl SparseOperator {
    /// Builds an operator from per-row `(column, value)` lists.
    pub fn from_rows(spec: &GridSpec, rows: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        if rows.len() != spec.len() {
            return Err(LabError::InvalidGrid(format!(
                "{} rows for {} nodes",
                rows.len(),
                spec.len()
            )));
        }
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if c as usize >= spec.len() {
                    return Err(LabError::InvalidGrid(format!("column {c} out of range")));
                }
                match cols.last() {
                    Some(&last) if last == c && cols.len() > *row_ptr.last().unwrap() => {
                        *vals.last_mut().unwrap() += v;
                    }
                    _ => {
                        cols.push(c);
                        vals.push(v);
                    }
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            spec: spec.clone(),
            row_ptr,
            cols,
            vals,
            boundary: BoundaryCondition::DirichletZero,
        })
    }

    /// The zero operator.
    pub fn zero(spec: &GridSpec) -> Self {
        Self {
            spec: spec.clone(),
            row_ptr: vec![0; spec.len() + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            boundary: BoundaryCondition::DirichletZero,
        }
    }

    pub fn identity(spec: &GridSpec) -> Self {
        let n = spec.len();
        Self {
            spec: spec.clone(),
            row_ptr: (0..=n).collect(),
            cols: (0..n as u32).collect(),
            vals: vec![1.0; n],
            boundary: BoundaryCondition::DirichletZero,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn boundary(&self) -> BoundaryCondition {
        self.boundary
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            s += self.vals[k] * x[self.cols[k] as usize];
        }
        s
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        par::fill_indexed(y, |i| self.row_dot(i, x));
    }

    pub fn apply_seq(&self, x: &[f64], y: &mut [f64]) {
        par::fill_indexed_seq(y, |i| self.row_dot(i, x));
    }

    pub fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).map(|e| e.1).sum()
    }

    /// `max_i sum_j |a_ij|`.
    pub fn norm_inf(&self) -> f64 {
        par::max_indexed(self.dim(), |i| self.row(i).map(|e| e.1.abs()).sum())
    }

    /// Most negative off-diagonal entry (0 if none is negative).
    pub fn min_off_diagonal(&self) -> f64 {
        par::min_indexed(self.dim(), |i| {
            self.row(i).filter(|e| e.0 != i).map(|e| e.1).fold(0.0, f64::min)
        })
    }

    /// `alpha I + beta A`.
    pub fn shifted(&self, alpha: f64, beta: f64) -> Self {
        let rows = par::map_range(self.dim(), |i| {
            let mut r: Vec<(u32, f64)> = self.row(i).map(|(c, v)| (c as u32, beta * v)).collect();
            if alpha != 0.0 {
                r.push((i as u32, alpha));
            }
            r
        });
        Self::from_rows(&self.spec, rows).expect("same shape")
    }

    /// `A + diag(d)`.
    pub fn plus_diagonal(&self, d: &[f64]) -> Self {
        let rows = par::map_range(self.dim(), |i| {
            let mut r: Vec<(u32, f64)> = self.row(i).map(|(c, v)| (c as u32, v)).collect();
            r.push((i as u32, d[i]));
            r
        });
        Self::from_rows(&self.spec, rows).expect("same shape")
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.dim()];
        for i in 0..self.dim() {
            for (c, v) in self.row(i) {
                rows[c].push((i as u32, v));
            }
        }
        Self::from_rows(&self.spec, rows).expect("same shape")
    }

    /// Dense copy, for small grids and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            for (c, v) in self.row(i) {
                row[c] += v;
            }
        }
        m
    }
}

fn flow_axes(spec: &GridSpec, flow: Flow) -> (usize, usize, f64) {
    // (moving axis, axis whose coordinate drives the l-shift, shift sign)
    match flow {
        Flow::X(j) => (j, spec.n + j, 2.0),
        Flow::Y(j) => (spec.n + j, j, -2.0),
    }
}

/// Resolves the endpoint of the flow of `flow` from node `idx` after
/// `sign * h` along the horizontal axis.
pub fn flow_endpoint(spec: &GridSpec, idx: usize, flow: Flow, sign: i8) -> Result<Option<FlowEndpoint>> {
    let (axis, drive, factor) = flow_axes(spec, flow);
    let mut multi = vec![0; spec.dims()];
    spec.multi_index_into(idx, &mut multi);
    let la = spec.l_axis();
    let h = spec.spacing(axis);
    let hl = spec.spacing(la);
    let target = multi[axis] as i64 + sign as i64;
    if target < 0 || target >= spec.cells[axis] as i64 {
        return Ok(None);
    }
    let drive_coord = spec.center(drive, multi[drive]);
    let l0 = spec.center(la, multi[la]);
    let target_l = l0 + factor * drive_coord * h * sign as f64;
    let pos = (target_l - spec.bounds[la][0]) / hl - 0.5;
    let k0 = pos.floor();
    let mut theta = pos - k0;
    if theta < 1e-12 {
        theta = 0.0;
    } else if theta > 1.0 - 1e-12 {
        theta = 1.0;
    }
    let weights = [(k0 as i64, 1.0 - theta), (k0 as i64 + 1, theta)];
    let mut nodes = Vec::with_capacity(2);
    let mut truncated = false;
    let mut m = multi.clone();
    m[axis] = target as usize;
    for (k, w) in weights {
        if w < -1e-15 {
            return Err(LabError::Monotonicity(format!(
                "negative interpolation weight {w} at node {idx} for {flow:?}"
            )));
        }
        if w == 0.0 {
            continue;
        }
        if k < 0 || k >= spec.cells[la] as i64 {
            truncated = true;
            continue;
        }
        m[la] = k as usize;
        nodes.push((spec.index(&m), w));
    }
    Ok(Some(FlowEndpoint {
        flow,
        sign,
        target_l,
        nodes,
        truncated,
    }))
}

fn flows(spec: &GridSpec) -> impl Iterator<Item = Flow> + '_ {
    (0..spec.n).flat_map(|j| [Flow::X(j), Flow::Y(j)])
}

/// Stencil provenance of one row of the discrete sub-Laplacian: both
/// endpoints of every flow-aligned second difference. A `None` endpoint left
/// the box along the horizontal axis.
pub fn row_provenance(spec: &GridSpec, idx: usize) -> Result<Vec<(Flow, [Option<FlowEndpoint>; 2])>> {
    flows(spec)
        .map(|f| {
            Ok((
                f,
                [flow_endpoint(spec, idx, f, -1)?, flow_endpoint(spec, idx, f, 1)?],
            ))
        })
        .collect()
}

/// Discrete sub-Laplacian `sum_j X_j^2 + Y_j^2` with homogeneous Dirichlet
/// data outside the box.
///
/// `X_j^2 u(w) ~ (u(w + h e_j^+) - 2u(w) + u(w + h e_j^-)) / h^2` where the
/// endpoints follow the straight flow lines of `X_j`; their off-grid heights
/// are interpolated linearly in `l`, so every off-diagonal weight is
/// nonnegative.
pub fn assemble_sublaplacian(spec: &GridSpec) -> Result<SparseOperator> {
    spec.validate()?;
    let rows: Vec<Result<Vec<(u32, f64)>>> = par::map_range(spec.len(), |idx| {
        let mut row = Vec::with_capacity(8 * spec.n + 1);
        let mut diag = 0.0;
        for f in flows(spec) {
            let (axis, _, _) = flow_axes(spec, f);
            let inv_h2 = 1.0 / (spec.spacing(axis) * spec.spacing(axis));
            diag -= 2.0 * inv_h2;
            for sign in [-1i8, 1] {
                if let Some(ep) = flow_endpoint(spec, idx, f, sign)? {
                    for (node, w) in ep.nodes {
                        row.push((node as u32, w * inv_h2));
                    }
                }
            }
        }
        row.push((idx as u32, diag));
        Ok(row)
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let op = SparseOperator::from_rows(spec, rows)?;
    let worst = op.min_off_diagonal();
    if worst < 0.0 {
        return Err(LabError::Monotonicity(format!("negative off-diagonal entry {worst}")));
    }
    Ok(op)
}

/// Forward flow differences `(u(w + h e_f) - u(w)) / h`, one operator per
/// field `X_1, .., X_N, Y_1, .., Y_N`. Then `sum_f D_f^T D_f` is a symmetric
/// positive definite discrete Dirichlet energy.
pub fn assemble_flow_differences(spec: &GridSpec) -> Result<Vec<SparseOperator>> {
    spec.validate()?;
    let mut ops = Vec::with_capacity(2 * spec.n);
    let all: Vec<Flow> = (0..spec.n)
        .map(Flow::X)
        .chain((0..spec.n).map(Flow::Y))
        .collect();
    for f in all {
        let (axis, _, _) = flow_axes(spec, f);
        let inv_h = 1.0 / spec.spacing(axis);
        let rows: Vec<Result<Vec<(u32, f64)>>> = par::map_range(spec.len(), |idx| {
            let mut row = vec![(idx as u32, -inv_h)];
            if let Some(ep) = flow_endpoint(spec, idx, f, 1)? {
                for (node, w) in ep.nodes {
                    row.push((node as u32, w * inv_h));
                }
            }
            Ok(row)
        });
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        ops.push(SparseOperator::from_rows(spec, rows)?);
    }
    Ok(ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridField;

    fn interior(spec: &GridSpec, idx: usize, margin: usize) -> bool {
        let m = spec.multi_index(idx);
        m.iter().zip(&spec.cells).all(|(&i, &c)| i >= margin && i + margin < c)
    }

    #[test]
    fn operator_is_monotone_and_annihilates_constants() {
        let spec = GridSpec::symmetric(1, 1.0, 1.0, 10).unwrap();
        let a = assemble_sublaplacian(&spec).unwrap();
        assert!(a.min_off_diagonal() >= 0.0);
        for i in 0..a.dim() {
            let s = a.row_sum(i);
            assert!(s <= 1e-9, "row {i} sum {s}");
            let untouched = row_provenance(&spec, i)
                .unwrap()
                .iter()
                .all(|(_, e)| e.iter().all(|p| p.as_ref().is_some_and(|p| !p.truncated)));
            if untouched {
                assert!(s.abs() < 1e-9, "row {i} sum {s}");
            }
        }
    }

    #[test]
    fn reproduces_linear_and_quadratic_test_functions() {
        let spec = GridSpec::symmetric(1, 1.0, 2.0, 16).unwrap();
        let a = assemble_sublaplacian(&spec).unwrap();
        type Case = (fn(&crate::group::GroupPoint) -> f64, fn(&crate::group::GroupPoint) -> f64);
        let cases: [Case; 4] = [
            (|p| p.x()[0].powi(2) + p.y()[0].powi(2), |_| 4.0),
            (|p| p.l(), |_| 0.0),
            (|p| p.x()[0] * p.y()[0], |_| 0.0),
            (|p| p.x()[0] * p.l(), |p| 4.0 * p.y()[0]),
        ];
        for (f, lap) in cases {
            let u = GridField::from_fn(&spec, f);
            let au = a.apply_vec(&u.values);
            for (i, v) in au.iter().enumerate() {
                if interior(&spec, i, 3) {
                    let expected = lap(&spec.point(i));
                    assert!((v - expected).abs() < 1e-8, "node {i}: {v} vs {expected}");
                }
            }
        }
    }

    #[test]
    fn flow_differences_build_symmetric_energy() {
        let spec = GridSpec::symmetric(1, 1.0, 1.0, 4).unwrap();
        let d = assemble_flow_differences(&spec).unwrap();
        assert_eq!(d.len(), 2);
        let dense: Vec<Vec<Vec<f64>>> = d.iter().map(|o| o.to_dense()).collect();
        let n = spec.len();
        for i in 0..n {
            for j in 0..n {
                let kij: f64 = dense.iter().map(|m| (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>()).sum();
                let kji: f64 = dense.iter().map(|m| (0..n).map(|k| m[k][j] * m[k][i]).sum::<f64>()).sum();
                assert!((kij - kji).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transpose_and_shift() {
        let spec = GridSpec::symmetric(1, 1.0, 1.0, 4).unwrap();
        let a = assemble_sublaplacian(&spec).unwrap();
        let at = a.transpose();
        for i in 0..a.dim() {
            for (j, v) in a.row(i) {
                assert_eq!(at.get(j, i), v);
            }
        }
        let s = a.shifted(1.0, -0.5);
        assert_eq!(s.get(3, 3), 1.0 - 0.5 * a.get(3, 3));
        let x: Vec<f64> = (0..a.dim()).map(|i| i as f64).collect();
        let mut y1 = vec![0.0; a.dim()];
        let mut y2 = vec![0.0; a.dim()];
        a.apply(&x, &mut y1);
        a.apply_seq(&x, &mut y2);
        assert_eq!(y1, y2);
    }
}
