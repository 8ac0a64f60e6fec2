//! Adaptive Gauss-Kronrod quadrature and nested integration over gauge
//! annuli `{s0 < d(w) < s1}` of the first Heisenberg group.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{LabError, Result};
use crate::par;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod value and `|K - G|` on `[a, b]`.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(PartialEq)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            rel_tol: 1e-10,
            max_panels: 2000,
        }
    }
}

/// Globally adaptive GK15 on `[a, b]`; returns `(value, error estimate)`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, opts: &QuadOptions) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let (mut total, mut err) = (v, e);
    while err > opts.abs_tol.max(opts.rel_tol * total.abs()) && heap.len() < opts.max_panels {
        let p = heap.pop().expect("nonempty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(f, p.a, m);
        let (v2, e2) = gk15(f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, err: e2 });
    }
    // Re-sum to shed the drift of incremental updates.
    let total = heap.iter().map(|p| p.value).sum();
    let err = heap.iter().map(|p| p.err).sum();
    (total, err)
}

/// `integrate` after the substitution `x = a + (b - a)(3t^2 - 2t^3)`, which
/// removes square-root behaviour at both ends.
pub fn integrate_smoothed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, opts: &QuadOptions) -> (f64, f64) {
    let w = b - a;
    if w == 0.0 {
        return (0.0, 0.0);
    }
    let g = |t: f64| {
        let s = t * t * (3.0 - 2.0 * t);
        let ds = 6.0 * t * (1.0 - t);
        if ds == 0.0 {
            0.0
        } else {
            f(a + w * s) * w * ds
        }
    };
    integrate(&g, 0.0, 1.0, opts)
}

/// `int_{s0 < d < s1} g(|z|^2, l) dw` over the first Heisenberg group
/// (`x, y, l` Cartesian), for integrands even in `x`, `y` and `l`.
pub fn integrate_gauge_annulus<G>(g: &G, s0: f64, s1: f64, opts: &QuadOptions) -> Result<f64>
where
    G: Fn(f64, f64) -> f64 + Sync,
{
    if !(0.0 <= s0 && s0 <= s1) {
        return Err(LabError::InvalidArgument(format!("need 0 <= s0 <= s1, got {s0}, {s1}")));
    }
    if s0 == s1 {
        return Ok(0.0);
    }
    let inner = QuadOptions {
        rel_tol: opts.rel_tol * 1e-2,
        abs_tol: 0.0,
        ..*opts
    };
    let (s0_4, s1_4) = (s0.powi(4), s1.powi(4));
    let l_integral = |rho2: f64| -> f64 {
        let lo = (s0_4 - rho2 * rho2).max(0.0).sqrt();
        let hi = (s1_4 - rho2 * rho2).max(0.0).sqrt();
        if hi <= lo {
            return 0.0;
        }
        integrate_smoothed(&|l: f64| g(rho2, l), lo, hi, &inner).0
    };
    let y_integral = |x: f64| -> f64 {
        let y_max = (s1 * s1 - x * x).max(0.0).sqrt();
        let f = |y: f64| l_integral(x * x + y * y);
        if x < s0 {
            let y_k = (s0 * s0 - x * x).sqrt();
            integrate_smoothed(&f, 0.0, y_k, &inner).0 + integrate_smoothed(&f, y_k, y_max, &inner).0
        } else {
            integrate_smoothed(&f, 0.0, y_max, &inner).0
        }
    };
    let pieces: Vec<(f64, f64)> = if s0 > 0.0 { vec![(0.0, s0), (s0, s1)] } else { vec![(0.0, s1)] };
    let parts = par::map_range(pieces.len(), |i| {
        integrate_smoothed(&y_integral, pieces[i].0, pieces[i].1, opts).0
    });
    Ok(8.0 * parts.iter().sum::<f64>())
}

/// Sum of [`integrate_gauge_annulus`] over geometric shells from `s0` to
/// `s1` with ratio at most `ratio`.
pub fn integrate_gauge_shells<G>(g: &G, s0: f64, s1: f64, ratio: f64, opts: &QuadOptions) -> Result<f64>
where
    G: Fn(f64, f64) -> f64 + Sync,
{
    if !(s0 > 0.0 && s1 >= s0 && ratio > 1.0) {
        return Err(LabError::InvalidArgument("need 0 < s0 <= s1 and ratio > 1".into()));
    }
    let count = ((s1 / s0).ln() / ratio.ln()).ceil().max(1.0) as usize;
    let q = (s1 / s0).powf(1.0 / count as f64);
    let edges: Vec<f64> = (0..=count)
        .map(|k| if k == count { s1 } else { s0 * q.powi(k as i32) })
        .collect();
    let parts = par::map_range(count, |k| integrate_gauge_annulus(g, edges[k], edges[k + 1], opts));
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total)
}

/// Nested adaptive integral of `f(x, y, l)` over a Cartesian box.
pub fn integrate_box<F>(f: &F, bounds: [[f64; 2]; 3], opts: &QuadOptions) -> f64
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    let inner = QuadOptions {
        rel_tol: opts.rel_tol * 1e-2,
        abs_tol: opts.abs_tol * 1e-2,
        ..*opts
    };
    let fy = |x: f64| {
        integrate(
            &|y: f64| integrate(&|l: f64| f(x, y, l), bounds[2][0], bounds[2][1], &inner).0,
            bounds[1][0],
            bounds[1][1],
            &inner,
        )
        .0
    };
    // Split the outer axis in four so the pieces run in parallel.
    let w = (bounds[0][1] - bounds[0][0]) / 4.0;
    par::map_range(4, |i| {
        let a = bounds[0][0] + i as f64 * w;
        integrate(&fy, a, a + w, opts).0
    })
    .iter()
    .sum()
}
