use super::operator::SparseOperator;
use super::spec::GridField;
use crate::error::{LabError, Result};
use crate::par;

/// `e^{tau (A + diag(d))} v` by Taylor series on substeps with
/// `||tau_s (A + diag d)||_inf <= 1/2`.
pub fn expm_action(a: &SparseOperator, d: Option<&[f64]>, tau: f64, v: &[f64]) -> Result<Vec<f64>> {
    if !(tau >= 0.0) {
        return Err(LabError::InvalidArgument(format!("tau must be nonnegative, got {tau}")));
    }
    let n = v.len();
    let dnorm = d.map_or(0.0, |d| d.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    let norm = a.norm_inf() + dnorm;
    let substeps = ((tau * norm) / 0.5).ceil().max(1.0) as usize;
    let ts = tau / substeps as f64;
    let mut acc = v.to_vec();
    let mut term = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..substeps {
        term.copy_from_slice(&acc);
        for k in 1..=60 {
            a.apply(&term, &mut next);
            if let Some(d) = d {
                par::update_indexed(&mut next, |i, x| x + d[i] * term[i]);
            }
            let c = ts / k as f64;
            par::update_indexed(&mut next, |_, x| c * x);
            std::mem::swap(&mut term, &mut next);
            par::axpy(1.0, &term, &mut acc);
            let tn = par::max_indexed(n, |i| term[i].abs());
            let an = par::max_indexed(n, |i| acc[i].abs());
            if tn <= 1e-17 * an || tn == 0.0 {
                break;
            }
        }
    }
    Ok(acc)
}

/// Distances `||(e^{delta A/m} e^{delta V/m})^m u0 - e^{delta (A+V)} u0||_2 / ||e^{delta (A+V)} u0||_2`
/// for each `m` in the ladder.
pub fn trotter_compare(u0: &GridField, a: &SparseOperator, v: &GridField, delta: f64, m_ladder: &[usize]) -> Result<Vec<f64>> {
    if m_ladder.contains(&0) {
        return Err(LabError::InvalidArgument("m must be positive".into()));
    }
    let reference = expm_action(a, Some(&v.values), delta, &u0.values)?;
    let rnorm = par::dot(&reference, &reference).sqrt();
    let mut out = Vec::with_capacity(m_ladder.len());
    for &m in m_ladder {
        let tau = delta / m as f64;
        let factors: Vec<f64> = v.values.iter().map(|x| (tau * x).exp()).collect();
        let mut u = u0.values.clone();
        for _ in 0..m {
            par::update_indexed(&mut u, |i, x| factors[i] * x);
            u = expm_action(a, None, tau, &u)?;
        }
        let diff = par::sum_indexed(u.len(), |i| (u[i] - reference[i]).powi(2)).sqrt();
        out.push(if rnorm > 0.0 { diff / rnorm } else { diff });
    }
    Ok(out)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// Ordinary least squares `y ~ slope * x + intercept`; returns
/// `(slope, intercept, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{assemble_sublaplacian, GridSpec};

    #[test]
    fn diagonal_exponential_is_exact() {
        let spec = GridSpec::symmetric(1, 1.0, 1.0, 4).unwrap();
        let a = SparseOperator::zero(&spec);
        let d: Vec<f64> = (0..spec.len()).map(|i| (i % 5) as f64 - 2.0).collect();
        let v = vec![1.0; spec.len()];
        let out = expm_action(&a, Some(&d), 0.7, &v).unwrap();
        for i in 0..spec.len() {
            assert!((out[i] - (0.7 * d[i]).exp()).abs() < 1e-13 * out[i].max(1.0));
        }
    }

    #[test]
    fn semigroup_property() {
        let spec = GridSpec::symmetric(1, 1.0, 1.0, 6).unwrap();
        let a = assemble_sublaplacian(&spec).unwrap();
        let v: Vec<f64> = (0..spec.len()).map(|i| ((i * 3) % 7) as f64).collect();
        let once = expm_action(&a, None, 0.02, &v).unwrap();
        let half = expm_action(&a, None, 0.01, &v).unwrap();
        let twice = expm_action(&a, None, 0.01, &half).unwrap();
        for i in 0..v.len() {
            assert!((once[i] - twice[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn commuting_splitting_is_exact() {
        let spec = GridSpec::symmetric(1, 1.0, 1.0, 6).unwrap();
        let a = assemble_sublaplacian(&spec).unwrap();
        let u0 = GridField::from_fn(&spec, |p| (-p.gauge().powi(2)).exp());
        let zero = GridField::zeros(&spec);
        let c = GridField::constant(&spec, 3.0);
        for d in trotter_compare(&u0, &a, &zero, 0.01, &[1, 2, 4]).unwrap() {
            assert!(d < 1e-12);
        }
        for d in trotter_compare(&u0, &a, &c, 0.01, &[1, 2, 4]).unwrap() {
            assert!(d < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (s, i, r2) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-12 && (i + 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        assert!((loglog_slope(&[1.0, 2.0, 4.0], &[1.0, 4.0, 16.0]) - 2.0).abs() < 1e-12);
    }
}
