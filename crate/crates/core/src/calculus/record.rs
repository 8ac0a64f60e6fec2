use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::loglog_slope;

/// Errors below this are treated as exact (roundoff only) and carry no order.
pub const EXACT_FLOOR: f64 = 1e-13;

/// One closed-form-versus-oracle comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub identity_name: String,
    /// Coordinates of the sample point, if any.
    pub sample_point: Vec<f64>,
    /// Scalar parameters (alpha, lambda, n, ...), by name.
    pub parameters: Vec<(String, f64)>,
    pub closed_form_value: f64,
    pub oracle_value: f64,
    pub abs_error: f64,
    /// `abs_error / max(|closed_form_value|, scale)`.
    pub rel_error: f64,
    pub scale: f64,
    pub step_sizes: Vec<f64>,
    /// Absolute errors at each of `step_sizes`.
    pub step_errors: Vec<f64>,
    pub fitted_order: Option<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl VerificationRecord {
    /// Record with `rel_error` normalised by `max(|closed|, scale)` and the
    /// pass flag set against `tolerance`.
    pub fn new(name: &str, closed: f64, oracle: f64, scale: f64, tolerance: f64) -> Self {
        let abs_error = (closed - oracle).abs();
        let denom = closed.abs().max(scale);
        let rel_error = if denom > 0.0 { abs_error / denom } else { abs_error };
        Self {
            identity_name: name.to_string(),
            sample_point: Vec::new(),
            parameters: Vec::new(),
            closed_form_value: closed,
            oracle_value: oracle,
            abs_error,
            rel_error,
            scale,
            step_sizes: Vec::new(),
            step_errors: Vec::new(),
            fitted_order: None,
            tolerance,
            passed: rel_error <= tolerance,
        }
    }

    pub fn at(mut self, coords: Vec<f64>) -> Self {
        self.sample_point = coords;
        self
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.parameters.push((name.to_string(), value));
        self
    }

    /// Attaches a step ladder; the order is fitted when at least three steps
    /// carry errors above the roundoff floor.
    pub fn with_ladder(mut self, steps: Vec<f64>, errors: Vec<f64>) -> Self {
        self.fitted_order = fit_order(&steps, &errors);
        self.step_sizes = steps;
        self.step_errors = errors;
        self
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Least-squares slope of `log err` against `log h`.
pub fn fit_order(steps: &[f64], errors: &[f64]) -> Option<f64> {
    if steps.len() < 3 || steps.len() != errors.len() {
        return None;
    }
    let scale = errors.iter().cloned().fold(0.0, f64::max);
    if errors.iter().any(|&e| e <= EXACT_FLOOR * scale.max(1.0) || !e.is_finite()) {
        return None;
    }
    Some(loglog_slope(steps, errors))
}

pub fn write_jsonl<W: Write>(mut w: W, records: &[VerificationRecord]) -> Result<()> {
    for r in records {
        writeln!(w, "{}", r.to_json_line()?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_error_is_exact_difference() {
        let r = VerificationRecord::new("x", 1.25, 1.0, 0.0, 0.3);
        assert_eq!(r.abs_error, 0.25);
        assert_eq!(r.rel_error, 0.2);
        assert!(r.passed);
    }

    #[test]
    fn order_needs_three_steps() {
        assert_eq!(fit_order(&[0.1, 0.05], &[1e-2, 2.5e-3]), None);
        let o = fit_order(&[0.1, 0.05, 0.025], &[1e-2, 2.5e-3, 6.25e-4]).unwrap();
        assert!((o - 2.0).abs() < 1e-12);
        assert_eq!(fit_order(&[0.1, 0.05, 0.025], &[0.0, 0.0, 0.0]), None);
    }

    #[test]
    fn jsonl_lines() {
        let mut buf = Vec::new();
        let r = VerificationRecord::new("a", 1.0, 1.0, 1.0, 1e-6).param("alpha", 0.5);
        write_jsonl(&mut buf, &[r.clone(), r]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 2);
        let back: VerificationRecord = serde_json::from_str(s.lines().next().unwrap()).unwrap();
        assert_eq!(back.parameters[0].1, 0.5);
    }
}
