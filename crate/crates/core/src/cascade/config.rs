use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{read_snapshot, GridField, GridSpec, SolverOptions};
use crate::group::{smallest_root_alpha, BoundedPart, GroupParams, GroupPoint, PotentialSpec};

/// Initial datum `u_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `(1 - (d/r)^2)^3_+` in the gauge, scaled to the given grid mass.
    Bump { radius: f64, mass: f64 },
    Zero,
    /// A snapshot written by [`crate::grid::write_snapshot`] (path without extension).
    File { path: PathBuf },
}

/// Time-independent source `f >= 0`; the cascade uses `f_n = min(f, n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceData {
    Zero,
    Constant { value: f64 },
    /// `amplitude (1 - (d/r)^2)^3_+`.
    Bump { radius: f64, amplitude: f64 },
}

fn gauge_bump(d: f64, r: f64) -> f64 {
    if d < r {
        (1.0 - (d / r).powi(2)).powi(3)
    } else {
        0.0
    }
}

impl InitialData {
    pub fn field(&self, spec: &GridSpec) -> Result<GridField> {
        match self {
            InitialData::Zero => Ok(GridField::zeros(spec)),
            InitialData::Bump { radius, mass } => {
                if !(*radius > 0.0 && *mass >= 0.0) {
                    return Err(LabError::Config("bump needs radius > 0 and mass >= 0".into()));
                }
                let mut f = GridField::from_fn(spec, |p| gauge_bump(p.gauge(), *radius));
                let m = f.mass();
                if m == 0.0 {
                    return Err(LabError::Config("bump radius is below the grid resolution".into()));
                }
                f.values.iter_mut().for_each(|v| *v *= mass / m);
                Ok(f)
            }
            InitialData::File { path } => {
                let (f, _) = read_snapshot(path)?;
                if &f.spec != spec {
                    return Err(LabError::Config(format!("{} lives on a different grid", path.display())));
                }
                if f.values.iter().any(|&v| v < 0.0) {
                    return Err(LabError::Config("initial data must be nonnegative".into()));
                }
                Ok(f.with_time(0.0))
            }
        }
    }
}

impl SourceData {
    pub fn eval(&self, p: &GroupPoint) -> f64 {
        match self {
            SourceData::Zero => 0.0,
            SourceData::Constant { value } => *value,
            SourceData::Bump { radius, amplitude } => amplitude * gauge_bump(p.gauge(), *radius),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            SourceData::Zero => true,
            SourceData::Constant { value } => *value >= 0.0 && value.is_finite(),
            SourceData::Bump { radius, amplitude } => *radius > 0.0 && *amplitude >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(LabError::Config("source must be nonnegative and finite".into()))
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SourceData::Zero => true,
            SourceData::Constant { value } => *value == 0.0,
            SourceData::Bump { amplitude, .. } => *amplitude == 0.0,
        }
    }
}

/// Decision thresholds of the dichotomy classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Converged needs the last probe ratio `<= 1 + tau_conv`.
    pub tau_conv: f64,
    /// Blowup needs the fitted `d log u / d log n >= tau_blow`.
    pub tau_blow: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            tau_conv: 0.05,
            tau_blow: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CascadeConfig {
    pub grid: GridSpec,
    pub c: f64,
    /// Radius of the gauge ball carrying the Hardy term; `None` for the whole box.
    pub localization_radius: Option<f64>,
    pub bounded_part: Option<BoundedPart>,
    pub n_schedule: Vec<u64>,
    pub u0: InitialData,
    pub source: SourceData,
    pub t_final: f64,
    /// Requested step; the run uses `min(dt, 0.5 / sup V_n)` over the schedule.
    pub dt: f64,
    /// Number of diagnostic samples after `t = 0`.
    pub samples: usize,
    pub probes: Vec<GroupPoint>,
    pub alpha_override: Option<f64>,
    pub thresholds: Thresholds,
    pub solver: SolverOptions,
}

impl CascadeConfig {
    /// Reference setting on the 64^3 grid with the default schedule.
    pub fn reference(c: f64) -> Self {
        Self {
            grid: GridSpec::reference(),
            c,
            localization_radius: Some(1.0),
            bounded_part: None,
            n_schedule: vec![1, 3, 10, 30, 100, 300, 1000],
            u0: InitialData::Bump { radius: 1.0, mass: 1.0 },
            source: SourceData::Zero,
            t_final: 1.0,
            dt: 0.01,
            samples: 10,
            probes: default_probes(),
            alpha_override: None,
            thresholds: Thresholds::default(),
            solver: SolverOptions::default(),
        }
    }

    pub fn params(&self) -> Result<GroupParams> {
        GroupParams::new(self.grid.n)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(LabError::Config(format!("c must be finite and >= 0, got {}", self.c)));
        }
        if self.n_schedule.is_empty() || self.n_schedule[0] == 0 {
            return Err(LabError::Config("schedule must be nonempty and positive".into()));
        }
        if self.n_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Config("schedule must be strictly increasing".into()));
        }
        if !(self.t_final > 0.0 && self.dt > 0.0) {
            return Err(LabError::Config("t_final and dt must be positive".into()));
        }
        if self.samples == 0 {
            return Err(LabError::Config("need at least one sample".into()));
        }
        self.source.validate()?;
        self.potential(1).validate()?;
        for (i, p) in self.probes.iter().enumerate() {
            if p.n() != self.grid.n {
                return Err(LabError::Config(format!("probe {i} has the wrong dimension")));
            }
            if self.grid.cells_from_boundary(p) < 2.0 {
                return Err(LabError::Config(format!("probe {i} lies within 2 cells of the boundary")));
            }
        }
        if let Some(a) = self.alpha_override {
            if !(0.0..=self.grid.n as f64).contains(&a) {
                return Err(LabError::Config(format!("alpha override {a} outside [0, N]")));
            }
        }
        Ok(())
    }

    /// Potential specification at truncation level `n`.
    pub fn potential(&self, n: u64) -> PotentialSpec {
        PotentialSpec {
            c: self.c,
            localization_radius: self.localization_radius,
            truncation: Some(n),
            bounded_part: self.bounded_part.clone(),
        }
    }

    /// Weight exponent: the override, else the smallest root for `c <= N^2`.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha_override
            .or_else(|| smallest_root_alpha(self.c, self.grid.n).ok())
    }

    pub fn is_critical(&self) -> bool {
        let cstar = (self.grid.n * self.grid.n) as f64;
        (self.c - cstar).abs() <= 1e-12 * cstar
    }
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self::reference(0.5)
    }
}

/// Probes at gauge distances 0.25 to 0.6 in different directions.
pub fn default_probes() -> Vec<GroupPoint> {
    vec![
        GroupPoint::new(vec![0.25], vec![0.0], 0.0).expect("finite"),
        GroupPoint::new(vec![0.3], vec![0.3], 0.2).expect("finite"),
        GroupPoint::new(vec![0.0], vec![0.5], -0.2).expect("finite"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_is_valid() {
        let cfg = CascadeConfig::reference(0.5);
        cfg.validate().unwrap();
        assert!((cfg.alpha().unwrap() - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert_eq!(CascadeConfig::reference(4.0).alpha(), None);
        assert!(CascadeConfig::reference(1.0).is_critical());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = CascadeConfig::reference(0.5);
        cfg.n_schedule = vec![1, 3, 3];
        assert!(cfg.validate().is_err());
        let mut cfg = CascadeConfig::reference(0.5);
        cfg.probes = vec![GroupPoint::new(vec![1.95], vec![0.0], 0.0).unwrap()];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bump_has_requested_mass() {
        let spec = GridSpec::symmetric(1, 2.0, 4.0, 16).unwrap();
        let f = InitialData::Bump { radius: 1.0, mass: 2.0 }.field(&spec).unwrap();
        assert!((f.mass() - 2.0).abs() < 1e-12);
        assert!(f.values.iter().all(|&v| v >= 0.0));
    }
}
