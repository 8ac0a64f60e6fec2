use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calculus::HardyOptions;
use crate::cascade::CascadeConfig;
use crate::error::{LabError, Result};
use crate::grid::{GridSpec, KernelOptions};

/// Sample plan of `hlab verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    /// Group dimension `N` of the pointwise identities.
    pub n: usize,
    /// Random points for the gauge identities.
    pub points: usize,
    pub gauge_min: f64,
    pub gauge_max: f64,
    /// Step of the tolerance check.
    pub h: f64,
    /// Coarsest step of the order ladder `h, h/2, h/4`.
    pub order_h: f64,
    pub order_tol: f64,
    pub identity_tol: f64,
    pub alphas: Vec<f64>,
    /// Added to `alpha (2N - alpha)` in the closed form of the `d^{-alpha}`
    /// identity; anything nonzero must fail.
    pub dalpha_constant_offset: f64,
    pub lambdas: Vec<f64>,
    pub covariance_points: usize,
    pub radial_alphas: Vec<f64>,
    pub radial_tol: f64,
    pub sobolev_profiles: usize,
    pub sobolev_alpha: f64,
    /// `beta` as `[numerator, denominator]`.
    pub moser_betas: Vec<[i64; 2]>,
    pub moser_n: u32,
    pub moser_limit_n: u32,
    pub moser_limit_tol: f64,
    pub divergence_eps: Vec<f64>,
    pub divergence_alpha: f64,
    pub cauchy_tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n: 1,
            points: 200,
            gauge_min: 0.25,
            gauge_max: 2.0,
            h: 1e-3,
            order_h: 1e-2,
            order_tol: 0.3,
            identity_tol: 1e-5,
            alphas: vec![0.5],
            dalpha_constant_offset: 0.0,
            lambdas: vec![0.5, 2.0, 3.0],
            covariance_points: 4,
            radial_alphas: vec![0.0, 0.5, 0.9],
            radial_tol: 5e-3,
            sobolev_profiles: 8,
            sobolev_alpha: 0.5,
            moser_betas: vec![[1, 2], [1, 1], [2, 1]],
            moser_n: 12,
            moser_limit_n: 40,
            moser_limit_tol: 1e-4,
            divergence_eps: vec![1e-1, 1e-2, 1e-3],
            divergence_alpha: 0.5,
            cauchy_tol: 0.01,
        }
    }
}

impl VerifyConfig {
    /// A plan with nothing to check.
    pub fn empty() -> Self {
        Self {
            points: 0,
            alphas: Vec::new(),
            lambdas: Vec::new(),
            covariance_points: 0,
            radial_alphas: Vec::new(),
            sobolev_profiles: 0,
            moser_betas: Vec::new(),
            divergence_eps: Vec::new(),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HardyConfig {
    pub n: usize,
    pub z_half: f64,
    pub l_half: f64,
    /// Cells per axis of each refinement level.
    pub levels: Vec<usize>,
    pub options: HardyOptions,
}

impl Default for HardyConfig {
    fn default() -> Self {
        Self {
            n: 1,
            z_half: 2.0,
            l_half: 4.0,
            levels: vec![32, 48, 64],
            options: HardyOptions::default(),
        }
    }
}

impl HardyConfig {
    pub fn grids(&self) -> Result<Vec<GridSpec>> {
        self.levels
            .iter()
            .map(|&m| GridSpec::symmetric(self.n, self.z_half, self.l_half, m))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub options: KernelOptions,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::reference(),
            times: vec![0.05, 0.1, 0.2],
            options: KernelOptions {
                floor: 1e-3,
                ..KernelOptions::default()
            },
        }
    }
}

/// Everything `hlab` reads; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    pub verify: VerifyConfig,
    pub hardy: HardyConfig,
    pub kernel: KernelConfig,
    pub cascade: CascadeConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION,
            out_dir: PathBuf::from("out"),
            seed: 20240611,
            threads: 0,
            verify: VerifyConfig::default(),
            hardy: HardyConfig::default(),
            kernel: KernelConfig::default(),
            cascade: CascadeConfig::default(),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> LabError {
    LabError::Config(e.to_string())
}

/// Parses the right side of `KEY=VALUE`: a TOML value if it parses as one,
/// otherwise a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(LabError::Config(format!("bad override key '{key}'")));
    }
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| LabError::Config(format!("'{p}' in '{key}' is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(config_err)
    }

    /// Reads `path` (or starts from the defaults), fills in every default,
    /// then applies `KEY=VALUE` overrides with dotted keys, e.g. `cascade.c=4`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| LabError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let base = Self::from_toml(&text)?;
        let mut table: toml::Table = toml::Table::try_from(&base).map_err(config_err)?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("override '{o}' is not KEY=VALUE")))?;
            set_path(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        let cfg: Self = toml::Value::Table(table).try_into().map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != crate::SCHEMA_VERSION {
            return Err(LabError::Config(format!(
                "schema_version {} is not supported (expected {})",
                self.schema_version,
                crate::SCHEMA_VERSION
            )));
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form, hex encoded. The output directory
    /// and thread count do not enter: neither changes any result.
    pub fn hash(&self) -> Result<String> {
        let canonical = Self {
            out_dir: PathBuf::new(),
            threads: 0,
            ..self.clone()
        }
        .to_toml()?;
        Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
    }
}
