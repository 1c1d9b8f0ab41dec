//! Experiment configuration files (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use twistop::catalog::{GroupSpec, MapSpec, PotentialSpec, TauSpec};
use twistop::dynamics::DEFAULT_ORBIT_CAP;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: MapSpec,
    #[serde(default = "default_potential")]
    pub potential: PotentialSpec,
    pub group: GroupSpec,
    #[serde(default = "default_tau")]
    pub tau: TauSpec,
    /// Irreps with `κ ≤ kappa_max` enter spectra and trace tables.
    #[serde(default = "default_kappa_max")]
    pub kappa_max: f64,
    /// Collocation nodes `N`.
    #[serde(default = "default_collocation")]
    pub collocation: usize,
    /// Cap on periodic orbits enumerated for one period.
    #[serde(default = "default_orbit_cap")]
    pub orbit_cap: u64,
    /// Periods and powers `n = 1..=n_max`.
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Assemble matrices for the gauged cocycle (same spectrum and traces).
    #[serde(default = "default_true")]
    pub gauge: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub pressure: PressureConfig,
    #[serde(default)]
    pub heat: HeatConfig,
    #[serde(default)]
    pub correlations: CorrelationConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub pressure: f64,
    /// Relative trace agreement, `|a − b| ≤ tol·(1 + |a|)`.
    pub trace: f64,
    pub spectral_radius: f64,
    pub correlation: f64,
    pub beta: f64,
    /// Truncation of heat-kernel character sums.
    pub heat_truncation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pressure: 1e-8,
            trace: 1e-7,
            spectral_radius: 1e-8,
            correlation: 1e-6,
            beta: 0.05,
            heat_truncation: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PressureConfig {
    /// Longest period used by the orbit routes.
    pub orbit_period: usize,
}

impl Default for PressureConfig {
    fn default() -> Self {
        PressureConfig { orbit_period: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatConfig {
    pub t_grid: Vec<f64>,
    pub fit_t_grid: Vec<f64>,
    pub verify_t_grid: Vec<f64>,
    pub epsilon: f64,
    pub rho_hypothesis: f64,
    /// Use the sharp exponent for non-abelian groups.
    pub improved: bool,
    pub contradiction_n_max: usize,
}

impl Default for HeatConfig {
    fn default() -> Self {
        HeatConfig {
            t_grid: (0..=8).map(|k| 1e-3 * 10f64.powf(k as f64 / 4.0)).collect(),
            fit_t_grid: vec![1e-3, 1e-2, 1e-1],
            verify_t_grid: vec![1.5e-3, 3e-3, 6e-3, 2e-2, 4e-2, 7e-2],
            epsilon: 1e-3,
            rho_hypothesis: 0.5,
            improved: true,
            contradiction_n_max: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationConfig {
    /// Non-trivial irreps with `κ ≤ kappa_max` get an eigen-observable.
    pub kappa_max: f64,
    pub eigen_index: usize,
    pub lags: usize,
    pub dirichlet_q: u64,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig {
            kappa_max: 3.0,
            eigen_index: 0,
            lags: 12,
            dirichlet_q: twistop::correlations::DEFAULT_DIRICHLET_Q,
        }
    }
}

fn default_potential() -> PotentialSpec {
    PotentialSpec::Srb
}

fn default_tau() -> TauSpec {
    TauSpec::Identity
}

fn default_kappa_max() -> f64 {
    20.0
}

fn default_collocation() -> usize {
    48
}

fn default_orbit_cap() -> u64 {
    DEFAULT_ORBIT_CAP as u64
}

fn default_n_max() -> usize {
    8
}

fn default_true() -> bool {
    true
}

/// A parsed configuration with the SHA-256 of its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load(path: &Path) -> Result<LoadedConfig, String> {
    let bytes = fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| format!("{} is not UTF-8: {e}", path.display()))?;
    let config = parse(text)?;
    Ok(LoadedConfig {
        config,
        sha256: sha256_hex(&bytes),
    })
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
    config.validate()?;
    Ok(config)
}

fn positive_grid(name: &str, grid: &[f64]) -> Result<(), String> {
    if grid.is_empty() {
        return Err(format!("{name} must not be empty"));
    }
    if let Some(t) = grid.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(format!("{name} entries must be positive and finite, got {t}"));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive and finite, got {v}"))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        let map = self.map.build().map_err(|e| e.to_string())?;
        self.potential.build(&map).map_err(|e| e.to_string())?;
        let group = self.group.build().map_err(|e| e.to_string())?;
        self.tau.build(group).map_err(|e| e.to_string())?;
        if !(self.kappa_max >= 0.0) || !self.kappa_max.is_finite() {
            return Err(format!("kappa_max must be finite and >= 0, got {}", self.kappa_max));
        }
        if self.collocation < 4 {
            return Err(format!("collocation must be at least 4, got {}", self.collocation));
        }
        if self.orbit_cap == 0 {
            return Err("orbit_cap must be positive".into());
        }
        if self.n_max == 0 {
            return Err("n_max must be positive".into());
        }
        if self.pressure.orbit_period < 2 {
            return Err(format!("pressure.orbit_period must be at least 2, got {}", self.pressure.orbit_period));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.pressure", t.pressure),
            ("tolerances.trace", t.trace),
            ("tolerances.spectral_radius", t.spectral_radius),
            ("tolerances.correlation", t.correlation),
            ("tolerances.beta", t.beta),
            ("tolerances.heat_truncation", t.heat_truncation),
        ] {
            positive(name, v)?;
        }
        let h = &self.heat;
        positive_grid("heat.t_grid", &h.t_grid)?;
        positive_grid("heat.fit_t_grid", &h.fit_t_grid)?;
        positive_grid("heat.verify_t_grid", &h.verify_t_grid)?;
        if h.fit_t_grid.iter().any(|t| h.verify_t_grid.contains(t)) {
            return Err("heat.fit_t_grid and heat.verify_t_grid must be disjoint".into());
        }
        if h.t_grid.len() < 3 {
            return Err("heat.t_grid needs at least 3 points for the exponent fit".into());
        }
        positive("heat.epsilon", h.epsilon)?;
        if !(h.rho_hypothesis > 0.0 && h.rho_hypothesis < 1.0) {
            return Err(format!("heat.rho_hypothesis must lie in (0,1), got {}", h.rho_hypothesis));
        }
        if h.contradiction_n_max == 0 {
            return Err("heat.contradiction_n_max must be positive".into());
        }
        let c = &self.correlations;
        if !(c.kappa_max >= 0.0) || !c.kappa_max.is_finite() {
            return Err(format!("correlations.kappa_max must be finite and >= 0, got {}", c.kappa_max));
        }
        if c.lags < 4 {
            return Err(format!("correlations.lags must be at least 4, got {}", c.lags));
        }
        if c.dirichlet_q < 2 {
            return Err(format!("correlations.dirichlet_q must be at least 2, got {}", c.dirichlet_q));
        }
        Ok(())
    }
}
