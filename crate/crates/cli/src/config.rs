//! Flat key-value TOML run configuration. Command-line flags win over file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;

/// Every key is optional; unknown keys are rejected so typos do not pass silently.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub frames: Option<usize>,
    pub dt: Option<f64>,

    // time stepping
    pub tolerance: Option<f64>,
    pub max_iterations: Option<usize>,

    // material: simulation parameters, estimation initial guess, generator truth
    pub rho: Option<f64>,
    pub kappa_s: Option<f64>,
    pub kappa_b: Option<f64>,

    // estimation
    pub iterations: Option<usize>,
    pub lr_rho: Option<f64>,
    pub lr_kappa_s: Option<f64>,
    pub lr_kappa_b: Option<f64>,
    pub delta_rho: Option<f64>,
    pub delta_kappa_s: Option<f64>,
    pub delta_kappa_b: Option<f64>,
    pub timing: Option<bool>,

    // tracking
    pub iso_weight: Option<f64>,
    pub normal_weight: Option<f64>,
    pub data_weight: Option<f64>,
    pub track_iterations: Option<usize>,
    pub track_step: Option<f64>,

    // synthetic scenario
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub noise: Option<f64>,
    pub pinned: Option<String>,
    pub swing_amplitude: Option<f64>,
    pub swing_frequency: Option<f64>,

    // weight transfer
    pub d_max: Option<f64>,
    pub theta_max: Option<f64>,
    pub laplacian: Option<String>,

    // gradcheck
    pub configs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

/// First of flag, file value, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
