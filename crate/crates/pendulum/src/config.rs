//! TOML run configuration. Command-line flags override file values.

use crate::sweep::{ConfigError, SweepConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Poincaré-section seeding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoincareConfig {
    /// Seeds along q = 0, evenly spaced in p.
    pub seeds: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub iterations: usize,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        Self { seeds: 40, p_min: -2.0, p_max: 2.0, iterations: 400 }
    }
}

/// Husimi window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HusimiConfig {
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
    pub n_q: usize,
}

impl Default for HusimiConfig {
    fn default() -> Self {
        Self { p_min: -2.5, p_max: 2.5, n_p: 200, n_q: 200 }
    }
}

/// Resonance chains used by the overlay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatConfig {
    /// "s/ell" labels; one chain gives a single-step prediction, two give
    /// the staged one with the larger-action chain as the outer step.
    pub chains: Vec<String>,
    /// Frequency scale of the area-only estimate.
    pub omega_pn: f64,
}

impl Default for RatConfig {
    fn default() -> Self {
        Self { chains: vec!["3/7".into()], omega_pn: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub sweep: SweepConfig,
    pub poincare: PoincareConfig,
    pub husimi: HusimiConfig,
    pub rat: RatConfig,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))
    }
}

/// Parse an "s/ell" chain label.
pub fn parse_chain(label: &str) -> Result<(usize, usize), ConfigError> {
    let bad = || ConfigError::Invalid(format!("chain `{label}` is not of the form s/ell"));
    let (s, l) = label.split_once('/').ok_or_else(bad)?;
    let s: usize = s.trim().parse().map_err(|_| bad())?;
    let l: usize = l.trim().parse().map_err(|_| bad())?;
    if s == 0 || 2 * s > l {
        return Err(bad());
    }
    Ok((s, l))
}
