//! JSON experiment and audit configuration.
//!
//! Parsing is strict: unknown keys are rejected, and every out-of-range value
//! is reported with the offending key named. Missing optional keys take the
//! documented defaults.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::estimators::{Correction, DiagonalPolicy};
use crate::fields::FieldSpec;
use crate::manifold::{ManifoldSpec, DEFAULT_CACHE_CAP};
use crate::mollifiers::{
    default_audit_delta_grid, default_audit_sigma_grid, AuditOptions, MollifierFamily,
};
use crate::sweep::{default_grid, ExperimentConfig, FunctionalSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    manifold: ManifoldSpec,
    #[serde(default)]
    field: Option<FieldSpec>,
    functional: FunctionalSpec,
    #[serde(default)]
    grid: Option<Vec<f64>>,
    #[serde(default)]
    policy: Option<RawPolicy>,
    #[serde(default)]
    test_field: Option<FieldSpec>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tolerance: Option<f64>,
    #[serde(default)]
    distance_cache_cap: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    #[serde(default)]
    cutoff_factor: Option<f64>,
    #[serde(default)]
    correction: Option<Correction>,
}

fn json_error(err: serde_json::Error) -> Error {
    Error::config("<document>", err.to_string())
}

/// Parse and validate an experiment configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawExperiment = serde_json::from_str(text).map_err(json_error)?;
    let grid = raw.grid.unwrap_or_else(|| default_grid(&raw.functional));
    // Default correction: near-field for smooth fields, none for indicators
    // and perimeter sweeps.
    let smooth_field = matches!(
        (&raw.field, &raw.functional),
        (Some(f), FunctionalSpec::MuSweep { .. } | FunctionalSpec::SeminormSweep { .. })
            if !f.is_indicator()
    );
    let default_correction = if smooth_field { Correction::NearField } else { Correction::None };
    let policy = match raw.policy {
        Some(p) => DiagonalPolicy {
            cutoff_factor: p.cutoff_factor.unwrap_or(1.5),
            correction: p.correction.unwrap_or(default_correction),
        },
        None => DiagonalPolicy { cutoff_factor: 1.5, correction: default_correction },
    };
    let config = ExperimentConfig {
        manifold: raw.manifold,
        field: raw.field,
        functional: raw.functional,
        grid,
        policy,
        test_field: raw.test_field,
        seed: raw.seed.unwrap_or(0),
        tolerance: raw.tolerance.unwrap_or(0.05),
        distance_cache_cap: raw.distance_cache_cap.unwrap_or(DEFAULT_CACHE_CAP),
    };
    config.validate()?;
    Ok(config)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAudit {
    family: MollifierFamily,
    #[serde(default)]
    sigma_grid: Option<Vec<f64>>,
    #[serde(default)]
    delta_grid: Option<Vec<f64>>,
    #[serde(default)]
    options: Option<AuditOptions>,
    #[serde(default)]
    mass_scale: Option<f64>,
}

/// A validated kernel-audit request.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    pub family: MollifierFamily,
    pub sigma_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub options: AuditOptions,
    /// Multiplies the kernel mass; 1.0 audits the family as built, anything
    /// else deliberately breaks the normalization for demonstration.
    pub mass_scale: f64,
}

/// Parse and validate a kernel-audit configuration document.
pub fn parse_audit_config(text: &str) -> Result<AuditConfig> {
    let raw: RawAudit = serde_json::from_str(text).map_err(json_error)?;
    raw.family.validate("family")?;
    let config = AuditConfig {
        family: raw.family,
        sigma_grid: raw.sigma_grid.unwrap_or_else(default_audit_sigma_grid),
        delta_grid: raw.delta_grid.unwrap_or_else(default_audit_delta_grid),
        options: raw.options.unwrap_or_default(),
        mass_scale: raw.mass_scale.unwrap_or(1.0),
    };
    if !(config.mass_scale.is_finite() && config.mass_scale > 0.0) {
        return Err(Error::config("mass_scale", "must be positive"));
    }
    for (i, &s) in config.sigma_grid.iter().enumerate() {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::config(
                format!("sigma_grid[{i}]"),
                format!("sigma must lie in (0, 1), got {s}"),
            ));
        }
    }
    Ok(config)
}
