//! The nonlocal double-sum functionals with controlled handling of the
//! near-diagonal singularity.
//!
//! All four functionals share one pairwise engine. Determinism contract:
//! the inner sum over j runs in index order with compensated accumulation,
//! one independent row per outer point; rows are then reduced in index order.
//! Thread count affects only which worker computes a row, never a value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{sphere_area, sphere_coordinate_moment};
use crate::error::{Error, Result};
use crate::fields::{pow_p, region_mask, RegionSpec, ScalarField};
use crate::manifold::ManifoldSampling;
use crate::mollifiers::Mollifier;
use crate::numerics::KahanSum;

/// How to treat pairs near the diagonal, where the kernel blows up.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DiagonalPolicy {
    /// Pairs with `d(x, y) < cutoff_factor * h` are excluded (h = spacing).
    /// Must be at least 1 so the self-pair never enters.
    pub cutoff_factor: f64,
    pub correction: Correction,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    /// Leave the excluded ball out entirely.
    None,
    /// Add the analytic near-ball contribution
    /// `|grad f(x)|^p * K_{p,n} * sphere_area(n) * int_0^{c h} rho(r) r^{n-1} dr * w_x`
    /// for every point with an analytic gradient.
    NearField,
}

impl Default for DiagonalPolicy {
    fn default() -> Self {
        DiagonalPolicy { cutoff_factor: 1.5, correction: Correction::NearField }
    }
}

impl DiagonalPolicy {
    /// Policy without near-field correction (indicators).
    pub fn plain(cutoff_factor: f64) -> Self {
        DiagonalPolicy { cutoff_factor, correction: Correction::None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_factor >= 1.0 && self.cutoff_factor.is_finite()) {
            return Err(Error::config(
                "policy.cutoff_factor",
                format!("must be >= 1 (never include the self-pair), got {}", self.cutoff_factor),
            ));
        }
        Ok(())
    }
}

/// A functional value together with discretization diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct FunctionalValue {
    pub value: f64,
    /// Fraction of the functional's pair domain lost to the diagonal cutoff.
    pub excluded_pair_fraction: f64,
    /// The analytic near-field term included in `value` (zero without
    /// correction).
    pub correction_added: f64,
}

struct RowOutcome {
    sum: f64,
    excluded: u64,
    considered: u64,
    nan_j: Option<usize>,
}

struct PairwiseOutput {
    inner: Vec<f64>,
    excluded: u64,
    considered: u64,
}

/// Inner sums `sum_j w_j * term(i, j, d)` for every active outer point.
fn pairwise_inner<K>(
    sampling: &ManifoldSampling,
    outer_active: Option<&[bool]>,
    inner_allowed: Option<&[bool]>,
    cutoff: f64,
    term: K,
) -> Result<PairwiseOutput>
where
    K: Fn(usize, usize, f64) -> f64 + Sync,
{
    let n = sampling.len();
    let weights = sampling.weights();
    let rows: Vec<RowOutcome> = (0..n)
        .into_par_iter()
        .map(|i| {
            if let Some(mask) = outer_active {
                if !mask[i] {
                    return RowOutcome { sum: 0.0, excluded: 0, considered: 0, nan_j: None };
                }
            }
            let mut acc = KahanSum::new();
            let mut excluded = 0u64;
            let mut considered = 0u64;
            let mut nan_j = None;
            for j in 0..n {
                if j == i {
                    continue;
                }
                if let Some(mask) = inner_allowed {
                    if !mask[j] {
                        continue;
                    }
                }
                considered += 1;
                let d = sampling.distance(i, j);
                if d < cutoff {
                    excluded += 1;
                    continue;
                }
                let t = term(i, j, d);
                if t != 0.0 {
                    if t.is_nan() && nan_j.is_none() {
                        nan_j = Some(j);
                    }
                    acc.add(weights[j] * t);
                }
            }
            RowOutcome { sum: acc.value(), excluded, considered, nan_j }
        })
        .collect();

    let mut inner = Vec::with_capacity(n);
    let mut excluded = 0u64;
    let mut considered = 0u64;
    for (i, row) in rows.iter().enumerate() {
        if let Some(j) = row.nan_j {
            return Err(Error::NonFiniteTerm { i, j, context: None });
        }
        inner.push(row.sum);
        excluded += row.excluded;
        considered += row.considered;
    }
    Ok(PairwiseOutput { inner, excluded, considered })
}

fn fraction(excluded: u64, considered: u64) -> f64 {
    if considered == 0 {
        0.0
    } else {
        excluded as f64 / considered as f64
    }
}

fn near_field_gradients<'f>(
    field: &'f ScalarField,
    policy: &DiagonalPolicy,
) -> Result<Option<&'f [f64]>> {
    match policy.correction {
        Correction::None => Ok(None),
        Correction::NearField => field
            .analytic_grad_norm
            .as_deref()
            .map(Some)
            .ok_or_else(|| Error::MissingGradient(field.source.kind_name().to_string())),
    }
}

fn check_compat(sampling: &ManifoldSampling, field: &ScalarField, kernel_dim: Option<u32>) -> Result<()> {
    if field.values.len() != sampling.len() {
        return Err(Error::KindMismatch(format!(
            "field has {} values for a sampling of {} points",
            field.values.len(),
            sampling.len()
        )));
    }
    if let Some(kd) = kernel_dim {
        if kd != sampling.dim() {
            return Err(Error::DimensionMismatch { kernel: kd, manifold: sampling.dim() });
        }
    }
    Ok(())
}

/// The mollified nonlocal energy of `field` localized to the subset `E`:
///
/// ```text
/// sum_{i in E} sum_{j != i, d >= c h} w_i w_j |f_i - f_j|^p / d^p * rho(d)
/// ```
///
/// plus the near-field correction when enabled. `subset = None` means all of
/// the manifold.
pub fn nonlocal_energy(
    sampling: &ManifoldSampling,
    field: &ScalarField,
    kernel: &Mollifier,
    p: f64,
    subset: Option<&[bool]>,
    policy: &DiagonalPolicy,
) -> Result<FunctionalValue> {
    assert!(p >= 1.0, "nonlocal_energy: p must be >= 1");
    policy.validate()?;
    check_compat(sampling, field, Some(kernel.dimension()))?;
    let grads = near_field_gradients(field, policy)?;
    let cutoff = policy.cutoff_factor * sampling.spacing();
    let support = kernel.support_radius();
    let values = &field.values;
    let out = pairwise_inner(sampling, subset, None, cutoff, |i, j, d| {
        if d >= support {
            return 0.0;
        }
        let df = (values[i] - values[j]).abs();
        if df == 0.0 {
            return 0.0;
        }
        pow_p(df / d, p) * kernel.eval(d)
    })?;

    let correction_density = match grads {
        Some(_) => {
            sphere_coordinate_moment(p, sampling.dim())
                * sphere_area(sampling.dim())
                * kernel.partial_mass(cutoff)
        }
        None => 0.0,
    };
    let mut total = KahanSum::new();
    let mut correction = KahanSum::new();
    for i in 0..sampling.len() {
        if let Some(mask) = subset {
            if !mask[i] {
                continue;
            }
        }
        let w = sampling.weight(i);
        let corr = match grads {
            Some(g) => pow_p(g[i], p) * correction_density,
            None => 0.0,
        };
        correction.add(w * corr);
        total.add(w * (out.inner[i] + corr));
    }
    Ok(FunctionalValue {
        value: total.value(),
        excluded_pair_fraction: fraction(out.excluded, out.considered),
        correction_added: correction.value(),
    })
}

/// The p-th power of the fractional Sobolev seminorm (the raw double sum):
///
/// ```text
/// sum_i sum_{j != i, d >= c h} w_i w_j |f_i - f_j|^p / d^{n + s p}
/// ```
///
/// Restricted to pair distances below 1 and scaled by
/// `(1-s) p / sphere_area(n)`, the summand coincides term by term with
/// [`nonlocal_energy`] under [`Mollifier::s_kernel`]; the near-field
/// correction uses the matching power-law mass so the identity survives the
/// correction.
pub fn fractional_seminorm_pth(
    sampling: &ManifoldSampling,
    field: &ScalarField,
    s: f64,
    p: f64,
    policy: &DiagonalPolicy,
) -> Result<FunctionalValue> {
    assert!(p >= 1.0, "fractional_seminorm_pth: p must be >= 1");
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::config("s", format!("s must lie in (0, 1), got {s}")));
    }
    policy.validate()?;
    check_compat(sampling, field, None)?;
    let grads = near_field_gradients(field, policy)?;
    let cutoff = policy.cutoff_factor * sampling.spacing();
    let n = sampling.dim() as f64;
    let exponent = -(n + s * p);
    let values = &field.values;
    let out = pairwise_inner(sampling, None, None, cutoff, |i, j, d| {
        let df = (values[i] - values[j]).abs();
        if df == 0.0 {
            return 0.0;
        }
        pow_p(df, p) * d.powf(exponent)
    })?;

    // Near-ball mass of the un-normalized power kernel r^{sigma p - n}:
    // int_0^{r0} r^{sigma p - 1} dr = r0^{sigma p} / (sigma p).
    let sigma_p = (1.0 - s) * p;
    let correction_density = match grads {
        Some(_) => {
            sphere_coordinate_moment(p, sampling.dim())
                * sphere_area(sampling.dim())
                * (cutoff.powf(sigma_p) / sigma_p)
        }
        None => 0.0,
    };
    let mut total = KahanSum::new();
    let mut correction = KahanSum::new();
    for i in 0..sampling.len() {
        let w = sampling.weight(i);
        let corr = match grads {
            Some(g) => pow_p(g[i], p) * correction_density,
            None => 0.0,
        };
        correction.add(w * corr);
        total.add(w * (out.inner[i] + corr));
    }
    Ok(FunctionalValue {
        value: total.value(),
        excluded_pair_fraction: fraction(out.excluded, out.considered),
        correction_added: correction.value(),
    })
}

/// The fractional s-perimeter of a region:
///
/// ```text
/// sum_{i in E} sum_{j not in E, d >= c h} w_i w_j / d^{n + s}
/// ```
///
/// Indicators carry no gradient, so any requested near-field correction is
/// forced off.
pub fn s_perimeter(
    sampling: &ManifoldSampling,
    region: &RegionSpec,
    s: f64,
    policy: &DiagonalPolicy,
) -> Result<FunctionalValue> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::config("s", format!("s must lie in (0, 1), got {s}")));
    }
    policy.validate()?;
    let mask = region_mask(sampling, region)?;
    let complement: Vec<bool> = mask.iter().map(|&b| !b).collect();
    let cutoff = policy.cutoff_factor * sampling.spacing();
    let exponent = -(sampling.dim() as f64 + s);
    let out = pairwise_inner(sampling, Some(&mask), Some(&complement), cutoff, |_i, _j, d| {
        d.powf(exponent)
    })?;
    let mut total = KahanSum::new();
    for i in 0..sampling.len() {
        if mask[i] {
            total.add(sampling.weight(i) * out.inner[i]);
        }
    }
    Ok(FunctionalValue {
        value: total.value(),
        excluded_pair_fraction: fraction(out.excluded, out.considered),
        correction_added: 0.0,
    })
}

/// Pairing of a test field against the mollified energy measure:
/// `sum_i phi_i w_i (inner contribution of i)`, with the same admission and
/// correction rules as [`nonlocal_energy`].
pub fn weak_star_pairing(
    sampling: &ManifoldSampling,
    field: &ScalarField,
    kernel: &Mollifier,
    p: f64,
    test_field: &ScalarField,
    policy: &DiagonalPolicy,
) -> Result<f64> {
    weak_star_pairing_detailed(sampling, field, kernel, p, test_field, policy).map(|v| v.value)
}

/// As [`weak_star_pairing`] but with the discretization diagnostics attached.
/// `correction_added` is the test-field-weighted near-field part and may be
/// negative for sign-changing test fields.
pub fn weak_star_pairing_detailed(
    sampling: &ManifoldSampling,
    field: &ScalarField,
    kernel: &Mollifier,
    p: f64,
    test_field: &ScalarField,
    policy: &DiagonalPolicy,
) -> Result<FunctionalValue> {
    assert!(p >= 1.0, "weak_star_pairing: p must be >= 1");
    policy.validate()?;
    check_compat(sampling, field, Some(kernel.dimension()))?;
    check_compat(sampling, test_field, None)?;
    let grads = near_field_gradients(field, policy)?;
    let cutoff = policy.cutoff_factor * sampling.spacing();
    let support = kernel.support_radius();
    let values = &field.values;
    let out = pairwise_inner(sampling, None, None, cutoff, |i, j, d| {
        if d >= support {
            return 0.0;
        }
        let df = (values[i] - values[j]).abs();
        if df == 0.0 {
            return 0.0;
        }
        pow_p(df / d, p) * kernel.eval(d)
    })?;
    let correction_density = match grads {
        Some(_) => {
            sphere_coordinate_moment(p, sampling.dim())
                * sphere_area(sampling.dim())
                * kernel.partial_mass(cutoff)
        }
        None => 0.0,
    };
    let mut total = KahanSum::new();
    let mut correction = KahanSum::new();
    for i in 0..sampling.len() {
        let corr = match grads {
            Some(g) => pow_p(g[i], p) * correction_density,
            None => 0.0,
        };
        let coeff = test_field.values[i] * sampling.weight(i);
        correction.add(coeff * corr);
        total.add(coeff * (out.inner[i] + corr));
    }
    Ok(FunctionalValue {
        value: total.value(),
        excluded_pair_fraction: fraction(out.excluded, out.considered),
        correction_added: correction.value(),
    })
}
