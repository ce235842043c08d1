//! Scalar fields on a sampling (trigonometric sums on tori, ambient-linear
//! restrictions on spheres and meshes, constants, indicators) and their
//! analytic reference quantities: gradient p-energies and boundary measures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{sphere_distance, ManifoldSampling, ManifoldSpec};
use crate::numerics::KahanSum;

/// One `amplitude * sin/cos(2 pi * frequency * x_axis / L_axis)` term.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrigTerm {
    pub axis: usize,
    pub frequency: i32,
    pub amplitude: f64,
    pub form: TrigForm,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum TrigForm {
    Sin,
    Cos,
}

/// A scalar field description, independent of any particular sampling.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Finite trigonometric sum with integer frequencies (periodic on the torus).
    TorusTrig { terms: Vec<TrigTerm> },
    /// Restriction of the affine function `coeffs . x + offset` of the ambient
    /// coordinates to a sphere or mesh surface.
    SphereCoord {
        coeffs: [f64; 3],
        #[serde(default)]
        offset: f64,
    },
    Constant { value: f64 },
    Indicator { region: RegionSpec },
}

impl FieldSpec {
    pub fn is_indicator(&self) -> bool {
        matches!(self, FieldSpec::Indicator { .. })
    }

    /// Short name for error messages.
    pub fn kind_name(&self) -> &'static str {
        match self {
            FieldSpec::TorusTrig { .. } => "torus-trig",
            FieldSpec::SphereCoord { .. } => "sphere-coord",
            FieldSpec::Constant { .. } => "constant",
            FieldSpec::Indicator { .. } => "indicator",
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        match self {
            FieldSpec::TorusTrig { terms } => {
                if terms.is_empty() {
                    return Err(Error::config(format!("{key}.terms"), "at least one term"));
                }
                for (i, t) in terms.iter().enumerate() {
                    if !t.amplitude.is_finite() {
                        return Err(Error::config(
                            format!("{key}.terms[{i}].amplitude"),
                            "must be finite",
                        ));
                    }
                }
                Ok(())
            }
            FieldSpec::SphereCoord { coeffs, offset } => {
                if coeffs.iter().any(|c| !c.is_finite()) || !offset.is_finite() {
                    return Err(Error::config(key, "coefficients must be finite"));
                }
                Ok(())
            }
            FieldSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::config(format!("{key}.value"), "must be finite"));
                }
                Ok(())
            }
            FieldSpec::Indicator { region } => region.validate(&format!("{key}.region")),
        }
    }
}

/// Measurable subsets with analytically known boundary measure.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionSpec {
    /// Angular interval on a circle: the set of angles in
    /// `[start_angle, start_angle + length / radius)`. `length` is arc length.
    Arc { start_angle: f64, length: f64 },
    /// Product of half-open coordinate intervals on a flat torus.
    Box { intervals: Vec<[f64; 2]> },
    /// Geodesic ball on the sphere: `center` is an ambient direction
    /// (normalized internally), `radius` the geodesic radius.
    Cap { center: [f64; 3], radius: f64 },
}

impl RegionSpec {
    pub fn validate(&self, key: &str) -> Result<()> {
        match self {
            RegionSpec::Arc { start_angle, length } => {
                if !start_angle.is_finite() {
                    return Err(Error::config(format!("{key}.start_angle"), "must be finite"));
                }
                if !(length.is_finite() && *length > 0.0) {
                    return Err(Error::config(
                        format!("{key}.length"),
                        "arc length must be positive",
                    ));
                }
                Ok(())
            }
            RegionSpec::Box { intervals } => {
                if intervals.is_empty() {
                    return Err(Error::config(format!("{key}.intervals"), "at least one interval"));
                }
                for (i, iv) in intervals.iter().enumerate() {
                    if !(iv[0].is_finite() && iv[1].is_finite() && iv[0] < iv[1]) {
                        return Err(Error::config(
                            format!("{key}.intervals[{i}]"),
                            "interval must satisfy lo < hi",
                        ));
                    }
                }
                Ok(())
            }
            RegionSpec::Cap { center, radius } => {
                let norm2: f64 = center.iter().map(|c| c * c).sum();
                if !(norm2.is_finite() && norm2 > 0.0) {
                    return Err(Error::config(format!("{key}.center"), "must be a nonzero vector"));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::config(format!("{key}.radius"), "must be positive"));
                }
                Ok(())
            }
        }
    }

    /// Check geometric bounds against a concrete manifold and return an error
    /// naming the violated constraint.
    pub fn check_against(&self, manifold: &ManifoldSpec, key: &str) -> Result<()> {
        self.validate(key)?;
        match (self, manifold) {
            (RegionSpec::Arc { length, .. }, ManifoldSpec::Circle { radius, .. }) => {
                let circumference = 2.0 * std::f64::consts::PI * radius;
                if *length >= circumference {
                    return Err(Error::config(
                        format!("{key}.length"),
                        format!("arc length must be below the circumference {circumference}"),
                    ));
                }
                Ok(())
            }
            (RegionSpec::Box { intervals }, ManifoldSpec::FlatTorus { lengths, .. }) => {
                if intervals.len() != lengths.len() {
                    return Err(Error::config(
                        format!("{key}.intervals"),
                        format!("expected {} intervals, got {}", lengths.len(), intervals.len()),
                    ));
                }
                for (i, (iv, &l)) in intervals.iter().zip(lengths).enumerate() {
                    if iv[0] < 0.0 || iv[1] > l || iv[1] - iv[0] >= l {
                        return Err(Error::config(
                            format!("{key}.intervals[{i}]"),
                            format!("interval must lie inside [0, {l}) with positive length below {l}"),
                        ));
                    }
                }
                Ok(())
            }
            (RegionSpec::Cap { radius: cap_radius, .. }, ManifoldSpec::Sphere2 { radius, .. }) => {
                let max = std::f64::consts::PI * radius;
                if *cap_radius >= max {
                    return Err(Error::config(
                        format!("{key}.radius"),
                        format!("cap radius must be below pi * r = {max}"),
                    ));
                }
                Ok(())
            }
            (region, manifold) => Err(Error::KindMismatch(format!(
                "region `{}` does not apply to manifold `{}`",
                region.kind_name(),
                manifold_kind_name(manifold)
            ))),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            RegionSpec::Arc { .. } => "arc",
            RegionSpec::Box { .. } => "box",
            RegionSpec::Cap { .. } => "cap",
        }
    }
}

fn manifold_kind_name(m: &ManifoldSpec) -> &'static str {
    match m {
        ManifoldSpec::FlatTorus { .. } => "flat-torus",
        ManifoldSpec::Circle { .. } => "circle",
        ManifoldSpec::Sphere2 { .. } => "sphere2",
        ManifoldSpec::TriMesh { .. } => "tri-mesh",
    }
}

/// Sampled values of a field, with analytic gradient norms where the field
/// is smooth. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub analytic_grad_norm: Option<Vec<f64>>,
    pub source: FieldSpec,
}

/// Evaluate a field spec at every sample point.
pub fn sample_scalar_field(sampling: &ManifoldSampling, spec: &FieldSpec) -> Result<ScalarField> {
    spec.validate("field")?;
    let n = sampling.len();
    match spec {
        FieldSpec::Constant { value } => Ok(ScalarField {
            values: vec![*value; n],
            analytic_grad_norm: Some(vec![0.0; n]),
            source: spec.clone(),
        }),
        FieldSpec::TorusTrig { terms } => {
            let lengths = match sampling.spec() {
                ManifoldSpec::FlatTorus { lengths, .. } => lengths.clone(),
                other => {
                    return Err(Error::KindMismatch(format!(
                        "torus-trig field requires a flat torus, got `{}`",
                        manifold_kind_name(other)
                    )))
                }
            };
            for (i, t) in terms.iter().enumerate() {
                if t.axis >= lengths.len() {
                    return Err(Error::config(
                        format!("field.terms[{i}].axis"),
                        format!("axis {} out of range for a {}-torus", t.axis, lengths.len()),
                    ));
                }
            }
            let mut values = Vec::with_capacity(n);
            let mut grads = Vec::with_capacity(n);
            let two_pi = 2.0 * std::f64::consts::PI;
            for i in 0..n {
                let p = sampling.point(i);
                let mut v = 0.0;
                let mut partials = vec![0.0; lengths.len()];
                for t in terms {
                    let omega = two_pi * t.frequency as f64 / lengths[t.axis];
                    let arg = omega * p[t.axis];
                    match t.form {
                        TrigForm::Sin => {
                            v += t.amplitude * arg.sin();
                            partials[t.axis] += t.amplitude * omega * arg.cos();
                        }
                        TrigForm::Cos => {
                            v += t.amplitude * arg.cos();
                            partials[t.axis] -= t.amplitude * omega * arg.sin();
                        }
                    }
                }
                values.push(v);
                grads.push(partials.iter().map(|d| d * d).sum::<f64>().sqrt());
            }
            Ok(ScalarField { values, analytic_grad_norm: Some(grads), source: spec.clone() })
        }
        FieldSpec::SphereCoord { coeffs, offset } => {
            match sampling.spec() {
                ManifoldSpec::Sphere2 { .. } | ManifoldSpec::TriMesh { .. } => {}
                other => {
                    return Err(Error::KindMismatch(format!(
                        "sphere-coord field requires a sphere or mesh, got `{}`",
                        manifold_kind_name(other)
                    )))
                }
            }
            let mut values = Vec::with_capacity(n);
            let mut grads = Vec::with_capacity(n);
            for i in 0..n {
                let p = sampling.point(i);
                values.push(coeffs[0] * p[0] + coeffs[1] * p[1] + coeffs[2] * p[2] + offset);
                let nu = sampling
                    .normal(i)
                    .expect("sphere and mesh samplings carry normals");
                let dot = coeffs[0] * nu[0] + coeffs[1] * nu[1] + coeffs[2] * nu[2];
                let tx = coeffs[0] - dot * nu[0];
                let ty = coeffs[1] - dot * nu[1];
                let tz = coeffs[2] - dot * nu[2];
                grads.push((tx * tx + ty * ty + tz * tz).sqrt());
            }
            Ok(ScalarField { values, analytic_grad_norm: Some(grads), source: spec.clone() })
        }
        FieldSpec::Indicator { region } => {
            let mask = region_mask(sampling, region)?;
            Ok(ScalarField {
                values: mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
                analytic_grad_norm: None,
                source: spec.clone(),
            })
        }
    }
}

/// Membership mask of a region over the sample points.
pub fn region_mask(sampling: &ManifoldSampling, region: &RegionSpec) -> Result<Vec<bool>> {
    region.check_against(sampling.spec(), "region")?;
    let n = sampling.len();
    let two_pi = 2.0 * std::f64::consts::PI;
    match (region, sampling.spec()) {
        (RegionSpec::Arc { start_angle, length }, ManifoldSpec::Circle { radius, .. }) => {
            let span = length / radius;
            Ok((0..n)
                .map(|i| {
                    let theta = sampling.point(i)[0];
                    ((theta - start_angle).rem_euclid(two_pi)) < span
                })
                .collect())
        }
        (RegionSpec::Box { intervals }, ManifoldSpec::FlatTorus { .. }) => Ok((0..n)
            .map(|i| {
                let p = sampling.point(i);
                intervals
                    .iter()
                    .enumerate()
                    .all(|(k, iv)| p[k] >= iv[0] && p[k] < iv[1])
            })
            .collect()),
        (RegionSpec::Cap { center, radius: cap_radius }, ManifoldSpec::Sphere2 { radius, .. }) => {
            let norm = center.iter().map(|c| c * c).sum::<f64>().sqrt();
            let c = [
                center[0] / norm * radius,
                center[1] / norm * radius,
                center[2] / norm * radius,
            ];
            Ok((0..n)
                .map(|i| sphere_distance(&c, sampling.point(i), *radius) < *cap_radius)
                .collect())
        }
        _ => unreachable!("check_against already rejected the mismatch"),
    }
}

/// Weighted p-energy of the analytic gradient: `sum_i w_i |grad f|_i^p`.
/// For p = 1 and smooth fields this is the total variation.
pub fn gradient_p_energy(sampling: &ManifoldSampling, field: &ScalarField, p: f64) -> Result<f64> {
    assert!(p >= 1.0, "gradient_p_energy: p must be >= 1");
    let grads = field
        .analytic_grad_norm
        .as_ref()
        .ok_or_else(|| Error::MissingGradient(field.source.kind_name().to_string()))?;
    let mut acc = KahanSum::new();
    for (g, w) in grads.iter().zip(sampling.weights()) {
        acc.add(w * pow_p(*g, p));
    }
    Ok(acc.value())
}

/// `x^p` for `x >= 0` with fast paths for the common exponents.
#[inline]
pub(crate) fn pow_p(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

/// Exact boundary measure of a supported analytic region: the count of arc
/// endpoints, the rectangle perimeter, or the cap boundary circle length.
pub fn reference_variation(region: &RegionSpec, manifold: &ManifoldSpec) -> Result<f64> {
    region.check_against(manifold, "region")?;
    match (region, manifold) {
        (RegionSpec::Arc { .. }, ManifoldSpec::Circle { .. }) => Ok(2.0),
        (RegionSpec::Box { intervals }, ManifoldSpec::FlatTorus { .. }) => {
            let sides: Vec<f64> = intervals.iter().map(|iv| iv[1] - iv[0]).collect();
            let mut total = 0.0;
            for i in 0..sides.len() {
                let mut facet = 2.0;
                for (j, s) in sides.iter().enumerate() {
                    if j != i {
                        facet *= s;
                    }
                }
                total += facet;
            }
            Ok(total)
        }
        (RegionSpec::Cap { radius: cap_radius, .. }, ManifoldSpec::Sphere2 { radius, .. }) => {
            Ok(2.0 * std::f64::consts::PI * radius * (cap_radius / radius).sin())
        }
        _ => unreachable!("check_against already rejected the mismatch"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::build_manifold;

    fn torus(resolution: u32) -> ManifoldSampling {
        build_manifold(&ManifoldSpec::FlatTorus { lengths: vec![1.0], resolution }).unwrap()
    }

    fn sin_2pi_x() -> FieldSpec {
        FieldSpec::TorusTrig {
            terms: vec![TrigTerm { axis: 0, frequency: 1, amplitude: 1.0, form: TrigForm::Sin }],
        }
    }

    #[test]
    fn constant_field_everywhere() {
        let s = build_manifold(&ManifoldSpec::Sphere2 { radius: 1.0, resolution: 32 }).unwrap();
        let f = sample_scalar_field(&s, &FieldSpec::Constant { value: 2.5 }).unwrap();
        assert!(f.values.iter().all(|&v| v == 2.5));
        assert!(f.analytic_grad_norm.unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn torus_trig_critical_point() {
        let s = torus(8);
        let f = sample_scalar_field(&s, &sin_2pi_x()).unwrap();
        // x = 0.25 is index 2 at resolution 8
        assert!((f.values[2] - 1.0).abs() < 1e-12);
        assert!(f.analytic_grad_norm.unwrap()[2].abs() < 1e-9);
    }

    #[test]
    fn sphere_coord_gradient_is_sine_of_colatitude() {
        let s = build_manifold(&ManifoldSpec::Sphere2 { radius: 1.0, resolution: 200 }).unwrap();
        let f = sample_scalar_field(
            &s,
            &FieldSpec::SphereCoord { coeffs: [0.0, 0.0, 1.0], offset: 0.0 },
        )
        .unwrap();
        let grads = f.analytic_grad_norm.unwrap();
        for i in 0..s.len() {
            let z = s.point(i)[2];
            // hand oracle: |grad z| = |z_ambient projected to the tangent| = sin(theta)
            let expected = (1.0 - z * z).max(0.0).sqrt();
            assert!((grads[i] - expected).abs() < 1e-12, "point {i}");
        }
    }

    #[test]
    fn gradient_energy_sin_p1_and_p2() {
        let s = torus(4096);
        let f = sample_scalar_field(&s, &sin_2pi_x()).unwrap();
        // oracles: int_0^1 2pi|cos(2pi x)| dx = 4; int 4pi^2 cos^2 = 2pi^2
        let e1 = gradient_p_energy(&s, &f, 1.0).unwrap();
        assert!((e1 - 4.0).abs() < 1e-6, "{e1}");
        let e2 = gradient_p_energy(&s, &f, 2.0).unwrap();
        assert!((e2 - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-6, "{e2}");
    }

    #[test]
    fn gradient_energy_constant_is_zero() {
        let s = torus(16);
        let f = sample_scalar_field(&s, &FieldSpec::Constant { value: 7.0 }).unwrap();
        for p in [1.0, 2.0, 3.5] {
            assert_eq!(gradient_p_energy(&s, &f, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn gradient_energy_homogeneity() {
        let s = torus(128);
        let f = sample_scalar_field(&s, &sin_2pi_x()).unwrap();
        let scaled = FieldSpec::TorusTrig {
            terms: vec![TrigTerm { axis: 0, frequency: 1, amplitude: -3.0, form: TrigForm::Sin }],
        };
        let g = sample_scalar_field(&s, &scaled).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let ef = gradient_p_energy(&s, &f, p).unwrap();
            let eg = gradient_p_energy(&s, &g, p).unwrap();
            assert!((eg - 3.0f64.powf(p) * ef).abs() <= 1e-12 * eg.abs());
        }
    }

    #[test]
    fn indicator_rejects_gradient_energy() {
        let s = build_manifold(&ManifoldSpec::Circle { radius: 1.0, resolution: 16 }).unwrap();
        let f = sample_scalar_field(
            &s,
            &FieldSpec::Indicator {
                region: RegionSpec::Arc { start_angle: 0.0, length: 1.0 },
            },
        )
        .unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0 || v == 1.0));
        assert!(matches!(
            gradient_p_energy(&s, &f, 1.0),
            Err(Error::MissingGradient(_))
        ));
    }

    #[test]
    fn field_manifold_mismatch() {
        let s = torus(8);
        assert!(matches!(
            sample_scalar_field(
                &s,
                &FieldSpec::SphereCoord { coeffs: [0.0, 0.0, 1.0], offset: 0.0 }
            ),
            Err(Error::KindMismatch(_))
        ));
    }

    #[test]
    fn reference_variation_values() {
        // arc: two endpoints regardless of position
        for start in [0.0, 1.0, 4.0] {
            let v = reference_variation(
                &RegionSpec::Arc { start_angle: start, length: std::f64::consts::PI },
                &ManifoldSpec::Circle { radius: 1.0, resolution: 16 },
            )
            .unwrap();
            assert_eq!(v, 2.0);
        }
        // half-by-half box on the unit 2-torus: perimeter 2
        let v = reference_variation(
            &RegionSpec::Box { intervals: vec![[0.0, 0.5], [0.0, 0.5]] },
            &ManifoldSpec::FlatTorus { lengths: vec![1.0, 1.0], resolution: 8 },
        )
        .unwrap();
        assert!((v - 2.0).abs() < 1e-15);
        // cap of geodesic radius pi/3: boundary circle length 2 pi sin(pi/3)
        let v = reference_variation(
            &RegionSpec::Cap { center: [0.0, 0.0, 1.0], radius: std::f64::consts::PI / 3.0 },
            &ManifoldSpec::Sphere2 { radius: 1.0, resolution: 16 },
        )
        .unwrap();
        let expected = std::f64::consts::PI * 3.0f64.sqrt();
        assert!((v - expected).abs() < 1e-12);
        // cap variation depends only on the radius
        let v2 = reference_variation(
            &RegionSpec::Cap { center: [1.0, 2.0, -1.0], radius: std::f64::consts::PI / 3.0 },
            &ManifoldSpec::Sphere2 { radius: 1.0, resolution: 16 },
        )
        .unwrap();
        assert_eq!(v, v2);
    }

    #[test]
    fn region_bounds_checked() {
        let circle = ManifoldSpec::Circle { radius: 1.0, resolution: 16 };
        let too_long = RegionSpec::Arc { start_angle: 0.0, length: 7.0 };
        assert!(too_long.check_against(&circle, "region").is_err());
        let sphere = ManifoldSpec::Sphere2 { radius: 1.0, resolution: 16 };
        let too_big = RegionSpec::Cap { center: [0.0, 0.0, 1.0], radius: 4.0 };
        assert!(too_big.check_against(&sphere, "region").is_err());
    }

    #[test]
    fn gradient_energy_converges_with_resolution() {
        // spectral accuracy for the p=2 trig integrand, h^2-ish for p=1 kinks
        let exact2 = 2.0 * std::f64::consts::PI.powi(2);
        let s = torus(256);
        let f = sample_scalar_field(&s, &sin_2pi_x()).unwrap();
        assert!((gradient_p_energy(&s, &f, 2.0).unwrap() - exact2).abs() < 1e-9);
        let coarse = {
            let s = torus(256);
            let f = sample_scalar_field(&s, &sin_2pi_x()).unwrap();
            (gradient_p_energy(&s, &f, 1.0).unwrap() - 4.0).abs()
        };
        let fine = {
            let s = torus(1024);
            let f = sample_scalar_field(&s, &sin_2pi_x()).unwrap();
            (gradient_p_energy(&s, &f, 1.0).unwrap() - 4.0).abs()
        };
        assert!(fine < coarse / 4.0, "p=1 error should shrink at least quadratically: {coarse} -> {fine}");
    }
}
