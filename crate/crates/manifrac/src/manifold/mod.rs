//! Discrete samplings of compact manifolds: points, volume weights, and
//! geodesic distances for flat tori, circles, round spheres, and triangle
//! meshes.

pub mod mesh;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::KahanSum;

/// Default cap on the number of points for which the full symmetric distance
/// matrix is materialized. Analytic backends fall back to on-the-fly
/// evaluation above the cap; meshes are rejected (the graph metric needs the
/// cache).
pub const DEFAULT_CACHE_CAP: usize = 8192;

const MIN_RESOLUTION: u32 = 4;

/// What to build and how finely.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ManifoldSpec {
    /// Flat torus `prod_i R/(L_i Z)`; `resolution` is points per axis.
    FlatTorus { lengths: Vec<f64>, resolution: u32 },
    /// Circle of the given radius; `resolution` is the number of points.
    Circle { radius: f64, resolution: u32 },
    /// Round 2-sphere of the given radius, sampled by a Fibonacci lattice of
    /// `resolution` points with equal weights.
    Sphere2 { radius: f64, resolution: u32 },
    /// Closed connected oriented triangle mesh from an OFF or ASCII-PLY file.
    TriMesh { path: String },
}

impl ManifoldSpec {
    /// Intrinsic dimension of the manifold.
    pub fn dimension(&self) -> u32 {
        match self {
            ManifoldSpec::FlatTorus { lengths, .. } => lengths.len() as u32,
            ManifoldSpec::Circle { .. } => 1,
            ManifoldSpec::Sphere2 { .. } | ManifoldSpec::TriMesh { .. } => 2,
        }
    }

    /// Check the spec invariants, naming the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        match self {
            ManifoldSpec::FlatTorus { lengths, resolution } => {
                if lengths.is_empty() {
                    return Err(Error::config("manifold.lengths", "at least one side length"));
                }
                for (i, &l) in lengths.iter().enumerate() {
                    if !(l.is_finite() && l > 0.0) {
                        return Err(Error::config(
                            format!("manifold.lengths[{i}]"),
                            format!("side length must be positive and finite, got {l}"),
                        ));
                    }
                }
                check_resolution(*resolution)
            }
            ManifoldSpec::Circle { radius, resolution }
            | ManifoldSpec::Sphere2 { radius, resolution } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::config(
                        "manifold.radius",
                        format!("radius must be positive and finite, got {radius}"),
                    ));
                }
                check_resolution(*resolution)
            }
            ManifoldSpec::TriMesh { path } => {
                if path.is_empty() {
                    return Err(Error::config("manifold.path", "mesh path must be nonempty"));
                }
                Ok(())
            }
        }
    }
}

fn check_resolution(resolution: u32) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        Err(Error::config(
            "manifold.resolution",
            format!("resolution must be >= {MIN_RESOLUTION}, got {resolution}"),
        ))
    } else {
        Ok(())
    }
}

/// Which closed-form metric (or cached graph metric) backs the sampling.
#[derive(Debug, Clone, PartialEq)]
pub enum DistanceBackend {
    TorusClosedForm { lengths: Vec<f64> },
    CircleClosedForm { radius: f64 },
    SphereClosedForm { radius: f64 },
    MeshGraph,
}

/// Packed upper-triangular storage for a symmetric distance matrix.
#[derive(Debug, Clone)]
pub(crate) struct PackedDistances {
    n: usize,
    data: Vec<f64>,
}

impl PackedDistances {
    fn from_rows(n: usize, mut fill: impl FnMut(usize, &mut [f64])) -> Self {
        let mut data = vec![0.0; n * (n + 1) / 2];
        let mut offset = 0;
        for i in 0..n {
            let row_len = n - i;
            fill(i, &mut data[offset..offset + row_len]);
            offset += row_len;
        }
        PackedDistances { n, data }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        // row a starts at a*n - a*(a-1)/2
        let start = a * self.n - a * (a.wrapping_sub(1)) / 2;
        self.data[start + (b - a)]
    }
}

/// A finite quadrature of a compact manifold. Immutable after construction;
/// reads are safe from any number of threads.
#[derive(Debug, Clone)]
pub struct ManifoldSampling {
    spec: ManifoldSpec,
    dim: u32,
    coord_dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
    spacing: f64,
    backend: DistanceBackend,
    cache: Option<PackedDistances>,
    /// Outward unit normals, mesh and sphere backends only (3 per point).
    normals: Option<Vec<f64>>,
}

impl ManifoldSampling {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Intrinsic dimension n.
    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn spec(&self) -> &ManifoldSpec {
        &self.spec
    }

    pub fn backend(&self) -> &DistanceBackend {
        &self.backend
    }

    /// Characteristic inter-point spacing h.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Intrinsic coordinates of point `i` (angle for circles, torus
    /// coordinates, or ambient xyz for sphere/mesh).
    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.coord_dim..(i + 1) * self.coord_dim]
    }

    /// Outward unit normal at point `i`, where the backend defines one.
    pub fn normal(&self, i: usize) -> Option<[f64; 3]> {
        self.normals
            .as_ref()
            .map(|ns| [ns[3 * i], ns[3 * i + 1], ns[3 * i + 2]])
    }

    /// Sum of the quadrature weights (compensated).
    pub fn total_volume(&self) -> f64 {
        let mut acc = KahanSum::new();
        for &w in &self.weights {
            acc.add(w);
        }
        acc.value()
    }

    /// Geodesic distance between points `i` and `j`. Panics if either index
    /// is out of bounds.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        if let Some(cache) = &self.cache {
            return cache.get(i, j);
        }
        self.distance_uncached(i, j)
    }

    #[inline]
    fn distance_uncached(&self, i: usize, j: usize) -> f64 {
        match &self.backend {
            DistanceBackend::TorusClosedForm { lengths } => {
                torus_distance(self.point(i), self.point(j), lengths)
            }
            DistanceBackend::CircleClosedForm { radius } => {
                circle_distance(self.point(i)[0], self.point(j)[0], *radius)
            }
            DistanceBackend::SphereClosedForm { radius } => {
                sphere_distance(self.point(i), self.point(j), *radius)
            }
            DistanceBackend::MeshGraph => unreachable!("mesh distances are always cached"),
        }
    }
}

/// Shortest wraparound distance on a flat torus with the given side lengths.
#[inline]
pub fn torus_distance(p: &[f64], q: &[f64], lengths: &[f64]) -> f64 {
    let mut sq = 0.0;
    for k in 0..lengths.len() {
        let mut d = (p[k] - q[k]).abs();
        d = d.min(lengths[k] - d);
        sq += d * d;
    }
    sq.sqrt()
}

/// Shorter-arc distance between two angles on a circle of the given radius.
#[inline]
pub fn circle_distance(theta_p: f64, theta_q: f64, radius: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut d = (theta_p - theta_q).abs() % two_pi;
    d = d.min(two_pi - d);
    radius * d
}

/// Great-circle distance between two ambient points on a sphere of the given
/// radius centered at the origin.
#[inline]
pub fn sphere_distance(p: &[f64], q: &[f64], radius: f64) -> f64 {
    let r2 = radius * radius;
    let dot = (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]) / r2;
    let cx = (p[1] * q[2] - p[2] * q[1]) / r2;
    let cy = (p[2] * q[0] - p[0] * q[2]) / r2;
    let cz = (p[0] * q[1] - p[1] * q[0]) / r2;
    let cross = (cx * cx + cy * cy + cz * cz).sqrt();
    radius * cross.atan2(dot)
}

/// Build the discrete sampling described by `spec` with the default distance
/// cache cap.
pub fn build_manifold(spec: &ManifoldSpec) -> Result<ManifoldSampling> {
    build_manifold_with_cache_cap(spec, DEFAULT_CACHE_CAP)
}

/// As [`build_manifold`] but with an explicit cache cap: samplings with at
/// most `cache_cap` points precompute the full symmetric distance matrix.
pub fn build_manifold_with_cache_cap(
    spec: &ManifoldSpec,
    cache_cap: usize,
) -> Result<ManifoldSampling> {
    spec.validate()?;
    let mut sampling = match spec {
        ManifoldSpec::FlatTorus { lengths, resolution } => build_torus(spec, lengths, *resolution),
        ManifoldSpec::Circle { radius, resolution } => build_circle(spec, *radius, *resolution),
        ManifoldSpec::Sphere2 { radius, resolution } => build_sphere(spec, *radius, *resolution),
        ManifoldSpec::TriMesh { path } => {
            let bytes = std::fs::read(path)?;
            let raw = mesh::parse_mesh(&bytes)?;
            return mesh::build_from_mesh(spec.clone(), &raw, cache_cap);
        }
    };
    if sampling.len() <= cache_cap {
        sampling.cache = Some(build_cache(&sampling));
    }
    Ok(sampling)
}

fn build_cache(sampling: &ManifoldSampling) -> PackedDistances {
    let n = sampling.len();
    // Rows are independent; compute them in parallel, then pack in order.
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| sampling.distance_uncached(i, j)).collect())
        .collect();
    PackedDistances::from_rows(n, |i, out| out.copy_from_slice(&rows[i]))
}

fn build_torus(spec: &ManifoldSpec, lengths: &[f64], resolution: u32) -> ManifoldSampling {
    let n_axes = lengths.len();
    let m = resolution as usize;
    let count = m.pow(n_axes as u32);
    let steps: Vec<f64> = lengths.iter().map(|l| l / m as f64).collect();
    let cell: f64 = steps.iter().product();
    let mut coords = Vec::with_capacity(count * n_axes);
    let mut index = vec![0usize; n_axes];
    for _ in 0..count {
        for (k, &i) in index.iter().enumerate() {
            coords.push(i as f64 * steps[k]);
        }
        for k in (0..n_axes).rev() {
            index[k] += 1;
            if index[k] < m {
                break;
            }
            index[k] = 0;
        }
    }
    // Characteristic spacing: the coarsest grid step.
    let spacing = steps.iter().cloned().fold(0.0f64, f64::max);
    ManifoldSampling {
        spec: spec.clone(),
        dim: n_axes as u32,
        coord_dim: n_axes,
        coords,
        weights: vec![cell; count],
        spacing,
        backend: DistanceBackend::TorusClosedForm { lengths: lengths.to_vec() },
        cache: None,
        normals: None,
    }
}

fn build_circle(spec: &ManifoldSpec, radius: f64, resolution: u32) -> ManifoldSampling {
    let n = resolution as usize;
    let two_pi = 2.0 * std::f64::consts::PI;
    let coords: Vec<f64> = (0..n).map(|k| two_pi * k as f64 / n as f64).collect();
    let w = two_pi * radius / n as f64;
    ManifoldSampling {
        spec: spec.clone(),
        dim: 1,
        coord_dim: 1,
        coords,
        weights: vec![w; n],
        spacing: w,
        backend: DistanceBackend::CircleClosedForm { radius },
        cache: None,
        normals: None,
    }
}

fn build_sphere(spec: &ManifoldSpec, radius: f64, resolution: u32) -> ManifoldSampling {
    let n = resolution as usize;
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut coords = Vec::with_capacity(3 * n);
    let mut normals = Vec::with_capacity(3 * n);
    for k in 0..n {
        // Fibonacci lattice: uniform in z, golden-ratio spiral in azimuth.
        let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let phi = two_pi * (k as f64 / golden).fract();
        let unit = [rho * phi.cos(), rho * phi.sin(), z];
        for c in unit {
            coords.push(radius * c);
            normals.push(c);
        }
    }
    let area = 4.0 * std::f64::consts::PI * radius * radius;
    let w = area / n as f64;
    ManifoldSampling {
        spec: spec.clone(),
        dim: 2,
        coord_dim: 3,
        coords,
        weights: vec![w; n],
        spacing: w.sqrt(),
        backend: DistanceBackend::SphereClosedForm { radius },
        cache: None,
        normals: Some(normals),
    }
}

pub(crate) fn sampling_from_parts(
    spec: ManifoldSpec,
    coords: Vec<f64>,
    weights: Vec<f64>,
    spacing: f64,
    cache: PackedDistances,
    normals: Vec<f64>,
) -> ManifoldSampling {
    ManifoldSampling {
        spec,
        dim: 2,
        coord_dim: 3,
        coords,
        weights,
        spacing,
        backend: DistanceBackend::MeshGraph,
        cache: Some(cache),
        normals: Some(normals),
    }
}

pub(crate) fn packed_from_rows(
    n: usize,
    fill: impl FnMut(usize, &mut [f64]),
) -> PackedDistances {
    PackedDistances::from_rows(n, fill)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_torus_1d(resolution: u32) -> ManifoldSampling {
        build_manifold(&ManifoldSpec::FlatTorus { lengths: vec![1.0], resolution }).unwrap()
    }

    #[test]
    fn torus_1d_uniform_partition() {
        let s = unit_torus_1d(8);
        assert_eq!(s.len(), 8);
        for k in 0..8 {
            assert_eq!(s.point(k)[0], k as f64 / 8.0);
            assert_eq!(s.weight(k), 1.0 / 8.0);
        }
    }

    #[test]
    fn torus_2d_volume_is_product_of_lengths() {
        let s = build_manifold(&ManifoldSpec::FlatTorus { lengths: vec![1.0, 1.0], resolution: 16 })
            .unwrap();
        assert!((s.total_volume() - 1.0).abs() < 1e-12);
        let s = build_manifold(&ManifoldSpec::FlatTorus { lengths: vec![2.0, 0.5], resolution: 8 })
            .unwrap();
        assert!((s.total_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn torus_wraparound_distance() {
        let d = torus_distance(&[0.1, 0.1], &[0.9, 0.9], &[1.0, 1.0]);
        assert!((d - 0.2 * 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn circle_total_volume_and_distance() {
        let s = build_manifold(&ManifoldSpec::Circle { radius: 1.0, resolution: 128 }).unwrap();
        assert!((s.total_volume() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        // theta = 0 to 3pi/2: shorter arc is pi/2
        let d = circle_distance(0.0, 1.5 * std::f64::consts::PI, 1.0);
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn sphere_weight_sum_is_area() {
        let s = build_manifold(&ManifoldSpec::Sphere2 { radius: 1.0, resolution: 500 }).unwrap();
        assert!((s.total_volume() - 4.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn sphere_pole_to_equator_distance() {
        let d = sphere_distance(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], 1.0);
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn distance_is_symmetric_zero_on_diagonal() {
        let s = build_manifold(&ManifoldSpec::Sphere2 { radius: 2.0, resolution: 64 }).unwrap();
        for i in [0usize, 7, 30] {
            assert_eq!(s.distance(i, i), 0.0);
            for j in [3usize, 11, 63] {
                assert_eq!(s.distance(i, j), s.distance(j, i));
                if i != j {
                    assert!(s.distance(i, j) > 0.0);
                }
            }
        }
    }

    #[test]
    fn cache_matches_closed_form() {
        let spec = ManifoldSpec::Circle { radius: 1.0, resolution: 32 };
        let cached = build_manifold_with_cache_cap(&spec, 1000).unwrap();
        let direct = build_manifold_with_cache_cap(&spec, 0).unwrap();
        assert!(cached.cache.is_some());
        assert!(direct.cache.is_none());
        for i in 0..32 {
            for j in 0..32 {
                assert_eq!(cached.distance(i, j), direct.distance(i, j));
            }
        }
    }

    #[test]
    fn triangle_inequality_analytic_backends() {
        let samplings = [
            build_manifold(&ManifoldSpec::FlatTorus { lengths: vec![1.0, 2.0], resolution: 8 })
                .unwrap(),
            build_manifold(&ManifoldSpec::Circle { radius: 0.7, resolution: 64 }).unwrap(),
            build_manifold(&ManifoldSpec::Sphere2 { radius: 1.3, resolution: 80 }).unwrap(),
        ];
        for s in &samplings {
            let n = s.len();
            for i in (0..n).step_by(7) {
                for j in (0..n).step_by(11) {
                    for k in (0..n).step_by(13) {
                        assert!(
                            s.distance(i, j) <= s.distance(i, k) + s.distance(k, j) + 1e-12,
                            "triangle inequality violated at ({i},{j},{k})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn torus_distance_translation_invariant() {
        let s = build_manifold(&ManifoldSpec::FlatTorus { lengths: vec![1.0, 1.0], resolution: 8 })
            .unwrap();
        // shifting both indices by the same grid shift leaves distance unchanged
        let m = 8usize;
        let shift = |idx: usize, by: (usize, usize)| {
            let (i, j) = (idx / m, idx % m);
            ((i + by.0) % m) * m + (j + by.1) % m
        };
        for &(a, b) in &[(0usize, 9usize), (5, 60), (17, 33)] {
            let d0 = s.distance(a, b);
            for by in [(1usize, 0usize), (3, 5), (7, 7)] {
                let d1 = s.distance(shift(a, by), shift(b, by));
                assert!((d0 - d1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_manifold(&ManifoldSpec::Circle { radius: 0.0, resolution: 16 }).is_err());
        assert!(build_manifold(&ManifoldSpec::Circle { radius: 1.0, resolution: 3 }).is_err());
        assert!(build_manifold(&ManifoldSpec::FlatTorus { lengths: vec![], resolution: 8 }).is_err());
        assert!(
            build_manifold(&ManifoldSpec::FlatTorus { lengths: vec![1.0, -1.0], resolution: 8 })
                .is_err()
        );
    }
}
