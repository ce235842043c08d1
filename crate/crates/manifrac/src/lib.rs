//! Nonlocal functionals on discretized compact manifolds.
//!
//! `manifrac` evaluates fractional Sobolev seminorms, fractional
//! (s-)perimeters, and general mollified nonlocal energies on flat tori,
//! circles, round spheres, and triangle meshes, then sweeps the concentration
//! parameter and extrapolates the limit. For smooth fields the limits recover
//! classical gradient energies and the total variation, with universal
//! constants built from sphere areas, ball volumes, and the normalized
//! directional moment of the unit sphere; for indicator fields the
//! s-perimeter tracks the boundary measure.
//!
//! The two delicate discretization points are handled explicitly:
//!
//! * the near-diagonal kernel singularity is excluded by a spacing-scaled
//!   cutoff, with an optional analytic near-field correction that restores
//!   the excluded mass for fields with a known gradient ([`estimators`]);
//! * summation order is fixed and compensated, so results are bit-identical
//!   regardless of thread count.
//!
//! A small CLI (`manifrac run | audit-kernels | constants`) drives JSON
//! experiment configs to CSV/JSON reports; see the crate README.
//!
//! ```no_run
//! use manifrac::fields::{FieldSpec, TrigForm, TrigTerm};
//! use manifrac::manifold::ManifoldSpec;
//! use manifrac::sweep::{run_sweep, ExperimentConfig, FunctionalSpec};
//!
//! let config = ExperimentConfig::new(
//!     ManifoldSpec::FlatTorus { lengths: vec![1.0], resolution: 1024 },
//!     FieldSpec::TorusTrig {
//!         terms: vec![TrigTerm { axis: 0, frequency: 1, amplitude: 1.0, form: TrigForm::Sin }],
//!     },
//!     FunctionalSpec::SeminormSweep { p: 1.0 },
//! );
//! let report = run_sweep(&config).unwrap();
//! println!("limit {} vs reference {:?}", report.limit.value, report.reference);
//! ```

pub mod config;
pub mod constants;
pub mod error;
pub mod estimators;
pub mod fields;
pub mod manifold;
pub mod mollifiers;
pub mod numerics;
pub mod report;
pub mod sweep;

pub use error::{Error, Result};
