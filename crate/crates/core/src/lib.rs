//! Relation-aware sliced Gromov-Wasserstein (RASGW) discrepancies between
//! empirical point clouds.
//!
//! The crate is organised bottom-up:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`cloud`] | [`PointCloud`], CSV I/O, padding, centering, isometries |
//! | [`rng`] | [`RngStream`], deterministic seed/stream derivation |
//! | [`spec`] | [`EstimatorSpec`], [`ScaleFamily`] and friends |
//! | [`sphere`] | uniform, von Mises-Fisher and Power Spherical samplers |
//! | [`rapd`] | relation-aware projecting directions and the slicing distribution |
//! | [`gw1d`] | closed-form 1D GW₂ on sorted projections plus brute-force oracles |
//! | [`estimators`] | SGW, Max-SGW, DSGW, EBSGW, RPSGW, RASGW, IWRASGW |
//! | [`gradflow`] | frozen-assignment gradients and point-cloud gradient flows |
//! | [`synthetic`] | Gaussian-4 / Gaussian-8 mixtures |
//! | [`cli`] | the `rasgw` command-line front end |
//!
//! All costs follow the same convention: for a direction θ the 1D cost is
//! `(1/n²) Σ_{i,j} ((θᵀ(x_i−x_j))² − (θᵀ(y_σ(i)−y_σ(j)))²)²`, and an
//! estimator's `value` is the square root of its aggregated cost.
//!
//! ```
//! use rasgw::{estimators, synthetic, EstimatorSpec, Method, RngStream};
//!
//! let stream = RngStream::new(7, 0);
//! let a = synthetic::gaussian4(2, 64, stream.child(1)).unwrap();
//! let b = a.pad_uplift(3).unwrap();
//! let spec = EstimatorSpec::new(Method::Rasgw).with_projections(100);
//! let res = estimators::estimate(&b, &b, &spec, stream.child(2)).unwrap();
//! assert!(res.value < 1e-12);
//! ```

pub mod cli;
pub mod cloud;
pub mod error;
pub mod estimators;
pub mod gradflow;
pub mod gw1d;
pub mod linalg;
pub mod rapd;
pub mod rng;
pub mod spec;
pub mod sphere;
pub mod synthetic;

pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use estimators::{EstimateResult, ProjectionRecord};
pub use rng::RngStream;
pub use spec::{Energy, EstimatorSpec, Family, Method, ScaleFamily};
pub use sphere::UnitDirection;
