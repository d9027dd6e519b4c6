//! Intrinsic dimension estimation from the statistics of first and second
//! nearest-neighbor distances (TWO-NN).
//!
//! For a locally uniform sample on a `d`-dimensional manifold, the ratio
//! `mu = r2 / r1` of second to first neighbor distance follows the Pareto law
//! `f(mu) = d * mu^(-d-1)`. Fitting `-log(1 - F(mu))` against `log(mu)` with a
//! line through the origin therefore recovers `d`.
//!
//! The crate is organized as a pipeline:
//!
//! * [`dataset`]: point sets, metrics and precomputed distance matrices.
//! * [`neighbors`]: exact first/second neighbor search (brute force, kd-tree,
//!   or read off a distance matrix).
//! * [`estimator`]: the `mu` sample, empirical CDF, line fit and the
//!   maximum-likelihood variant.
//! * [`scan`]: block decimation, `d_hat` versus subsample size and plateau
//!   detection.
//! * [`generators`]: seeded synthetic datasets.
//! * [`io`]: CSV/TSV ingestion and plot-ready exports.
//! * [`reproduce`]: the benchmark protocols built on top of the above.
//!
//! ```
//! use twonn::{generators::{generate, GeneratorKind, GeneratorSpec}, EstimatorOptions};
//!
//! let data = generate(&GeneratorSpec::new(GeneratorKind::Hypercube, 3, 2000, 7).with_pbc(true)).unwrap();
//! let est = twonn::estimate_points(&data.points, &data.metric, &EstimatorOptions::default()).unwrap();
//! assert!((est.d_hat - 3.0).abs() < 0.3);
//! ```

pub mod dataset;
pub mod error;
pub mod estimator;
pub mod generators;
pub mod io;
pub mod neighbors;
pub mod reproduce;
pub mod scan;

pub use dataset::{distance, DistanceMatrix, Metric, PointSet};
pub use error::{Error, Result};
pub use estimator::{
    compute_mu, empirical_cdf, estimate_id, estimate_id_mle, fit_line_through_origin,
    unit_ball_volume, CdfPoint, Estimate, EstimatorOptions, LineFit, Method, MuSample, ShellSample,
};
pub use neighbors::{
    two_nearest, two_nearest_accelerated, two_nearest_brute, two_nearest_from_matrix, NeighborInfo,
    Search,
};
pub use scan::{decimate, detect_plateau, scan, PlateauReport, ScanCurve, ScanInput, ScanPoint};

/// Neighbor search followed by [`estimate_id`], using the kd-tree whenever the
/// metric allows it.
pub fn estimate_points(
    ps: &PointSet,
    metric: &Metric,
    opts: &EstimatorOptions,
) -> Result<Estimate> {
    let ni = two_nearest(ps, metric, Search::Auto)?;
    estimate_id(&ni, opts)
}

/// [`estimate_id`] on neighbors read from a precomputed distance matrix.
pub fn estimate_matrix(dm: &DistanceMatrix, opts: &EstimatorOptions) -> Result<Estimate> {
    let ni = two_nearest_from_matrix(dm)?;
    estimate_id(&ni, opts)
}
