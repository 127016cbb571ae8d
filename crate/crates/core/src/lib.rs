//! Multivariate Azadkia–Chatterjee rank coefficient.
//!
//! Measures how much a random vector `Y` depends on a random vector `Z`
//! from i.i.d. samples, with a conditional variant given a third vector `X`,
//! a Wald-type independence test with a consistent variance estimator, and
//! the exact dominance-counting algorithms that make the estimators run in
//! `O(n (log n)^d)` time.
//!
//! The numeric core is generic over the scalar type (any [`Scalar`], i.e.
//! `f32` or `f64`). Dominance counting only needs a partial order, so it also
//! accepts exact integer inputs. Simulation code works in `f64`.
//!
//! ```
//! use acdep::{build_permutations, t_ac, EstimatorOptions, PermScheme, SampleMatrix, SeedSpec};
//!
//! let y = SampleMatrix::from_rows(&[[1.0], [2.0], [3.0], [4.0], [5.0]]).unwrap();
//! let z = SampleMatrix::from_rows(&[[1.0], [2.0], [3.0], [4.0], [5.0]]).unwrap();
//! let perms = build_permutations(5, 1, PermScheme::Cyclic, &SeedSpec::new(7)).unwrap();
//! let report = t_ac(&y, &z, &perms, &SeedSpec::new(7), &EstimatorOptions::default()).unwrap();
//! assert!(report.value > 0.0);
//! ```

pub mod data;
pub mod domcount;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod nn;
pub mod quadrature;
pub mod scalar;
pub mod simgen;
pub mod stats;
pub mod variance;

pub use data::{
    build_permutations, load_csv, Dataset, PermScheme, PermutationFamily, SampleMatrix, SeedSpec,
};
pub use domcount::{
    count_dominated, count_dominated_1d, count_dominated_2d, count_dominated_nd,
    count_dominated_oracle, count_dominating, CountMode, DominanceCounts, PointSet,
};
pub use error::{Error, Result};
pub use estimators::{
    t_ac, t_ac_cond, t_ac_naive, t_ac_with_map, CoefficientReport, ConditionalTerms,
    EstimatorOptions,
};
pub use nn::{nearest_neighbors, neighbor_stats, NeighborMap, NeighborStats};
pub use scalar::Scalar;
pub use variance::{
    a_const, b_const, gamma_hats, normal_cdf, normal_sf, p_value, population_oracle,
    sigma_hat_sq, sigma_sq_limit, sigma_sq_limit_with, variance_parts, wald_test,
    wald_test_with_sigma, GammaEstimates, McEstimate, PopulationOracle, Side, TestReport,
    VarianceParts, YSampler,
};

/// Double-precision sample matrix.
pub type SampleMatrix64 = SampleMatrix<f64>;
/// Single-precision sample matrix.
pub type SampleMatrix32 = SampleMatrix<f32>;
/// Double-precision dataset.
pub type Dataset64 = Dataset<f64>;
/// Double-precision point set.
pub type PointSet64 = PointSet<f64>;
/// Double-precision coefficient report.
pub type CoefficientReport64 = CoefficientReport<f64>;
/// Double-precision test report.
pub type TestReport64 = TestReport<f64>;
