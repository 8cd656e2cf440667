//! Covering numbers, dyadic chaining families and Talagrand pair sets on finite
//! metric spaces, the explicit constants of Kolmogorov-Chentsov-type moment
//! bounds, and Monte Carlo verification of those bounds on simulated processes.

pub mod bounds;
pub mod chaining;
pub mod covering;
pub mod error;
pub mod metric_space;
pub mod pair_reduction;
pub mod pipeline;
pub mod simulate;
pub mod verify;

pub use bounds::{BoundParams, HolderConstant, Prefactor};
pub use chaining::{validate_family, ChainingFamily, FamilyReport};
pub use covering::{Cover, CoverOptions, EntropyParams, NetMode};
pub use error::{Error, Result};
pub use metric_space::{FiniteMetricSpace, TriangleCheck};
pub use pair_reduction::PairReduction;
pub use simulate::{MomentCertificate, PathEnsemble, ProcessKind};
