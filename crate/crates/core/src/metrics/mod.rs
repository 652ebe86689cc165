//! Similarity and correlation measures plus report emitters.

mod correlation;
mod frechet;
pub mod plot;
mod report;

pub use correlation::{
    auto_correlation, auto_correlation_profile, cross_correlation, pearson, pearson_matrix,
    CorrelationMatrix, LengthPolicy,
};
pub use frechet::{frechet_brute_force, frechet_distance, fd_score, FdScore, PointMetric};
pub use report::{FdReport, LeadFd};
