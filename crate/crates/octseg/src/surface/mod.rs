//! Depth-map machinery: weighted error distances, iterative smoothing with a
//! dynamic threshold, cubic outlier rejection and the two-map merge rule.

mod merge;
mod polyfit;
mod smoothing;
mod weights;

pub use merge::merge_depth_maps;
pub use polyfit::{poly3_reject, normal_quantile, Poly3Outcome};
pub use smoothing::{
    dynamic_threshold, error_distance, error_distances, smooth_depth_map, smooth_with,
    SmoothingConfig, SmoothingOutcome, SmoothingSchedule,
};
pub use weights::WeightMatrix;
