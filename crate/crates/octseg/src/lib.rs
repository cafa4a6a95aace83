//! Volumetric retinal OCT layer segmentation.
//!
//! Seven boundary surfaces are found in sequence, from the RPE-Choroid up to
//! the Vitreous-ILM and then the inner layers in a shrinking search region:
//!
//! 1. **Enhance**: a box mean and a directional axial differential filter are
//!    combined with depth-proportional weights so the wanted boundary becomes
//!    the strongest response along each A-scan.
//! 2. **Extract**: one candidate depth per A-scan (global maximum or first
//!    peak).
//! 3. **Correct**: iterative replacement of points that disagree with their
//!    weighted neighbourhood, with a dynamic threshold.
//!
//! The [`phantom`] module generates synthetic volumes with exact ground truth
//! and scores segmentations against it.

pub mod cli;
pub mod error;
pub mod filters;
pub mod io;
pub mod map;
pub mod phantom;
pub mod pipeline;
pub mod render;
pub mod surface;
pub mod volume;

pub use error::{Error, Result};
pub use filters::{KernelSize, Orientation};
pub use map::{DepthMap, Map2};
pub use pipeline::{segment_all, BoundaryId, BoundarySet, PipelineConfig, Segmentation};
pub use volume::{flatten, unflatten_depths, FlattenOffsets, Volume, VolumeMeta};
