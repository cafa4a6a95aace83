//! The per-boundary stages of the cascade.

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::extract::{
    enhance_in_place, extract_first_peak, extract_global_max, extract_global_max_within, fill_from_nearest,
    ScanDirection,
};
use super::BoundaryId;
use crate::error::{Error, Result};
use crate::filters::{diff_filter, erode_ball, mean_filter, threshold_zero, KernelSize, Orientation};
use crate::map::{DepthMap, Map2};
use crate::surface::{merge_depth_maps, poly3_reject, smooth_with, SmoothingConfig};
use crate::volume::Volume;

/// RPE-Choroid stage output.
#[derive(Debug, Clone)]
pub struct RpeOutcome {
    pub map: DepthMap,
    /// Largest differential response anywhere in the volume.
    pub peak_response: f64,
    pub iterations: usize,
}

/// Vitreous-ILM stage output, including both branches.
#[derive(Debug, Clone)]
pub struct IlmOutcome {
    pub map: DepthMap,
    /// Smoothed direct branch.
    pub direct: DepthMap,
    /// Compensated eroded branch before merging, when enabled.
    pub eroded: Option<DepthMap>,
    /// Merge result before the final smoothing, when enabled.
    pub merged: Option<DepthMap>,
    pub iterations: usize,
}

/// Output of a stage that searches between two bounding surfaces.
#[derive(Debug, Clone)]
pub struct BoundedOutcome {
    pub map: DepthMap,
    /// Extraction before any correction.
    pub raw: DepthMap,
    /// Columns whose search interval was empty.
    pub flagged: Map2<bool>,
    /// Rows where the cubic fit could not be trusted.
    pub degraded_rows: usize,
    pub iterations: usize,
}

/// Segment the RPE-Choroid surface of an unflattened volume.
pub fn segment_rpe(vol: &Volume<u8>, cfg: &PipelineConfig) -> Result<RpeOutcome> {
    let c = &cfg.rpe;
    c.mean_kernel.check_fits(vol.dims(), "rpe.mean_kernel")?;
    let mut d = diff_filter(vol, c.diff_kernel, Orientation::BrightAbove)?;
    let peak_response = d.min_max().1;
    let s = if c.weights.w2.is_zero() {
        None
    } else {
        Some(mean_filter(vol, c.mean_kernel)?)
    };
    enhance_in_place(&mut d, s.as_ref(), c.weights);
    drop(s);
    let raw = extract_global_max(&d);
    drop(d);
    let out = smooth_with(&raw, &c.smoothing);
    Ok(RpeOutcome {
        map: clamp_depths(out.map, vol.depth()),
        peak_response,
        iterations: out.iterations_used,
    })
}

fn denoise(vol: &Volume<f64>, size: KernelSize, t: f64, reps: usize) -> Result<Volume<f64>> {
    let mut s = threshold_zero(&mean_filter(vol, size)?, t);
    for _ in 1..reps {
        s = threshold_zero(&mean_filter(&s, size)?, t);
    }
    Ok(s)
}

/// Segment the Vitreous-ILM surface of a flattened volume whose region below
/// the RPE has already been masked.
pub fn segment_ilm(flat: &Volume<u8>, cfg: &PipelineConfig) -> Result<IlmOutcome> {
    let c = &cfg.ilm;
    let s = denoise(&flat.to_f64(), c.mean_kernel, c.threshold, c.repetitions)?;
    let d = diff_filter(&s, c.diff_kernel, Orientation::BrightBelow)?;
    let raw = extract_first_peak(&d, ScanDirection::TopDown, c.peak_floor);
    drop(d);
    let direct = smooth_with(&raw, &c.smoothing);
    if !c.use_eroded_branch {
        return Ok(IlmOutcome {
            map: direct.map.clone(),
            direct: direct.map,
            eroded: None,
            merged: None,
            iterations: direct.iterations_used,
        });
    }

    let eroded = erode_ball(&s, c.erosion_radius);
    drop(s);
    let se = denoise(&eroded, c.mean_kernel, c.threshold, c.repetitions)?;
    drop(eroded);
    let d = diff_filter(&se, c.diff_kernel, Orientation::BrightBelow)?;
    drop(se);
    let comp = c.erosion_compensation() as f64;
    let pbss = extract_first_peak(&d, ScanDirection::TopDown, c.peak_floor).map(|z| (z - comp).max(0.0));
    drop(d);
    let merged = merge_depth_maps(&pbss, &direct.map, c.merge_window)?;
    let out = smooth_with(&merged, &c.smoothing);
    Ok(IlmOutcome {
        map: clamp_depths(out.map, flat.depth()),
        direct: direct.map,
        eroded: Some(pbss),
        merged: Some(merged),
        iterations: out.iterations_used,
    })
}

/// Copy of `vol` with every voxel deeper than `depth` set to 0. Applied to
/// the flattened volume before the ILM search so nothing below the RPE can
/// compete.
pub fn zero_below(vol: &Volume<u8>, depth: usize) -> Volume<u8> {
    let (w, _, d) = vol.dims();
    let mut out = vol.clone();
    out.as_mut_slice().par_chunks_mut(w).enumerate().for_each(|(row, line)| {
        if row % d > depth {
            line.fill(0);
        }
    });
    out
}

/// Fill values `(above, below)` for masking outside a search interval.
///
/// The masked regions are chosen so that their edges respond with the sign
/// opposite to the boundary being searched for and cannot win the search.
pub fn mask_fill(orient: Orientation) -> (u8, u8) {
    match orient {
        Orientation::BrightBelow => (255, 0),
        Orientation::BrightAbove => (0, 255),
    }
}

/// Copy of `vol` with depths at or above `upper` set to `fill.0` and depths
/// at or below `lower` set to `fill.1`, per A-scan.
pub fn mask_outside(vol: &Volume<u8>, upper: &DepthMap, lower: &DepthMap, fill: (u8, u8)) -> Volume<u8> {
    let (w, _, d) = vol.dims();
    let mut out = vol.clone();
    out.as_mut_slice()
        .par_chunks_mut(w * d)
        .enumerate()
        .for_each(|(y, frame)| {
            for x in 0..w {
                // Integer depths <= floor(upper) are above, >= ceil(lower) below.
                let up = upper.get(x, y).floor();
                let lo = lower.get(x, y).ceil();
                for z in 0..d {
                    let zf = z as f64;
                    if zf <= up {
                        frame[x + w * z] = fill.0;
                    } else if zf >= lo {
                        frame[x + w * z] = fill.1;
                    }
                }
            }
        });
    out
}

fn check_bounds(vol: &Volume<u8>, upper: &DepthMap, lower: &DepthMap) -> Result<()> {
    if upper.width() != vol.width() || upper.frames() != vol.frames() {
        return Err(Error::DimensionMismatch("search bounds vs volume".into()));
    }
    upper.check_shape(lower, "search bounds")?;
    for y in 0..upper.frames() {
        for x in 0..upper.width() {
            let (u, l) = (upper.get(x, y), lower.get(x, y));
            if !(u <= l) {
                return Err(Error::InvalidArgument(format!(
                    "upper bound {u} below lower bound {l} at column ({x}, {y})"
                )));
            }
        }
    }
    Ok(())
}

struct BoundedSearch<'a> {
    diff_kernel: KernelSize,
    mean_kernel: KernelSize,
    weights: super::config::EnhancementWeights,
    orientation: Orientation,
    smoothing: &'a SmoothingConfig,
    polyfit: Option<f64>,
}

fn bounded_search(
    flat: &Volume<u8>,
    upper: &DepthMap,
    lower: &DepthMap,
    p: BoundedSearch<'_>,
) -> Result<BoundedOutcome> {
    check_bounds(flat, upper, lower)?;
    let masked = mask_outside(flat, upper, lower, mask_fill(p.orientation));
    let mut d = diff_filter(&masked, p.diff_kernel, p.orientation)?;
    let s = if p.weights.w2.is_zero() {
        None
    } else {
        Some(mean_filter(&masked, p.mean_kernel)?)
    };
    drop(masked);
    enhance_in_place(&mut d, s.as_ref(), p.weights);
    drop(s);
    let (mut raw, valid) = extract_global_max_within(&d, upper, lower)?;
    drop(d);
    fill_from_nearest(&mut raw, &valid);
    let flagged = valid.map(|v| !v);
    if flagged.as_slice().iter().all(|&f| f) {
        // Nothing to inherit from; fall back to the midpoint of the bounds.
        raw = upper.zip_map(lower, |u, l| 0.5 * (u + l))?;
    }

    let mut corrected = raw.clone();
    let mut degraded_rows = 0;
    if let Some(conf) = p.polyfit {
        let rows: Vec<(Vec<f64>, bool)> = (0..raw.frames())
            .into_par_iter()
            .map(|y| {
                let pts: Vec<(f64, f64)> = raw.row(y).iter().enumerate().map(|(x, &z)| (x as f64, z)).collect();
                let out = poly3_reject(&pts, conf);
                (out.z, out.degraded)
            })
            .collect();
        for (y, (z, degraded)) in rows.into_iter().enumerate() {
            corrected.row_mut(y).copy_from_slice(&z);
            degraded_rows += usize::from(degraded);
        }
    }
    let out = smooth_with(&corrected, p.smoothing);
    Ok(BoundedOutcome {
        map: clamp_depths(out.map, flat.depth()),
        raw,
        flagged,
        degraded_rows,
        iterations: out.iterations_used,
    })
}

/// Segment ONL-IS/OS between the ILM and the RPE of a flattened volume.
pub fn segment_isos(flat: &Volume<u8>, rpe: &DepthMap, ilm: &DepthMap, cfg: &PipelineConfig) -> Result<BoundedOutcome> {
    let c = &cfg.isos;
    bounded_search(
        flat,
        ilm,
        rpe,
        BoundedSearch {
            diff_kernel: c.diff_kernel,
            mean_kernel: c.mean_kernel,
            weights: c.weights,
            orientation: BoundaryId::OnlIsos.orientation(cfg),
            smoothing: &c.smoothing,
            polyfit: c.polyfit.then_some(c.confidence),
        },
    )
}

/// Segment one of the four inner boundaries between `upper` and `lower`.
pub fn segment_inner(
    flat: &Volume<u8>,
    upper: &DepthMap,
    lower: &DepthMap,
    which: BoundaryId,
    cfg: &PipelineConfig,
) -> Result<BoundedOutcome> {
    if !which.is_inner() {
        return Err(Error::InvalidArgument(format!("{which} is not an inner boundary")));
    }
    let c = &cfg.inner;
    bounded_search(
        flat,
        upper,
        lower,
        BoundedSearch {
            diff_kernel: c.diff_kernel,
            mean_kernel: c.mean_kernel,
            weights: c.weights,
            orientation: which.orientation(cfg),
            smoothing: &c.smoothing,
            polyfit: None,
        },
    )
}

pub(crate) fn clamp_depths(map: DepthMap, depth: usize) -> DepthMap {
    let hi = depth as f64 - 1.0;
    map.map(|z| z.clamp(0.0, hi))
}
