//! Volume storage and the RPE-anchored flattening transform.
//!
//! Voxels are stored x-fastest, then z, then y: a B-scan frame is one
//! contiguous `depth x width` image, which is also the on-disk order of the
//! raw format.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{DepthMap, Map2};

#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    width: usize,
    frames: usize,
    depth: usize,
    data: Vec<T>,
}

impl<T: Copy + Send + Sync> Volume<T> {
    pub fn filled(width: usize, frames: usize, depth: usize, value: T) -> Result<Self> {
        check_dims(width, frames, depth)?;
        Ok(Self {
            width,
            frames,
            depth,
            data: vec![value; width * frames * depth],
        })
    }

    pub fn from_vec(width: usize, frames: usize, depth: usize, data: Vec<T>) -> Result<Self> {
        check_dims(width, frames, depth)?;
        if data.len() != width * frames * depth {
            return Err(Error::DimensionMismatch(format!(
                "{} voxels for a {width}x{frames}x{depth} volume",
                data.len()
            )));
        }
        Ok(Self {
            width,
            frames,
            depth,
            data,
        })
    }

    /// Build a volume from a function of `(x, y, z)`.
    pub fn from_fn(
        width: usize,
        frames: usize,
        depth: usize,
        f: impl Fn(usize, usize, usize) -> T + Sync,
    ) -> Result<Self> {
        check_dims(width, frames, depth)?;
        let frame_len = width * depth;
        let mut data = Vec::with_capacity(frame_len * frames);
        let chunks: Vec<Vec<T>> = (0..frames)
            .into_par_iter()
            .map(|y| {
                let mut out = Vec::with_capacity(frame_len);
                for z in 0..depth {
                    for x in 0..width {
                        out.push(f(x, y, z));
                    }
                }
                out
            })
            .collect();
        for c in chunks {
            data.extend(c);
        }
        Ok(Self {
            width,
            frames,
            depth,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `(width, frames, depth)`
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.frames, self.depth)
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.width * (z + self.depth * y)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.data[self.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: T) {
        let i = self.index(x, y, z);
        self.data[i] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn frame_len(&self) -> usize {
        self.width * self.depth
    }

    /// One B-scan as a `depth x width` row-major image.
    pub fn frame(&self, y: usize) -> &[T] {
        let n = self.frame_len();
        &self.data[y * n..(y + 1) * n]
    }

    /// Copy of the A-scan at `(x, y)`, ordered by depth.
    pub fn a_scan(&self, x: usize, y: usize) -> Vec<T> {
        (0..self.depth).map(|z| self.get(x, y, z)).collect()
    }

    pub fn same_dims<U>(&self, other: &Volume<U>) -> bool {
        self.width == other.width && self.frames == other.frames && self.depth == other.depth
    }

    pub fn map<U: Copy + Send + Sync>(&self, f: impl Fn(T) -> U + Sync + Send) -> Volume<U> {
        Volume {
            width: self.width,
            frames: self.frames,
            depth: self.depth,
            data: self.data.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn with_data<U>(&self, data: Vec<U>) -> Volume<U> {
        debug_assert_eq!(data.len(), self.data.len());
        Volume {
            width: self.width,
            frames: self.frames,
            depth: self.depth,
            data,
        }
    }
}

impl<T: Copy + Send + Sync + Into<f64>> Volume<T> {
    pub fn to_f64(&self) -> Volume<f64> {
        self.map(|v| v.into())
    }
}

impl Volume<f64> {
    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

fn check_dims(width: usize, frames: usize, depth: usize) -> Result<()> {
    if width == 0 || frames == 0 || depth == 0 {
        return Err(Error::DimensionMismatch(format!(
            "volume dimensions must be positive, got {width}x{frames}x{depth}"
        )));
    }
    Ok(())
}

/// Physical metadata carried alongside a volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct VolumeMeta {
    /// Axial scale in µm per depth pixel. Unknown unless the user supplies it.
    pub axial_um_per_px: Option<f64>,
    pub source: String,
}

impl VolumeMeta {
    pub fn new(axial_um_per_px: f64, source: impl Into<String>) -> Result<Self> {
        let meta = Self {
            axial_um_per_px: Some(axial_um_per_px),
            source: source.into(),
        };
        meta.scale()?;
        Ok(meta)
    }

    /// Reject a present but non-positive scale; a missing one is fine.
    pub fn check(&self) -> Result<()> {
        match self.axial_um_per_px {
            Some(_) => self.scale().map(|_| ()),
            None => Ok(()),
        }
    }

    /// The axial scale, or an error when it is missing or non-positive.
    pub fn scale(&self) -> Result<f64> {
        match self.axial_um_per_px {
            Some(s) if s > 0.0 && s.is_finite() => Ok(s),
            Some(s) => Err(Error::InvalidArgument(format!(
                "axial scale must be positive, got {s}"
            ))),
            None => Err(Error::InvalidArgument(
                "axial scale (µm per pixel) is not known for this volume".into(),
            )),
        }
    }
}

/// Per-A-scan axial shifts that bring the RPE onto a common depth plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlattenOffsets {
    pub offsets: Map2<i32>,
    pub reference_depth: usize,
}

impl FlattenOffsets {
    /// Offsets mapping the (rounded) RPE onto `max(rpe)`.
    pub fn from_rpe(rpe: &DepthMap, depth: usize) -> Result<Self> {
        let rounded = round_depths(rpe, depth)?;
        let reference_depth = rounded.as_slice().iter().copied().max().unwrap_or(0) as usize;
        let offsets = rounded.map(|z| reference_depth as i32 - z);
        Ok(Self {
            offsets,
            reference_depth,
        })
    }

    pub fn to_flat(&self, x: usize, y: usize, z: f64) -> f64 {
        z + f64::from(self.offsets.get(x, y))
    }

    pub fn to_original(&self, x: usize, y: usize, z: f64) -> f64 {
        z - f64::from(self.offsets.get(x, y))
    }

    /// Express an original-space depth map in flattened coordinates.
    pub fn flatten_depths(&self, map: &DepthMap) -> Result<DepthMap> {
        map.zip_map(&self.offsets, |z, o| z + f64::from(o))
    }
}

fn round_depths(rpe: &DepthMap, depth: usize) -> Result<Map2<i32>> {
    let in_range = |z: f64| z.round() >= 0.0 && z.round() < depth as f64;
    if let Some(z) = rpe.as_slice().iter().find(|&&z| !in_range(z)) {
        return Err(Error::InvalidArgument(format!(
            "RPE depth {z} outside [0, {depth})"
        )));
    }
    Ok(rpe.map(|z| z.round() as i32))
}

/// Shift every A-scan down so its RPE lands on `max(rpe)`.
///
/// Vacated samples at the top are zero-filled. Samples pushed past the
/// bottom lie below the RPE and are dropped.
pub fn flatten<T>(vol: &Volume<T>, rpe: &DepthMap) -> Result<(Volume<T>, FlattenOffsets)>
where
    T: Copy + Send + Sync + Default,
{
    if rpe.width() != vol.width() || rpe.frames() != vol.frames() {
        return Err(Error::DimensionMismatch(format!(
            "RPE map {}x{} for volume {}x{}",
            rpe.width(),
            rpe.frames(),
            vol.width(),
            vol.frames()
        )));
    }
    let off = FlattenOffsets::from_rpe(rpe, vol.depth())?;
    let (w, d) = (vol.width(), vol.depth());
    let mut data = vec![T::default(); vol.as_slice().len()];
    data.par_chunks_mut(w * d)
        .enumerate()
        .for_each(|(y, frame)| {
            let src = vol.frame(y);
            for x in 0..w {
                let shift = off.offsets.get(x, y) as usize;
                for z in 0..d - shift {
                    frame[x + w * (z + shift)] = src[x + w * z];
                }
            }
        });
    Ok((vol.with_data(data), off))
}

/// Map flattened-space depths back to original coordinates.
pub fn unflatten_depths(map: &DepthMap, off: &FlattenOffsets) -> Result<DepthMap> {
    map.zip_map(&off.offsets, |z, o| z - f64::from(o))
}
