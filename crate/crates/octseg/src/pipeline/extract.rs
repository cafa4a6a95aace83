//! Boundary enhancement and per-A-scan point extraction.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::config::EnhancementWeights;
use crate::error::{Error, Result};
use crate::map::{DepthMap, Map2};
use crate::volume::Volume;

/// `I = w1(k) * D + w2(k) * S`, voxelwise.
pub fn enhance(d: &Volume<f64>, s: &Volume<f64>, weights: EnhancementWeights) -> Result<Volume<f64>> {
    if !d.same_dims(s) {
        return Err(Error::DimensionMismatch("enhance: D and S differ in size".into()));
    }
    let mut out = d.clone();
    enhance_in_place(&mut out, Some(s), weights);
    Ok(out)
}

/// In-place form of [`enhance`]; `s` may be omitted when `w2` is zero.
pub(crate) fn enhance_in_place(d: &mut Volume<f64>, s: Option<&Volume<f64>>, weights: EnhancementWeights) {
    let w = d.width();
    let dep = d.depth();
    let frame_len = d.frame_len();
    let use_s = !weights.w2.is_zero();
    d.as_mut_slice()
        .par_chunks_mut(frame_len)
        .enumerate()
        .for_each(|(y, frame)| {
            let sf = s.filter(|_| use_s).map(|s| s.frame(y));
            for z in 0..dep {
                let (a, b) = (weights.w1.at(z), weights.w2.at(z));
                let row = &mut frame[z * w..(z + 1) * w];
                match sf {
                    Some(sf) => {
                        let srow = &sf[z * w..(z + 1) * w];
                        for (v, &sv) in row.iter_mut().zip(srow) {
                            *v = a * *v + b * sv;
                        }
                    }
                    None => row.iter_mut().for_each(|v| *v *= a),
                }
            }
        });
}

/// Depth of the largest value along `z` in `[lo, hi]` at `(x, y)`; ties go to
/// the smaller depth.
#[inline]
fn argmax_in(vol: &Volume<f64>, x: usize, y: usize, lo: usize, hi: usize) -> usize {
    let mut best = lo;
    let mut best_v = vol.get(x, y, lo);
    for z in lo + 1..=hi {
        let v = vol.get(x, y, z);
        if v > best_v {
            best_v = v;
            best = z;
        }
    }
    best
}

/// Per A-scan, the depth of the maximum value (smallest depth on ties).
pub fn extract_global_max(vol: &Volume<f64>) -> DepthMap {
    let (w, f, d) = vol.dims();
    let rows: Vec<Vec<f64>> = (0..f)
        .into_par_iter()
        .map(|y| (0..w).map(|x| argmax_in(vol, x, y, 0, d - 1) as f64).collect())
        .collect();
    DepthMap::from_rows(&rows).expect("rectangular")
}

/// Per A-scan maximum restricted to the open interval `(upper, lower)`.
///
/// Columns whose interval contains no integer depth are reported as
/// `false` in the returned validity map and hold `NaN`.
pub fn extract_global_max_within(
    vol: &Volume<f64>,
    upper: &DepthMap,
    lower: &DepthMap,
) -> Result<(DepthMap, Map2<bool>)> {
    let (w, f, d) = vol.dims();
    if upper.width() != w || upper.frames() != f {
        return Err(Error::DimensionMismatch("search bounds vs volume".into()));
    }
    upper.check_shape(lower, "search bounds")?;
    let rows: Vec<Vec<(f64, bool)>> = (0..f)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| match open_interval(upper.get(x, y), lower.get(x, y), d) {
                    Some((lo, hi)) => (argmax_in(vol, x, y, lo, hi) as f64, true),
                    None => (f64::NAN, false),
                })
                .collect()
        })
        .collect();
    let depth = Map2::from_fn(w, f, |x, y| rows[y][x].0);
    let valid = Map2::from_fn(w, f, |x, y| rows[y][x].1);
    Ok((depth, valid))
}

/// Integer depths strictly between `upper` and `lower`, clipped to the volume.
pub(crate) fn open_interval(upper: f64, lower: f64, depth: usize) -> Option<(usize, usize)> {
    let lo = (upper.floor() + 1.0).max(0.0);
    let hi = (lower.ceil() - 1.0).min(depth as f64 - 1.0);
    (lo <= hi).then(|| (lo as usize, hi as usize))
}

/// Scan direction for [`extract_first_peak`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanDirection {
    TopDown,
    BottomUp,
}

/// First local maximum met when scanning `values` in order.
///
/// A peak is a run of equal values (usually a single sample) that is
/// greater than the samples on both sides of the run, or than the single
/// neighbour at either end, and greater than `floor`. The run's first
/// sample in scan order is returned.
pub fn first_peak(values: &[f64], floor: f64) -> Option<usize> {
    let n = values.len();
    let mut i = 0;
    while i < n {
        let v = values[i];
        let mut j = i;
        while j + 1 < n && values[j + 1] == v {
            j += 1;
        }
        let left_ok = i == 0 || values[i - 1] < v;
        let right_ok = j + 1 == n || values[j + 1] < v;
        if v > floor && left_ok && right_ok && n > 1 {
            return Some(i);
        }
        i = j + 1;
    }
    None
}

/// Per A-scan first peak in the given direction, falling back to the global
/// maximum when no peak clears `floor`.
pub fn extract_first_peak(vol: &Volume<f64>, direction: ScanDirection, floor: f64) -> DepthMap {
    let (w, f, d) = vol.dims();
    let rows: Vec<Vec<f64>> = (0..f)
        .into_par_iter()
        .map(|y| {
            let mut scan = vec![0.0; d];
            (0..w)
                .map(|x| {
                    for (z, s) in scan.iter_mut().enumerate() {
                        let zz = match direction {
                            ScanDirection::TopDown => z,
                            ScanDirection::BottomUp => d - 1 - z,
                        };
                        *s = vol.get(x, y, zz);
                    }
                    let z = match first_peak(&scan, floor) {
                        Some(i) => match direction {
                            ScanDirection::TopDown => i,
                            ScanDirection::BottomUp => d - 1 - i,
                        },
                        None => argmax_in(vol, x, y, 0, d - 1),
                    };
                    z as f64
                })
                .collect()
        })
        .collect();
    DepthMap::from_rows(&rows).expect("rectangular")
}

/// Fill invalid entries with the value of the nearest valid entry
/// (4-connected breadth-first order). Returns the number of filled entries;
/// when nothing is valid the map is left untouched.
pub(crate) fn fill_from_nearest(map: &mut DepthMap, valid: &Map2<bool>) -> usize {
    let (w, f) = (map.width(), map.frames());
    let mut seen: Vec<bool> = valid.as_slice().to_vec();
    let mut queue: VecDeque<usize> = (0..w * f).filter(|&i| seen[i]).collect();
    if queue.is_empty() {
        return 0;
    }
    let mut filled = 0;
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        let v = map.as_slice()[i];
        let mut visit = |j: usize| {
            if !seen[j] {
                seen[j] = true;
                map.as_mut_slice()[j] = v;
                filled += 1;
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < f {
            visit(i + w);
        }
    }
    filled
}
